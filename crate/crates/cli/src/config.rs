//! Experiment configuration: a flat TOML file with a few tables.
//!
//! ```toml
//! kind = "sqg"          # oracle | linear | sqg | ks | besov | selftest
//! alpha = 1.0
//! s = 1.0
//! ell = 0.0
//! p = 2.0
//! r = 2.0
//! seed = 7
//! tolerance = 20.0      # percent
//!
//! [grid]
//! n = 256
//! length_over_2pi = 64.0
//!
//! [initial]
//! type = "shells"
//! amplitude = 0.02
//! j_lo = -6
//! j_hi = 0
//!
//! [times]
//! start = 0.1
//! end = 6.4
//! per_decade = 40
//! dt = 0.05
//! ```
//!
//! Every key is optional; missing keys take per-kind defaults, and the filled
//! configuration is what gets echoed into the run record.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};

use fraclab_core::decay::DecayClaim;
use fraclab_core::initial::InitialData;
use fraclab_core::linear::{DensityForm, RadialSpectralDensity};
use fraclab_core::run::DEFAULT_SMALLNESS_BUDGET;
use fraclab_core::{BesovParams, Grid2D};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Oracle,
    Linear,
    Sqg,
    Ks,
    Besov,
    Selftest,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Oracle => "oracle",
            ExperimentKind::Linear => "linear",
            ExperimentKind::Sqg => "sqg",
            ExperimentKind::Ks => "ks",
            ExperimentKind::Besov => "besov",
            ExperimentKind::Selftest => "selftest",
        }
    }

    pub fn is_grid_run(self) -> bool {
        matches!(self, ExperimentKind::Linear | ExperimentKind::Sqg | ExperimentKind::Ks)
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error{}: {message}", .line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Parse { line: Option<usize>, message: String },
    #[error("duplicate key `{key}`: first defined at line {first}, again at line {second}")]
    DuplicateKey { key: String, first: usize, second: usize },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

impl From<fraclab_core::Error> for ConfigError {
    fn from(e: fraclab_core::Error) -> Self {
        ConfigError::Invalid(e.to_string())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    pub length: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub start: f64,
    pub end: f64,
    pub per_decade: usize,
    /// Time step for grid runs.
    pub dt: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowConfig {
    pub lo: f64,
    pub hi: f64,
}

/// A fully populated, validated configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub alpha: f64,
    pub s: f64,
    pub ell: f64,
    pub p: f64,
    pub r: f64,
    pub seed: u64,
    /// Relative slope tolerance, percent.
    pub tolerance: f64,
    /// Allowed grid/oracle mismatch for radial linear runs, percent.
    pub oracle_tolerance: f64,
    pub smallness_budget: f64,
    /// Ambient dimension of the frequency oracle.
    pub dimension: u32,
    pub output_dir: PathBuf,
    pub grid: GridConfig,
    pub times: TimeConfig,
    pub window: WindowConfig,
    pub initial: InitialData,
    pub density: DensityForm,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    n: Option<usize>,
    length: Option<f64>,
    length_over_2pi: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTimes {
    start: Option<f64>,
    end: Option<f64>,
    per_decade: Option<usize>,
    dt: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    kind: Option<ExperimentKind>,
    alpha: Option<f64>,
    s: Option<f64>,
    ell: Option<f64>,
    p: Option<f64>,
    r: Option<f64>,
    seed: Option<u64>,
    tolerance: Option<f64>,
    oracle_tolerance: Option<f64>,
    smallness_budget: Option<f64>,
    dimension: Option<u32>,
    output_dir: Option<PathBuf>,
    grid: Option<RawGrid>,
    times: Option<RawTimes>,
    window: Option<WindowConfig>,
    initial: Option<InitialData>,
    density: Option<DensityForm>,
    field: Option<PathBuf>,
}

/// Overrides from the command line, applied before defaults and validation.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub kind: Option<ExperimentKind>,
    pub seed: Option<u64>,
    pub tolerance: Option<f64>,
    pub output_dir: Option<PathBuf>,
    pub field: Option<PathBuf>,
}

pub const DEFAULT_OUTPUT_DIR: &str = "fraclab-out";

pub fn load_config(path: &Path, overrides: &Overrides) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text, overrides)
}

pub fn parse_config(text: &str, overrides: &Overrides) -> Result<ExperimentConfig, ConfigError> {
    check_duplicate_keys(text)?;
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse {
        line: e.span().map(|s| line_of(text, s.start)),
        message: e.message().to_string(),
    })?;
    let config = fill(raw, overrides)?;
    validate(&config)?;
    Ok(config)
}

/// Configuration for `kind` with nothing but defaults.
pub fn default_config(kind: ExperimentKind) -> Result<ExperimentConfig, ConfigError> {
    parse_config(
        "",
        &Overrides {
            kind: Some(kind),
            ..Overrides::default()
        },
    )
}

/// TOML rendering of a filled configuration; [`parse_config`] reads it back
/// to an equal value.
pub fn to_toml(config: &ExperimentConfig) -> String {
    toml::to_string(config).expect("configuration serializes")
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Rejects repeated keys and tables, reporting both lines. The TOML parser
/// alone only reports the second occurrence.
fn check_duplicate_keys(text: &str) -> Result<(), ConfigError> {
    let mut seen: HashMap<String, usize> = HashMap::new();
    let mut table = String::new();
    for (i, raw_line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = strip_comment(raw_line).trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('[') {
            let name = line.trim_start_matches('[').trim_end_matches(']').trim().to_string();
            let key = format!("[{name}]");
            if let Some(&first) = seen.get(&key) {
                return Err(ConfigError::DuplicateKey {
                    key,
                    first,
                    second: line_no,
                });
            }
            seen.insert(key, line_no);
            table = name;
            continue;
        }
        let Some((key, _)) = line.split_once('=') else {
            continue;
        };
        let key = key.trim().trim_matches('"').to_string();
        let full = if table.is_empty() {
            key
        } else {
            format!("{table}.{key}")
        };
        if let Some(&first) = seen.get(&full) {
            return Err(ConfigError::DuplicateKey {
                key: full,
                first,
                second: line_no,
            });
        }
        seen.insert(full, line_no);
    }
    Ok(())
}

fn strip_comment(line: &str) -> &str {
    let mut in_string = false;
    for (i, c) in line.char_indices() {
        match c {
            '"' => in_string = !in_string,
            '#' if !in_string => return &line[..i],
            _ => {}
        }
    }
    line
}

fn fill(raw: RawConfig, overrides: &Overrides) -> Result<ExperimentConfig, ConfigError> {
    let kind = match (raw.kind, overrides.kind) {
        (Some(a), Some(b)) if a != b => {
            return Err(ConfigError::Invalid(format!(
                "config file is for `{a}` but the `{b}` subcommand was used"
            )))
        }
        (a, b) => b.or(a).ok_or_else(|| ConfigError::Invalid("missing `kind`".into()))?,
    };
    let alpha = raw.alpha.unwrap_or(match kind {
        ExperimentKind::Oracle => 2.0,
        _ => 1.0,
    });
    let s = raw.s.unwrap_or(1.0);
    let ell = raw.ell.unwrap_or(0.0);
    let p = raw.p.unwrap_or(2.0);
    let r = raw.r.unwrap_or(p);

    let raw_grid = raw.grid.unwrap_or_default();
    let length = match (raw_grid.length, raw_grid.length_over_2pi) {
        (Some(_), Some(_)) => {
            return Err(ConfigError::Invalid(
                "give either grid.length or grid.length_over_2pi, not both".into(),
            ))
        }
        (Some(l), None) => l,
        (None, Some(m)) => 2.0 * PI * m,
        (None, None) => 2.0 * PI * 64.0,
    };
    let grid = GridConfig {
        n: raw_grid.n.unwrap_or(256),
        length,
    };

    // Torus runs decay algebraically only until t ~ xi_min^-alpha.
    let xi_min = 2.0 * PI / grid.length;
    let cutoff_time = 0.1 * xi_min.powf(-alpha);
    let raw_times = raw.times.unwrap_or_default();
    let times = match kind {
        ExperimentKind::Oracle => TimeConfig {
            start: raw_times.start.unwrap_or(10.0),
            end: raw_times.end.unwrap_or(1e4),
            per_decade: raw_times.per_decade.unwrap_or(40),
            dt: raw_times.dt.unwrap_or(0.0),
        },
        _ => TimeConfig {
            start: raw_times.start.unwrap_or(0.1),
            end: raw_times.end.unwrap_or(cutoff_time),
            per_decade: raw_times.per_decade.unwrap_or(40),
            dt: raw_times.dt.unwrap_or(0.05),
        },
    };
    let window = raw.window.unwrap_or(match kind {
        ExperimentKind::Oracle => WindowConfig {
            lo: times.start,
            hi: times.end,
        },
        _ => WindowConfig {
            lo: (10.0 * times.dt).max(1.0),
            hi: cutoff_time.min(times.end),
        },
    });
    let initial = raw.initial.unwrap_or(InitialData::Shells {
        amplitude: 0.02,
        j_lo: -6,
        j_hi: 0,
        envelope: s - 1.0,
    });
    let tolerance = overrides.tolerance.or(raw.tolerance).unwrap_or(match kind {
        ExperimentKind::Oracle => 2.0,
        _ => 20.0,
    });
    Ok(ExperimentConfig {
        kind,
        alpha,
        s,
        ell,
        p,
        r,
        seed: overrides.seed.or(raw.seed).unwrap_or(0),
        tolerance,
        oracle_tolerance: raw.oracle_tolerance.unwrap_or(1.0),
        smallness_budget: raw.smallness_budget.unwrap_or(DEFAULT_SMALLNESS_BUDGET),
        dimension: raw.dimension.unwrap_or(2),
        output_dir: overrides
            .output_dir
            .clone()
            .or(raw.output_dir)
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR)),
        grid,
        times,
        window,
        initial,
        density: raw.density.unwrap_or(DensityForm::BallIndicator { radius: 1.0 }),
        field: overrides.field.clone().or(raw.field),
    })
}

impl ExperimentConfig {
    /// The decay estimate this experiment is checked against.
    pub fn claim(&self) -> Option<DecayClaim> {
        match self.kind {
            ExperimentKind::Oracle | ExperimentKind::Linear => {
                Some(DecayClaim::linear(self.s, self.ell, self.alpha, self.p))
            }
            ExperimentKind::Sqg => Some(DecayClaim::sqg(self.s, self.ell, self.alpha, self.p, self.r)),
            ExperimentKind::Ks => Some(DecayClaim::keller_segel(self.s, self.ell, self.p, self.r)),
            ExperimentKind::Besov | ExperimentKind::Selftest => None,
        }
    }

    pub fn grid(&self) -> Result<Grid2D, ConfigError> {
        Ok(Grid2D::new(self.grid.n, self.grid.length)?)
    }

    /// Whether a linear run is a comparison against the frequency oracle.
    pub fn compares_with_oracle(&self) -> bool {
        self.kind == ExperimentKind::Linear && matches!(self.initial, InitialData::Radial { .. })
    }
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

pub fn validate(c: &ExperimentConfig) -> Result<(), ConfigError> {
    for (name, v) in [
        ("alpha", c.alpha),
        ("s", c.s),
        ("ell", c.ell),
        ("tolerance", c.tolerance),
    ] {
        if !v.is_finite() {
            return Err(invalid(format!("`{name}` must be finite")));
        }
    }
    if !(c.tolerance > 0.0) || !(c.oracle_tolerance > 0.0) {
        return Err(invalid("tolerances must be positive percentages"));
    }
    match c.kind {
        ExperimentKind::Selftest => return Ok(()),
        ExperimentKind::Besov => {
            BesovParams::new(c.s, c.p, c.r)?;
            if c.field.is_none() {
                return Err(invalid("besov experiments need `field`, a BSVF file"));
            }
            return Ok(());
        }
        _ => {}
    }
    if let Some(claim) = c.claim() {
        claim.validate()?;
    }
    let t = c.times;
    if !(t.start > 0.0) || !(t.end > t.start) || !t.end.is_finite() {
        return Err(invalid(format!(
            "times need 0 < start < end, got [{}, {}]",
            t.start, t.end
        )));
    }
    if t.per_decade == 0 {
        return Err(invalid("times.per_decade must be positive"));
    }
    if !(c.window.lo > 0.0) || !(c.window.hi > c.window.lo) {
        return Err(invalid(format!(
            "window needs 0 < lo < hi, got [{}, {}]",
            c.window.lo, c.window.hi
        )));
    }
    if c.kind == ExperimentKind::Oracle {
        if c.p != 2.0 {
            return Err(invalid("the frequency oracle computes L^2-based norms only (p = 2)"));
        }
        RadialSpectralDensity::new(c.dimension, c.density)?;
        return Ok(());
    }
    c.grid()?;
    if !(t.dt > 0.0) {
        return Err(invalid(format!("times.dt must be positive, got {}", t.dt)));
    }
    if !(c.smallness_budget > 0.0) {
        return Err(invalid("smallness_budget must be positive"));
    }
    c.initial.validate()?;
    if c.compares_with_oracle() && c.p != 2.0 {
        return Err(invalid("oracle comparison runs need p = 2"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ExperimentConfig, ConfigError> {
        parse_config(text, &Overrides::default())
    }

    #[test]
    fn minimal_oracle_config_fills_defaults() {
        let c = parse("kind = \"oracle\"\nalpha = 2.0\ns = 1.0\nell = 0.0\n").unwrap();
        assert_eq!(c.dimension, 2);
        assert_eq!(c.times.start, 10.0);
        assert_eq!(c.times.end, 1e4);
        assert_eq!(c.density, DensityForm::BallIndicator { radius: 1.0 });
        assert_eq!(c.tolerance, 2.0);
    }

    #[test]
    fn echo_round_trips() {
        for kind in [
            ExperimentKind::Oracle,
            ExperimentKind::Linear,
            ExperimentKind::Sqg,
            ExperimentKind::Ks,
            ExperimentKind::Selftest,
        ] {
            let c = default_config(kind).unwrap();
            let text = to_toml(&c);
            assert_eq!(parse(&text).unwrap(), c, "{text}");
        }
    }

    #[test]
    fn out_of_range_claim_is_rejected() {
        let err = parse("kind = \"ks\"\ns = 3.0\np = 2.0\n").unwrap_err().to_string();
        assert!(err.contains("keller_segel requires 1 - 2/p < s < 1 + 2/p"), "{err}");
    }

    #[test]
    fn duplicate_keys_report_both_lines() {
        let err = parse("kind = \"sqg\"\nalpha = 1.0\n# note\nalpha = 0.5\n").unwrap_err();
        match err {
            ConfigError::DuplicateKey { key, first, second } => {
                assert_eq!(key, "alpha");
                assert_eq!((first, second), (2, 4));
            }
            other => panic!("unexpected {other}"),
        }
        let err = parse("kind = \"sqg\"\n[grid]\nn = 64\n[times]\ndt = 0.1\n[grid]\nn = 32\n").unwrap_err();
        assert!(
            matches!(
                err,
                ConfigError::DuplicateKey {
                    first: 2,
                    second: 6,
                    ..
                }
            ),
            "{err}"
        );
    }

    #[test]
    fn unknown_keys_are_rejected_with_line() {
        let err = parse("kind = \"sqg\"\n\n[grid]\nsize = 64\n").unwrap_err();
        match err {
            ConfigError::Parse { line, message } => {
                assert_eq!(line, Some(4));
                assert!(message.contains("size"), "{message}");
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn subcommand_must_match_file() {
        let o = Overrides {
            kind: Some(ExperimentKind::Ks),
            ..Overrides::default()
        };
        assert!(parse_config("kind = \"sqg\"\n", &o).is_err());
        assert_eq!(parse_config("", &o).unwrap().kind, ExperimentKind::Ks);
    }

    #[test]
    fn torus_defaults_follow_the_cutoff_rule() {
        let c = default_config(ExperimentKind::Sqg).unwrap();
        assert!((c.times.end - 6.4).abs() < 1e-12);
        assert_eq!(c.window.lo, 1.0);
        assert!((c.window.hi - 6.4).abs() < 1e-12);
        assert!(parse("kind = \"sqg\"\n[grid]\nlength = 1.0\nlength_over_2pi = 1.0\n").is_err());
    }
}
