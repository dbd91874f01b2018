//! Time-dependent runs on the grid: configuration, the sampling driver shared
//! by the linear, SQG and Keller-Segel models, and run provenance.

use log::{info, warn};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::decay::{NormKind, NormSeries, SeriesDescriptor};
use crate::error::{Error, Result};
use crate::initial::InitialData;
use crate::integrator::{if_rk2_step, steps_between, DissipationRates, Tendency};
use crate::keller_segel::{self, ChemotacticDrift};
use crate::linear::evolve_linear;
use crate::littlewood_paley::{besov_norm_spectral, BesovParams, DyadicProfile, Exponent};
use crate::spectral::{inverse, Grid2D, SpectralField};
use crate::sqg::SqgAdvection;

pub const DEFAULT_SMALLNESS_BUDGET: f64 = 1e-2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    Linear,
    Sqg,
    KellerSegel,
}

impl Model {
    pub fn name(self) -> &'static str {
        match self {
            Model::Linear => "linear",
            Model::Sqg => "sqg",
            Model::KellerSegel => "ks",
        }
    }

    /// Regularity index of the scale-invariant norm `B^sigma_{p,1}` in which
    /// smallness is measured, or `None` for the linear flow.
    pub fn critical_regularity(self, alpha: f64, p: f64) -> Option<f64> {
        match self {
            Model::Linear => None,
            Model::Sqg => Some(1.0 + 2.0 / p - alpha),
            Model::KellerSegel => Some(-1.0 + 2.0 / p),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub grid: Grid2D,
    pub alpha: f64,
    pub dt: f64,
    pub t_final: f64,
    pub initial: InitialData,
    pub seed: u64,
    /// Positive, strictly increasing, at most `t_final`.
    pub sample_times: Vec<f64>,
    pub norms: Vec<BesovParams>,
    /// Integrability index of the critical norm.
    pub critical_p: f64,
    pub smallness_budget: f64,
}

impl RunConfig {
    pub fn validate(&self, model: Model) -> Result<()> {
        Grid2D::new(self.grid.n(), self.grid.length())?;
        if !(self.alpha > 0.0 && self.alpha <= 2.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha must lie in (0, 2], got {}",
                self.alpha
            )));
        }
        if model == Model::KellerSegel {
            keller_segel::check_alpha(self.alpha)?;
        }
        if model == Model::Sqg && self.alpha < 1.0 {
            warn!(
                "supercritical SQG run (alpha = {}): stability is observed, not guaranteed",
                self.alpha
            );
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_final > 0.0) || !self.t_final.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "final time must be positive, got {}",
                self.t_final
            )));
        }
        if self.sample_times.is_empty() {
            return Err(Error::InvalidParameter("sample schedule is empty".into()));
        }
        if self.sample_times.iter().any(|&t| !(t > 0.0) || t > self.t_final) {
            return Err(Error::InvalidParameter(format!(
                "sample times must lie in (0, {}]",
                self.t_final
            )));
        }
        if self.sample_times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter(
                "sample times must be strictly increasing".into(),
            ));
        }
        if !(self.critical_p >= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "critical p must be >= 1, got {}",
                self.critical_p
            )));
        }
        if !(self.smallness_budget > 0.0) {
            return Err(Error::InvalidParameter("smallness budget must be positive".into()));
        }
        self.initial.validate()
    }

    /// Hex SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub model: Model,
    pub config_hash: String,
    pub seed: u64,
    pub version: String,
}

/// Invariant monitoring gathered along a run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub steps: usize,
    pub initial_critical_norm: Option<f64>,
    pub initial_norms: Vec<f64>,
    pub initial_mean: f64,
    /// `max_t |mean(t) - mean(0)|`.
    pub mean_drift: f64,
    /// `L^2 mean(0)`, the total mass for density models.
    pub initial_mass: f64,
    /// `max_t |mass(t) - mass(0)|` divided by `max(|mass(0)|, ||u_0||_{L^1})`.
    pub relative_mass_drift: f64,
    /// Largest `||u(t_{k+1})||_2 / ||u(t_k)||_2 - 1` over steps.
    pub max_l2_growth: f64,
    pub max_courant: f64,
    /// Minimum of the field over recorded samples.
    pub min_value: f64,
}

#[derive(Debug)]
pub struct RunOutput {
    pub provenance: Provenance,
    /// One series per configured norm, in configuration order.
    pub series: Vec<NormSeries>,
    pub l2: NormSeries,
    pub diagnostics: Diagnostics,
    /// Last good state and its time.
    pub final_state: SpectralField,
    pub final_time: f64,
    /// Set when the run stopped early; series hold the samples reached.
    pub abort: Option<Error>,
}

impl RunOutput {
    /// Turns an early stop into an error.
    pub fn complete(self) -> Result<Self> {
        match self.abort {
            Some(e) => Err(e),
            None => Ok(self),
        }
    }
}

pub fn series_label(params: &BesovParams) -> String {
    let fmt = |e: Exponent| {
        if e.is_infinite() {
            "inf".to_string()
        } else {
            format!("{}", e.value())
        }
    };
    format!("besov_s{}_p{}_r{}", params.s, fmt(params.p), fmt(params.r))
}

enum Dynamics {
    Linear,
    Sqg(SqgAdvection),
    KellerSegel(ChemotacticDrift),
}

impl Dynamics {
    fn tendency(&self) -> Option<&dyn Tendency> {
        match self {
            Dynamics::Linear => None,
            Dynamics::Sqg(t) => Some(t),
            Dynamics::KellerSegel(t) => Some(t),
        }
    }
}

struct Recorder<'a> {
    config: &'a RunConfig,
    profile: DyadicProfile,
    times: Vec<f64>,
    values: Vec<Vec<f64>>,
    l2: Vec<f64>,
    min_value: f64,
}

impl Recorder<'_> {
    fn norms(&self, u: &SpectralField) -> Result<Vec<f64>> {
        self.config
            .norms
            .iter()
            .map(|p| besov_norm_spectral(u, p, &self.profile).map(|n| n.value))
            .collect()
    }

    fn record(&mut self, t: f64, u: &SpectralField) -> Result<()> {
        let norms = self.norms(u)?;
        for (series, v) in self.values.iter_mut().zip(norms) {
            series.push(v);
        }
        self.l2.push(u.l2_norm());
        self.min_value = self.min_value.min(inverse(u)?.min());
        self.times.push(t);
        Ok(())
    }
}

fn all_finite(u: &SpectralField) -> bool {
    u.coefficients().iter().all(|c| c.re.is_finite() && c.im.is_finite())
}

/// Integrates `model` from the configured initial data, recording norms at
/// each sample time. Configuration and smallness problems are errors; a CFL
/// violation or blow-up mid-run ends the run early with `abort` set.
pub fn run(model: Model, config: &RunConfig) -> Result<RunOutput> {
    config.validate(model)?;
    let grid = config.grid;
    let profile = DyadicProfile::default();
    let u0 = config.initial.build(grid, config.seed)?;
    let hash = config.hash();
    let provenance = Provenance {
        model,
        config_hash: hash.clone(),
        seed: config.seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
    };

    let mut diagnostics = Diagnostics {
        initial_mean: u0.mean(),
        initial_mass: grid.length().powi(2) * u0.mean(),
        min_value: f64::INFINITY,
        ..Diagnostics::default()
    };
    if let Some(sigma) = model.critical_regularity(config.alpha, config.critical_p) {
        let params = BesovParams::new(sigma, config.critical_p, 1.0)?;
        let norm = besov_norm_spectral(&u0, &params, &profile)?.value;
        info!(
            "{}: initial critical norm B^{sigma}_{{{},1}} = {norm:e}",
            model.name(),
            config.critical_p
        );
        diagnostics.initial_critical_norm = Some(norm);
        if norm > config.smallness_budget {
            return Err(Error::NotSmall {
                norm,
                budget: config.smallness_budget,
            });
        }
    }
    let l1_scale = {
        let f = inverse(&u0)?;
        let h = grid.spacing();
        h * h * f.values().iter().map(|v| v.abs()).sum::<f64>()
    };
    let mass_scale = diagnostics.initial_mass.abs().max(l1_scale);

    let mut recorder = Recorder {
        config,
        profile,
        times: Vec::new(),
        values: vec![Vec::new(); config.norms.len()],
        l2: Vec::new(),
        min_value: f64::INFINITY,
    };
    diagnostics.initial_norms = recorder.norms(&u0)?;

    let dynamics = match model {
        Model::Linear => Dynamics::Linear,
        Model::Sqg => Dynamics::Sqg(SqgAdvection),
        Model::KellerSegel => Dynamics::KellerSegel(ChemotacticDrift),
    };
    let rates = DissipationRates::new(&grid, config.alpha)?;

    let mut u = u0.clone();
    let mut t = 0.0;
    let mut abort = None;
    let mut targets = config.sample_times.clone();
    if *targets.last().expect("nonempty") < config.t_final {
        targets.push(config.t_final);
    }
    'outer: for &target in &targets {
        match dynamics.tendency() {
            None => {
                u = evolve_linear(&u0, config.alpha, target)?;
                t = target;
            }
            Some(n) => {
                for h in steps_between(t, target, config.dt) {
                    let step = match if_rk2_step(&u, &rates, h, n) {
                        Ok(s) => s,
                        Err(e @ Error::Cfl { .. }) => {
                            warn!("{}: stopping at t = {t}: {e}", model.name());
                            abort = Some(e);
                            break 'outer;
                        }
                        Err(e) => return Err(e),
                    };
                    if !all_finite(&step.field) {
                        warn!("{}: non-finite state after t = {t}", model.name());
                        abort = Some(Error::NumericalAbort { time: t + h });
                        break 'outer;
                    }
                    let before = u.l2_norm();
                    u = step.field;
                    t += h;
                    diagnostics.steps += 1;
                    diagnostics.max_courant = diagnostics.max_courant.max(step.courant);
                    if before > 0.0 {
                        diagnostics.max_l2_growth = diagnostics.max_l2_growth.max(u.l2_norm() / before - 1.0);
                    }
                    diagnostics.mean_drift = diagnostics.mean_drift.max((u.mean() - diagnostics.initial_mean).abs());
                    let mass = grid.length().powi(2) * u.mean();
                    if mass_scale > 0.0 {
                        diagnostics.relative_mass_drift = diagnostics
                            .relative_mass_drift
                            .max((mass - diagnostics.initial_mass).abs() / mass_scale);
                    }
                }
                t = target;
            }
        }
        if config.sample_times.contains(&target) {
            recorder.record(target, &u)?;
        }
    }
    diagnostics.min_value = recorder.min_value;

    let source = format!("{}:{}", model.name(), &hash[..12]);
    let series = config
        .norms
        .iter()
        .zip(&recorder.values)
        .map(|(params, values)| {
            NormSeries::new(
                recorder.times.clone(),
                values.clone(),
                SeriesDescriptor {
                    label: series_label(params),
                    norm: NormKind::Besov(*params),
                    source: source.clone(),
                },
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let l2 = NormSeries::new(
        recorder.times.clone(),
        recorder.l2.clone(),
        SeriesDescriptor {
            label: "l2".into(),
            norm: NormKind::Lebesgue { p: Exponent::new(2.0)? },
            source,
        },
    )?;
    Ok(RunOutput {
        provenance,
        series,
        l2,
        diagnostics,
        final_state: u,
        final_time: t,
        abort,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linear::log_spaced;
    use std::f64::consts::PI;

    fn config(amplitude: f64) -> RunConfig {
        RunConfig {
            grid: Grid2D::new(32, 2.0 * PI * 4.0).unwrap(),
            alpha: 1.0,
            dt: 0.05,
            t_final: 2.0,
            initial: InitialData::Shells {
                amplitude,
                j_lo: -2,
                j_hi: 1,
                envelope: 0.0,
            },
            seed: 42,
            sample_times: log_spaced(0.1, 2.0, 10),
            norms: vec![
                BesovParams::new(0.0, 2.0, 1.0).unwrap(),
                BesovParams::new(-1.0, 2.0, f64::INFINITY).unwrap(),
            ],
            critical_p: 2.0,
            smallness_budget: DEFAULT_SMALLNESS_BUDGET,
        }
    }

    #[test]
    fn zero_amplitude_gives_zero_norms() {
        for model in [Model::Linear, Model::Sqg, Model::KellerSegel] {
            let out = run(model, &config(0.0)).unwrap();
            assert!(out.abort.is_none());
            for s in &out.series {
                assert!(s.values().iter().all(|&v| v == 0.0));
            }
            assert_eq!(out.final_state.max_abs(), 0.0);
        }
    }

    #[test]
    fn samples_follow_schedule() {
        let c = config(1e-3);
        let out = run(Model::Sqg, &c).unwrap();
        assert_eq!(out.series[0].times(), c.sample_times.as_slice());
        assert_eq!(out.final_time, 2.0);
        assert!(out.diagnostics.steps >= 40);
        assert_eq!(out.provenance.config_hash, c.hash());
    }

    #[test]
    fn tiny_amplitude_matches_linear_flow() {
        let c = config(1e-8);
        let lin = run(Model::Linear, &c).unwrap();
        for model in [Model::Sqg, Model::KellerSegel] {
            let out = run(model, &c).unwrap();
            for (a, b) in out.series.iter().zip(&lin.series) {
                for (x, y) in a.values().iter().zip(b.values()) {
                    assert!((x - y).abs() <= 1e-3 * y, "{model:?}: {x} vs {y}");
                }
            }
        }
    }

    #[test]
    fn large_data_is_refused() {
        match run(Model::Sqg, &config(1e3)) {
            Err(Error::NotSmall { norm, budget }) => assert!(norm > budget),
            other => panic!("expected smallness error, got {other:?}"),
        }
    }

    #[test]
    fn runs_are_deterministic() {
        let c = config(5e-3);
        let a = run(Model::KellerSegel, &c).unwrap();
        let b = run(Model::KellerSegel, &c).unwrap();
        assert_eq!(a.series, b.series);
        assert_eq!(a.final_state, b.final_state);
    }

    #[test]
    fn rejects_bad_schedules() {
        let mut c = config(1e-3);
        c.sample_times = vec![0.5, 0.4];
        assert!(run(Model::Sqg, &c).is_err());
        c.sample_times = vec![3.0];
        assert!(run(Model::Sqg, &c).is_err());
        let mut c = config(1e-3);
        c.alpha = 0.5;
        assert!(run(Model::KellerSegel, &c).is_err());
    }
}
