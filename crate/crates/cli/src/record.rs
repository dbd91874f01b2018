//! The structured run record written next to the series files.

use fraclab_core::decay::{DecayReport, FitResult};
use fraclab_core::run::{Diagnostics, Provenance};
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, ExperimentKind};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const EXIT_PASS: i32 = 0;
pub const EXIT_REPORT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    Config,
    Numerical,
    /// The series could not be fitted; reported like a failed claim.
    Fit,
    Io,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub kind: FailureKind,
    pub message: String,
}

/// Grid-vs-frequency-oracle agreement of a linear run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleComparison {
    pub max_relative_deviation: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// `sup_t ||u(t)||` against a multiple of its initial value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Boundedness {
    pub label: String,
    pub initial: f64,
    pub max: f64,
    pub factor: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BesovSummary {
    pub value: f64,
    pub j_min: i32,
    pub j_max: i32,
    pub mean_removed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub version: String,
    pub kind: ExperimentKind,
    pub passed: bool,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub wall_seconds: f64,
    #[serde(default)]
    pub series_files: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<Failure>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub besov: Option<BesovSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_comparison: Option<OracleComparison>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundedness: Option<Boundedness>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<Diagnostics>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fits: Vec<FitResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<DecayReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub selftest: Vec<CheckResult>,
    pub config: ExperimentConfig,
}

impl RunRecord {
    pub fn new(config: &ExperimentConfig) -> Self {
        Self {
            version: VERSION.to_string(),
            kind: config.kind,
            passed: false,
            started_unix: now(),
            finished_unix: 0.0,
            wall_seconds: 0.0,
            series_files: Vec::new(),
            failure: None,
            provenance: None,
            besov: None,
            oracle_comparison: None,
            boundedness: None,
            diagnostics: None,
            fits: Vec::new(),
            report: None,
            selftest: Vec::new(),
            config: config.clone(),
        }
    }

    pub fn finish(&mut self) {
        self.finished_unix = now();
        self.wall_seconds = self.finished_unix - self.started_unix;
    }

    /// Process exit status: 0 pass, 1 report failure, 2 configuration
    /// problem, 3 numerical abort.
    pub fn exit_code(&self) -> i32 {
        match &self.failure {
            Some(Failure {
                kind: FailureKind::Numerical,
                ..
            }) => EXIT_NUMERICAL,
            Some(Failure {
                kind: FailureKind::Config,
                ..
            }) => EXIT_CONFIG,
            Some(Failure {
                kind: FailureKind::Io | FailureKind::Fit,
                ..
            }) => EXIT_REPORT_FAILURE,
            None if self.passed => EXIT_PASS,
            None => EXIT_REPORT_FAILURE,
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("record serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }
}

fn now() -> f64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}
