//! Experiment driver for the fraclab spectral laboratory: TOML
//! configurations, dispatch to the library, and the files a run leaves
//! behind.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod execute;
pub mod outputs;
pub mod record;
pub mod selftest;

pub use config::{load_config, parse_config, ExperimentConfig, ExperimentKind, Overrides};
pub use execute::execute;
pub use record::RunRecord;
