//! Spectral laboratory for fractional dissipative equations.
//!
//! Fields live on a periodic `n x n` grid of side `L`; every operator is a
//! Fourier multiplier in angular wavenumbers `xi = 2 pi k / L`. On top of that
//! sit Littlewood-Paley blocks and homogeneous Besov norms, exact linear
//! evolution plus a continuum frequency oracle, pseudo-spectral solvers for
//! dissipative SQG and critical Keller-Segel, and log-log decay fitting.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bsvf;
pub mod decay;
pub mod error;
pub mod initial;
pub mod integrator;
pub mod keller_segel;
pub mod linear;
pub mod littlewood_paley;
pub mod quadrature;
pub mod run;
pub mod spectral;
pub mod sqg;

pub use decay::{
    build_report, fit_decay_slope, theoretical_exponent, ClaimKind, DecayClaim, DecayReport, FitResult, NormSeries,
};
pub use error::{Error, Result};
pub use initial::{InitialData, Mode};
pub use keller_segel::{ks_potential, ks_rhs, ks_step, run_ks, KSState};
pub use linear::{evolve_linear, oracle_besov_series, oracle_block_norm, DensityForm, RadialSpectralDensity};
pub use littlewood_paley::{
    besov_norm, bony_decompose, build_dyadic_profile, chemin_lerner_norm, lebesgue_norm, project, BesovNorm,
    BesovParams, BlockRange, DyadicProfile, Exponent, ProjectionKind,
};
pub use run::{run, Diagnostics, Model, Provenance, RunConfig, RunOutput};
pub use spectral::{
    apply_fourier_multiplier, dealias, forward, inverse, Axis, Grid2D, MultiplierSpec, RealField, SpectralField,
};
pub use sqg::{run_sqg, sqg_rhs, sqg_step, sqg_velocity, SQGState};
