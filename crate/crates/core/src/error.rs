use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid must have n a power of two with n >= 8 and L > 0 (got n = {n}, L = {length})")]
    InvalidGrid { n: usize, length: f64 },

    #[error("non-finite value {value} at index {index}")]
    NonFinite { index: usize, value: f64 },

    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("nonzero mean under inverse operator (|c_0| = {magnitude:e})")]
    NonzeroMean { magnitude: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{0}")]
    ClaimRange(String),

    #[error("empty block range: grid too coarse to resolve any dyadic shell")]
    EmptyBlockRange,

    #[error("negative time {0}")]
    NegativeTime(f64),

    #[error("quadrature did not converge (error estimate {estimate:e} after {evaluations} evaluations)")]
    Quadrature { estimate: f64, evaluations: usize },

    #[error("dyadic series does not converge: {0}")]
    Divergent(String),

    #[error("CFL bound violated: dt * max|u| * n / L = {courant:.3} > 0.5 (max|u| = {max_velocity:e}, dt = {dt:e})")]
    Cfl { max_velocity: f64, dt: f64, courant: f64 },

    #[error("numerical blow-up detected at t = {time}")]
    NumericalAbort { time: f64 },

    #[error("initial critical norm {norm:e} exceeds smallness budget {budget:e}")]
    NotSmall { norm: f64, budget: f64 },

    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("nonpositive value {value} at t = {time}")]
    NonPositive { time: f64, value: f64 },

    #[error("{0}")]
    Format(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
