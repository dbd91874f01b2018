//! Initial data for the grid solvers, described declaratively so a config and
//! a seed determine the field bit for bit.
//!
//! Spectral amplitudes are given as continuum densities: a coefficient at
//! `xi_k` is `A(|xi_k|) / L^2`, so norms of the generated field do not depend
//! on the box size beyond lattice effects.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linear::{DensityForm, RadialSpectralDensity};
use crate::spectral::{dealias, Complex, Grid2D, SpectralField};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialData {
    /// Random phases on `2^j_lo <= |xi| <= 2^j_hi` with modulus
    /// `amplitude * |xi|^envelope`. `envelope = s - 1` mimics data in
    /// `B^{-s}_{2,inf}` in two dimensions.
    Shells {
        amplitude: f64,
        j_lo: i32,
        j_hi: i32,
        #[serde(default)]
        envelope: f64,
    },
    /// Real, phase-free radial spectrum `amplitude * rho(|xi|)`.
    Radial { amplitude: f64, density: DensityForm },
    /// Explicit real cosine/sine modes `a cos(xi_k . x) + b sin(xi_k . x)`.
    Modes { modes: Vec<Mode> },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mode {
    pub k1: i64,
    pub k2: i64,
    #[serde(default)]
    pub cos: f64,
    #[serde(default)]
    pub sin: f64,
}

impl InitialData {
    pub fn amplitude(&self) -> Option<f64> {
        match self {
            InitialData::Shells { amplitude, .. } | InitialData::Radial { amplitude, .. } => Some(*amplitude),
            InitialData::Modes { .. } => None,
        }
    }

    /// Same description with the amplitude multiplied by `factor`.
    pub fn rescaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        match &mut out {
            InitialData::Shells { amplitude, .. } | InitialData::Radial { amplitude, .. } => *amplitude *= factor,
            InitialData::Modes { modes } => {
                for m in modes {
                    m.cos *= factor;
                    m.sin *= factor;
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            InitialData::Shells {
                amplitude,
                j_lo,
                j_hi,
                envelope,
            } => {
                if !(*amplitude >= 0.0) || !amplitude.is_finite() {
                    return Err(Error::InvalidParameter(format!(
                        "amplitude must be finite and >= 0, got {amplitude}"
                    )));
                }
                if j_lo > j_hi {
                    return Err(Error::InvalidParameter(format!("empty shell range [{j_lo}, {j_hi}]")));
                }
                if !envelope.is_finite() {
                    return Err(Error::InvalidParameter("envelope exponent must be finite".into()));
                }
            }
            InitialData::Radial { amplitude, density } => {
                if !(*amplitude >= 0.0) || !amplitude.is_finite() {
                    return Err(Error::InvalidParameter(format!(
                        "amplitude must be finite and >= 0, got {amplitude}"
                    )));
                }
                RadialSpectralDensity::new(2, *density)?;
            }
            InitialData::Modes { modes } => {
                if modes.iter().any(|m| !m.cos.is_finite() || !m.sin.is_finite()) {
                    return Err(Error::InvalidParameter("mode coefficients must be finite".into()));
                }
            }
        }
        Ok(())
    }

    /// Dealiased, Hermitian coefficients. Only `Shells` consumes the seed.
    pub fn build(&self, grid: Grid2D, seed: u64) -> Result<SpectralField> {
        self.validate()?;
        let mut out = SpectralField::zeros(grid);
        let area = grid.length() * grid.length();
        match self {
            InitialData::Shells {
                amplitude,
                j_lo,
                j_hi,
                envelope,
            } => {
                let lo = 2f64.powi(*j_lo);
                let hi = 2f64.powi(*j_hi);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                for (k1, k2) in half_plane(grid) {
                    let r = grid.xi(k1).hypot(grid.xi(k2));
                    if r < lo || r > hi {
                        continue;
                    }
                    let phase = rng.random_range(0.0..2.0 * PI);
                    let c = Complex::from_polar(amplitude * r.powf(*envelope) / area, phase);
                    out.set(k1, k2, c);
                    out.set(-k1, -k2, c.conj());
                }
            }
            InitialData::Radial { amplitude, density } => {
                let rho = RadialSpectralDensity::new(2, *density)?;
                for (k1, k2) in half_plane(grid) {
                    let r = grid.xi(k1).hypot(grid.xi(k2));
                    let c = Complex::new(amplitude * rho.eval(r) / area, 0.0);
                    out.set(k1, k2, c);
                    out.set(-k1, -k2, c);
                }
            }
            InitialData::Modes { modes } => {
                let nyq = grid.n() as i64 / 2;
                for m in modes {
                    if m.k1.abs() >= nyq || m.k2.abs() >= nyq {
                        return Err(Error::InvalidParameter(format!(
                            "mode ({}, {}) is not resolved on an n = {} grid",
                            m.k1,
                            m.k2,
                            grid.n()
                        )));
                    }
                    if m.k1 == 0 && m.k2 == 0 {
                        out.set(0, 0, out.get(0, 0) + m.cos);
                        continue;
                    }
                    // a cos + b sin = (a - i b)/2 e^{i k.x} + (a + i b)/2 e^{-i k.x}
                    let c = Complex::new(m.cos / 2.0, -m.sin / 2.0);
                    out.set(m.k1, m.k2, out.get(m.k1, m.k2) + c);
                    out.set(-m.k1, -m.k2, out.get(-m.k1, -m.k2) + c.conj());
                }
            }
        }
        Ok(dealias(&out))
    }
}

/// Retained nonzero wavevectors with one representative per `+-k` pair, in a
/// fixed order.
fn half_plane(grid: Grid2D) -> impl Iterator<Item = (i64, i64)> {
    let cut = grid.dealias_cutoff();
    (0..=cut).flat_map(move |k1| (-cut..=cut).filter(move |&k2| k1 > 0 || k2 > 0).map(move |k2| (k1, k2)))
}
