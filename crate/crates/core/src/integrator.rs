//! Integrating-factor RK2 for `u_t + Lambda^alpha u = N(u)`.
//!
//! With `E = exp(-dt |xi|^alpha)`:
//!
//! ```text
//! k1 = N(u),  u* = E (u + dt k1),  k2 = N(u*)
//! u_new = E (u + dt/2 k1) + dt/2 k2
//! ```
//!
//! The linear part is exact, so `N = 0` reproduces the semigroup.

use crate::error::{Error, Result};
use crate::spectral::{Grid2D, SpectralField};

/// Largest admissible `dt * max|v| * n / L`.
pub const COURANT_LIMIT: f64 = 0.5;

/// A nonlinear tendency with its transport speed.
pub trait Tendency {
    /// `N(u)` as dealiased coefficients with zero mean, and `max |v|` of the
    /// transporting velocity in physical space.
    fn evaluate(&self, u: &SpectralField) -> Result<(SpectralField, f64)>;
}

/// `|xi|^alpha` per coefficient, reused across steps.
#[derive(Clone, Debug)]
pub struct DissipationRates {
    alpha: f64,
    rates: Vec<f64>,
}

impl DissipationRates {
    pub fn new(grid: &Grid2D, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha must lie in (0, 2], got {alpha}"
            )));
        }
        Ok(Self {
            alpha,
            rates: grid.xi_magnitudes().into_iter().map(|r| r.powf(alpha)).collect(),
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    fn damp(&self, field: &SpectralField, dt: f64) -> SpectralField {
        let mut out = field.clone();
        for (c, r) in out.coefficients_mut().iter_mut().zip(&self.rates) {
            *c *= (-dt * r).exp();
        }
        out
    }
}

pub fn courant_number(grid: &Grid2D, max_speed: f64, dt: f64) -> f64 {
    dt * max_speed * grid.n() as f64 / grid.length()
}

/// Result of one step.
#[derive(Clone, Debug)]
pub struct Step {
    pub field: SpectralField,
    /// Courant number at the start of the step.
    pub courant: f64,
}

pub fn if_rk2_step(u: &SpectralField, rates: &DissipationRates, dt: f64, n: &(impl Tendency + ?Sized)) -> Result<Step> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    let (k1, speed) = n.evaluate(u)?;
    let courant = courant_number(u.grid(), speed, dt);
    if courant > COURANT_LIMIT {
        return Err(Error::Cfl {
            max_velocity: speed,
            dt,
            courant,
        });
    }
    let predictor = rates.damp(&u.add_scaled(dt, &k1)?, dt);
    let (k2, _) = n.evaluate(&predictor)?;
    let field = rates
        .damp(&u.add_scaled(0.5 * dt, &k1)?, dt)
        .add_scaled(0.5 * dt, &k2)?;
    Ok(Step { field, courant })
}

/// Step sizes that advance from `t0` to `t1` with steps no longer than `dt`,
/// the last one shortened to land on `t1` exactly.
pub fn steps_between(t0: f64, t1: f64, dt: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut t = t0;
    // Tolerate a relative sliver so that t1 - t0 = m dt does not produce a tiny extra step.
    let slack = 1e-9 * dt;
    while t1 - t > slack {
        let h = if t1 - t <= dt + slack { t1 - t } else { dt };
        out.push(h);
        t += h;
    }
    out
}
