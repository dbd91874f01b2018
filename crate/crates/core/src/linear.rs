//! The linear flow `u_t + Lambda^alpha u = 0`: exact evolution on the grid and
//! a continuum frequency-space oracle for its `L^2`-based Besov norms.
//!
//! The oracle works with radial spectra `|u_0^(xi)| = rho(|xi|)` in any
//! dimension. By Plancherel,
//!
//! ```text
//! ||Delta_j u(t)||_{L^2}^2 = (2 pi)^{-n} omega_{n-1} int phi(2^-j r)^2 exp(-2 t r^alpha) rho(r)^2 r^{n-1} dr
//! ```
//!
//! which is a one-dimensional integral over the shell `2^j [3/4, 8/3]`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decay::{NormKind, NormSeries, SeriesDescriptor};
use crate::error::{Error, Result};
use crate::littlewood_paley::{BesovParams, DyadicProfile};
use crate::quadrature::{adaptive_simpson, QuadratureOptions};
use crate::spectral::SpectralField;

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 2.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "alpha must lie in (0, 2], got {alpha}"
        )))
    }
}

/// Multiplies each coefficient by `exp(-t |xi|^alpha)`.
pub fn evolve_linear(field: &SpectralField, alpha: f64, t: f64) -> Result<SpectralField> {
    check_alpha(alpha)?;
    if t < 0.0 || t.is_nan() {
        return Err(Error::NegativeTime(t));
    }
    Ok(field.map_radial(|r| (-t * r.powf(alpha)).exp()))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum DensityForm {
    /// `1` on `|xi| <= radius`.
    BallIndicator { radius: f64 },
    /// `r^exponent` on `[r_lo, r_hi]`.
    PowerLaw { exponent: f64, r_lo: f64, r_hi: f64 },
    /// `exp(-r^2 / (2 sigma^2))`.
    Gaussian { sigma: f64 },
    /// Smooth bump `exp(4 - w^2 / ((r - r_lo)(r_hi - r)))` on `(r_lo, r_hi)`,
    /// `w = r_hi - r_lo`; peak value 1 at the midpoint.
    Bump { r_lo: f64, r_hi: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialSpectralDensity {
    dimension: u32,
    form: DensityForm,
}

impl RadialSpectralDensity {
    pub fn new(dimension: u32, form: DensityForm) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        let ok = match form {
            DensityForm::BallIndicator { radius } => radius > 0.0 && radius.is_finite(),
            DensityForm::PowerLaw { exponent, r_lo, r_hi } => {
                // square-integrable near the origin against r^{n-1}
                exponent.is_finite()
                    && r_lo >= 0.0
                    && r_hi > r_lo
                    && r_hi.is_finite()
                    && (r_lo > 0.0 || 2.0 * exponent + dimension as f64 > 0.0)
            }
            DensityForm::Gaussian { sigma } => sigma > 0.0 && sigma.is_finite(),
            DensityForm::Bump { r_lo, r_hi } => r_lo >= 0.0 && r_hi > r_lo && r_hi.is_finite(),
        };
        if !ok {
            return Err(Error::InvalidParameter(format!("invalid spectral density {form:?}")));
        }
        Ok(Self { dimension, form })
    }

    pub fn ball(dimension: u32, radius: f64) -> Result<Self> {
        Self::new(dimension, DensityForm::BallIndicator { radius })
    }

    pub fn dimension(&self) -> u32 {
        self.dimension
    }

    pub fn form(&self) -> DensityForm {
        self.form
    }

    pub fn eval(&self, r: f64) -> f64 {
        match self.form {
            DensityForm::BallIndicator { radius } => {
                if r <= radius {
                    1.0
                } else {
                    0.0
                }
            }
            DensityForm::PowerLaw { exponent, r_lo, r_hi } => {
                if r >= r_lo && r <= r_hi && r > 0.0 {
                    r.powf(exponent)
                } else {
                    0.0
                }
            }
            DensityForm::Gaussian { sigma } => (-0.5 * (r / sigma).powi(2)).exp(),
            DensityForm::Bump { r_lo, r_hi } => {
                if r <= r_lo || r >= r_hi {
                    0.0
                } else {
                    let w = r_hi - r_lo;
                    (4.0 - w * w / ((r - r_lo) * (r_hi - r))).exp()
                }
            }
        }
    }

    /// Radial support `[lo, hi]` (`hi` may be infinite).
    pub fn support(&self) -> (f64, f64) {
        match self.form {
            DensityForm::BallIndicator { radius } => (0.0, radius),
            DensityForm::PowerLaw { r_lo, r_hi, .. } => (r_lo, r_hi),
            DensityForm::Gaussian { .. } => (0.0, f64::INFINITY),
            DensityForm::Bump { r_lo, r_hi } => (r_lo, r_hi),
        }
    }

    fn characteristic_radius(&self) -> f64 {
        match self.form {
            DensityForm::BallIndicator { radius } => 0.5 * radius,
            DensityForm::PowerLaw { r_lo, r_hi, .. } => {
                if r_lo > 0.0 {
                    (r_lo * r_hi).sqrt()
                } else {
                    0.5 * r_hi
                }
            }
            DensityForm::Gaussian { sigma } => sigma,
            DensityForm::Bump { r_lo, r_hi } => 0.5 * (r_lo + r_hi),
        }
    }
}

/// Surface measure of the unit sphere in `R^n`.
pub fn sphere_measure(dimension: u32) -> f64 {
    // S_1 = 2, S_2 = 2 pi, S_{n+2} = 2 pi S_n / n
    let (mut n, mut s) = if dimension % 2 == 1 { (1, 2.0) } else { (2, 2.0 * PI) };
    while n < dimension {
        s *= 2.0 * PI / n as f64;
        n += 2;
    }
    s
}

/// `exp(-x)` inherits relative error `x eps` from its argument, so the
/// accepted noise grows with the largest exponent on the shell (capped where
/// `exp` underflows anyway).
fn oracle_options(max_exponent: f64, alpha: f64) -> QuadratureOptions {
    QuadratureOptions {
        relative_tolerance: 1e-11,
        absolute_floor: 1e-300,
        noise: 64.0 * f64::EPSILON * (1.0 + alpha * max_exponent.min(745.0)),
        ..Default::default()
    }
}

/// Integral of `weight(u) exp(-2 t (2^j u)^alpha) rho(2^j u)^2 u^{n-1}` over the
/// shell in the rescaled variable `u = 2^-j r`, times `(2 pi)^{-n} omega_{n-1}`.
/// The factor `2^{jn}` is left out.
fn shell_integral(
    density: &RadialSpectralDensity,
    j: i32,
    t: f64,
    alpha: f64,
    weight: impl Fn(f64) -> f64,
    profile: &DyadicProfile,
) -> Result<f64> {
    let scale = 2f64.powi(j);
    let (inner, outer) = profile.support();
    let (lo, hi) = density.support();
    let a = inner.max(lo / scale);
    let b = outer.min(hi / scale);
    if !(b > a) {
        return Ok(0.0);
    }
    let dim = density.dimension as i32;
    let integrand = |u: f64| {
        let r = scale * u;
        let rho = density.eval(r);
        if rho == 0.0 {
            return 0.0;
        }
        weight(u) * (-2.0 * t * r.powf(alpha)).exp() * rho * rho * u.powi(dim - 1)
    };
    let q = adaptive_simpson(
        integrand,
        a,
        b,
        &oracle_options(2.0 * t * (scale * b).powf(alpha), alpha),
    )?;
    Ok(q.value.max(0.0) * sphere_measure(density.dimension) * (2.0 * PI).powi(-dim))
}

/// `||Delta_j u(t)||_{L^2}` for the linear flow started from `density`.
pub fn oracle_block_norm(
    density: &RadialSpectralDensity,
    j: i32,
    t: f64,
    alpha: f64,
    profile: &DyadicProfile,
) -> Result<f64> {
    check_alpha(alpha)?;
    if t < 0.0 || t.is_nan() {
        return Err(Error::NegativeTime(t));
    }
    let i = shell_integral(density, j, t, alpha, |u| profile.phi(u).powi(2), profile)?;
    // 2^{jn/2} applied after the square root to stay clear of underflow.
    Ok(i.sqrt() * 2f64.powf(0.5 * j as f64 * density.dimension as f64))
}

/// Lowest and highest dyadic index ever visited by the oracle sums.
const J_FLOOR: i32 = -1000;
const J_CEIL: i32 = 1000;
const TRUNCATION: f64 = 1e-14;

/// Direction-aware summation of a dyadic series `term(j)`, stopping where terms
/// become negligible against the running aggregate (or, for `r = inf`, where
/// they settle on a limit).
fn dyadic_aggregate(
    density: &RadialSpectralDensity,
    r: f64,
    profile: &DyadicProfile,
    term: impl Fn(i32) -> Result<f64>,
) -> Result<f64> {
    let (inner, outer) = profile.support();
    let (lo, hi) = density.support();
    let start = density.characteristic_radius().log2().round() as i32;
    let sup = r.is_infinite();
    let mut acc = 0.0_f64; // sum of term^r, or running max
    let add = |acc: &mut f64, v: f64| {
        if sup {
            *acc = acc.max(v);
        } else {
            *acc += v.powf(r);
        }
    };
    let total = |acc: f64| if sup { acc } else { acc.powf(1.0 / r) };

    let mut prev: Option<f64> = None;
    let mut j = start;
    loop {
        if inner * 2f64.powi(j) >= hi {
            break;
        }
        if j > J_CEIL {
            return Err(Error::Divergent(format!("terms do not vanish as j -> +inf ({j})")));
        }
        let v = term(j)?;
        add(&mut acc, v);
        let negligible = acc > 0.0 && v <= TRUNCATION * total(acc);
        let exhausted = v == 0.0 && prev == Some(0.0);
        if j > start && ((negligible && prev.is_some_and(|p| v <= p)) || exhausted) {
            break;
        }
        prev = Some(v);
        j += 1;
    }

    let mut prev: Option<f64> = None;
    let mut j = start - 1;
    loop {
        if outer * 2f64.powi(j) <= lo {
            break;
        }
        if j < J_FLOOR {
            return Err(Error::Divergent(format!(
                "terms do not vanish as j -> -inf (data not in this Besov space at the {j} block)"
            )));
        }
        let v = term(j)?;
        add(&mut acc, v);
        let negligible = acc > 0.0 && v <= TRUNCATION * total(acc);
        let settled = sup && v > 0.0 && prev.is_some_and(|p| (v - p).abs() <= TRUNCATION * v);
        if (negligible && prev.is_some_and(|p| v <= p)) || settled {
            break;
        }
        prev = Some(v);
        j -= 1;
    }
    Ok(total(acc))
}

/// `L^2`-based Besov norm of the linear flow at time `t`.
pub fn oracle_besov_norm(
    density: &RadialSpectralDensity,
    params: &BesovParams,
    alpha: f64,
    t: f64,
    profile: &DyadicProfile,
) -> Result<f64> {
    if params.p.value() != 2.0 {
        return Err(Error::InvalidParameter(
            "the frequency oracle only handles p = 2".into(),
        ));
    }
    check_alpha(alpha)?;
    dyadic_aggregate(density, params.r.value(), profile, |j| {
        Ok(2f64.powf(j as f64 * params.s) * oracle_block_norm(density, j, t, alpha, profile)?)
    })
}

/// `||u(t)||_{L^2}` assembled block by block as `sum_j int phi_j |u^|^2`
/// (exact, since the `phi_j` sum to one).
pub fn oracle_l2_norm(density: &RadialSpectralDensity, alpha: f64, t: f64, profile: &DyadicProfile) -> Result<f64> {
    check_alpha(alpha)?;
    if t < 0.0 || t.is_nan() {
        return Err(Error::NegativeTime(t));
    }
    let n = density.dimension as f64;
    let sq = dyadic_aggregate(density, 1.0, profile, |j| {
        Ok(shell_integral(density, j, t, alpha, |u| profile.phi(u), profile)? * 2f64.powf(j as f64 * n))
    })?;
    Ok(sq.sqrt())
}

/// Oracle Besov norms at each of `times` (positive, increasing).
pub fn oracle_besov_series(
    density: &RadialSpectralDensity,
    params: &BesovParams,
    alpha: f64,
    times: &[f64],
    profile: &DyadicProfile,
) -> Result<NormSeries> {
    let values = times
        .par_iter()
        .map(|&t| oracle_besov_norm(density, params, alpha, t, profile))
        .collect::<Result<Vec<_>>>()?;
    NormSeries::new(
        times.to_vec(),
        values,
        SeriesDescriptor {
            label: format!("oracle B^{}_{{2,{}}}", params.s, params.r.value()),
            norm: NormKind::Besov(*params),
            source: format!("oracle alpha={alpha} {:?}", density.form),
        },
    )
}

/// `count_per_decade` log-spaced points per decade over `[lo, hi]`, both ends included.
pub fn log_spaced(lo: f64, hi: f64, count_per_decade: usize) -> Vec<f64> {
    let decades = (hi / lo).log10();
    let steps = ((decades * count_per_decade as f64).ceil() as usize).max(1);
    (0..=steps)
        .map(|i| {
            if i == steps {
                hi
            } else {
                lo * 10f64.powf(decades * i as f64 / steps as f64)
            }
        })
        .collect()
}
