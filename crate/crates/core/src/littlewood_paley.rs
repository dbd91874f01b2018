//! Littlewood-Paley analysis on the periodic grid: dyadic blocks, Lebesgue and
//! homogeneous Besov norms, Chemin-Lerner time-space norms and Bony's
//! paraproduct decomposition.

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{
    apply_fourier_multiplier, dealias, forward, inverse, Axis, Grid2D, MultiplierSpec, RealField, SpectralField,
};

/// `g(t) / (g(t) + g(1 - t))` with `g(t) = exp(-1/t)` for `t > 0`: a C-infinity
/// step from 0 at `t <= 0` to 1 at `t >= 1`.
pub fn smooth_step(t: f64) -> f64 {
    let g = |x: f64| if x > 0.0 { (-1.0 / x).exp() } else { 0.0 };
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        let a = g(t);
        a / (a + g(1.0 - t))
    }
}

/// The radial bump `phi(r) = chi(r/2) - chi(r)` supported in `[3/4, 8/3]`.
///
/// `chi` is 1 on `[0, 3/4]`, 0 on `[4/3, inf)` and smooth in between, so the
/// dilates `phi(2^-j r)` telescope to exactly 1 for every `r > 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DyadicProfile {
    plateau_end: f64,
    cutoff: f64,
}

impl Default for DyadicProfile {
    fn default() -> Self {
        build_dyadic_profile()
    }
}

pub fn build_dyadic_profile() -> DyadicProfile {
    DyadicProfile {
        plateau_end: 0.75,
        cutoff: 4.0 / 3.0,
    }
}

impl DyadicProfile {
    /// Smooth cutoff, 1 near the origin.
    pub fn chi(&self, r: f64) -> f64 {
        if r <= self.plateau_end {
            1.0
        } else if r >= self.cutoff {
            0.0
        } else {
            smooth_step((self.cutoff - r) / (self.cutoff - self.plateau_end))
        }
    }

    /// `1 - chi(r)`, evaluated as a step in its own right so that values near
    /// the inner edge keep full relative precision.
    pub fn chi_complement(&self, r: f64) -> f64 {
        if r <= self.plateau_end {
            0.0
        } else if r >= self.cutoff {
            1.0
        } else {
            smooth_step((r - self.plateau_end) / (self.cutoff - self.plateau_end))
        }
    }

    pub fn phi(&self, r: f64) -> f64 {
        // Below the cutoff chi(r/2) = 1; above it chi(r) = 0.
        if r < self.cutoff {
            self.chi_complement(r)
        } else {
            self.chi(0.5 * r)
        }
    }

    /// Closed support `[inner, outer]` of `phi`.
    pub fn support(&self) -> (f64, f64) {
        (self.plateau_end, 2.0 * self.cutoff)
    }

    /// Symbol of `Delta_j` at `|xi| = r`.
    pub fn block_symbol(&self, j: i32, r: f64) -> f64 {
        self.phi(r * 2f64.powi(-j))
    }

    /// Symbol of `S_j = sum_{k <= j-1} Delta_k` at `|xi| = r`, which telescopes to `chi(2^-j r)`.
    pub fn low_pass_symbol(&self, j: i32, r: f64) -> f64 {
        self.chi(r * 2f64.powi(-j))
    }

    /// Dyadic indices whose open shell `2^j (3/4, 8/3)` meets `[lo, hi]`.
    pub fn blocks_meeting(&self, lo: f64, hi: f64) -> Option<BlockRange> {
        let (inner, outer) = self.support();
        let mut j_min = (lo * inner.recip()).log2().floor() as i32 - 3;
        while outer * 2f64.powi(j_min) <= lo {
            j_min += 1;
        }
        while outer * 2f64.powi(j_min - 1) > lo {
            j_min -= 1;
        }
        let mut j_max = j_min;
        while inner * 2f64.powi(j_max + 1) < hi {
            j_max += 1;
        }
        (inner * 2f64.powi(j_min) < hi).then_some(BlockRange { j_min, j_max })
    }
}

/// Lebesgue exponent in `[1, inf]`; `f64::INFINITY` encodes the endpoint.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Exponent(f64);

impl Exponent {
    pub const INFINITY: Exponent = Exponent(f64::INFINITY);

    pub fn new(value: f64) -> Result<Self> {
        if value >= 1.0 {
            Ok(Self(value))
        } else {
            Err(Error::InvalidParameter(format!(
                "exponent must lie in [1, inf], got {value}"
            )))
        }
    }

    pub fn finite(value: f64) -> Result<Self> {
        Self::new(value)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }

    /// `1 / p`, zero at infinity.
    pub fn reciprocal(self) -> f64 {
        1.0 / self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BesovParams {
    pub s: f64,
    pub p: Exponent,
    pub r: Exponent,
}

impl BesovParams {
    pub fn new(s: f64, p: f64, r: f64) -> Result<Self> {
        if !s.is_finite() {
            return Err(Error::InvalidParameter(format!("regularity must be finite, got {s}")));
        }
        Ok(Self {
            s,
            p: Exponent::new(p)?,
            r: Exponent::new(r)?,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockRange {
    pub j_min: i32,
    pub j_max: i32,
}

impl BlockRange {
    /// Blocks seen by data band-limited to the retained (2/3-rule) modes of `grid`.
    pub fn for_grid(grid: &Grid2D, profile: &DyadicProfile) -> Result<Self> {
        profile
            .blocks_meeting(grid.xi_min(), grid.xi_max_retained())
            .ok_or(Error::EmptyBlockRange)
    }

    /// Blocks seen by arbitrary data on `grid`, up to the Nyquist corner.
    pub fn full(grid: &Grid2D, profile: &DyadicProfile) -> Result<Self> {
        profile
            .blocks_meeting(grid.xi_min(), grid.xi_nyquist() * std::f64::consts::SQRT_2)
            .ok_or(Error::EmptyBlockRange)
    }

    pub fn iter(&self) -> impl Iterator<Item = i32> + Clone {
        self.j_min..=self.j_max
    }

    pub fn len(&self) -> usize {
        (self.j_max - self.j_min + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.j_max < self.j_min
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProjectionKind {
    /// `Delta_j`
    Block,
    /// `S_j`
    LowPass,
}

fn radial_multiply(field: &SpectralField, xi: &[f64], symbol: impl Fn(f64) -> f64) -> SpectralField {
    let coeffs = field
        .coefficients()
        .iter()
        .zip(xi)
        .map(|(c, &r)| c * symbol(r))
        .collect();
    SpectralField::from_coefficients(*field.grid(), coeffs).expect("same grid")
}

pub fn project(field: &SpectralField, j: i32, kind: ProjectionKind, profile: &DyadicProfile) -> SpectralField {
    let xi = field.grid().xi_magnitudes();
    project_with(field, &xi, j, kind, profile)
}

fn project_with(
    field: &SpectralField,
    xi: &[f64],
    j: i32,
    kind: ProjectionKind,
    profile: &DyadicProfile,
) -> SpectralField {
    match kind {
        ProjectionKind::Block => radial_multiply(field, xi, |r| profile.block_symbol(j, r)),
        ProjectionKind::LowPass => radial_multiply(field, xi, |r| profile.low_pass_symbol(j, r)),
    }
}

/// `(h^2 sum |f|^p)^{1/p}`, or `max |f|` for `p = inf`.
pub fn lebesgue_norm(field: &RealField, p: Exponent) -> f64 {
    lebesgue_norm_of(field.values(), field.grid().spacing(), p)
}

fn lebesgue_norm_of(values: &[f64], h: f64, p: Exponent) -> f64 {
    if p.is_infinite() {
        return values.iter().fold(0.0, |m, v| m.max(v.abs()));
    }
    let p = p.value();
    let sum: f64 = if p == 2.0 {
        values.iter().map(|v| v * v).sum()
    } else if p == 1.0 {
        values.iter().map(|v| v.abs()).sum()
    } else {
        values.iter().map(|v| v.abs().powf(p)).sum()
    };
    (h * h * sum).powf(1.0 / p)
}

/// `L^p` norm of the field represented by `field`; `p = 2` goes through Parseval.
pub fn spectral_lebesgue_norm(field: &SpectralField, p: Exponent) -> Result<f64> {
    if p.value() == 2.0 {
        Ok(field.l2_norm())
    } else {
        Ok(lebesgue_norm(&inverse(field)?, p))
    }
}

/// `||Delta_j f||_{L^p}` for every `j` in `range`, ascending.
pub fn block_norms(field: &SpectralField, range: BlockRange, p: Exponent, profile: &DyadicProfile) -> Result<Vec<f64>> {
    let xi = field.grid().xi_magnitudes();
    range
        .iter()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&j| spectral_lebesgue_norm(&project_with(field, &xi, j, ProjectionKind::Block, profile), p))
        .collect()
}

/// `l^r` combination of `2^{js} a_j` in ascending `j`.
pub fn weighted_lr(range: BlockRange, block_values: &[f64], s: f64, r: Exponent) -> f64 {
    let terms = range.iter().zip(block_values).map(|(j, a)| 2f64.powf(j as f64 * s) * a);
    if r.is_infinite() {
        terms.fold(0.0, f64::max)
    } else {
        let r = r.value();
        terms.map(|t| t.powf(r)).sum::<f64>().powf(1.0 / r)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BesovNorm {
    pub value: f64,
    pub range: BlockRange,
    pub mean_removed: bool,
}

pub fn besov_norm(field: &RealField, params: &BesovParams, profile: &DyadicProfile) -> Result<BesovNorm> {
    besov_norm_spectral(&forward(field), params, profile)
}

/// Besov norm of a field given by its coefficients. A nonzero mean is
/// projected out: homogeneous norms only see the field modulo constants.
pub fn besov_norm_spectral(field: &SpectralField, params: &BesovParams, profile: &DyadicProfile) -> Result<BesovNorm> {
    let range = BlockRange::for_grid(field.grid(), profile)?;
    let scale = field.max_abs();
    let mean_removed = field.mean().abs() > 1e-12 * scale.max(f64::MIN_POSITIVE);
    if mean_removed {
        warn!("besov_norm: projecting out nonzero mean {:e}", field.mean());
    }
    // Delta_j kills the zero mode, so no explicit projection is needed.
    let blocks = block_norms(field, range, params.p, profile)?;
    Ok(BesovNorm {
        value: weighted_lr(range, &blocks, params.s, params.r),
        range,
        mean_removed,
    })
}

/// Besov norm of `grad f`, using the pointwise Euclidean length of `grad Delta_j f`.
pub fn gradient_besov_norm(field: &RealField, params: &BesovParams, profile: &DyadicProfile) -> Result<f64> {
    let fhat = forward(field);
    let range = BlockRange::for_grid(field.grid(), profile)?;
    let xi = fhat.grid().xi_magnitudes();
    let h = field.grid().spacing();
    let blocks = range
        .iter()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&j| -> Result<f64> {
            let b = project_with(&fhat, &xi, j, ProjectionKind::Block, profile);
            let d1 = inverse(&apply_fourier_multiplier(&b, &MultiplierSpec::Partial(Axis::X1))?)?;
            let d2 = inverse(&apply_fourier_multiplier(&b, &MultiplierSpec::Partial(Axis::X2))?)?;
            let magnitude: Vec<f64> = d1.values().iter().zip(d2.values()).map(|(a, b)| a.hypot(*b)).collect();
            Ok(lebesgue_norm_of(&magnitude, h, params.p))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(weighted_lr(range, &blocks, params.s, params.r))
}

fn check_series(series: &[(f64, RealField)]) -> Result<()> {
    for w in series.windows(2) {
        if !(w[1].0 > w[0].0) {
            return Err(Error::InvalidParameter(format!(
                "timestamps must be strictly increasing ({} then {})",
                w[0].0, w[1].0
            )));
        }
        if w[0].1.grid() != w[1].1.grid() {
            return Err(Error::GridMismatch);
        }
    }
    Ok(())
}

/// Trapezoid weights on the sample times.
fn trapezoid_weights(times: &[f64]) -> Vec<f64> {
    let m = times.len();
    (0..m)
        .map(|i| {
            let left = if i > 0 { times[i] - times[i - 1] } else { 0.0 };
            let right = if i + 1 < m { times[i + 1] - times[i] } else { 0.0 };
            0.5 * (left + right)
        })
        .collect()
}

/// `L^rho` in time of a nonnegative sampled function, trapezoid rule, sup for `rho = inf`.
fn time_norm(values: &[f64], weights: &[f64], rho: Exponent) -> f64 {
    if rho.is_infinite() {
        values.iter().copied().fold(0.0, f64::max)
    } else {
        let rho = rho.value();
        values
            .iter()
            .zip(weights)
            .map(|(v, w)| w * v.powf(rho))
            .sum::<f64>()
            .powf(1.0 / rho)
    }
}

fn prepare_time_series(series: &[(f64, RealField)], rho: Exponent) -> Result<()> {
    let needed = if rho.is_infinite() { 1 } else { 2 };
    if series.len() < needed {
        return Err(Error::InsufficientSamples {
            needed,
            got: series.len(),
        });
    }
    check_series(series)
}

/// Chemin-Lerner norm: `L^rho` in time taken inside the `l^r` sum over blocks.
/// The time integral runs over `[t_first, t_last]`.
pub fn chemin_lerner_norm(
    series: &[(f64, RealField)],
    rho: Exponent,
    params: &BesovParams,
    profile: &DyadicProfile,
) -> Result<f64> {
    prepare_time_series(series, rho)?;
    let grid = *series[0].1.grid();
    let range = BlockRange::for_grid(&grid, profile)?;
    let per_time: Vec<Vec<f64>> = series
        .iter()
        .map(|(_, f)| block_norms(&forward(f), range, params.p, profile))
        .collect::<Result<_>>()?;
    let times: Vec<f64> = series.iter().map(|(t, _)| *t).collect();
    let weights = trapezoid_weights(&times);
    let per_block: Vec<f64> = (0..range.len())
        .map(|b| {
            let column: Vec<f64> = per_time.iter().map(|row| row[b]).collect();
            time_norm(&column, &weights, rho)
        })
        .collect();
    Ok(weighted_lr(range, &per_block, params.s, params.r))
}

/// `L^rho` in time of the Besov norm, the outer counterpart of [`chemin_lerner_norm`].
pub fn time_lebesgue_besov_norm(
    series: &[(f64, RealField)],
    rho: Exponent,
    params: &BesovParams,
    profile: &DyadicProfile,
) -> Result<f64> {
    prepare_time_series(series, rho)?;
    let values: Vec<f64> = series
        .iter()
        .map(|(_, f)| besov_norm(f, params, profile).map(|b| b.value))
        .collect::<Result<_>>()?;
    let times: Vec<f64> = series.iter().map(|(t, _)| *t).collect();
    Ok(time_norm(&values, &trapezoid_weights(&times), rho))
}

/// The three pieces of `fg = T_f g + T_g f + R(f, g)`.
#[derive(Clone, Debug)]
pub struct BonyPieces {
    /// `T_f g = sum_j S_{j-1} f Delta_j g`
    pub low_high: RealField,
    /// `T_g f = sum_j S_{j-1} g Delta_j f`
    pub high_low: RealField,
    /// `R(f, g) = sum_j Delta_j f (Delta_{j-1} + Delta_j + Delta_{j+1}) g`
    pub remainder: RealField,
}

/// Dealiased `S_{j-1} f * Delta_j g`, one term of the paraproduct.
pub fn paraproduct_term(
    f: &SpectralField,
    g: &SpectralField,
    j: i32,
    profile: &DyadicProfile,
) -> Result<SpectralField> {
    if f.grid() != g.grid() {
        return Err(Error::GridMismatch);
    }
    let low = inverse(&project(f, j - 1, ProjectionKind::LowPass, profile))?;
    let high = inverse(&project(g, j, ProjectionKind::Block, profile))?;
    Ok(dealias(&forward(&low.product(&high)?)))
}

/// Bony decomposition with products formed in physical space and dealiased.
///
/// The pieces add up to the dealiased product `fg` minus `mean(f) mean(g)`;
/// for mean-free inputs that is the whole product.
pub fn bony_decompose(f: &RealField, g: &RealField, profile: &DyadicProfile) -> Result<BonyPieces> {
    if f.grid() != g.grid() {
        return Err(Error::GridMismatch);
    }
    let grid = *f.grid();
    let range = BlockRange::full(&grid, profile)?;
    let fhat = forward(f);
    let ghat = forward(g);
    let xi = grid.xi_magnitudes();

    let block = |field: &SpectralField, j: i32| project_with(field, &xi, j, ProjectionKind::Block, profile);
    let low = |field: &SpectralField, j: i32| project_with(field, &xi, j, ProjectionKind::LowPass, profile);

    let terms: Vec<[Vec<f64>; 3]> = range
        .iter()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&j| -> Result<[Vec<f64>; 3]> {
            let df = inverse(&block(&fhat, j))?;
            let dg = inverse(&block(&ghat, j))?;
            let sf = inverse(&low(&fhat, j - 1))?;
            let sg = inverse(&low(&ghat, j - 1))?;
            let wide = block(&ghat, j - 1)
                .add_scaled(1.0, &block(&ghat, j))?
                .add_scaled(1.0, &block(&ghat, j + 1))?;
            let wide = inverse(&wide)?;
            Ok([
                sf.product(&dg)?.into_values(),
                sg.product(&df)?.into_values(),
                df.product(&wide)?.into_values(),
            ])
        })
        .collect::<Result<_>>()?;

    let mut sums = [
        vec![0.0; grid.points()],
        vec![0.0; grid.points()],
        vec![0.0; grid.points()],
    ];
    for term in &terms {
        for (acc, t) in sums.iter_mut().zip(term) {
            for (a, v) in acc.iter_mut().zip(t) {
                *a += v;
            }
        }
    }
    let [lh, hl, rem] = sums;
    let finish =
        |values: Vec<f64>| -> Result<RealField> { inverse(&dealias(&forward(&RealField::new(grid, values)?))) };
    Ok(BonyPieces {
        low_high: finish(lh)?,
        high_low: finish(hl)?,
        remainder: finish(rem)?,
    })
}
