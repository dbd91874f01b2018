//! Periodic-grid fields, the 2D discrete Fourier transform and Fourier multipliers.
//!
//! Frequencies are angular: the coefficient at integer index `k` sits at
//! `xi_k = 2 pi k / L`, and the fractional Laplacian `Lambda^alpha` has symbol
//! `|xi|^alpha`. The forward transform is normalized so that
//! `f(x) = sum_k c_k exp(i xi_k . x)`, which makes single Fourier modes
//! coefficient-exact (`cos(2 pi x1 / L)` has coefficients `1/2` at `k = (+-1, 0)`).
//!
//! Storage is row-major with the first index along `x1`; coefficients use the
//! usual FFT ordering (`0, 1, .., n/2 - 1, -n/2, .., -1`) along each axis.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Complex = rustfft::num_complex::Complex64;

const ZERO: Complex = Complex::new(0.0, 0.0);

/// Threshold on `|c_0|` above which inverting `|xi|` is refused.
pub const MEAN_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid2D {
    n: usize,
    length: f64,
}

impl Grid2D {
    pub fn new(n: usize, length: f64) -> Result<Self> {
        if n < 8 || !n.is_power_of_two() || !(length > 0.0) || !length.is_finite() {
            return Err(Error::InvalidGrid { n, length });
        }
        Ok(Self { n, length })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn points(&self) -> usize {
        self.n * self.n
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    /// Smallest nonzero resolvable wavenumber `2 pi / L`.
    pub fn xi_min(&self) -> f64 {
        2.0 * PI / self.length
    }

    /// Nyquist wavenumber `pi n / L`.
    pub fn xi_nyquist(&self) -> f64 {
        PI * self.n as f64 / self.length
    }

    /// Largest retained integer index per axis under the 2/3 rule.
    pub fn dealias_cutoff(&self) -> i64 {
        (self.n / 3) as i64
    }

    /// Largest `|xi|` among retained modes (the corner of the retained box).
    pub fn xi_max_retained(&self) -> f64 {
        self.xi(self.dealias_cutoff()) * std::f64::consts::SQRT_2
    }

    /// Signed wavenumber index of storage position `idx` along one axis.
    pub fn wavenumber(&self, idx: usize) -> i64 {
        if idx < self.n / 2 {
            idx as i64
        } else {
            idx as i64 - self.n as i64
        }
    }

    /// Storage position of the signed wavenumber index `k` (taken modulo n).
    pub fn storage_index(&self, k: i64) -> usize {
        k.rem_euclid(self.n as i64) as usize
    }

    pub fn xi(&self, k: i64) -> f64 {
        2.0 * PI * k as f64 / self.length
    }

    /// `|xi|` for every coefficient, in storage order.
    pub fn xi_magnitudes(&self) -> Vec<f64> {
        let n = self.n;
        let mut out = Vec::with_capacity(n * n);
        for a in 0..n {
            let x1 = self.xi(self.wavenumber(a));
            for b in 0..n {
                let x2 = self.xi(self.wavenumber(b));
                out.push(x1.hypot(x2));
            }
        }
        out
    }

    pub fn coordinate(&self, i: usize) -> f64 {
        i as f64 * self.spacing()
    }
}

/// Real values on the grid, row-major with index `i1 * n + i2`.
#[derive(Clone, Debug, PartialEq)]
pub struct RealField {
    grid: Grid2D,
    values: Vec<f64>,
}

impl RealField {
    pub fn new(grid: Grid2D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.points() {
            return Err(Error::LengthMismatch {
                expected: grid.points(),
                got: values.len(),
            });
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid2D) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.points()],
        }
    }

    /// Samples `f(x1, x2)` at the grid points.
    pub fn from_fn(grid: Grid2D, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let n = grid.n();
        let mut values = Vec::with_capacity(grid.points());
        for i1 in 0..n {
            let x1 = grid.coordinate(i1);
            for i2 in 0..n {
                values.push(f(x1, grid.coordinate(i2)));
            }
        }
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, i1: usize, i2: usize) -> f64 {
        self.values[i1 * self.grid.n + i2]
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// `h^2 sum f`, the discrete integral over the torus.
    pub fn integral(&self) -> f64 {
        let h = self.grid.spacing();
        h * h * self.values.iter().sum::<f64>()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    /// Pointwise product.
    pub fn product(&self, other: &Self) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(Self {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(Self {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
        })
    }
}

/// Fourier coefficients of a real field.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    grid: Grid2D,
    coeffs: Vec<Complex>,
}

impl SpectralField {
    pub fn zeros(grid: Grid2D) -> Self {
        Self {
            grid,
            coeffs: vec![ZERO; grid.points()],
        }
    }

    pub fn from_coefficients(grid: Grid2D, coeffs: Vec<Complex>) -> Result<Self> {
        if coeffs.len() != grid.points() {
            return Err(Error::LengthMismatch {
                expected: grid.points(),
                got: coeffs.len(),
            });
        }
        Ok(Self { grid, coeffs })
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn coefficients(&self) -> &[Complex] {
        &self.coeffs
    }

    pub fn coefficients_mut(&mut self) -> &mut [Complex] {
        &mut self.coeffs
    }

    pub fn get(&self, k1: i64, k2: i64) -> Complex {
        self.coeffs[self.index(k1, k2)]
    }

    pub fn set(&mut self, k1: i64, k2: i64, value: Complex) {
        let i = self.index(k1, k2);
        self.coeffs[i] = value;
    }

    fn index(&self, k1: i64, k2: i64) -> usize {
        self.grid.storage_index(k1) * self.grid.n + self.grid.storage_index(k2)
    }

    /// Mean of the represented field (the `k = 0` coefficient).
    pub fn mean(&self) -> f64 {
        self.coeffs[0].re
    }

    pub fn remove_mean(&mut self) {
        self.coeffs[0] = ZERO;
    }

    /// `L^2` norm of the represented field via Parseval: `L (sum |c_k|^2)^{1/2}`.
    pub fn l2_norm(&self) -> f64 {
        self.grid.length * self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.norm()))
    }

    /// Largest violation of `c(-k) = conj c(k)`.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.grid.n;
        let mut worst: f64 = 0.0;
        for a in 0..n {
            let ma = (n - a) % n;
            for b in 0..n {
                let mb = (n - b) % n;
                let d = self.coeffs[a * n + b] - self.coeffs[ma * n + mb].conj();
                worst = worst.max(d.norm());
            }
        }
        worst
    }

    /// Multiplies each coefficient by `symbol(|xi_k|)`.
    pub fn map_radial(&self, symbol: impl Fn(f64) -> f64) -> Self {
        let xi = self.grid.xi_magnitudes();
        Self {
            grid: self.grid,
            coeffs: self.coeffs.iter().zip(&xi).map(|(c, &r)| c * symbol(r)).collect(),
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            grid: self.grid,
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }

    /// `self + a * other`.
    pub fn add_scaled(&self, a: f64, other: &Self) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(Self {
            grid: self.grid,
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(x, y)| x + y * a).collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add_scaled(-1.0, other)
    }
}

type Plan = Arc<dyn Fft<f64>>;

fn plan(n: usize, inverse: bool) -> Plan {
    static PLANS: OnceLock<Mutex<HashMap<(usize, bool), Plan>>> = OnceLock::new();
    let mut cache = PLANS
        .get_or_init(|| Mutex::new(HashMap::new()))
        .lock()
        .unwrap_or_else(|e| e.into_inner());
    cache
        .entry((n, inverse))
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            if inverse {
                planner.plan_fft_inverse(n)
            } else {
                planner.plan_fft_forward(n)
            }
        })
        .clone()
}

fn transpose(buf: &mut [Complex], n: usize) {
    for a in 0..n {
        for b in a + 1..n {
            buf.swap(a * n + b, b * n + a);
        }
    }
}

fn fft2(buf: &mut [Complex], n: usize, inverse: bool) {
    let fft = plan(n, inverse);
    let mut scratch = vec![ZERO; fft.get_inplace_scratch_len()];
    fft.process_with_scratch(buf, &mut scratch);
    transpose(buf, n);
    fft.process_with_scratch(buf, &mut scratch);
    transpose(buf, n);
}

pub fn forward(field: &RealField) -> SpectralField {
    let n = field.grid.n;
    let mut buf: Vec<Complex> = field.values.iter().map(|&v| Complex::new(v, 0.0)).collect();
    fft2(&mut buf, n, false);
    let scale = 1.0 / (n * n) as f64;
    for c in &mut buf {
        *c *= scale;
    }
    SpectralField {
        grid: field.grid,
        coeffs: buf,
    }
}

/// Inverse transform, also returning the largest imaginary residue relative
/// to the largest real value.
pub fn inverse_with_residue(field: &SpectralField) -> Result<(RealField, f64)> {
    let n = field.grid.n;
    let mut buf = field.coeffs.clone();
    fft2(&mut buf, n, true);
    let max_re = buf.iter().fold(0.0_f64, |m, c| m.max(c.re.abs()));
    let max_im = buf.iter().fold(0.0_f64, |m, c| m.max(c.im.abs()));
    let residue = if max_re > 0.0 { max_im / max_re } else { max_im };
    let values = buf.into_iter().map(|c| c.re).collect();
    Ok((RealField::new(field.grid, values)?, residue))
}

pub fn inverse(field: &SpectralField) -> Result<RealField> {
    inverse_with_residue(field).map(|(f, _)| f)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    X1,
    X2,
}

/// Fourier multipliers used by the solvers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum MultiplierSpec {
    /// `Lambda^alpha`, symbol `|xi|^alpha`, alpha in (0, 2].
    FractionalLaplacian { alpha: f64 },
    /// `(-Delta)^{-1}`, symbol `|xi|^{-2}`.
    InverseLaplacian,
    /// `R_i`, symbol `i xi_i / |xi|`.
    Riesz(Axis),
    /// `d/dx_i`, symbol `i xi_i`.
    Partial(Axis),
    /// `Lambda^{-1}`, symbol `|xi|^{-1}`.
    InverseLambda,
}

impl MultiplierSpec {
    fn validate(&self) -> Result<()> {
        match *self {
            MultiplierSpec::FractionalLaplacian { alpha } if !(alpha > 0.0 && alpha <= 2.0) => Err(
                Error::InvalidParameter(format!("fractional Laplacian needs alpha in (0, 2], got {alpha}")),
            ),
            _ => Ok(()),
        }
    }

    fn inverts(&self) -> bool {
        matches!(self, MultiplierSpec::InverseLaplacian | MultiplierSpec::InverseLambda)
    }

    /// Symbol at `xi = (xi1, xi2)`; `xi = 0` maps to 0 for every kind.
    pub fn symbol(&self, xi1: f64, xi2: f64) -> Complex {
        let r = xi1.hypot(xi2);
        if r == 0.0 {
            return ZERO;
        }
        let component = |axis: Axis| match axis {
            Axis::X1 => xi1,
            Axis::X2 => xi2,
        };
        match *self {
            MultiplierSpec::FractionalLaplacian { alpha } => Complex::new(r.powf(alpha), 0.0),
            MultiplierSpec::InverseLaplacian => Complex::new(1.0 / (r * r), 0.0),
            MultiplierSpec::InverseLambda => Complex::new(1.0 / r, 0.0),
            MultiplierSpec::Riesz(axis) => Complex::new(0.0, component(axis) / r),
            MultiplierSpec::Partial(axis) => Complex::new(0.0, component(axis)),
        }
    }

    fn odd_axis(&self) -> Option<Axis> {
        match *self {
            MultiplierSpec::Riesz(a) | MultiplierSpec::Partial(a) => Some(a),
            _ => None,
        }
    }
}

pub fn apply_fourier_multiplier(field: &SpectralField, m: &MultiplierSpec) -> Result<SpectralField> {
    m.validate()?;
    if m.inverts() && field.coeffs[0].norm() > MEAN_TOLERANCE {
        return Err(Error::NonzeroMean {
            magnitude: field.coeffs[0].norm(),
        });
    }
    let grid = field.grid;
    let n = grid.n;
    let nyquist = -(n as i64) / 2;
    let odd = m.odd_axis();
    let mut out = field.coeffs.clone();
    for a in 0..n {
        let k1 = grid.wavenumber(a);
        for b in 0..n {
            let k2 = grid.wavenumber(b);
            // The Nyquist line is its own mirror image; an odd symbol there
            // cannot stay Hermitian, so it is dropped.
            let on_nyquist = match odd {
                Some(Axis::X1) => k1 == nyquist,
                Some(Axis::X2) => k2 == nyquist,
                None => false,
            };
            let s = if on_nyquist {
                ZERO
            } else {
                m.symbol(grid.xi(k1), grid.xi(k2))
            };
            out[a * n + b] *= s;
        }
    }
    Ok(SpectralField { grid, coeffs: out })
}

/// `Lambda^sigma` for any real `sigma`, with the zero mode mapped to 0.
pub fn lambda_power(field: &SpectralField, sigma: f64) -> Result<SpectralField> {
    if sigma < 0.0 && field.coeffs[0].norm() > MEAN_TOLERANCE {
        return Err(Error::NonzeroMean {
            magnitude: field.coeffs[0].norm(),
        });
    }
    Ok(field.map_radial(|r| if r == 0.0 { 0.0 } else { r.powf(sigma) }))
}

/// 2/3 rule: zero every coefficient with `max(|k1|, |k2|) > n/3`.
pub fn dealias(field: &SpectralField) -> SpectralField {
    let grid = field.grid;
    let n = grid.n;
    let cut = grid.dealias_cutoff();
    let mut out = field.coeffs.clone();
    for a in 0..n {
        let k1 = grid.wavenumber(a).abs();
        for b in 0..n {
            if k1 > cut || grid.wavenumber(b).abs() > cut {
                out[a * n + b] = ZERO;
            }
        }
    }
    SpectralField { grid, coeffs: out }
}

/// Dealiased spectrum of the pointwise product of two fields given spectrally.
pub fn dealiased_product(f: &SpectralField, g: &SpectralField) -> Result<SpectralField> {
    if f.grid != g.grid {
        return Err(Error::GridMismatch);
    }
    let fr = inverse(f)?;
    let gr = inverse(g)?;
    Ok(dealias(&forward(&fr.product(&gr)?)))
}
