//! Theoretical decay exponents, log-log slope fitting and comparison reports.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::littlewood_paley::{BesovParams, Exponent};

/// Which decay estimate a claim refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClaimKind {
    /// Linear fractional dissipation `u_t + Lambda^alpha u = 0`:
    /// `||u(t)||_{B^l_{p,1}} <~ (1+t)^{-(l+s)/alpha}`.
    LinearDissipation,
    /// Dissipative SQG, `||theta(t)||_{B^l_{r,1}} <~ (1+t)^{-(l+s)/alpha - (2/alpha)(1/r - 1/p)}`.
    Sqg,
    /// Critical Keller-Segel (`alpha = 1`), `||u(t)||_{B^l_{r,1}} <~ (1+t)^{-(l+s) - 2(1/r - 1/p)}`.
    KellerSegel,
    /// `L^r` decay of SQG through `H^{1-2/r}`: `(1+t)^{-s/alpha - (2/alpha)(1 - 1/r - 1/p)}`.
    SqgLebesgue,
}

impl ClaimKind {
    pub fn name(self) -> &'static str {
        match self {
            ClaimKind::LinearDissipation => "linear_dissipation",
            ClaimKind::Sqg => "sqg",
            ClaimKind::KellerSegel => "keller_segel",
            ClaimKind::SqgLebesgue => "sqg_lebesgue",
        }
    }
}

/// Parameters of a decay estimate. `ell` is unused for [`ClaimKind::SqgLebesgue`],
/// `r` for [`ClaimKind::LinearDissipation`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayClaim {
    pub kind: ClaimKind,
    pub s: f64,
    pub ell: f64,
    pub alpha: f64,
    pub p: f64,
    pub r: f64,
}

const SLACK: f64 = 1e-12;

fn require(ok: bool, kind: ClaimKind, constraint: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::ClaimRange(format!("{} requires {}", kind.name(), constraint())))
    }
}

impl DecayClaim {
    pub fn linear(s: f64, ell: f64, alpha: f64, p: f64) -> Self {
        Self {
            kind: ClaimKind::LinearDissipation,
            s,
            ell,
            alpha,
            p,
            r: p,
        }
    }

    pub fn sqg(s: f64, ell: f64, alpha: f64, p: f64, r: f64) -> Self {
        Self {
            kind: ClaimKind::Sqg,
            s,
            ell,
            alpha,
            p,
            r,
        }
    }

    pub fn keller_segel(s: f64, ell: f64, p: f64, r: f64) -> Self {
        Self {
            kind: ClaimKind::KellerSegel,
            s,
            ell,
            alpha: 1.0,
            p,
            r,
        }
    }

    pub fn sqg_lebesgue(s: f64, alpha: f64, p: f64, r: f64) -> Self {
        Self {
            kind: ClaimKind::SqgLebesgue,
            s,
            ell: 1.0 - 2.0 / r,
            alpha,
            p,
            r,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let Self {
            kind,
            s,
            ell,
            alpha,
            p,
            r,
        } = *self;
        if ![s, ell, alpha, p, r].iter().all(|v| !v.is_nan()) {
            return Err(Error::ClaimRange(format!("{} has NaN parameters", kind.name())));
        }
        match kind {
            ClaimKind::LinearDissipation => {
                require(s >= 0.0, kind, || format!("s >= 0 (got s = {s})"))?;
                require(ell > -s, kind, || format!("l > -s (got l = {ell}, s = {s})"))?;
                require(alpha > 0.0 && alpha <= 2.0, kind, || {
                    format!("alpha in (0, 2] (got {alpha})")
                })?;
                require((2.0..f64::INFINITY).contains(&p), kind, || {
                    format!("2 <= p < inf (got p = {p})")
                })?;
            }
            ClaimKind::Sqg | ClaimKind::KellerSegel => {
                if kind == ClaimKind::Sqg {
                    require(alpha > 0.0 && alpha <= 1.0, kind, || {
                        format!("alpha in (0, 1] (got {alpha})")
                    })?;
                } else {
                    require(alpha == 1.0, kind, || format!("alpha = 1 (got {alpha})"))?;
                }
                require((2.0..f64::INFINITY).contains(&p), kind, || {
                    format!("2 <= p < inf (got p = {p})")
                })?;
                require(r >= 2.0 && r <= p, kind, || {
                    format!("2 <= r <= p (got r = {r}, p = {p})")
                })?;
                let (s_lo, s_hi, s_text) = if kind == ClaimKind::Sqg {
                    (-2.0 / p, 1.0 + 2.0 / p, "-2/p < s < 1 + 2/p")
                } else {
                    (1.0 - 2.0 / p, 1.0 + 2.0 / p, "1 - 2/p < s < 1 + 2/p")
                };
                require(s > s_lo && s < s_hi, kind, || {
                    format!("{s_text} (got s = {s}, p = {p})")
                })?;
                let ell_lo = -s - 2.0 * (1.0 / r - 1.0 / p);
                let (ell_hi, hi_text) = if kind == ClaimKind::Sqg {
                    (1.0 + 2.0 / p - alpha, "1 + 2/p - alpha")
                } else {
                    (-1.0 + 2.0 / p, "-1 + 2/p")
                };
                require(ell >= ell_lo - SLACK && ell <= ell_hi + SLACK, kind, || {
                    format!("-s - 2(1/r - 1/p) <= l <= {hi_text} (got l = {ell}, allowed [{ell_lo}, {ell_hi}])")
                })?;
            }
            ClaimKind::SqgLebesgue => {
                require(r >= 2.0 && r.is_finite(), kind, || {
                    format!("2 <= r < inf (got r = {r})")
                })?;
                let as_sqg = DecayClaim::sqg(s, 1.0 - 2.0 / r, alpha, p, 2.0);
                as_sqg.validate().map_err(|e| match e {
                    Error::ClaimRange(m) => Error::ClaimRange(format!("{}: {m}", kind.name())),
                    other => other,
                })?;
            }
        }
        Ok(())
    }
}

/// The exponent `beta` (negative) in `||.|| <~ (1+t)^beta`.
pub fn theoretical_exponent(claim: &DecayClaim) -> Result<f64> {
    claim.validate()?;
    let DecayClaim {
        kind,
        s,
        ell,
        alpha,
        p,
        r,
    } = *claim;
    Ok(match kind {
        ClaimKind::LinearDissipation => -(ell + s) / alpha,
        ClaimKind::Sqg => -(ell + s) / alpha - (2.0 / alpha) * (1.0 / r - 1.0 / p),
        ClaimKind::KellerSegel => -(ell + s) - 2.0 * (1.0 / r - 1.0 / p),
        ClaimKind::SqgLebesgue => -s / alpha - (2.0 / alpha) * (1.0 - 1.0 / r - 1.0 / p),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum NormKind {
    Besov(BesovParams),
    Lebesgue { p: Exponent },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesDescriptor {
    pub label: String,
    pub norm: NormKind,
    pub source: String,
}

/// Time-stamped norm values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormSeries {
    times: Vec<f64>,
    values: Vec<f64>,
    pub descriptor: SeriesDescriptor,
}

impl NormSeries {
    pub fn new(times: Vec<f64>, values: Vec<f64>, descriptor: SeriesDescriptor) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::LengthMismatch {
                expected: times.len(),
                got: values.len(),
            });
        }
        if let Some(&t) = times.iter().find(|t| !(**t > 0.0) || !t.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "series times must be positive and finite, got {t}"
            )));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter(
                "series times must be strictly increasing".into(),
            ));
        }
        if let Some(&v) = values.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "series values must be finite and nonnegative, got {v}"
            )));
        }
        Ok(Self {
            times,
            values,
            descriptor,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.times.clone(),
            self.values.iter().map(|v| v * factor).collect(),
            self.descriptor.clone(),
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub slope: f64,
    /// `log C_0`, the fitted amplitude.
    pub intercept: f64,
    /// Root-mean-square deviation in log space.
    pub residual: f64,
    /// First and last sample time actually used.
    pub window: [f64; 2],
    pub samples: usize,
}

pub const MIN_FIT_SAMPLES: usize = 10;

/// Least-squares fit of `log value` against `log(1 + t)` over samples with
/// `window[0] <= t <= window[1]`.
pub fn fit_decay_slope(series: &NormSeries, window: [f64; 2]) -> Result<FitResult> {
    let picked: Vec<(f64, f64)> = series
        .times
        .iter()
        .zip(&series.values)
        .filter(|(t, _)| **t >= window[0] && **t <= window[1])
        .map(|(t, v)| (*t, *v))
        .collect();
    if picked.len() < MIN_FIT_SAMPLES {
        return Err(Error::InsufficientSamples {
            needed: MIN_FIT_SAMPLES,
            got: picked.len(),
        });
    }
    if let Some(&(time, value)) = picked.iter().find(|(_, v)| !(*v > 0.0)) {
        return Err(Error::NonPositive { time, value });
    }
    let xs: Vec<f64> = picked.iter().map(|(t, _)| t.ln_1p()).collect();
    let ys: Vec<f64> = picked.iter().map(|(_, v)| v.ln()).collect();
    let m = xs.len() as f64;
    let x_mean = xs.iter().sum::<f64>() / m;
    let y_mean = ys.iter().sum::<f64>() / m;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(&ys) {
        sxx += (x - x_mean) * (x - x_mean);
        sxy += (x - x_mean) * (y - y_mean);
    }
    if sxx == 0.0 {
        return Err(Error::InvalidParameter(
            "degenerate fit window (all times equal)".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;
    let residual = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum::<f64>()
        / m)
        .sqrt();
    Ok(FitResult {
        slope,
        intercept,
        residual,
        window: [picked[0].0, picked[picked.len() - 1].0],
        samples: picked.len(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportEntry {
    pub claim: DecayClaim,
    pub theoretical: f64,
    pub fitted: f64,
    /// `|fitted - theory| / |theory|`, or `|fitted|` when the theory is zero.
    pub relative_error: f64,
    pub passed: bool,
    pub fit: FitResult,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub tolerance: f64,
    pub entries: Vec<ReportEntry>,
    pub passed: bool,
}

pub fn build_report(fits: &[FitResult], claims: &[DecayClaim], tolerance: f64) -> Result<DecayReport> {
    if fits.len() != claims.len() {
        return Err(Error::LengthMismatch {
            expected: claims.len(),
            got: fits.len(),
        });
    }
    let entries = fits
        .iter()
        .zip(claims)
        .map(|(fit, claim)| {
            let theoretical = theoretical_exponent(claim)?;
            let relative_error = if theoretical == 0.0 {
                fit.slope.abs()
            } else {
                (fit.slope - theoretical).abs() / theoretical.abs()
            };
            Ok(ReportEntry {
                claim: *claim,
                theoretical,
                fitted: fit.slope,
                relative_error,
                passed: relative_error <= tolerance,
                fit: *fit,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DecayReport {
        tolerance,
        passed: entries.iter().all(|e| e.passed),
        entries,
    })
}
