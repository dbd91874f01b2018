//! Built-in property checks on small grids. Each check is cheap and
//! deterministic; `fraclab selftest` runs them all.

use fraclab_core::decay::{NormKind, SeriesDescriptor};
use fraclab_core::linear::{log_spaced, oracle_besov_series};
use fraclab_core::littlewood_paley::{block_norms, weighted_lr};
use fraclab_core::{
    bony_decompose, dealias, fit_decay_slope, forward, inverse, ks_potential, ks_step, lebesgue_norm, project,
    sqg_step, sqg_velocity, theoretical_exponent, BesovParams, BlockRange, DecayClaim, DensityForm, DyadicProfile,
    Exponent, Grid2D, InitialData, KSState, MultiplierSpec, NormSeries, ProjectionKind, RadialSpectralDensity,
    SQGState, SpectralField,
};

use crate::record::CheckResult;

type Check = fn() -> fraclab_core::Result<(bool, String)>;

pub const CHECKS: &[(&str, Check)] = &[
    ("partition_of_unity", partition_of_unity),
    ("block_orthogonality", block_orthogonality),
    ("parseval", parseval),
    ("sqg_velocity_divergence_free", sqg_divergence),
    ("sqg_energy_and_mean", sqg_energy),
    ("ks_mass_and_potential", ks_mass),
    ("fit_recovers_power_law", fit_power_law),
    ("exponent_consistency", exponent_consistency),
    ("besov_interpolation", interpolation),
    ("bony_reconstruction", bony),
    ("oracle_monotonicity", oracle_monotone),
];

pub fn run_all() -> Vec<CheckResult> {
    CHECKS
        .iter()
        .map(|(name, check)| {
            let (passed, detail) = match check() {
                Ok(r) => r,
                Err(e) => (false, format!("error: {e}")),
            };
            CheckResult {
                name: name.to_string(),
                passed,
                detail,
            }
        })
        .collect()
}

fn sample_field(n: usize, seed: u64) -> fraclab_core::Result<SpectralField> {
    let grid = Grid2D::new(n, 2.0 * std::f64::consts::PI)?;
    let data = InitialData::Shells {
        amplitude: 1.0,
        j_lo: 0,
        j_hi: 3,
        envelope: 0.0,
    };
    data.build(grid, seed)
}

fn partition_of_unity() -> fraclab_core::Result<(bool, String)> {
    let profile = DyadicProfile::default();
    let worst = log_spaced(1e-3, 1e3, 50)
        .into_iter()
        .map(|r| ((-15..=15).map(|j| profile.block_symbol(j, r)).sum::<f64>() - 1.0).abs())
        .fold(0.0, f64::max);
    Ok((worst <= 1e-12, format!("max |sum_j phi_j - 1| = {worst:e}")))
}

fn block_orthogonality() -> fraclab_core::Result<(bool, String)> {
    let profile = DyadicProfile::default();
    let f = sample_field(32, 3)?;
    let mut worst: f64 = 0.0;
    for j in 0..4 {
        for k in j + 2..6 {
            let twice = project(
                &project(&f, j, ProjectionKind::Block, &profile),
                k,
                ProjectionKind::Block,
                &profile,
            );
            worst = worst.max(twice.max_abs());
        }
    }
    let tol = 1e-14 * f.max_abs();
    Ok((
        worst <= tol,
        format!("max |Delta_j Delta_k f| for |j-k| >= 2: {worst:e}"),
    ))
}

fn parseval() -> fraclab_core::Result<(bool, String)> {
    let f = sample_field(32, 5)?;
    let physical = lebesgue_norm(&inverse(&f)?, Exponent::new(2.0)?);
    let spectral = f.l2_norm();
    let rel = (physical / spectral - 1.0).abs();
    Ok((rel <= 1e-12, format!("relative L2 mismatch {rel:e}")))
}

fn sqg_divergence() -> fraclab_core::Result<(bool, String)> {
    let theta = inverse(&sample_field(32, 7)?)?;
    let (u1, u2) = sqg_velocity(&theta)?;
    let d1 = fraclab_core::apply_fourier_multiplier(&forward(&u1), &MultiplierSpec::Partial(fraclab_core::Axis::X1))?;
    let d2 = fraclab_core::apply_fourier_multiplier(&forward(&u2), &MultiplierSpec::Partial(fraclab_core::Axis::X2))?;
    let div = d1.add_scaled(1.0, &d2)?.l2_norm();
    let grad =
        fraclab_core::apply_fourier_multiplier(&forward(&theta), &MultiplierSpec::Partial(fraclab_core::Axis::X1))?
            .l2_norm();
    Ok((
        div <= 1e-12 * grad,
        format!("||div u|| = {div:e}, ||d1 theta|| = {grad:e}"),
    ))
}

fn sqg_energy() -> fraclab_core::Result<(bool, String)> {
    let theta = inverse(&sample_field(32, 11)?)?;
    let mut state = SQGState::new(&theta, 1.0);
    let mean0 = state.theta.mean();
    let mut energy = state.theta.l2_norm();
    let mut monotone = true;
    for _ in 0..20 {
        state = sqg_step(&state, 0.01)?;
        let e = state.theta.l2_norm();
        monotone &= e <= energy * (1.0 + 1e-12);
        energy = e;
    }
    let drift = (state.theta.mean() - mean0).abs();
    Ok((
        monotone && drift <= 1e-12,
        format!("L2 monotone: {monotone}, mean drift {drift:e}"),
    ))
}

fn ks_mass() -> fraclab_core::Result<(bool, String)> {
    let mut f = sample_field(32, 13)?;
    f.set(0, 0, fraclab_core::spectral::Complex::new(1.0, 0.0));
    let u = inverse(&f)?;
    let mut state = KSState::new(&u, 1.5)?;
    let m0 = state.mass();
    for _ in 0..20 {
        state = ks_step(&state, 0.01)?;
    }
    let drift = (state.mass() - m0).abs() / m0.abs();
    // -Laplacian psi = u - mean(u)
    let psi = forward(&ks_potential(&u)?);
    let lap = fraclab_core::apply_fourier_multiplier(&psi, &MultiplierSpec::FractionalLaplacian { alpha: 2.0 })?;
    let mut centered = forward(&u);
    centered.remove_mean();
    let residual = lap.sub(&centered)?.l2_norm() / centered.l2_norm();
    Ok((
        drift <= 1e-12 && residual <= 1e-12,
        format!("relative mass drift {drift:e}, potential residual {residual:e}"),
    ))
}

fn power_series(c: f64, beta: f64) -> fraclab_core::Result<NormSeries> {
    let times = log_spaced(0.1, 100.0, 20);
    let values = times.iter().map(|t| c * (1.0 + t).powf(beta)).collect();
    NormSeries::new(
        times,
        values,
        SeriesDescriptor {
            label: "synthetic".into(),
            norm: NormKind::Lebesgue { p: Exponent::new(2.0)? },
            source: "selftest".into(),
        },
    )
}

fn fit_power_law() -> fraclab_core::Result<(bool, String)> {
    let a = fit_decay_slope(&power_series(1.0, -0.75)?, [1.0, 100.0])?;
    let b = fit_decay_slope(&power_series(1e3, -0.75)?, [1.0, 100.0])?;
    let err = (a.slope + 0.75).abs().max((a.slope - b.slope).abs());
    Ok((
        err <= 1e-10,
        format!("slopes {} and {} for exponent -0.75", a.slope, b.slope),
    ))
}

fn exponent_consistency() -> fraclab_core::Result<(bool, String)> {
    // With r = p the SQG and Keller-Segel rates reduce to the linear ones.
    let lin = theoretical_exponent(&DecayClaim::linear(0.5, 0.5, 1.0, 2.0))?;
    let sqg = theoretical_exponent(&DecayClaim::sqg(0.5, 0.5, 1.0, 2.0, 2.0))?;
    let lin2 = theoretical_exponent(&DecayClaim::linear(0.5, -0.25, 2.0, 2.0))?;
    let ks = theoretical_exponent(&DecayClaim::keller_segel(0.5, -0.25, 2.0, 2.0))?;
    let ok = lin == sqg && (ks - 2.0 * lin2).abs() <= 1e-15 && lin == -1.0;
    Ok((ok, format!("linear {lin}, sqg {sqg}, ks {ks}")))
}

fn interpolation() -> fraclab_core::Result<(bool, String)> {
    // ||f||_{B^{s}_{2,2}} <= ||f||_{B^{s0}_{2,2}}^{1/2} ||f||_{B^{s1}_{2,2}}^{1/2}, s = (s0 + s1) / 2.
    let profile = DyadicProfile::default();
    let f = sample_field(32, 17)?;
    let range = BlockRange::for_grid(f.grid(), &profile)?;
    let blocks = block_norms(&f, range, Exponent::new(2.0)?, &profile)?;
    let norm = |s: f64| weighted_lr(range, &blocks, s, Exponent::new(2.0).expect("finite"));
    let (lhs, rhs) = (norm(0.5), (norm(-0.5) * norm(1.5)).sqrt());
    Ok((lhs <= rhs * (1.0 + 1e-12), format!("{lhs:e} <= {rhs:e}")))
}

fn bony() -> fraclab_core::Result<(bool, String)> {
    let profile = DyadicProfile::default();
    let f = inverse(&sample_field(32, 19)?)?;
    let g = inverse(&sample_field(32, 23)?)?;
    let pieces = bony_decompose(&f, &g, &profile)?;
    let sum = forward(&pieces.low_high)
        .add_scaled(1.0, &forward(&pieces.high_low))?
        .add_scaled(1.0, &forward(&pieces.remainder))?;
    let product = dealias(&forward(&f.product(&g)?));
    let err = sum.sub(&product)?.max_abs() / product.max_abs();
    Ok((err <= 1e-12, format!("relative reconstruction error {err:e}")))
}

fn oracle_monotone() -> fraclab_core::Result<(bool, String)> {
    let density = RadialSpectralDensity::new(2, DensityForm::BallIndicator { radius: 1.0 })?;
    let params = BesovParams::new(-1.0, 2.0, f64::INFINITY)?;
    let times = log_spaced(0.1, 100.0, 10);
    let s = oracle_besov_series(&density, &params, 1.0, &times, &DyadicProfile::default())?;
    let worst = s
        .values()
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::NEG_INFINITY, f64::max);
    let ok = worst <= 1e-12 * s.values()[0];
    Ok((ok, format!("largest increase {worst:e}")))
}
