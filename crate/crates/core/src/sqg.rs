//! Dissipative surface quasi-geostrophic equation
//! `theta_t + u . grad theta + Lambda^alpha theta = 0` with `u = (-R_2 theta, R_1 theta)`.

use crate::error::Result;
use crate::integrator::{if_rk2_step, DissipationRates, Tendency};
use crate::run::{run, Model, RunConfig, RunOutput};
use crate::spectral::{
    apply_fourier_multiplier, dealias, forward, inverse, Axis, MultiplierSpec, RealField, SpectralField,
};

/// Velocity coefficients `(-R_2 theta, R_1 theta)`.
pub fn sqg_velocity_spectral(theta: &SpectralField) -> Result<(SpectralField, SpectralField)> {
    let u1 = apply_fourier_multiplier(theta, &MultiplierSpec::Riesz(Axis::X2))?.scaled(-1.0);
    let u2 = apply_fourier_multiplier(theta, &MultiplierSpec::Riesz(Axis::X1))?;
    Ok((u1, u2))
}

pub fn sqg_velocity(theta: &RealField) -> Result<(RealField, RealField)> {
    let (u1, u2) = sqg_velocity_spectral(&forward(theta))?;
    Ok((inverse(&u1)?, inverse(&u2)?))
}

/// The advection term of SQG as an integrator tendency.
#[derive(Clone, Copy, Debug, Default)]
pub struct SqgAdvection;

impl Tendency for SqgAdvection {
    fn evaluate(&self, theta: &SpectralField) -> Result<(SpectralField, f64)> {
        let (u1, u2) = sqg_velocity_spectral(theta)?;
        let g1 = apply_fourier_multiplier(theta, &MultiplierSpec::Partial(Axis::X1))?;
        let g2 = apply_fourier_multiplier(theta, &MultiplierSpec::Partial(Axis::X2))?;
        let (u1, u2, g1, g2) = (inverse(&u1)?, inverse(&u2)?, inverse(&g1)?, inverse(&g2)?);
        let mut speed: f64 = 0.0;
        let advection: Vec<f64> = (0..u1.values().len())
            .map(|i| {
                let (a, b) = (u1.values()[i], u2.values()[i]);
                speed = speed.max(a.hypot(b));
                -(a * g1.values()[i] + b * g2.values()[i])
            })
            .collect();
        let mut out = dealias(&forward(&RealField::new(*theta.grid(), advection)?));
        // u . grad theta = div(u theta) has zero mean exactly.
        out.remove_mean();
        Ok((out, speed))
    }
}

/// `-(u . grad theta)`, dealiased.
pub fn sqg_rhs(theta: &RealField) -> Result<RealField> {
    let (out, _) = SqgAdvection.evaluate(&dealias(&forward(theta)))?;
    inverse(&out)
}

/// Solver state; `theta` is held spectrally and dealiased.
#[derive(Clone, Debug, PartialEq)]
pub struct SQGState {
    pub theta: SpectralField,
    pub t: f64,
    pub alpha: f64,
}

impl SQGState {
    pub fn new(theta: &RealField, alpha: f64) -> Self {
        Self {
            theta: dealias(&forward(theta)),
            t: 0.0,
            alpha,
        }
    }

    pub fn theta(&self) -> Result<RealField> {
        inverse(&self.theta)
    }
}

pub fn sqg_step(state: &SQGState, dt: f64) -> Result<SQGState> {
    let rates = DissipationRates::new(state.theta.grid(), state.alpha)?;
    let step = if_rk2_step(&state.theta, &rates, dt, &SqgAdvection)?;
    Ok(SQGState {
        theta: step.field,
        t: state.t + dt,
        alpha: state.alpha,
    })
}

pub fn run_sqg(config: &RunConfig) -> Result<RunOutput> {
    run(Model::Sqg, config)?.complete()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::initial::{InitialData, Mode};
    use crate::linear::evolve_linear;
    use crate::spectral::{Complex, Grid2D};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn grid32() -> Grid2D {
        Grid2D::new(32, 2.0 * PI).unwrap()
    }

    fn random_state(g: Grid2D, band: i32, amplitude: f64, seed: u64) -> SpectralField {
        InitialData::Shells {
            amplitude,
            j_lo: 0,
            j_hi: band,
            envelope: 0.0,
        }
        .build(g, seed)
        .unwrap()
    }

    #[test]
    fn velocity_of_single_cosine() {
        let g = grid32();
        let theta = RealField::from_fn(g, |x, _| x.cos()).unwrap();
        let (u1, u2) = sqg_velocity(&theta).unwrap();
        assert!(u1.max_abs() < 1e-15);
        let u2hat = forward(&u2);
        assert!((u2hat.get(1, 0).norm() - 0.5).abs() < 1e-15);
        assert!((u2hat.get(-1, 0).norm() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn velocity_is_divergence_free() {
        let g = Grid2D::new(64, 3.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let theta = RealField::new(g, (0..g.points()).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let (u1, u2) = sqg_velocity_spectral(&forward(&theta)).unwrap();
        let div = apply_fourier_multiplier(&u1, &MultiplierSpec::Partial(Axis::X1))
            .unwrap()
            .add_scaled(
                1.0,
                &apply_fourier_multiplier(&u2, &MultiplierSpec::Partial(Axis::X2)).unwrap(),
            )
            .unwrap();
        let th = forward(&theta);
        let grad = apply_fourier_multiplier(&th, &MultiplierSpec::Partial(Axis::X1))
            .unwrap()
            .l2_norm()
            .hypot(
                apply_fourier_multiplier(&th, &MultiplierSpec::Partial(Axis::X2))
                    .unwrap()
                    .l2_norm(),
            );
        assert!(div.l2_norm() <= 1e-12 * grad);
    }

    #[test]
    fn single_mode_has_no_advection() {
        let g = grid32();
        let theta = RealField::from_fn(g, |x, y| (3.0 * x - 2.0 * y).sin()).unwrap();
        assert!(sqg_rhs(&theta).unwrap().max_abs() < 1e-13);
        assert_eq!(sqg_rhs(&RealField::zeros(g)).unwrap().max_abs(), 0.0);
    }

    /// Direct convolution of coefficient lists, truncated to the retained band.
    fn convolution_rhs(g: Grid2D, theta: &SpectralField) -> SpectralField {
        let cut = g.dealias_cutoff();
        let modes: Vec<(i64, i64, Complex)> = (-cut..=cut)
            .flat_map(|a| (-cut..=cut).map(move |b| (a, b)))
            .map(|(a, b)| (a, b, theta.get(a, b)))
            .filter(|m| m.2.norm() > 0.0)
            .collect();
        let mut out = SpectralField::zeros(g);
        let i = Complex::new(0.0, 1.0);
        for &(p1, p2, tp) in &modes {
            let (x1, x2) = (g.xi(p1), g.xi(p2));
            let r = x1.hypot(x2);
            let (v1, v2) = (-i * x2 / r * tp, i * x1 / r * tp);
            for &(q1, q2, tq) in &modes {
                let (k1, k2) = (p1 + q1, p2 + q2);
                if k1.abs() > cut || k2.abs() > cut {
                    continue;
                }
                let term = -(v1 * i * g.xi(q1) + v2 * i * g.xi(q2)) * tq;
                out.set(k1, k2, out.get(k1, k2) + term);
            }
        }
        out
    }

    #[test]
    fn two_mode_rhs_matches_convolution() {
        let g = grid32();
        let theta = InitialData::Modes {
            modes: vec![
                Mode {
                    k1: 2,
                    k2: 1,
                    cos: 0.7,
                    sin: 0.2,
                },
                Mode {
                    k1: -1,
                    k2: 3,
                    cos: 0.0,
                    sin: 1.1,
                },
            ],
        }
        .build(g, 0)
        .unwrap();
        let got = forward(&sqg_rhs(&inverse(&theta).unwrap()).unwrap());
        let want = convolution_rhs(g, &theta);
        assert!(want.max_abs() > 0.1);
        assert!(got.sub(&want).unwrap().max_abs() < 1e-10);
    }

    #[test]
    fn step_is_linear_flow_without_advection() {
        let g = grid32();
        let theta = RealField::from_fn(g, |x, y| (x + 2.0 * y).cos()).unwrap();
        let state = SQGState::new(&theta, 0.7);
        let next = sqg_step(&state, 0.05).unwrap();
        let exact = evolve_linear(&state.theta, 0.7, 0.05).unwrap();
        assert!(next.theta.sub(&exact).unwrap().max_abs() < 1e-12);
        assert_eq!(next.t, 0.05);
    }

    #[test]
    fn energy_never_grows_over_a_step() {
        let g = Grid2D::new(32, 2.0 * PI).unwrap();
        for seed in 0..100 {
            let theta = random_state(g, 3, 2.0 * (1.0 + seed as f64 / 50.0), seed);
            let state = SQGState {
                theta,
                t: 0.0,
                alpha: 0.5 + (seed % 4) as f64 * 0.5,
            };
            let before = state.theta.l2_norm();
            let after = sqg_step(&state, 0.01).unwrap().theta.l2_norm();
            assert!(after <= before * (1.0 + 1e-10), "seed {seed}: {before} -> {after}");
        }
    }

    #[test]
    fn mean_is_preserved() {
        let g = grid32();
        let mut theta = random_state(g, 3, 3.0, 11);
        theta.set(0, 0, Complex::new(0.37, 0.0));
        let mut state = SQGState {
            theta,
            t: 0.0,
            alpha: 1.0,
        };
        for _ in 0..20 {
            state = sqg_step(&state, 0.01).unwrap();
        }
        assert!((state.theta.mean() - 0.37).abs() <= 1e-12);
    }
}
