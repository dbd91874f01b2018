//! Fractional Keller-Segel system `u_t + Lambda^alpha u + div(u grad psi) = 0`,
//! `-Delta psi = u`, with the torus mean projected out of the potential.

use log::{info, log_enabled, Level};

use crate::error::{Error, Result};
use crate::integrator::{if_rk2_step, DissipationRates, Tendency};
use crate::run::{run, Model, RunConfig, RunOutput};
use crate::spectral::{
    apply_fourier_multiplier, dealias, forward, inverse, Axis, MultiplierSpec, RealField, SpectralField,
};

/// `psi = (-Delta)^{-1} (u - mean u)`, as coefficients.
pub fn ks_potential_spectral(u: &SpectralField) -> Result<SpectralField> {
    let mut fluctuation = u.clone();
    fluctuation.remove_mean();
    apply_fourier_multiplier(&fluctuation, &MultiplierSpec::InverseLaplacian)
}

pub fn ks_potential(u: &RealField) -> Result<RealField> {
    inverse(&ks_potential_spectral(&forward(u))?)
}

/// The chemotactic drift `-div(u grad psi)` as an integrator tendency.
#[derive(Clone, Copy, Debug, Default)]
pub struct ChemotacticDrift;

impl Tendency for ChemotacticDrift {
    fn evaluate(&self, u: &SpectralField) -> Result<(SpectralField, f64)> {
        let psi = ks_potential_spectral(u)?;
        let d1 = inverse(&apply_fourier_multiplier(&psi, &MultiplierSpec::Partial(Axis::X1))?)?;
        let d2 = inverse(&apply_fourier_multiplier(&psi, &MultiplierSpec::Partial(Axis::X2))?)?;
        let density = inverse(u)?;
        let speed = d1
            .values()
            .iter()
            .zip(d2.values())
            .fold(0.0_f64, |m, (a, b)| m.max(a.hypot(*b)));
        let flux1 = dealias(&forward(&density.product(&d1)?));
        let flux2 = dealias(&forward(&density.product(&d2)?));
        let div = apply_fourier_multiplier(&flux1, &MultiplierSpec::Partial(Axis::X1))?.add_scaled(
            1.0,
            &apply_fourier_multiplier(&flux2, &MultiplierSpec::Partial(Axis::X2))?,
        )?;
        let mut out = div.scaled(-1.0);
        out.remove_mean();
        Ok((out, speed))
    }
}

/// `-div(u grad psi)`, dealiased.
pub fn ks_rhs(u: &RealField) -> Result<RealField> {
    let (out, _) = ChemotacticDrift.evaluate(&dealias(&forward(u)))?;
    inverse(&out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct KSState {
    pub u: SpectralField,
    pub t: f64,
    pub alpha: f64,
}

impl KSState {
    pub fn new(u: &RealField, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Self {
            u: dealias(&forward(u)),
            t: 0.0,
            alpha,
        })
    }

    pub fn density(&self) -> Result<RealField> {
        inverse(&self.u)
    }

    pub fn potential(&self) -> Result<RealField> {
        inverse(&ks_potential_spectral(&self.u)?)
    }

    /// `h^2 sum u`, read off the zero mode.
    pub fn mass(&self) -> f64 {
        let l = self.u.grid().length();
        l * l * self.u.mean()
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if (1.0..=2.0).contains(&alpha) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "Keller-Segel runs need alpha in [1, 2], got {alpha}"
        )))
    }
}

pub fn ks_step(state: &KSState, dt: f64) -> Result<KSState> {
    check_alpha(state.alpha)?;
    let rates = DissipationRates::new(state.u.grid(), state.alpha)?;
    let step = if_rk2_step(&state.u, &rates, dt, &ChemotacticDrift)?;
    let next = KSState {
        u: step.field,
        t: state.t + dt,
        alpha: state.alpha,
    };
    if log_enabled!(Level::Info) {
        info!("ks t = {:.6}: min u = {:e}", next.t, next.density()?.min());
    }
    Ok(next)
}

pub fn run_ks(config: &RunConfig) -> Result<RunOutput> {
    run(Model::KellerSegel, config)?.complete()
}
