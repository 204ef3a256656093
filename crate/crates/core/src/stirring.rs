//! Instantaneously optimal stirring flows and the lower bounds they imply.

use crate::backend::Backend;
use crate::error::{Error, Result};
use crate::fields::{self, Constraint, ScalarField, VectorField};

/// Relative threshold below which the projected forcing counts as zero.
pub const STAGNATION_EPS: f64 = 1e-12;

/// Optimal flow together with the intermediate fields it was built from.
#[derive(Clone, Debug)]
pub struct StirringResult {
    pub u: VectorField,
    /// `<|w|^2>^(1/2)` (energy) or `<|grad w|^2>^(1/2)` (enstrophy) of the
    /// unnormalised direction `w`.
    pub raw_magnitude: f64,
    pub stagnated: bool,
    /// `phi = Laplace^-1 theta`.
    pub phi: ScalarField,
    /// The (filtered) forcing `theta grad(phi)`.
    pub forcing: VectorField,
}

fn forcing(b: &mut dyn Backend, theta: &ScalarField) -> Result<(ScalarField, VectorField)> {
    let phi = b.poisson(theta)?;
    let g = b.gradient(&phi)?;
    let f = b.dealias_product(g.times_scalar(theta)?)?;
    Ok((phi, f))
}

fn finish(
    theta: &ScalarField,
    w: VectorField,
    raw: f64,
    target: f64,
    phi: ScalarField,
    forcing: VectorField,
) -> Result<StirringResult> {
    let l2 = fields::l2_norm(theta)?;
    let stagnated = !(raw.is_finite() && raw >= STAGNATION_EPS * l2 * l2) || raw == 0.0;
    let u = if stagnated {
        VectorField::zeros(w.domain().clone())
    } else {
        w.scaled(target / raw)
    };
    Ok(StirringResult {
        u,
        raw_magnitude: raw,
        stagnated,
        phi,
        forcing,
    })
}

/// `u = U P(theta grad phi) / <|P(theta grad phi)|^2>^(1/2)`.
pub fn optimal_energy_flow(b: &mut dyn Backend, theta: &ScalarField, u_rms: f64) -> Result<StirringResult> {
    let (phi, f) = forcing(b, theta)?;
    let w = b.leray(&f)?;
    let area = b.domain().area();
    let raw = (b.energy(&w).max(0.0) / area).sqrt();
    finish(theta, w, raw, u_rms, phi, f)
}

/// `u = (1/tau) w / <|grad w|^2>^(1/2)` with `w = -P(Laplace^-1(theta grad phi))`.
pub fn optimal_enstrophy_flow(
    b: &mut dyn Backend,
    theta: &ScalarField,
    inv_tau: f64,
) -> Result<StirringResult> {
    let (phi, f) = forcing(b, theta)?;
    let q = b.inverse_laplacian_vector(&f)?;
    let w = b.leray(&q)?.scaled(-1.0);
    let area = b.domain().area();
    let raw = (b.enstrophy(&w)?.max(0.0) / area).sqrt();
    finish(theta, w, raw, inv_tau, phi, f)
}

pub fn optimal_flow(b: &mut dyn Backend, theta: &ScalarField, c: Constraint) -> Result<StirringResult> {
    match c {
        Constraint::Energy { u_rms } => optimal_energy_flow(b, theta, u_rms),
        Constraint::Enstrophy { inv_tau } => optimal_enstrophy_flow(b, theta, inv_tau),
    }
}

/// `d/dt integral(|grad phi|^2) = -2 integral(theta u . grad phi)`.
pub fn decay_rate(s: &StirringResult) -> Result<f64> {
    let area = s.u.domain().area();
    Ok(-2.0 * area * fields::vector_inner_product(&s.u, &s.forcing)?)
}

/// Linear-in-time bound for fixed-energy stirring:
/// `max(0, m0 - U |Omega|^(1/2) ||theta0||_inf t)`.
#[derive(Clone, Copy, Debug)]
pub struct EnergyBound {
    pub mix0: f64,
    pub linf0: f64,
    pub u_rms: f64,
    pub area: f64,
}

impl EnergyBound {
    pub fn new(b: &mut dyn Backend, theta0: &ScalarField, u_rms: f64) -> Result<Self> {
        Ok(EnergyBound {
            mix0: b.mix_norm(theta0)?,
            linf0: fields::linf_norm(theta0)?,
            u_rms,
            area: b.domain().area(),
        })
    }

    /// Slope of the bound relative to `m0`, so that it reads `(1 - c t) m0`.
    pub fn coefficient(&self) -> f64 {
        self.u_rms * self.area.sqrt() * self.linf0 / self.mix0
    }

    pub fn at(&self, t: f64) -> f64 {
        (self.mix0 - self.u_rms * self.area.sqrt() * self.linf0 * t).max(0.0)
    }
}

pub fn lower_bound_energy(b: &mut dyn Backend, theta0: &ScalarField, u_rms: f64, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::param("t", "must be nonnegative"));
    }
    Ok(EnergyBound::new(b, theta0, u_rms)?.at(t))
}

/// `m0 exp(-integral_0^t gamma)`, the integral by the trapezoidal rule over
/// the `(time, gamma)` samples; the last interval is cut at `t`.
pub fn lower_bound_enstrophy(mix0: f64, gamma: &[(f64, f64)], t: f64) -> Result<f64> {
    if let Some(&(s, g)) = gamma.iter().find(|(_, g)| !(*g >= 0.0)) {
        return Err(Error::InvalidSeries(format!("gamma({s}) = {g} is negative")));
    }
    if gamma.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(Error::InvalidSeries("gamma times must increase".into()));
    }
    let mut integral = 0.0;
    for w in gamma.windows(2) {
        let ((t0, g0), (t1, g1)) = (w[0], w[1]);
        if t0 >= t {
            break;
        }
        if t1 <= t {
            integral += 0.5 * (g0 + g1) * (t1 - t0);
        } else {
            let gt = g0 + (g1 - g0) * (t - t0) / (t1 - t0);
            integral += 0.5 * (g0 + gt) * (t - t0);
        }
    }
    if let Some(&(tl, gl)) = gamma.last() {
        if t > tl {
            integral += gl * (t - tl);
        }
    }
    Ok(mix0 * (-integral).exp())
}
