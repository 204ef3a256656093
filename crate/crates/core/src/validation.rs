//! Self-checks run by `optmix validate` and the acceptance tests.
//!
//! Every check measures one number, compares it with a tolerance and
//! reports both; nothing here panics on a failed comparison.

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::backend::Backend;
use crate::diagnostics;
use crate::error::Result;
use crate::fem::{generate_mesh, Advection, FemBackend, MeshShape};
use crate::fields::{
    self, l2_norm, vector_inner_product, vector_l2_norm, BoundaryCondition, Constraint, RectDomain, ScalarField,
    VectorField,
};
use crate::spectral::{self, DealiasRule, SpectralWorkspace};
use crate::stirring;
use crate::timestepper::{run_simulation, MemorySink, RunSettings, SimClock};

/// How a measured value is compared with its tolerance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    AtMost,
    AtLeast,
    Within { lo: f64, hi: f64 },
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub tolerance: f64,
    pub comparison: Comparison,
    pub passed: bool,
    pub seconds: f64,
}

impl Check {
    fn new(name: &str, measured: f64, comparison: Comparison, tolerance: f64, seconds: f64) -> Check {
        let passed = match comparison {
            Comparison::AtMost => measured <= tolerance,
            Comparison::AtLeast => measured >= tolerance,
            Comparison::Within { lo, hi } => (lo..=hi).contains(&measured),
        };
        Check {
            name: name.to_string(),
            measured,
            tolerance,
            comparison,
            passed,
            seconds,
        }
    }

    pub fn line(&self) -> String {
        let cmp = match self.comparison {
            Comparison::AtMost => format!("<= {:e}", self.tolerance),
            Comparison::AtLeast => format!(">= {}", self.tolerance),
            Comparison::Within { lo, hi } => format!("in [{lo}, {hi}]"),
        };
        format!(
            "{} {:<32} {:.6e} {} ({:.1} s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.measured,
            cmp,
            self.seconds
        )
    }
}

fn timed<T>(f: impl FnOnce() -> Result<T>) -> Result<(T, f64)> {
    let s = Instant::now();
    let v = f()?;
    Ok((v, s.elapsed().as_secs_f64()))
}

/// Random mean-zero combination of `terms` Neumann cosine modes with wave
/// numbers below `max_mode` on `d`.
pub fn random_cosine_field(d: RectDomain, rng: &mut ChaCha8Rng, max_mode: usize, terms: usize) -> ScalarField {
    let modes: Vec<(f64, f64, f64)> = (0..terms)
        .map(|_| {
            let m = rng.gen_range(0..max_mode);
            let n = if m == 0 { rng.gen_range(1..max_mode) } else { rng.gen_range(0..max_mode) };
            (m as f64, n as f64, rng.gen_range(-1.0..1.0))
        })
        .collect();
    let (lx, ly) = (d.lx(), d.ly());
    ScalarField::from_fn(d, move |x, y| {
        modes
            .iter()
            .map(|&(m, n, a)| a * (m * PI * (x - d.x_min) / lx).cos() * (n * PI * (y - d.y_min) / ly).cos())
            .sum()
    })
}

/// Random smooth scalar that is not even about the walls.
pub fn random_smooth_field(d: RectDomain, rng: &mut ChaCha8Rng) -> ScalarField {
    let c: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let f = ScalarField::from_fn(d, move |x, y| {
        c[0] * (PI * x).sin()
            + c[1] * (2.0 * PI * y).sin()
            + c[2] * (PI * x).cos() * (PI * y).sin()
            + c[3] * (2.0 * PI * x).cos() * (PI * y).cos()
            + c[4] * x * y
            + c[5] * (1.5 * PI * (x + y)).sin()
    });
    fields::subtract_mean(&f)
}

/// Random flow with streamfunction vanishing on the walls of `[-1,1]^2`.
fn random_wall_flow(d: RectDomain, rng: &mut ChaCha8Rng) -> VectorField {
    let modes: Vec<(f64, f64, f64)> = (0..6)
        .map(|_| (rng.gen_range(1..6) as f64, rng.gen_range(1..6) as f64, rng.gen_range(-1.0..1.0)))
        .collect();
    VectorField::from_fn(d, move |x, y| {
        let (mut u, mut v) = (0.0, 0.0);
        for &(m, n, a) in &modes {
            let (ax, ay) = (m * PI / 2.0, n * PI / 2.0);
            let (sx, cx) = (ax * (x + 1.0)).sin_cos();
            let (sy, cy) = (ay * (y + 1.0)).sin_cos();
            u += a * ay * sx * cy;
            v -= a * ax * cx * sy;
        }
        [u, v]
    })
}

fn random_vector(d: RectDomain, rng: &mut ChaCha8Rng) -> VectorField {
    let c: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect();
    VectorField::from_fn(d, move |x, y| {
        [
            c[0] + c[1] * (PI * x).cos() + c[2] * (PI * y).sin() * (2.0 * PI * x).cos() + c[3] * x * y,
            c[4] + c[5] * (2.0 * PI * y).cos() + c[6] * (PI * x).sin() + c[7] * (1.5 * x).exp(),
        ]
    })
}

fn square(n: usize) -> RectDomain {
    RectDomain::square(n, BoundaryCondition::NoFlux).expect("valid square")
}

/// `max |<u, v - P v>| / (|u| |v|)` and `max |<u, v - Lap P Lap^-1 v>| / (|u| |v|)`
/// over `samples` pairs of a wall flow `u` and a generic field `v`.
pub fn projection_orthogonality(n: usize, samples: usize, seed: u64) -> Result<(f64, f64)> {
    let d = square(n);
    let mut ws = SpectralWorkspace::new(d, DealiasRule::TwoThirds);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut e1, mut e2): (f64, f64) = (0.0, 0.0);
    for _ in 0..samples {
        let u = random_wall_flow(d, &mut rng);
        let v = random_vector(d, &mut rng);
        let scale = vector_l2_norm(&u)? * vector_l2_norm(&v)?;
        let pv = ws.leray_project(&v)?;
        e1 = e1.max(vector_inner_product(&u, &v.add_scaled(-1.0, &pv)?)?.abs() / scale);
        let inv = ws.inverse_laplacian_vector(&v)?;
        let pinv = ws.leray_project(&inv)?;
        let q = ws.laplacian_vector(&pinv)?;
        e2 = e2.max(vector_inner_product(&u, &v.add_scaled(-1.0, &q)?)?.abs() / scale);
    }
    Ok((e1, e2))
}

/// Largest relative gap between "solve then extend" and "extend then solve".
pub fn extension_commutation(n: usize, samples: usize, seed: u64) -> Result<f64> {
    let d = RectDomain::new(0.0, 1.0, 0.0, 1.0, n, n, BoundaryCondition::NoFlux)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let t = random_cosine_field(d, &mut rng, 9, 10);
        let lhs = spectral::even_extend(&spectral::poisson_neumann(&t)?)?;
        let rhs = spectral::poisson_periodic(&spectral::even_extend(&t)?)?;
        worst = worst.max(l2_norm(&lhs.add_scaled(-1.0, &rhs)?)? / l2_norm(&rhs)?);
    }
    Ok(worst)
}

/// Worst violation of `|t|_{-1} <= |t|_m <= sqrt(1 + C^2) |t|_{-1}` with
/// `C = 1/sqrt(lambda1)`, using the spectral mix norm and the cosine-mode
/// `H^-1` oracle. Returns `(worst relative violation, worst oracle/spectral mismatch)`.
pub fn norm_equivalence(n: usize, samples: usize, seed: u64) -> Result<(f64, f64)> {
    let d = square(n);
    let mut ws = SpectralWorkspace::new(d, DealiasRule::Half);
    let c2 = 1.0 / d.lambda1();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut viol, mut mismatch): (f64, f64) = (0.0, 0.0);
    for _ in 0..samples {
        let t = random_cosine_field(d, &mut rng, 12, 8);
        let o = diagnostics::h_minus_one_norm_oracle(&t, 16)?;
        let m = ws.mix_norm(&t)?;
        viol = viol.max((o.h_minus_one - m) / m).max((m - (1.0 + c2).sqrt() * o.h_minus_one) / m);
        mismatch = mismatch.max((o.mix - m).abs() / m);
    }
    Ok((viol.max(0.0), mismatch))
}

/// `|P(P v) - P v| / |P v|`, worst over `samples` fields.
pub fn projection_idempotence(n: usize, samples: usize, seed: u64) -> Result<f64> {
    let d = square(n);
    let mut ws = SpectralWorkspace::new(d, DealiasRule::TwoThirds);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let p = ws.leray_project(&random_vector(d, &mut rng))?;
        let pp = ws.leray_project(&p)?;
        worst = worst.max(vector_l2_norm(&pp.add_scaled(-1.0, &p)?)? / vector_l2_norm(&p)?);
    }
    Ok(worst)
}

/// Relative gap between the closed-form decay rate `-2 |Omega| U <|w|^2>^(1/2)`,
/// the quadrature `-2 integral(theta u . grad phi)` and a central finite
/// difference of `integral |grad phi|^2` along the frozen flow.
/// Returns `(quadrature gap, finite-difference gap)`.
///
/// With `band_limited` the fields are short cosine sums whose products the
/// grid resolves exactly; otherwise they include wall-odd terms, and the
/// finite difference also sees the aliasing of the discrete product rule.
pub fn decay_rate_identity(n: usize, samples: usize, seed: u64, band_limited: bool) -> Result<(f64, f64)> {
    let d = square(n);
    let mut ws = SpectralWorkspace::new(d, DealiasRule::Half);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let area = d.area();
    let (mut q_gap, mut fd_gap): (f64, f64) = (0.0, 0.0);
    for _ in 0..samples {
        let t = if band_limited {
            random_cosine_field(d, &mut rng, 5, 6)
        } else {
            random_smooth_field(d, &mut rng)
        };
        let s = stirring::optimal_energy_flow(&mut ws, &t, 1.0)?;
        let closed = -2.0 * area * s.raw_magnitude;
        let quad = stirring::decay_rate(&s)?;
        q_gap = q_gap.max((quad - closed).abs() / closed.abs());
        let h = 1e-4;
        let mut sq = |dt: f64| -> Result<f64> {
            let t1 = ws.rk4_advance(&t, &s.u, dt, 4)?;
            Ok(area * ws.mix_norm(&t1)?.powi(2))
        };
        // Richardson-extrapolated central difference, fourth order in h.
        let d1 = (sq(h)? - sq(-h)?) / (2.0 * h);
        let d2 = (sq(h / 2.0)? - sq(-h / 2.0)?) / h;
        let fd = (4.0 * d2 - d1) / 3.0;
        fd_gap = fd_gap.max((fd - closed).abs() / closed.abs());
    }
    Ok((q_gap, fd_gap))
}

/// Observed order of the substepped RK4 advection in a frozen optimal flow.
pub fn rk4_order(n: usize) -> Result<f64> {
    let d = square(n);
    let mut ws = SpectralWorkspace::new(d, DealiasRule::Half);
    let t = ScalarField::from_fn(d, |x, y| 0.5 * (PI * x).sin() + 0.25 * (2.0 * PI * y).sin());
    let t = fields::subtract_mean(&t);
    let u = stirring::optimal_energy_flow(&mut ws, &t, 1.0)?.u;
    let dt = 0.2;
    let base = ws.substeps(&u, dt, 0.9).max(2);
    let a = ws.rk4_advance(&t, &u, dt, base)?;
    let b = ws.rk4_advance(&t, &u, dt, 2 * base)?;
    let c = ws.rk4_advance(&t, &u, dt, 4 * base)?;
    let e1 = l2_norm(&a.add_scaled(-1.0, &b)?)?;
    let e2 = l2_norm(&b.add_scaled(-1.0, &c)?)?;
    Ok((e1 / e2).log2())
}

/// Observed convergence slopes of the P1 Neumann solve on the square mesh
/// for `h = 2/8, 2/16, 2/32`.
pub fn fem_poisson_slopes() -> Result<Vec<f64>> {
    let mut errs = Vec::new();
    for n in [8.0, 16.0, 32.0] {
        let mesh = Arc::new(generate_mesh(MeshShape::Square, 2.0 / n)?);
        let mut b = FemBackend::new(mesh.clone())?;
        let t = ScalarField::from_fn(mesh.clone(), |x, y| -2.0 * PI * PI * (PI * x).cos() * (PI * y).cos());
        let phi = b.solve_neumann(&t)?;
        let want = ScalarField::from_fn(mesh, |x, y| (PI * x).cos() * (PI * y).cos());
        errs.push(l2_norm(&phi.add_scaled(-1.0, &want)?)?);
    }
    Ok(errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect())
}

/// Relative L2 error after advecting the two-sine field once around the
/// disk in the rigid rotation `(-y, x)` with macro step `dt`.
pub fn disk_rotation_error(h: f64, dt: f64) -> Result<f64> {
    let mesh = Arc::new(generate_mesh(MeshShape::Circle, h)?);
    let mut b = FemBackend::new(mesh.clone())?;
    b.set_advection(Advection::Compensated);
    let t0 = ScalarField::from_fn(mesh.clone(), |x, y| 0.5 * (PI * x).sin() + 0.25 * (2.0 * PI * y).sin());
    let rot = VectorField::from_fn(mesh, |x, y| [-y, x]);
    let steps = (2.0 * PI / dt).round() as usize;
    let dt = 2.0 * PI / steps as f64;
    let mut t = t0.clone();
    for _ in 0..steps {
        t = b.semi_lagrangian_step(&t, &rot, dt, 0.5, 10_000)?.0;
    }
    Ok(l2_norm(&t.add_scaled(-1.0, &t0)?)? / l2_norm(&t0)?)
}

/// Worst relative constraint error, worst lower-bound violation and worst
/// step-to-step increase of the mix norm over a short run.
#[derive(Clone, Copy, Debug)]
pub struct RunChecks {
    pub constraint_error: f64,
    pub bound_violation: f64,
    pub max_increase: f64,
}

pub fn run_checks(b: &mut dyn Backend, theta0: &ScalarField, c: Constraint, t_end: f64, macro_dt: f64) -> Result<RunChecks> {
    let settings = RunSettings {
        clock: SimClock::new(macro_dt, 0.5, t_end)?,
        constraint: c,
        substep_cap: 10_000,
        snapshot_times: vec![],
    };
    let area = b.domain().area();
    let s = run_simulation(b, theta0, &settings, &mut MemorySink::default())?;
    let target = c.target(area);
    let mut out = RunChecks {
        constraint_error: 0.0,
        bound_violation: 0.0,
        max_increase: 0.0,
    };
    for r in &s.records {
        let got = match c {
            Constraint::Energy { .. } => r.energy,
            Constraint::Enstrophy { .. } => r.enstrophy,
        };
        out.constraint_error = out.constraint_error.max((got - target).abs() / target);
        out.bound_violation = out.bound_violation.max(r.lower_bound - r.mix_norm);
    }
    for w in s.records.windows(2) {
        out.max_increase = out.max_increase.max(w[1].mix_norm - w[0].mix_norm);
    }
    Ok(out)
}

/// Problem sizes for [`run_suite`].
#[derive(Clone, Copy, Debug)]
pub struct SuiteOptions {
    pub seed: u64,
    /// Mesh size of the disk rotation check.
    pub rotation_h: f64,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions {
            seed: 2024,
            rotation_h: 2.0 / 128.0,
        }
    }
}

/// Runs every check; errors from the numerical kernels abort the suite.
pub fn run_suite(opts: SuiteOptions) -> Result<Vec<Check>> {
    use Comparison::*;
    let seed = opts.seed;
    let mut out = Vec::new();

    let ((o1, o2), s) = timed(|| projection_orthogonality(65, 20, seed))?;
    out.push(Check::new("leray-orthogonality", o1, AtMost, 1e-9, s / 2.0));
    out.push(Check::new("enstrophy-projection-orthogonality", o2, AtMost, 1e-9, s / 2.0));

    let (c, s) = timed(|| extension_commutation(33, 50, seed))?;
    out.push(Check::new("even-extension-commutation", c, AtMost, 1e-11, s));

    let ((v, m), s) = timed(|| norm_equivalence(65, 100, seed))?;
    out.push(Check::new("norm-equivalence-violation", v, AtMost, 1e-10, s / 2.0));
    out.push(Check::new("mix-norm-vs-cosine-oracle", m, AtMost, 1e-8, s / 2.0));

    let (i, s) = timed(|| projection_idempotence(65, 10, seed))?;
    out.push(Check::new("projection-idempotence", i, AtMost, 1e-11, s));

    let ((q, fd), s) = timed(|| decay_rate_identity(65, 5, seed, true))?;
    out.push(Check::new("decay-rate-quadrature", q, AtMost, 1e-8, s / 2.0));
    out.push(Check::new("decay-rate-finite-difference", fd, AtMost, 1e-8, s / 2.0));

    let (o, s) = timed(|| rk4_order(65))?;
    out.push(Check::new("rk4-self-convergence-order", o, AtLeast, 3.8, s));

    let (sl, s) = timed(fem_poisson_slopes)?;
    let lo = sl.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = sl.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let slope_name = "fem-poisson-slope";
    out.push(Check::new(&format!("{slope_name}-min"), lo, Within { lo: 1.8, hi: 2.2 }, 1.8, s / 2.0));
    out.push(Check::new(&format!("{slope_name}-max"), hi, Within { lo: 1.8, hi: 2.2 }, 2.2, s / 2.0));

    let (r, s) = timed(|| disk_rotation_error(opts.rotation_h, 0.025))?;
    out.push(Check::new("disk-rotation-round-trip", r, AtMost, 0.05, s));

    let theta_sq = |d: RectDomain| {
        fields::subtract_mean(&ScalarField::from_fn(d, |x, y| 0.5 * (PI * x).sin() + 0.25 * (2.0 * PI * y).sin()))
    };
    for (name, c, rule) in [
        ("energy", Constraint::Energy { u_rms: 1.0 }, DealiasRule::Half),
        ("enstrophy", Constraint::Enstrophy { inv_tau: 15.0 }, DealiasRule::TwoThirds),
    ] {
        let d = square(65);
        let (rc, s) = timed(|| run_checks(&mut SpectralWorkspace::new(d, rule), &theta_sq(d), c, 0.2, 0.01))?;
        out.push(Check::new(&format!("spectral-{name}-constraint"), rc.constraint_error, AtMost, 1e-10, s / 3.0));
        out.push(Check::new(&format!("spectral-{name}-lower-bound"), rc.bound_violation, AtMost, 1e-6, s / 3.0));
        out.push(Check::new(&format!("spectral-{name}-monotone"), rc.max_increase, AtMost, 1e-6, s / 3.0));
    }
    for (name, c) in [("energy", Constraint::Energy { u_rms: 1.0 }), ("enstrophy", Constraint::Enstrophy { inv_tau: 15.0 })] {
        let (rc, s) = timed(|| {
            let mesh = Arc::new(generate_mesh(MeshShape::Circle, 0.1)?);
            let mut b = FemBackend::new(mesh.clone())?;
            let t0 = fields::subtract_mean(&ScalarField::from_fn(mesh, |x, y| {
                0.5 * (PI * x).sin() + 0.25 * (2.0 * PI * y).sin()
            }));
            run_checks(&mut b, &t0, c, 0.1, 0.025)
        })?;
        out.push(Check::new(&format!("fem-{name}-constraint"), rc.constraint_error, AtMost, 1e-6, s / 2.0));
        out.push(Check::new(&format!("fem-{name}-lower-bound"), rc.bound_violation, AtMost, 1e-6, s / 2.0));
    }

    let (coef, s) = timed(|| {
        let d = square(257);
        let mut ws = SpectralWorkspace::new(d, DealiasRule::Half);
        Ok(stirring::EnergyBound::new(&mut ws, &theta_sq(d), 1.0)?.coefficient())
    })?;
    out.push(Check::new("energy-bound-coefficient-square", coef, Within { lo: 7.465, hi: 7.475 }, 7.47, s));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn check_comparisons() {
        assert!(Check::new("a", 1.0, Comparison::AtMost, 1.0, 0.0).passed);
        assert!(!Check::new("a", 1.1, Comparison::AtMost, 1.0, 0.0).passed);
        assert!(!Check::new("a", f64::NAN, Comparison::AtMost, 1.0, 0.0).passed);
        assert!(Check::new("a", 4.0, Comparison::AtLeast, 3.8, 0.0).passed);
        assert!(!Check::new("a", 2.3, Comparison::Within { lo: 1.8, hi: 2.2 }, 0.0, 0.0).passed);
        assert!(Check::new("a", 0.0, Comparison::AtMost, 1.0, 0.0).line().starts_with("PASS"));
    }

    #[test]
    fn quick_measurements() {
        let (q, fd) = decay_rate_identity(33, 2, 1, true).unwrap();
        assert!(q < 1e-8, "{q}");
        assert!(fd < 1e-8, "{fd}");
        let coarse = decay_rate_identity(33, 2, 1, false).unwrap().1;
        let fine = decay_rate_identity(129, 2, 1, false).unwrap().1;
        assert!(fine < 1e-6 && fine < coarse / 100.0, "{coarse:e} {fine:e}");
        assert!(rk4_order(33).unwrap() > 3.8);
        assert!(extension_commutation(17, 5, 1).unwrap() < 1e-11);
    }
}
