//! Fourier pseudospectral operators on rectangles.
//!
//! No-flux rectangles are handled by reflecting every field across the
//! `x_max` and `y_max` edges onto a doubled, periodic work grid of
//! `2 (nx - 1) x 2 (ny - 1)` points (the duplicated reflection line is
//! dropped). Scalars are extended evenly. A velocity component is extended
//! oddly in its own direction and evenly in the other, which makes the
//! normal component vanish on the walls; this is the parity that gradients
//! of even scalars carry anyway. Periodic rectangles use the first
//! `(nx - 1) x (ny - 1)` samples directly.
//!
//! Derivatives use wavenumbers with the Nyquist entry zeroed, and the
//! Laplacian is built from the same wavenumbers, so `div(grad) = Laplace`
//! holds exactly on the grid.

mod fft2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{self, BoundaryCondition, Domain, RectDomain, ScalarField, VectorField};
use crate::par;
use fft2::Fft2;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// All-or-nothing spectral filter applied to nonlinear products.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DealiasRule {
    /// Keep `|m| <= N/3` per axis (upper third of the resolved band removed).
    #[serde(rename = "two-thirds")]
    TwoThirds,
    /// Keep `|m| <= N/4` per axis (upper half removed).
    #[serde(rename = "half")]
    Half,
}

impl DealiasRule {
    /// Whether integer wavenumber `m` survives on a grid of `n` points.
    pub fn keeps(self, m: usize, n: usize) -> bool {
        match self {
            DealiasRule::TwoThirds => 3 * m <= n,
            DealiasRule::Half => 4 * m <= n,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DealiasRule::TwoThirds => "two-thirds",
            DealiasRule::Half => "half",
        }
    }
}

impl std::str::FromStr for DealiasRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two-thirds" | "2/3" => Ok(DealiasRule::TwoThirds),
            "half" | "1/2" => Ok(DealiasRule::Half),
            other => Err(Error::param("dealias", format!("unknown rule `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Parity {
    Even,
    OddX,
    OddY,
}

/// Reflection of a work-grid index back onto the closed original grid.
#[inline]
fn mirror(iw: usize, n: usize) -> (usize, bool) {
    if iw < n {
        (iw, false)
    } else {
        (2 * (n - 1) - iw, true)
    }
}

struct Buffers {
    real_a: Vec<f64>,
    real_b: Vec<f64>,
    real_c: Vec<f64>,
    spec_a: Vec<Complex64>,
}

/// Transform plans, wavenumber tables, dealias mask and scratch for one
/// rectangle. Not for concurrent use; create one per thread.
pub struct SpectralWorkspace {
    domain: RectDomain,
    rule: DealiasRule,
    fft: Fft2,
    /// Work grid size.
    wx: usize,
    wy: usize,
    /// Derivative wavenumbers (Nyquist entries are zero).
    kx: Vec<f64>,
    ky: Vec<f64>,
    keep_x: Vec<bool>,
    keep_y: Vec<bool>,
    buf: Buffers,
}

impl SpectralWorkspace {
    pub fn new(domain: RectDomain, rule: DealiasRule) -> Self {
        let (wx, wy, px, py) = match domain.bc {
            BoundaryCondition::NoFlux => (
                2 * (domain.nx - 1),
                2 * (domain.ny - 1),
                2.0 * domain.lx(),
                2.0 * domain.ly(),
            ),
            BoundaryCondition::Periodic => (domain.nx - 1, domain.ny - 1, domain.lx(), domain.ly()),
        };
        let fft = Fft2::new(wx, wy);
        let two_pi = 2.0 * std::f64::consts::PI;
        let kx = (0..fft.mx)
            .map(|m| {
                if wx % 2 == 0 && m == wx / 2 {
                    0.0
                } else {
                    two_pi * m as f64 / px
                }
            })
            .collect();
        let signed = |j: usize, n: usize| -> i64 {
            if j <= n / 2 {
                j as i64
            } else {
                j as i64 - n as i64
            }
        };
        let ky = (0..wy)
            .map(|j| {
                if wy % 2 == 0 && j == wy / 2 {
                    0.0
                } else {
                    two_pi * signed(j, wy) as f64 / py
                }
            })
            .collect();
        let keep_x = (0..fft.mx).map(|m| rule.keeps(m, wx)).collect();
        let keep_y = (0..wy)
            .map(|j| rule.keeps(signed(j, wy).unsigned_abs() as usize, wy))
            .collect();
        let n_real = wx * wy;
        let n_spec = fft.spectrum_len();
        SpectralWorkspace {
            domain,
            rule,
            fft,
            wx,
            wy,
            kx,
            ky,
            keep_x,
            keep_y,
            buf: Buffers {
                real_a: vec![0.0; n_real],
                real_b: vec![0.0; n_real],
                real_c: vec![0.0; n_real],
                spec_a: vec![ZERO; n_spec],
            },
        }
    }

    pub fn domain(&self) -> &RectDomain {
        &self.domain
    }

    pub fn rule(&self) -> DealiasRule {
        self.rule
    }

    /// Work-grid dimensions `(wx, wy)`.
    pub fn work_shape(&self) -> (usize, usize) {
        (self.wx, self.wy)
    }

    fn check(&self, d: &Domain) -> Result<()> {
        match d {
            Domain::Rect(r) if *r == self.domain => Ok(()),
            _ => Err(Error::DomainMismatch(
                "field does not live on this workspace's rectangle".into(),
            )),
        }
    }

    // ----- lifting and restriction -------------------------------------

    fn lift(&self, values: &[f64], parity: Parity, out: &mut [f64]) {
        let (nx, ny, wx) = (self.domain.nx, self.domain.ny, self.wx);
        match self.domain.bc {
            BoundaryCondition::Periodic => {
                par::for_each_row(out, wx, |jw, row| {
                    row.copy_from_slice(&values[jw * nx..jw * nx + wx]);
                });
            }
            BoundaryCondition::NoFlux => {
                par::for_each_row(out, wx, |jw, row| {
                    let (j, flip_y) = mirror(jw, ny);
                    let src = &values[j * nx..(j + 1) * nx];
                    let y_wall = j == 0 || j == ny - 1;
                    for (iw, r) in row.iter_mut().enumerate() {
                        let (i, flip_x) = mirror(iw, nx);
                        let x_wall = i == 0 || i == nx - 1;
                        *r = match parity {
                            Parity::Even => src[i],
                            Parity::OddX if x_wall => 0.0,
                            Parity::OddX => {
                                if flip_x {
                                    -src[i]
                                } else {
                                    src[i]
                                }
                            }
                            Parity::OddY if y_wall => 0.0,
                            Parity::OddY => {
                                if flip_y {
                                    -src[i]
                                } else {
                                    src[i]
                                }
                            }
                        };
                    }
                });
            }
        }
    }

    fn restrict(&self, work: &[f64]) -> Vec<f64> {
        let (nx, ny, wx, wy) = (self.domain.nx, self.domain.ny, self.wx, self.wy);
        let mut out = vec![0.0; nx * ny];
        par::for_each_row(&mut out, nx, |j, row| {
            let src = &work[(j % wy) * wx..(j % wy + 1) * wx];
            for (i, r) in row.iter_mut().enumerate() {
                *r = src[i % wx];
            }
        });
        out
    }

    fn forward(&mut self, values: &[f64], parity: Parity) -> Vec<Complex64> {
        let mut real = std::mem::take(&mut self.buf.real_a);
        self.lift(values, parity, &mut real);
        let mut spec = vec![ZERO; self.fft.spectrum_len()];
        self.fft.forward(&mut real, &mut spec);
        self.buf.real_a = real;
        spec
    }

    /// Inverse transform to the work grid; consumes `spec`.
    fn inverse_work(&mut self, spec: &mut [Complex64], out: &mut [f64]) {
        self.fft.inverse(spec, out);
    }

    fn inverse(&mut self, mut spec: Vec<Complex64>) -> Vec<f64> {
        let mut real = std::mem::take(&mut self.buf.real_a);
        self.fft.inverse(&mut spec, &mut real);
        let out = self.restrict(&real);
        self.buf.real_a = real;
        out
    }

    fn inverse_scalar(&mut self, spec: Vec<Complex64>) -> ScalarField {
        let values = self.inverse(spec);
        self.scalar(values)
    }

    fn scalar(&self, values: Vec<f64>) -> ScalarField {
        ScalarField::new(self.domain, values).expect("restricted length matches")
    }

    fn vector(&self, u: Vec<f64>, v: Vec<f64>) -> VectorField {
        VectorField::new(self.domain, u, v).expect("restricted length matches")
    }

    /// Applies `f(kx, ky, keep, coeff)` to every coefficient.
    fn for_each_mode<F>(&self, spec: &mut [Complex64], f: F)
    where
        F: Fn(f64, f64, bool, &mut Complex64) + Sync + Send,
    {
        let (kx, ky, kpx, kpy) = (&self.kx, &self.ky, &self.keep_x, &self.keep_y);
        par::for_each_row(spec, self.wy, |ix, col| {
            for (jy, c) in col.iter_mut().enumerate() {
                f(kx[ix], ky[jy], kpx[ix] && kpy[jy], c);
            }
        });
    }

    fn mean_tolerance(theta: &ScalarField) -> Result<()> {
        let mean = theta.mean();
        let tol = 1e-8 * fields::l2_norm(theta)? + 1e-14;
        if mean.abs() > tol {
            return Err(Error::NonZeroMean { mean, tol });
        }
        Ok(())
    }

    // ----- operators ---------------------------------------------------

    /// Solves `Laplace(phi) = theta` with the workspace's boundary condition
    /// and returns the mean-zero solution.
    pub fn poisson(&mut self, theta: &ScalarField) -> Result<ScalarField> {
        self.check(theta.domain())?;
        Self::mean_tolerance(theta)?;
        let mut spec = self.forward(theta.values(), Parity::Even);
        self.for_each_mode(&mut spec, |kx, ky, _, c| {
            let k2 = kx * kx + ky * ky;
            *c = if k2 > 0.0 { -*c / k2 } else { ZERO };
        });
        let phi = self.inverse_scalar(spec);
        Ok(fields::subtract_mean(&phi))
    }

    pub fn gradient(&mut self, f: &ScalarField) -> Result<VectorField> {
        self.check(f.domain())?;
        let spec = self.forward(f.values(), Parity::Even);
        let (gx, gy) = self.gradient_of_spectrum(&spec);
        Ok(self.vector(gx, gy))
    }

    fn gradient_of_spectrum(&mut self, spec: &[Complex64]) -> (Vec<f64>, Vec<f64>) {
        let mut sx = spec.to_vec();
        self.for_each_mode(&mut sx, |kx, _, _, c| *c *= Complex64::new(0.0, kx));
        let gx = self.inverse(sx);
        let mut sy = spec.to_vec();
        self.for_each_mode(&mut sy, |_, ky, _, c| *c *= Complex64::new(0.0, ky));
        let gy = self.inverse(sy);
        (gx, gy)
    }

    fn forward_vector(&mut self, v: &VectorField) -> (Vec<Complex64>, Vec<Complex64>) {
        let a = self.forward(v.u_values(), Parity::OddX);
        let b = self.forward(v.v_values(), Parity::OddY);
        (a, b)
    }

    fn inverse_vector(&mut self, a: Vec<Complex64>, b: Vec<Complex64>) -> VectorField {
        let u = self.inverse(a);
        let v = self.inverse(b);
        self.vector(u, v)
    }

    pub fn divergence(&mut self, u: &VectorField) -> Result<ScalarField> {
        self.check(u.domain())?;
        let (a, b) = self.forward_vector(u);
        let mut d = a;
        let (kx, ky) = (&self.kx, &self.ky);
        par::for_each_row(&mut d, self.wy, |ix, col| {
            for (jy, c) in col.iter_mut().enumerate() {
                let bb = b[ix * ky.len() + jy];
                *c = Complex64::new(0.0, kx[ix]) * *c + Complex64::new(0.0, ky[jy]) * bb;
            }
        });
        Ok(self.inverse_scalar(d))
    }

    fn project_spectra(&self, a: &mut [Complex64], b: &mut [Complex64]) {
        let (kx, ky, wy) = (&self.kx, &self.ky, self.wy);
        let mut pairs: Vec<(&mut [Complex64], &mut [Complex64])> =
            a.chunks_mut(wy).zip(b.chunks_mut(wy)).collect();
        par::for_each_row(&mut pairs, 1, |ix, p| {
            let (ca, cb) = &mut p[0];
            for jy in 0..wy {
                let (x, y) = (kx[ix], ky[jy]);
                let k2 = x * x + y * y;
                if k2 > 0.0 {
                    let d = (x * ca[jy] + y * cb[jy]) / k2;
                    ca[jy] -= x * d;
                    cb[jy] -= y * d;
                }
            }
        });
    }

    /// Leray-Helmholtz projection `v - grad(p)` onto divergence-free fields
    /// satisfying the workspace's boundary condition.
    pub fn leray_project(&mut self, v: &VectorField) -> Result<VectorField> {
        self.check(v.domain())?;
        let (mut a, mut b) = self.forward_vector(v);
        self.project_spectra(&mut a, &mut b);
        Ok(self.inverse_vector(a, b))
    }

    /// Componentwise inverse Laplacian; component means are discarded.
    pub fn inverse_laplacian_vector(&mut self, v: &VectorField) -> Result<VectorField> {
        self.check(v.domain())?;
        let (mut a, mut b) = self.forward_vector(v);
        for s in [&mut a, &mut b] {
            self.for_each_mode(s, |kx, ky, _, c| {
                let k2 = kx * kx + ky * ky;
                *c = if k2 > 0.0 { -*c / k2 } else { ZERO };
            });
        }
        Ok(self.inverse_vector(a, b))
    }

    /// Componentwise Laplacian.
    pub fn laplacian_vector(&mut self, v: &VectorField) -> Result<VectorField> {
        self.check(v.domain())?;
        let (mut a, mut b) = self.forward_vector(v);
        for s in [&mut a, &mut b] {
            self.for_each_mode(s, |kx, ky, _, c| *c *= -(kx * kx + ky * ky));
        }
        Ok(self.inverse_vector(a, b))
    }

    pub fn dealias_scalar(&mut self, f: &ScalarField) -> Result<ScalarField> {
        self.check(f.domain())?;
        let mut s = self.forward(f.values(), Parity::Even);
        self.for_each_mode(&mut s, |_, _, keep, c| {
            if !keep {
                *c = ZERO
            }
        });
        Ok(self.inverse_scalar(s))
    }

    pub fn dealias_vector(&mut self, v: &VectorField) -> Result<VectorField> {
        self.check(v.domain())?;
        let (mut a, mut b) = self.forward_vector(v);
        for s in [&mut a, &mut b] {
            self.for_each_mode(s, |_, _, keep, c| {
                if !keep {
                    *c = ZERO
                }
            });
        }
        Ok(self.inverse_vector(a, b))
    }

    /// `[du/dx, du/dy, dv/dx, dv/dy]` on the original grid.
    pub fn velocity_gradient(&mut self, u: &VectorField) -> Result<[Vec<f64>; 4]> {
        self.check(u.domain())?;
        let (a, b) = self.forward_vector(u);
        let (ax, ay) = self.gradient_of_spectrum(&a);
        let (bx, by) = self.gradient_of_spectrum(&b);
        Ok([ax, ay, bx, by])
    }

    /// `integral(|grad u|_F^2)`.
    pub fn enstrophy(&mut self, u: &VectorField) -> Result<f64> {
        let g = self.velocity_gradient(u)?;
        let d = Domain::Rect(self.domain);
        Ok(g.iter().map(|c| d.integrate_product(c, c)).sum())
    }

    /// Largest pointwise Frobenius norm of `grad u` over the grid.
    pub fn gradient_sup(&mut self, u: &VectorField) -> Result<f64> {
        let g = self.velocity_gradient(u)?;
        Ok(par::max_range(g[0].len(), |k| {
            (g[0][k] * g[0][k] + g[1][k] * g[1][k] + g[2][k] * g[2][k] + g[3][k] * g[3][k]).sqrt()
        }))
    }

    // ----- advection ---------------------------------------------------

    /// `-D(u . grad(theta))` in spectral form, `D` being the dealias mask.
    fn rhs(&mut self, theta: &[Complex64], ux: &[f64], uy: &[f64], out: &mut [Complex64]) {
        let mut spec = std::mem::take(&mut self.buf.spec_a);
        let mut gx = std::mem::take(&mut self.buf.real_b);
        let mut gy = std::mem::take(&mut self.buf.real_c);
        let mut prod = std::mem::take(&mut self.buf.real_a);

        spec.copy_from_slice(theta);
        self.for_each_mode(&mut spec, |kx, _, _, c| *c *= Complex64::new(0.0, kx));
        self.inverse_work(&mut spec, &mut gx);
        spec.copy_from_slice(theta);
        self.for_each_mode(&mut spec, |_, ky, _, c| *c *= Complex64::new(0.0, ky));
        self.inverse_work(&mut spec, &mut gy);

        let (gxr, gyr) = (&gx, &gy);
        par::fill(&mut prod, |q| -(ux[q] * gxr[q] + uy[q] * gyr[q]));
        self.fft.forward(&mut prod, out);
        self.for_each_mode(out, |_, _, keep, c| {
            if !keep {
                *c = ZERO
            }
        });

        self.buf.spec_a = spec;
        self.buf.real_b = gx;
        self.buf.real_c = gy;
        self.buf.real_a = prod;
    }

    fn lift_velocity(&self, u: &VectorField) -> (Vec<f64>, Vec<f64>) {
        let n = self.wx * self.wy;
        let mut ux = vec![0.0; n];
        let mut uy = vec![0.0; n];
        self.lift(u.u_values(), Parity::OddX, &mut ux);
        self.lift(u.v_values(), Parity::OddY, &mut uy);
        (ux, uy)
    }

    /// Right-hand side `-u . grad(theta)` of the advection equation with the
    /// active dealias rule applied to the product.
    pub fn advect_rhs(&mut self, theta: &ScalarField, u: &VectorField) -> Result<ScalarField> {
        self.check(theta.domain())?;
        self.check(u.domain())?;
        let th = self.forward(theta.values(), Parity::Even);
        let (ux, uy) = self.lift_velocity(u);
        let mut out = vec![ZERO; th.len()];
        self.rhs(&th, &ux, &uy, &mut out);
        Ok(self.inverse_scalar(out))
    }

    /// Advances `theta` through `dt` (which may be negative) with `n` equal
    /// classical RK4 steps in the frozen flow `u`.
    pub fn rk4_advance(
        &mut self,
        theta: &ScalarField,
        u: &VectorField,
        dt: f64,
        n: usize,
    ) -> Result<ScalarField> {
        self.check(theta.domain())?;
        self.check(u.domain())?;
        if n == 0 || dt == 0.0 {
            return Ok(theta.clone());
        }
        let (ux, uy) = self.lift_velocity(u);
        let mut th = self.forward(theta.values(), Parity::Even);
        let len = th.len();
        let mut k = vec![ZERO; len];
        let mut acc = vec![ZERO; len];
        let mut stage = vec![ZERO; len];
        let h = dt / n as f64;
        for _ in 0..n {
            self.rhs(&th, &ux, &uy, &mut k);
            axpy_pair(&mut acc, &mut stage, &th, &k, h / 6.0, h / 2.0, true);
            self.rhs(&stage, &ux, &uy, &mut k);
            axpy_pair(&mut acc, &mut stage, &th, &k, h / 3.0, h / 2.0, false);
            self.rhs(&stage, &ux, &uy, &mut k);
            axpy_pair(&mut acc, &mut stage, &th, &k, h / 3.0, h, false);
            self.rhs(&stage, &ux, &uy, &mut k);
            for (a, kk) in acc.iter_mut().zip(&k) {
                *a += h / 6.0 * kk;
            }
            std::mem::swap(&mut th, &mut acc);
        }
        Ok(self.inverse_scalar(th))
    }

    /// Number of RK4 substeps for `dt` at Courant number `cfl`.
    pub fn substeps(&self, u: &VectorField, dt: f64, cfl: f64) -> usize {
        let h = self.domain.hx().min(self.domain.hy());
        let speed = u.max_speed();
        (dt.abs() * speed / (cfl * h)).ceil() as usize
    }

    /// RK4 over one macro step with the CFL-derived substep count.
    /// Returns the new field and the number of substeps taken.
    pub fn rk4_substeps(
        &mut self,
        theta: &ScalarField,
        u: &VectorField,
        dt: f64,
        cfl: f64,
        cap: usize,
    ) -> Result<(ScalarField, usize)> {
        let n = self.substeps(u, dt, cfl);
        if n > cap {
            return Err(Error::RunawayVelocity {
                requested: n,
                cap,
                max_speed: u.max_speed(),
            });
        }
        Ok((self.rk4_advance(theta, u, dt, n)?, n))
    }
}

/// `acc (+)= wa * k` (initialised from `base` when `init`), `stage = base + ws * k`.
fn axpy_pair(
    acc: &mut [Complex64],
    stage: &mut [Complex64],
    base: &[Complex64],
    k: &[Complex64],
    wa: f64,
    ws: f64,
    init: bool,
) {
    for i in 0..acc.len() {
        if init {
            acc[i] = base[i] + wa * k[i];
        } else {
            acc[i] += wa * k[i];
        }
        stage[i] = base[i] + ws * k[i];
    }
}

/// Even reflection of a rectangle field across its `x_max` and `y_max`
/// edges onto the doubled periodic rectangle.
pub fn even_extend(f: &ScalarField) -> Result<ScalarField> {
    let r = f
        .domain()
        .as_rect()
        .ok_or_else(|| Error::DomainMismatch("even extension needs a rectangle".into()))?;
    let ext = RectDomain::new(
        r.x_min,
        2.0 * r.x_max - r.x_min,
        r.y_min,
        2.0 * r.y_max - r.y_min,
        2 * r.nx - 1,
        2 * r.ny - 1,
        BoundaryCondition::Periodic,
    )?;
    let (nx, ny) = (r.nx, r.ny);
    let src = f.values();
    let mut values = vec![0.0; ext.dofs()];
    par::for_each_row(&mut values, ext.nx, |jw, row| {
        let j = mirror(jw % (2 * (ny - 1)), ny).0;
        for (iw, v) in row.iter_mut().enumerate() {
            let i = mirror(iw % (2 * (nx - 1)), nx).0;
            *v = src[j * nx + i];
        }
    });
    ScalarField::new(ext, values)
}

fn rect_with_bc(f: &ScalarField, bc: BoundaryCondition) -> Result<RectDomain> {
    match f.domain() {
        Domain::Rect(r) if r.bc == bc => Ok(*r),
        _ => Err(Error::DomainMismatch(format!(
            "expected a {} rectangle",
            bc.name()
        ))),
    }
}

/// Neumann Poisson solve on a no-flux rectangle via even extension.
pub fn poisson_neumann(theta: &ScalarField) -> Result<ScalarField> {
    let r = rect_with_bc(theta, BoundaryCondition::NoFlux)?;
    SpectralWorkspace::new(r, DealiasRule::TwoThirds).poisson(theta)
}

/// Poisson solve on a periodic rectangle.
pub fn poisson_periodic(theta: &ScalarField) -> Result<ScalarField> {
    let r = rect_with_bc(theta, BoundaryCondition::Periodic)?;
    SpectralWorkspace::new(r, DealiasRule::TwoThirds).poisson(theta)
}

#[cfg(test)]
mod tests;
