//! Domains, field containers, quadrature and norms shared by both backends.
//!
//! Rectangles carry a closed uniform grid (both end points on each axis)
//! stored row-major with `x` fastest. Inner products use the trapezoidal
//! rule there and the consistent P1 mass matrix on meshes; both are
//! normalised by the domain area, so `<1, 1> = 1`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::MeshDomain;
use crate::par;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoundaryCondition {
    /// `u . n = 0` and `grad(phi) . n = 0`, handled by even extension.
    #[serde(rename = "no-flux")]
    NoFlux,
    #[serde(rename = "periodic")]
    Periodic,
}

impl BoundaryCondition {
    pub fn name(self) -> &'static str {
        match self {
            BoundaryCondition::NoFlux => "no-flux",
            BoundaryCondition::Periodic => "periodic",
        }
    }
}

impl std::str::FromStr for BoundaryCondition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "no-flux" | "noflux" | "neumann" => Ok(BoundaryCondition::NoFlux),
            "periodic" => Ok(BoundaryCondition::Periodic),
            other => Err(Error::param("bc", format!("unknown boundary condition `{other}`"))),
        }
    }
}

/// Axis-aligned rectangle sampled on a closed uniform grid.
///
/// With periodic boundaries the last column and row duplicate the first.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RectDomain {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub nx: usize,
    pub ny: usize,
    pub bc: BoundaryCondition,
}

impl RectDomain {
    pub fn new(
        x_min: f64,
        x_max: f64,
        y_min: f64,
        y_max: f64,
        nx: usize,
        ny: usize,
        bc: BoundaryCondition,
    ) -> Result<Self> {
        if !(x_max > x_min) || !(y_max > y_min) || !(x_max - x_min).is_finite() || !(y_max - y_min).is_finite() {
            return Err(Error::InvalidDomain(format!(
                "empty rectangle [{x_min}, {x_max}] x [{y_min}, {y_max}]"
            )));
        }
        if nx < 8 || ny < 8 {
            return Err(Error::InvalidDomain(format!(
                "grid {nx} x {ny} is below the minimum of 8 points per axis"
            )));
        }
        Ok(RectDomain {
            x_min,
            x_max,
            y_min,
            y_max,
            nx,
            ny,
            bc,
        })
    }

    /// `[-1, 1]^2` with `n` points per axis.
    pub fn square(n: usize, bc: BoundaryCondition) -> Result<Self> {
        Self::new(-1.0, 1.0, -1.0, 1.0, n, n, bc)
    }

    pub fn with_bc(self, bc: BoundaryCondition) -> Self {
        RectDomain { bc, ..self }
    }

    pub fn lx(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn ly(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.lx() * self.ly()
    }

    pub fn hx(&self) -> f64 {
        self.lx() / (self.nx - 1) as f64
    }

    pub fn hy(&self) -> f64 {
        self.ly() / (self.ny - 1) as f64
    }

    pub fn dofs(&self) -> usize {
        self.nx * self.ny
    }

    pub fn x(&self, i: usize) -> f64 {
        if i == self.nx - 1 {
            self.x_max
        } else {
            self.x_min + i as f64 * self.hx()
        }
    }

    pub fn y(&self, j: usize) -> f64 {
        if j == self.ny - 1 {
            self.y_max
        } else {
            self.y_min + j as f64 * self.hy()
        }
    }

    /// Smallest positive Neumann (or periodic) eigenvalue of `-Laplace`.
    pub fn lambda1(&self) -> f64 {
        let scale = match self.bc {
            BoundaryCondition::NoFlux => std::f64::consts::PI,
            BoundaryCondition::Periodic => 2.0 * std::f64::consts::PI,
        };
        let l = self.lx().max(self.ly());
        (scale / l).powi(2)
    }

    fn trapezoid_weights(n: usize, h: f64) -> Vec<f64> {
        let mut w = vec![h; n];
        w[0] = 0.5 * h;
        w[n - 1] = 0.5 * h;
        w
    }

    /// Copies the first column and row onto the closing ones.
    fn periodize(&self, values: &mut [f64]) {
        if self.bc != BoundaryCondition::Periodic {
            return;
        }
        let (nx, ny) = (self.nx, self.ny);
        for j in 0..ny {
            values[j * nx + nx - 1] = values[j * nx];
        }
        let (head, tail) = values.split_at_mut((ny - 1) * nx);
        tail.copy_from_slice(&head[..nx]);
    }
}

/// Either a spectral rectangle or a triangulated mesh.
#[derive(Clone, Debug)]
pub enum Domain {
    Rect(RectDomain),
    Mesh(Arc<MeshDomain>),
}

impl From<RectDomain> for Domain {
    fn from(r: RectDomain) -> Self {
        Domain::Rect(r)
    }
}

impl From<MeshDomain> for Domain {
    fn from(m: MeshDomain) -> Self {
        Domain::Mesh(Arc::new(m))
    }
}

impl From<Arc<MeshDomain>> for Domain {
    fn from(m: Arc<MeshDomain>) -> Self {
        Domain::Mesh(m)
    }
}

impl Domain {
    pub fn dofs(&self) -> usize {
        match self {
            Domain::Rect(r) => r.dofs(),
            Domain::Mesh(m) => m.n_vertices(),
        }
    }

    pub fn area(&self) -> f64 {
        match self {
            Domain::Rect(r) => r.area(),
            Domain::Mesh(m) => m.area(),
        }
    }

    pub fn same_as(&self, other: &Domain) -> bool {
        match (self, other) {
            (Domain::Rect(a), Domain::Rect(b)) => a == b,
            (Domain::Mesh(a), Domain::Mesh(b)) => Arc::ptr_eq(a, b) || a == b,
            _ => false,
        }
    }

    pub fn as_rect(&self) -> Option<&RectDomain> {
        match self {
            Domain::Rect(r) => Some(r),
            Domain::Mesh(_) => None,
        }
    }

    pub fn as_mesh(&self) -> Option<&Arc<MeshDomain>> {
        match self {
            Domain::Mesh(m) => Some(m),
            Domain::Rect(_) => None,
        }
    }

    /// Coordinates of degree of freedom `k`.
    pub fn point(&self, k: usize) -> [f64; 2] {
        match self {
            Domain::Rect(r) => [r.x(k % r.nx), r.y(k / r.nx)],
            Domain::Mesh(m) => m.vertices()[k],
        }
    }

    /// `integral(f g)` over the domain (not normalised).
    pub fn integrate_product(&self, f: &[f64], g: &[f64]) -> f64 {
        match self {
            Domain::Rect(r) => {
                let wx = RectDomain::trapezoid_weights(r.nx, r.hx());
                let wy = RectDomain::trapezoid_weights(r.ny, r.hy());
                let nx = r.nx;
                let rows = par::map_range(r.ny, |j| {
                    let off = j * nx;
                    let s: f64 = (0..nx).map(|i| wx[i] * f[off + i] * g[off + i]).sum();
                    s * wy[j]
                });
                rows.iter().sum()
            }
            Domain::Mesh(m) => {
                let tris = m.triangles();
                par::sum_range(tris.len(), |t| {
                    let [a, b, c] = tris[t];
                    let area = m.triangle_area(t);
                    let diag = f[a] * g[a] + f[b] * g[b] + f[c] * g[c];
                    let cross = (f[a] + f[b] + f[c]) * (g[a] + g[b] + g[c]);
                    area / 12.0 * (diag + cross)
                })
            }
        }
    }

    /// `integral(f)` over the domain.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        match self {
            Domain::Rect(r) => {
                let wx = RectDomain::trapezoid_weights(r.nx, r.hx());
                let wy = RectDomain::trapezoid_weights(r.ny, r.hy());
                let nx = r.nx;
                let rows = par::map_range(r.ny, |j| {
                    let off = j * nx;
                    wy[j] * (0..nx).map(|i| wx[i] * f[off + i]).sum::<f64>()
                });
                rows.iter().sum()
            }
            Domain::Mesh(m) => {
                let tris = m.triangles();
                par::sum_range(tris.len(), |t| {
                    let [a, b, c] = tris[t];
                    m.triangle_area(t) / 3.0 * (f[a] + f[b] + f[c])
                })
            }
        }
    }

    fn normalize(&self, values: &mut [f64]) {
        if let Domain::Rect(r) = self {
            r.periodize(values);
        }
    }

    fn check(&self, other: &Domain) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(Error::DomainMismatch(
                "fields are defined on different domains".into(),
            ))
        }
    }
}

/// Sampled scalar such as `theta`, `phi` or `p`.
#[derive(Clone, Debug)]
pub struct ScalarField {
    domain: Domain,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(domain: impl Into<Domain>, mut values: Vec<f64>) -> Result<Self> {
        let domain = domain.into();
        if values.len() != domain.dofs() {
            return Err(Error::DofMismatch {
                expected: domain.dofs(),
                got: values.len(),
            });
        }
        domain.normalize(&mut values);
        Ok(ScalarField { domain, values })
    }

    pub fn zeros(domain: impl Into<Domain>) -> Self {
        let domain = domain.into();
        let n = domain.dofs();
        ScalarField {
            domain,
            values: vec![0.0; n],
        }
    }

    pub fn constant(domain: impl Into<Domain>, c: f64) -> Self {
        let mut f = Self::zeros(domain);
        f.values.fill(c);
        f
    }

    /// Samples `f(x, y)` at every degree of freedom.
    pub fn from_fn<F>(domain: impl Into<Domain>, f: F) -> Self
    where
        F: Fn(f64, f64) -> f64 + Sync + Send,
    {
        let domain = domain.into();
        let mut values = par::map_range(domain.dofs(), |k| {
            let [x, y] = domain.point(k);
            f(x, y)
        });
        domain.normalize(&mut values);
        ScalarField { domain, values }
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Mutable samples. On periodic rectangles callers must keep the
    /// closing row and column consistent.
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Spatial mean `(1/|Omega|) integral(f)`.
    pub fn mean(&self) -> f64 {
        self.domain.integrate(&self.values) / self.domain.area()
    }

    pub fn scaled(&self, alpha: f64) -> ScalarField {
        self.map(|v| alpha * v)
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> ScalarField {
        ScalarField {
            domain: self.domain.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// `self + alpha * other`.
    pub fn add_scaled(&self, alpha: f64, other: &ScalarField) -> Result<ScalarField> {
        self.domain.check(&other.domain)?;
        Ok(ScalarField {
            domain: self.domain.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + alpha * b)
                .collect(),
        })
    }
}

/// Two-component velocity sample.
#[derive(Clone, Debug)]
pub struct VectorField {
    domain: Domain,
    u: Vec<f64>,
    v: Vec<f64>,
}

impl VectorField {
    pub fn new(domain: impl Into<Domain>, mut u: Vec<f64>, mut v: Vec<f64>) -> Result<Self> {
        let domain = domain.into();
        for c in [&u, &v] {
            if c.len() != domain.dofs() {
                return Err(Error::DofMismatch {
                    expected: domain.dofs(),
                    got: c.len(),
                });
            }
        }
        domain.normalize(&mut u);
        domain.normalize(&mut v);
        Ok(VectorField { domain, u, v })
    }

    pub fn zeros(domain: impl Into<Domain>) -> Self {
        let domain = domain.into();
        let n = domain.dofs();
        VectorField {
            domain,
            u: vec![0.0; n],
            v: vec![0.0; n],
        }
    }

    pub fn from_fn<F>(domain: impl Into<Domain>, f: F) -> Self
    where
        F: Fn(f64, f64) -> [f64; 2] + Sync + Send,
    {
        let domain = domain.into();
        let pairs = par::map_range(domain.dofs(), |k| {
            let [x, y] = domain.point(k);
            f(x, y)
        });
        let mut u: Vec<f64> = pairs.iter().map(|p| p[0]).collect();
        let mut v: Vec<f64> = pairs.iter().map(|p| p[1]).collect();
        domain.normalize(&mut u);
        domain.normalize(&mut v);
        VectorField { domain, u, v }
    }

    pub fn from_components(a: ScalarField, b: ScalarField) -> Result<Self> {
        a.domain.check(&b.domain)?;
        Ok(VectorField {
            domain: a.domain,
            u: a.values,
            v: b.values,
        })
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn u_values(&self) -> &[f64] {
        &self.u
    }

    pub fn v_values(&self) -> &[f64] {
        &self.v
    }

    pub fn components_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        (&mut self.u, &mut self.v)
    }

    pub fn component(&self, c: usize) -> ScalarField {
        ScalarField {
            domain: self.domain.clone(),
            values: if c == 0 { self.u.clone() } else { self.v.clone() },
        }
    }

    pub fn scaled(&self, alpha: f64) -> VectorField {
        VectorField {
            domain: self.domain.clone(),
            u: self.u.iter().map(|x| alpha * x).collect(),
            v: self.v.iter().map(|x| alpha * x).collect(),
        }
    }

    pub fn add_scaled(&self, alpha: f64, other: &VectorField) -> Result<VectorField> {
        self.domain.check(&other.domain)?;
        Ok(VectorField {
            domain: self.domain.clone(),
            u: self.u.iter().zip(&other.u).map(|(a, b)| a + alpha * b).collect(),
            v: self.v.iter().zip(&other.v).map(|(a, b)| a + alpha * b).collect(),
        })
    }

    /// Largest pointwise speed `|u|`.
    pub fn max_speed(&self) -> f64 {
        par::max_range(self.u.len(), |k| self.u[k].hypot(self.v[k]))
    }

    /// Pointwise product `f * self`.
    pub fn times_scalar(&self, f: &ScalarField) -> Result<VectorField> {
        self.domain.check(&f.domain)?;
        Ok(VectorField {
            domain: self.domain.clone(),
            u: self.u.iter().zip(&f.values).map(|(a, s)| a * s).collect(),
            v: self.v.iter().zip(&f.values).map(|(a, s)| a * s).collect(),
        })
    }
}

/// Which functional of the flow is held fixed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConstraintKind {
    #[serde(rename = "energy")]
    Energy,
    #[serde(rename = "enstrophy")]
    Enstrophy,
}

/// Fixed-energy (rms speed `U`) or fixed-enstrophy (strain rate `1/tau`) budget.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Constraint {
    Energy { u_rms: f64 },
    Enstrophy { inv_tau: f64 },
}

impl Constraint {
    pub fn energy(u_rms: f64) -> Result<Self> {
        if !(u_rms.is_finite() && u_rms > 0.0) {
            return Err(Error::param("U", format!("must be finite and positive, got {u_rms}")));
        }
        Ok(Constraint::Energy { u_rms })
    }

    pub fn enstrophy(inv_tau: f64) -> Result<Self> {
        if !(inv_tau.is_finite() && inv_tau > 0.0) {
            return Err(Error::param(
                "inv_tau",
                format!("must be finite and positive, got {inv_tau}"),
            ));
        }
        Ok(Constraint::Enstrophy { inv_tau })
    }

    pub fn kind(&self) -> ConstraintKind {
        match self {
            Constraint::Energy { .. } => ConstraintKind::Energy,
            Constraint::Enstrophy { .. } => ConstraintKind::Enstrophy,
        }
    }

    pub fn magnitude(&self) -> f64 {
        match *self {
            Constraint::Energy { u_rms } => u_rms,
            Constraint::Enstrophy { inv_tau } => inv_tau,
        }
    }

    /// Target value of `energy(u)` or `enstrophy(u)` on a domain of the given area.
    pub fn target(&self, area: f64) -> f64 {
        match *self {
            Constraint::Energy { u_rms } => u_rms * u_rms * area,
            Constraint::Enstrophy { inv_tau } => inv_tau * inv_tau * area,
        }
    }
}

/// `<f, g> = (1/|Omega|) integral(f g)`.
pub fn inner_product(f: &ScalarField, g: &ScalarField) -> Result<f64> {
    f.domain.check(&g.domain)?;
    Ok(f.domain.integrate_product(&f.values, &g.values) / f.domain.area())
}

/// `<u, w> = (1/|Omega|) integral(u . w)`.
pub fn vector_inner_product(a: &VectorField, b: &VectorField) -> Result<f64> {
    a.domain.check(&b.domain)?;
    let d = &a.domain;
    Ok((d.integrate_product(&a.u, &b.u) + d.integrate_product(&a.v, &b.v)) / d.area())
}

pub fn l2_norm(f: &ScalarField) -> Result<f64> {
    if f.is_empty() {
        return Err(Error::EmptyField);
    }
    Ok(inner_product(f, f)?.max(0.0).sqrt())
}

pub fn linf_norm(f: &ScalarField) -> Result<f64> {
    if f.is_empty() {
        return Err(Error::EmptyField);
    }
    Ok(par::max_range(f.len(), |k| f.values[k].abs()))
}

pub fn vector_l2_norm(u: &VectorField) -> Result<f64> {
    Ok(vector_inner_product(u, u)?.max(0.0).sqrt())
}

/// `f - mean(f)`; idempotent up to rounding.
pub fn subtract_mean(f: &ScalarField) -> ScalarField {
    let m = f.mean();
    if m == 0.0 {
        return f.clone();
    }
    f.map(|v| v - m)
}

/// `integral(|u|^2)`.
pub fn energy(u: &VectorField) -> f64 {
    let d = &u.domain;
    d.integrate_product(&u.u, &u.u) + d.integrate_product(&u.v, &u.v)
}

/// `integral(sum_ij (d_j u_i)^2)`, with derivatives from the owning backend.
pub fn enstrophy(u: &VectorField) -> Result<f64> {
    match &u.domain {
        Domain::Rect(r) => {
            let mut ws = crate::spectral::SpectralWorkspace::new(*r, crate::spectral::DealiasRule::TwoThirds);
            ws.enstrophy(u)
        }
        Domain::Mesh(m) => Ok(crate::fem::p1_enstrophy(m, u)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sq(n: usize) -> RectDomain {
        RectDomain::square(n, BoundaryCondition::NoFlux).unwrap()
    }

    #[test]
    fn inner_product_examples() {
        let d = sq(65);
        let one = ScalarField::constant(d, 1.0);
        assert!((inner_product(&one, &one).unwrap() - 1.0).abs() < 1e-14);
        let c = ScalarField::from_fn(d, |x, _| (PI * x).cos());
        assert!((inner_product(&c, &c).unwrap() - 0.5).abs() < 1e-14);
        let c2 = ScalarField::from_fn(d, |_, y| (2.0 * PI * y).cos());
        assert!(inner_product(&c, &c2).unwrap().abs() < 1e-12);
    }

    #[test]
    fn inner_product_rejects_other_domain() {
        let a = ScalarField::zeros(sq(16));
        let b = ScalarField::zeros(sq(17));
        assert!(matches!(inner_product(&a, &b), Err(Error::DomainMismatch(_))));
    }

    #[test]
    fn norms() {
        let d = sq(65);
        let c = ScalarField::from_fn(d, |x, _| (PI * x).cos());
        assert!((l2_norm(&c).unwrap() - 0.5_f64.sqrt()).abs() < 1e-13);
        let t0 = ScalarField::from_fn(sq(257), |x, y| {
            0.5 * (PI * x).sin() + 0.25 * (2.0 * PI * y).sin()
        });
        assert!((linf_norm(&t0).unwrap() - 0.75).abs() < 1e-12);
        let z = ScalarField::zeros(d);
        assert_eq!(l2_norm(&z).unwrap(), 0.0);
        assert_eq!(linf_norm(&z).unwrap(), 0.0);
    }

    #[test]
    fn subtract_mean_examples() {
        let d = sq(33);
        let five = ScalarField::constant(d, 5.0);
        assert!(linf_norm(&subtract_mean(&five)).unwrap() < 1e-14);
        let c = ScalarField::from_fn(d, |x, _| (PI * x).cos());
        let cm = subtract_mean(&c);
        assert!(cm.values().iter().zip(c.values()).all(|(a, b)| (a - b).abs() < 1e-12));
        let x = ScalarField::from_fn(d, |x, _| x);
        let xm = subtract_mean(&x);
        assert!(xm.values().iter().zip(x.values()).all(|(a, b)| (a - b).abs() < 1e-14));
    }

    #[test]
    fn energy_and_enstrophy_of_simple_flows() {
        let d = sq(65);
        let uniform = VectorField::from_fn(d, |_, _| [1.0, 0.0]);
        assert!((energy(&uniform) - 4.0).abs() < 1e-12);
        let zero = VectorField::zeros(d);
        assert_eq!(energy(&zero), 0.0);
        assert_eq!(enstrophy(&zero).unwrap(), 0.0);
        // psi = sin(pi x) sin(pi y): integral of |u|^2 over [-1,1]^2 is 2 pi^2.
        let cell = VectorField::from_fn(d, |x, y| {
            [
                PI * (PI * x).sin() * (PI * y).cos(),
                -PI * (PI * x).cos() * (PI * y).sin(),
            ]
        });
        assert!((energy(&cell) - 2.0 * PI * PI).abs() < 1e-6);
        let p = RectDomain::square(65, BoundaryCondition::Periodic).unwrap();
        let stream = VectorField::from_fn(p, |_, _| [1.0, 0.0]);
        assert!(enstrophy(&stream).unwrap().abs() < 1e-20);
    }

    #[test]
    fn periodic_fields_close_the_grid() {
        let d = RectDomain::square(16, BoundaryCondition::Periodic).unwrap();
        let f = ScalarField::from_fn(d, |x, y| x + y);
        let v = f.values();
        assert_eq!(v[15], v[0]);
        assert_eq!(v[15 * 16 + 3], v[3]);
    }

    #[test]
    fn constraint_validation() {
        assert!(Constraint::energy(-1.0).is_err());
        assert!(Constraint::enstrophy(f64::NAN).is_err());
        assert_eq!(Constraint::energy(2.0).unwrap().target(4.0), 16.0);
    }
}
