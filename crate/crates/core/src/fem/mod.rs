//! Piecewise-linear finite elements on triangle meshes.

mod eigen;
pub mod meshgen;
mod semilag;
pub mod sparse;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{ScalarField, VectorField};
use crate::mesh::MeshDomain;
use crate::par;

pub use eigen::{smallest_nonzero_eigenvalue, EigenPair};
pub use meshgen::{generate_mesh, MeshShape};
pub use sparse::{assemble, conjugate_gradient, CgReport, SparseOperator};

use semilag::Locator;
use sparse::p1_gradients;

/// `sum_c u_c^T K u_c`, evaluated element by element.
pub fn p1_enstrophy(mesh: &MeshDomain, u: &VectorField) -> f64 {
    let (a, b) = (u.u_values(), u.v_values());
    par::sum_range(mesh.triangles().len(), |t| {
        let (g, area) = p1_gradients(mesh.triangle_points(t));
        let tri = mesh.triangles()[t];
        let mut s = 0.0;
        for f in [a, b] {
            let gx: f64 = (0..3).map(|i| f[tri[i]] * g[i][0]).sum();
            let gy: f64 = (0..3).map(|i| f[tri[i]] * g[i][1]).sum();
            s += gx * gx + gy * gy;
        }
        area * s
    })
}

/// Largest elementwise Frobenius norm of the P1 velocity gradient.
pub fn p1_gradient_sup(mesh: &MeshDomain, u: &VectorField) -> f64 {
    let (a, b) = (u.u_values(), u.v_values());
    par::max_range(mesh.triangles().len(), |t| {
        let (g, _) = p1_gradients(mesh.triangle_points(t));
        let tri = mesh.triangles()[t];
        let mut s = 0.0;
        for f in [a, b] {
            let gx: f64 = (0..3).map(|i| f[tri[i]] * g[i][0]).sum();
            let gy: f64 = (0..3).map(|i| f[tri[i]] * g[i][1]).sum();
            s += gx * gx + gy * gy;
        }
        s.sqrt()
    })
}

/// Interpolation scheme of the semi-Lagrangian step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Advection {
    /// One P1 interpolation at the upstream foot.
    Plain,
    /// Back-and-forth error compensation with a local range clamp.
    #[default]
    Compensated,
}

impl std::str::FromStr for Advection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plain" => Ok(Advection::Plain),
            "compensated" | "bfecc" => Ok(Advection::Compensated),
            other => Err(Error::param("advection", format!("unknown scheme `{other}`"))),
        }
    }
}

/// Assembled operators, point locator and warm-start state for one mesh.
pub struct FemBackend {
    mesh: Arc<MeshDomain>,
    k: SparseOperator,
    m: SparseOperator,
    kdiag: Vec<f64>,
    mdiag: Vec<f64>,
    /// Elementwise P1 gradients and areas.
    elem: Vec<([[f64; 2]; 3], f64)>,
    locator: Locator,
    h_min: f64,
    tol: f64,
    max_iter: usize,
    warm_phi: Vec<f64>,
    warm_p: Vec<f64>,
    warm_grad: [Vec<f64>; 2],
    advection: Advection,
}

impl FemBackend {
    pub fn new(mesh: Arc<MeshDomain>) -> Result<Self> {
        let (k, m) = assemble(&mesh)?;
        let n = mesh.n_vertices();
        let elem = (0..mesh.triangles().len())
            .map(|t| p1_gradients(mesh.triangle_points(t)))
            .collect();
        let locator = Locator::new(&mesh);
        Ok(FemBackend {
            kdiag: k.diagonal(),
            mdiag: m.diagonal(),
            h_min: mesh.min_edge_length(),
            locator,
            elem,
            k,
            m,
            tol: 1e-10,
            max_iter: 20 * n + 200,
            warm_phi: vec![0.0; n],
            warm_p: vec![0.0; n],
            warm_grad: [vec![0.0; n], vec![0.0; n]],
            advection: Advection::default(),
            mesh,
        })
    }

    pub fn mesh(&self) -> &Arc<MeshDomain> {
        &self.mesh
    }

    pub fn stiffness(&self) -> &SparseOperator {
        &self.k
    }

    pub fn mass(&self) -> &SparseOperator {
        &self.m
    }

    pub fn set_advection(&mut self, scheme: Advection) {
        self.advection = scheme;
    }

    pub fn advection(&self) -> Advection {
        self.advection
    }

    /// Relative residual target for the Neumann solves.
    pub fn set_tolerance(&mut self, tol: f64) {
        self.tol = tol;
    }

    fn check(&self, d: &crate::fields::Domain) -> Result<()> {
        match d.as_mesh() {
            Some(m) if Arc::ptr_eq(m, &self.mesh) || **m == *self.mesh => Ok(()),
            _ => Err(Error::DomainMismatch(
                "field does not live on this backend's mesh".into(),
            )),
        }
    }

    fn field(&self, values: Vec<f64>) -> ScalarField {
        ScalarField::new(self.mesh.clone(), values).expect("nodal length")
    }

    fn m_mean(&self, f: &[f64]) -> f64 {
        self.m.form(&vec![1.0; f.len()], f) / self.mesh.area()
    }

    /// Neumann solve of `K phi = -M theta` after removing the mean of
    /// `theta`; the result has zero mean.
    pub fn solve_neumann(&mut self, theta: &ScalarField) -> Result<ScalarField> {
        self.check(theta.domain())?;
        let mean = self.m_mean(theta.values());
        let t: Vec<f64> = theta.values().iter().map(|v| v - mean).collect();
        let mut rhs = self.m.mul(&t);
        rhs.iter_mut().for_each(|v| *v = -*v);
        let mut phi = std::mem::take(&mut self.warm_phi);
        let rep = conjugate_gradient(&self.k, &self.kdiag, &rhs, &mut phi, self.tol, self.max_iter, true);
        let out = rep.map(|_| {
            let c = self.m_mean(&phi);
            phi.iter().map(|v| v - c).collect::<Vec<f64>>()
        });
        self.warm_phi = match &out {
            Ok(p) => p.clone(),
            Err(_) => vec![0.0; self.mesh.n_vertices()],
        };
        Ok(self.field(out?))
    }

    /// L2 projection of an elementwise constant vector onto P1.
    fn recover(&mut self, gx: &[f64], gy: &[f64]) -> Result<VectorField> {
        let n = self.mesh.n_vertices();
        let mut out = [vec![0.0; n], vec![0.0; n]];
        for (c, g) in [gx, gy].into_iter().enumerate() {
            let mut rhs = vec![0.0; n];
            for (t, tri) in self.mesh.triangles().iter().enumerate() {
                let w = g[t] * self.elem[t].1 / 3.0;
                for &v in tri {
                    rhs[v] += w;
                }
            }
            let mut x = std::mem::take(&mut self.warm_grad[c]);
            conjugate_gradient(&self.m, &self.mdiag, &rhs, &mut x, 1e-12, self.max_iter, false)?;
            self.warm_grad[c] = x.clone();
            out[c] = x;
        }
        let [u, v] = out;
        VectorField::new(self.mesh.clone(), u, v)
    }

    fn element_gradient(&self, f: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let tris = self.mesh.triangles();
        let g: Vec<[f64; 2]> = par::map_range(tris.len(), |t| {
            let (grad, _) = &self.elem[t];
            let tri = tris[t];
            let mut s = [0.0; 2];
            for i in 0..3 {
                s[0] += f[tri[i]] * grad[i][0];
                s[1] += f[tri[i]] * grad[i][1];
            }
            s
        });
        (g.iter().map(|v| v[0]).collect(), g.iter().map(|v| v[1]).collect())
    }

    /// Nodal gradient recovered by mass-matrix L2 projection.
    pub fn gradient(&mut self, f: &ScalarField) -> Result<VectorField> {
        self.check(f.domain())?;
        let (gx, gy) = self.element_gradient(f.values());
        self.recover(&gx, &gy)
    }

    /// Solves the weak pressure problem `(grad p, grad w) = (v, grad w)` for
    /// all P1 `w`; this encodes `Laplace p = div v` with `dp/dn = v . n`.
    pub fn pressure(&mut self, v: &VectorField) -> Result<ScalarField> {
        self.check(v.domain())?;
        let n = self.mesh.n_vertices();
        let (a, b) = (v.u_values(), v.v_values());
        let mut rhs = vec![0.0; n];
        for (t, tri) in self.mesh.triangles().iter().enumerate() {
            let (g, area) = &self.elem[t];
            let va = (a[tri[0]] + a[tri[1]] + a[tri[2]]) * area / 3.0;
            let vb = (b[tri[0]] + b[tri[1]] + b[tri[2]]) * area / 3.0;
            for i in 0..3 {
                rhs[tri[i]] += g[i][0] * va + g[i][1] * vb;
            }
        }
        let mut p = std::mem::take(&mut self.warm_p);
        let rep = conjugate_gradient(&self.k, &self.kdiag, &rhs, &mut p, self.tol, self.max_iter, true);
        self.warm_p = p.clone();
        rep?;
        let c = self.m_mean(&p);
        p.iter_mut().for_each(|x| *x -= c);
        Ok(self.field(p))
    }

    /// `v - R(grad p)` with `R` the L2 recovery onto P1.
    pub fn leray_project(&mut self, v: &VectorField) -> Result<VectorField> {
        let p = self.pressure(v)?;
        let g = self.gradient(&p)?;
        v.add_scaled(-1.0, &g)
    }

    /// Weak divergence `(v, grad w_i)` for every nodal test function,
    /// relative to the same functional applied to `|v|`.
    pub fn weak_divergence_residual(&self, v: &VectorField) -> f64 {
        let n = self.mesh.n_vertices();
        let (a, b) = (v.u_values(), v.v_values());
        let mut r = vec![0.0; n];
        let mut scale = vec![0.0; n];
        for (t, tri) in self.mesh.triangles().iter().enumerate() {
            let (g, area) = &self.elem[t];
            let va = (a[tri[0]] + a[tri[1]] + a[tri[2]]) * area / 3.0;
            let vb = (b[tri[0]] + b[tri[1]] + b[tri[2]]) * area / 3.0;
            for i in 0..3 {
                r[tri[i]] += g[i][0] * va + g[i][1] * vb;
                scale[tri[i]] += (g[i][0] * va).abs() + (g[i][1] * vb).abs();
            }
        }
        let num: f64 = r.iter().map(|x| x * x).sum::<f64>().sqrt();
        let den: f64 = scale.iter().map(|x| x * x).sum::<f64>().sqrt();
        if den == 0.0 {
            0.0
        } else {
            num / den
        }
    }

    /// Componentwise Neumann inverse Laplacian.
    pub fn inverse_laplacian_vector(&mut self, v: &VectorField) -> Result<VectorField> {
        let a = self.solve_neumann(&v.component(0))?;
        let b = self.solve_neumann(&v.component(1))?;
        VectorField::from_components(a, b)
    }

    /// `||theta||_m` normalised by the area, from `phi^T K phi`.
    pub fn mix_norm(&mut self, theta: &ScalarField) -> Result<f64> {
        let phi = self.solve_neumann(theta)?;
        Ok((self.k.form(phi.values(), phi.values()).max(0.0) / self.mesh.area()).sqrt())
    }

    pub fn energy(&self, u: &VectorField) -> f64 {
        self.m.form(u.u_values(), u.u_values()) + self.m.form(u.v_values(), u.v_values())
    }

    pub fn enstrophy(&self, u: &VectorField) -> f64 {
        self.k.form(u.u_values(), u.u_values()) + self.k.form(u.v_values(), u.v_values())
    }

    pub fn gradient_sup(&self, u: &VectorField) -> f64 {
        p1_gradient_sup(&self.mesh, u)
    }

    pub fn min_edge(&self) -> f64 {
        self.h_min
    }

    /// Semi-Lagrangian step over `dt` with tracing substeps limited to
    /// `cfl` times the shortest edge. Returns the field and the substep count.
    pub fn semi_lagrangian_step(
        &mut self,
        theta: &ScalarField,
        u: &VectorField,
        dt: f64,
        cfl: f64,
        cap: usize,
    ) -> Result<(ScalarField, usize)> {
        self.check(theta.domain())?;
        self.check(u.domain())?;
        let speed = u.max_speed();
        let n = semilag::trace_substeps(self.h_min, speed, dt, cfl);
        if n > cap {
            return Err(Error::RunawayVelocity {
                requested: n,
                cap,
                max_speed: speed,
            });
        }
        if n == 0 {
            return Ok((theta.clone(), 0));
        }
        let (ux, uy) = (u.u_values(), u.v_values());
        let back = semilag::trace_feet(&self.mesh, &self.locator, ux, uy, dt, n)?;
        let values = match self.advection {
            Advection::Plain => semilag::apply_feet(&self.mesh, &back, theta.values()),
            Advection::Compensated => {
                let fwd = semilag::trace_feet(&self.mesh, &self.locator, ux, uy, -dt, n)?;
                semilag::compensated(&self.mesh, &back, &fwd, theta.values())
            }
        };
        Ok((self.field(values), n))
    }

    /// Smallest nonzero eigenpair using the already assembled operators.
    pub fn eigenpair(&self) -> Result<EigenPair> {
        eigen::eigen_from_operators(&self.mesh, &self.k, &self.m, 1e-8)
    }

    /// Value of the P1 field `f` at a point; points outside the mesh take
    /// the value at the nearest boundary point.
    pub fn evaluate(&self, f: &ScalarField, p: [f64; 2]) -> Result<f64> {
        let (t, w, _) = self.locator.locate_or_project(&self.mesh, p)?;
        let [a, b, c] = self.mesh.triangles()[t];
        let v = f.values();
        Ok(w[0] * v[a] + w[1] * v[b] + w[2] * v[c])
    }
}
