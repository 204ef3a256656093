//! Common operator interface over the spectral and finite-element solvers.

use crate::error::Result;
use crate::fem::FemBackend;
use crate::fields::{self, Domain, ScalarField, VectorField};
use crate::spectral::SpectralWorkspace;

/// Operators needed by the stirring and time-stepping layers.
pub trait Backend {
    fn domain(&self) -> Domain;

    /// Mean-zero solution of `Laplace(phi) = theta` with the domain's
    /// boundary condition.
    fn poisson(&mut self, theta: &ScalarField) -> Result<ScalarField>;

    fn gradient(&mut self, f: &ScalarField) -> Result<VectorField>;

    /// Leray-Helmholtz projection.
    fn leray(&mut self, v: &VectorField) -> Result<VectorField>;

    fn inverse_laplacian_vector(&mut self, v: &VectorField) -> Result<VectorField>;

    /// Filter applied to nonlinear products before they are projected.
    fn dealias_product(&mut self, v: VectorField) -> Result<VectorField>;

    /// `integral(|u|^2)`.
    fn energy(&mut self, u: &VectorField) -> f64 {
        fields::energy(u)
    }

    /// `integral(|grad u|_F^2)`.
    fn enstrophy(&mut self, u: &VectorField) -> Result<f64>;

    /// Estimate of `||grad u||_inf`.
    fn gradient_sup(&mut self, u: &VectorField) -> Result<f64>;

    /// Area-normalised `||grad(Laplace^-1 theta)||`.
    fn mix_norm(&mut self, theta: &ScalarField) -> Result<f64>;

    /// Advects `theta` through `dt` in the frozen flow `u`; returns the new
    /// field and the number of inner substeps.
    fn advance(
        &mut self,
        theta: &ScalarField,
        u: &VectorField,
        dt: f64,
        cfl: f64,
        cap: usize,
    ) -> Result<(ScalarField, usize)>;

    /// Smallest nonzero Neumann (or periodic) Laplacian eigenvalue.
    fn lambda1(&mut self) -> Result<f64>;
}

impl Backend for SpectralWorkspace {
    fn domain(&self) -> Domain {
        Domain::Rect(*SpectralWorkspace::domain(self))
    }

    fn poisson(&mut self, theta: &ScalarField) -> Result<ScalarField> {
        SpectralWorkspace::poisson(self, theta)
    }

    fn gradient(&mut self, f: &ScalarField) -> Result<VectorField> {
        SpectralWorkspace::gradient(self, f)
    }

    fn leray(&mut self, v: &VectorField) -> Result<VectorField> {
        self.leray_project(v)
    }

    fn inverse_laplacian_vector(&mut self, v: &VectorField) -> Result<VectorField> {
        SpectralWorkspace::inverse_laplacian_vector(self, v)
    }

    fn dealias_product(&mut self, v: VectorField) -> Result<VectorField> {
        self.dealias_vector(&v)
    }

    fn enstrophy(&mut self, u: &VectorField) -> Result<f64> {
        SpectralWorkspace::enstrophy(self, u)
    }

    fn gradient_sup(&mut self, u: &VectorField) -> Result<f64> {
        SpectralWorkspace::gradient_sup(self, u)
    }

    fn mix_norm(&mut self, theta: &ScalarField) -> Result<f64> {
        let phi = SpectralWorkspace::poisson(self, theta)?;
        let g = SpectralWorkspace::gradient(self, &phi)?;
        Ok((fields::energy(&g).max(0.0) / self.domain().area()).sqrt())
    }

    fn advance(
        &mut self,
        theta: &ScalarField,
        u: &VectorField,
        dt: f64,
        cfl: f64,
        cap: usize,
    ) -> Result<(ScalarField, usize)> {
        self.rk4_substeps(theta, u, dt, cfl, cap)
    }

    fn lambda1(&mut self) -> Result<f64> {
        Ok(SpectralWorkspace::domain(self).lambda1())
    }
}

impl Backend for FemBackend {
    fn domain(&self) -> Domain {
        Domain::Mesh(self.mesh().clone())
    }

    fn poisson(&mut self, theta: &ScalarField) -> Result<ScalarField> {
        self.solve_neumann(theta)
    }

    fn gradient(&mut self, f: &ScalarField) -> Result<VectorField> {
        FemBackend::gradient(self, f)
    }

    fn leray(&mut self, v: &VectorField) -> Result<VectorField> {
        self.leray_project(v)
    }

    fn inverse_laplacian_vector(&mut self, v: &VectorField) -> Result<VectorField> {
        FemBackend::inverse_laplacian_vector(self, v)
    }

    fn dealias_product(&mut self, v: VectorField) -> Result<VectorField> {
        Ok(v)
    }

    fn energy(&mut self, u: &VectorField) -> f64 {
        FemBackend::energy(self, u)
    }

    fn enstrophy(&mut self, u: &VectorField) -> Result<f64> {
        Ok(FemBackend::enstrophy(self, u))
    }

    fn gradient_sup(&mut self, u: &VectorField) -> Result<f64> {
        Ok(FemBackend::gradient_sup(self, u))
    }

    fn mix_norm(&mut self, theta: &ScalarField) -> Result<f64> {
        FemBackend::mix_norm(self, theta)
    }

    fn advance(
        &mut self,
        theta: &ScalarField,
        u: &VectorField,
        dt: f64,
        cfl: f64,
        cap: usize,
    ) -> Result<(ScalarField, usize)> {
        self.semi_lagrangian_step(theta, u, dt, cfl, cap)
    }

    fn lambda1(&mut self) -> Result<f64> {
        Ok(self.eigenpair()?.lambda_1)
    }
}
