//! Smallest nonzero Neumann eigenpair of a P1 discretisation.

use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::sparse::{assemble, conjugate_gradient, dot, SparseOperator};
use crate::error::{Error, Result};
use crate::fields::ScalarField;
use crate::mesh::MeshDomain;

/// Smallest nonzero eigenvalue and its mode.
#[derive(Clone, Debug)]
pub struct EigenPair {
    pub lambda_1: f64,
    /// Mode with unit normalised L2 norm and zero mean.
    pub mode: ScalarField,
    pub residual: f64,
    pub iterations: usize,
}

const BLOCK: usize = 4;
const MAX_ITER: usize = 300;

fn m_mean_free(ones_m: &[f64], total: f64, x: &mut [f64]) {
    let c = dot(ones_m, x) / total;
    x.iter_mut().for_each(|v| *v -= c);
}

/// Block inverse iteration on `K x = lambda M x` restricted to the
/// complement of constants, with Rayleigh-Ritz on each block so that
/// (nearly) repeated eigenvalues do not slow convergence.
pub fn smallest_nonzero_eigenvalue(mesh: &Arc<MeshDomain>) -> Result<EigenPair> {
    let (k, m) = assemble(mesh)?;
    eigen_from_operators(mesh, &k, &m, 1e-8)
}

pub(crate) fn eigen_from_operators(
    mesh: &Arc<MeshDomain>,
    k: &SparseOperator,
    m: &SparseOperator,
    tol: f64,
) -> Result<EigenPair> {
    let n = k.n();
    let p = BLOCK.min(n.saturating_sub(1)).max(1);
    let ones_m = m.mul(&vec![1.0; n]);
    let total: f64 = ones_m.iter().sum();
    let kdiag = k.diagonal();

    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut x: Vec<Vec<f64>> = (0..p)
        .map(|_| {
            let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            m_mean_free(&ones_m, total, &mut v);
            v
        })
        .collect();
    let mut y: Vec<Vec<f64>> = vec![vec![0.0; n]; p];
    let mut lambdas = vec![1.0; p];
    let mut residual = f64::INFINITY;

    for it in 0..MAX_ITER {
        for c in 0..p {
            let rhs = m.mul(&x[c]);
            // Warm start from the previous image scaled by the Ritz value.
            let mut sol: Vec<f64> = x[c].iter().map(|v| v / lambdas[c]).collect();
            conjugate_gradient(k, &kdiag, &rhs, &mut sol, 1e-12, 20 * n + 100, true)?;
            m_mean_free(&ones_m, total, &mut sol);
            y[c] = sol;
        }
        // Rayleigh-Ritz.
        let ky: Vec<Vec<f64>> = y.iter().map(|v| k.mul(v)).collect();
        let my: Vec<Vec<f64>> = y.iter().map(|v| m.mul(v)).collect();
        let a = DMatrix::from_fn(p, p, |i, j| dot(&y[i], &ky[j]));
        let b = DMatrix::from_fn(p, p, |i, j| dot(&y[i], &my[j]));
        let a = (&a + a.transpose()) * 0.5;
        let b = (&b + b.transpose()) * 0.5;
        let chol = b
            .cholesky()
            .ok_or(Error::EigenStagnation { iterations: it, residual })?;
        let l = chol.l();
        let linv = l
            .clone()
            .try_inverse()
            .ok_or(Error::EigenStagnation { iterations: it, residual })?;
        let c = &linv * &a * linv.transpose();
        let c = (&c + c.transpose()) * 0.5;
        let eig = SymmetricEigen::new(c);
        let mut order: Vec<usize> = (0..p).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let z = linv.transpose() * &eig.eigenvectors;
        for (slot, &col) in order.iter().enumerate() {
            lambdas[slot] = eig.eigenvalues[col];
            let mut v = vec![0.0; n];
            for (r, yr) in y.iter().enumerate() {
                let coef = z[(r, col)];
                for i in 0..n {
                    v[i] += coef * yr[i];
                }
            }
            x[slot] = v;
        }
        let kx = k.mul(&x[0]);
        let mx = m.mul(&x[0]);
        let lam = lambdas[0];
        let r: Vec<f64> = (0..n).map(|i| kx[i] - lam * mx[i]).collect();
        residual = dot(&r, &r).sqrt() / (lam.abs() * dot(&mx, &mx).sqrt());
        if residual <= tol {
            let area = mesh.area();
            let norm = (dot(&x[0], &mx) / area).sqrt();
            let mode = ScalarField::new(mesh.clone(), x[0].iter().map(|v| v / norm).collect())?;
            return Ok(EigenPair {
                lambda_1: lam,
                mode,
                residual,
                iterations: it + 1,
            });
        }
    }
    Err(Error::EigenStagnation {
        iterations: MAX_ITER,
        residual,
    })
}
