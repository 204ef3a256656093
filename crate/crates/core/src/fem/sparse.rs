//! Compressed-row operators, P1 assembly and conjugate gradients.

use crate::error::{Error, Result};
use crate::mesh::MeshDomain;
use crate::par;

/// Square sparse matrix in CSR layout.
#[derive(Clone, Debug)]
pub struct SparseOperator {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    symmetric: bool,
}

impl SparseOperator {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let row = &self.cols[self.row_ptr[i]..self.row_ptr[i + 1]];
        match row.binary_search(&j) {
            Ok(k) => self.vals[self.row_ptr[i] + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// `y = A x`.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        par::fill(y, |i| {
            let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
            let mut s = 0.0;
            for k in lo..hi {
                s += self.vals[k] * x[self.cols[k]];
            }
            s
        });
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.apply(x, &mut y);
        y
    }

    /// `x^T A y`.
    pub fn form(&self, x: &[f64], y: &[f64]) -> f64 {
        par::sum_range(self.n, |i| {
            let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
            let mut s = 0.0;
            for k in lo..hi {
                s += self.vals[k] * y[self.cols[k]];
            }
            x[i] * s
        })
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.vals[self.row_ptr[i]..self.row_ptr[i + 1]].iter().sum())
            .collect()
    }
}

/// Gradients of the three barycentric coordinates and the area of a triangle.
pub(crate) fn p1_gradients(p: [[f64; 2]; 3]) -> ([[f64; 2]; 3], f64) {
    let area = crate::mesh::signed_area(p[0], p[1], p[2]);
    let inv = 1.0 / (2.0 * area);
    let mut g = [[0.0; 2]; 3];
    for i in 0..3 {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        g[i] = [(p[j][1] - p[k][1]) * inv, (p[k][0] - p[j][0]) * inv];
    }
    (g, area)
}

/// Triangles incident to each vertex.
fn vertex_triangles(mesh: &MeshDomain) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); mesh.n_vertices()];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        for &v in tri {
            adj[v].push(t);
        }
    }
    adj
}

/// Standard P1 stiffness `K` and consistent mass `M`.
///
/// Each row is accumulated independently from the triangles touching its
/// vertex, so rows can be built in parallel with a fixed summation order.
pub fn assemble(mesh: &MeshDomain) -> Result<(SparseOperator, SparseOperator)> {
    let tris = mesh.triangles();
    for t in 0..tris.len() {
        let area = mesh.triangle_area(t);
        if area < 1e-14 {
            return Err(Error::DegenerateTriangle { index: t, area });
        }
    }
    let adj = vertex_triangles(mesh);
    let n = mesh.n_vertices();

    let rows: Vec<(Vec<usize>, Vec<f64>, Vec<f64>)> = par::map_range(n, |i| {
        let mut entries: Vec<(usize, f64, f64)> = Vec::with_capacity(3 * adj[i].len());
        for &t in &adj[i] {
            let tri = tris[t];
            let (g, area) = p1_gradients(mesh.triangle_points(t));
            let li = tri.iter().position(|&v| v == i).expect("incident triangle");
            for (lj, &j) in tri.iter().enumerate() {
                let k = area * (g[li][0] * g[lj][0] + g[li][1] * g[lj][1]);
                let m = area / 12.0 * if li == lj { 2.0 } else { 1.0 };
                entries.push((j, k, m));
            }
        }
        entries.sort_by_key(|e| e.0);
        let mut cols = Vec::new();
        let mut kv = Vec::new();
        let mut mv: Vec<f64> = Vec::new();
        for (j, k, m) in entries {
            if cols.last() == Some(&j) {
                *kv.last_mut().unwrap() += k;
                *mv.last_mut().unwrap() += m;
            } else {
                cols.push(j);
                kv.push(k);
                mv.push(m);
            }
        }
        (cols, kv, mv)
    });

    let mut row_ptr = Vec::with_capacity(n + 1);
    row_ptr.push(0);
    let mut cols = Vec::new();
    let mut kv = Vec::new();
    let mut mv = Vec::new();
    for (c, k, m) in rows {
        cols.extend_from_slice(&c);
        kv.extend_from_slice(&k);
        mv.extend_from_slice(&m);
        row_ptr.push(cols.len());
    }
    let k = SparseOperator {
        n,
        row_ptr: row_ptr.clone(),
        cols: cols.clone(),
        vals: kv,
        symmetric: true,
    };
    let m = SparseOperator {
        n,
        row_ptr,
        cols,
        vals: mv,
        symmetric: true,
    };
    Ok((k, m))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    par::sum_range(a.len(), |i| a[i] * b[i])
}

fn remove_mean(x: &mut [f64]) {
    let m = par::sum_range(x.len(), |i| x[i]) / x.len() as f64;
    x.iter_mut().for_each(|v| *v -= m);
}

/// Outcome of a CG solve.
#[derive(Clone, Copy, Debug)]
pub struct CgReport {
    pub iterations: usize,
    pub residual: f64,
}

/// Jacobi-preconditioned conjugate gradients for `A x = b`, starting from
/// the contents of `x`.
///
/// With `deflate` the constant vector is projected out of the right-hand
/// side, the preconditioned residual and the iterate, which keeps a
/// symmetric positive semidefinite `A` with constant null space definite on
/// the working subspace.
pub fn conjugate_gradient(
    a: &SparseOperator,
    diag: &[f64],
    b: &[f64],
    x: &mut [f64],
    tol: f64,
    max_iter: usize,
    deflate: bool,
) -> Result<CgReport> {
    let n = a.n();
    let mut rhs = b.to_vec();
    if deflate {
        remove_mean(&mut rhs);
        remove_mean(x);
    }
    let bnorm = dot(&rhs, &rhs).sqrt();
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(CgReport { iterations: 0, residual: 0.0 });
    }
    let mut r = vec![0.0; n];
    a.apply(x, &mut r);
    r.iter_mut().zip(&rhs).for_each(|(ri, bi)| *ri = bi - *ri);
    if deflate {
        remove_mean(&mut r);
    }
    let precondition = |r: &[f64], z: &mut [f64]| {
        par::fill(z, |i| r[i] / diag[i]);
        if deflate {
            remove_mean(z);
        }
    };
    let mut z = vec![0.0; n];
    precondition(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut q = vec![0.0; n];
    let mut res = dot(&r, &r).sqrt() / bnorm;
    for it in 0..max_iter {
        if res <= tol {
            return Ok(CgReport { iterations: it, residual: res });
        }
        a.apply(&p, &mut q);
        let pq = dot(&p, &q);
        if pq <= 0.0 {
            break;
        }
        let alpha = rz / pq;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        if deflate {
            remove_mean(&mut r);
        }
        precondition(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        res = dot(&r, &r).sqrt() / bnorm;
    }
    // Recompute the true residual before giving up.
    a.apply(x, &mut q);
    let mut true_r: Vec<f64> = (0..n).map(|i| rhs[i] - q[i]).collect();
    if deflate {
        remove_mean(&mut true_r);
    }
    let res = dot(&true_r, &true_r).sqrt() / bnorm;
    if res <= tol {
        return Ok(CgReport { iterations: max_iter, residual: res });
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual: res,
    })
}
