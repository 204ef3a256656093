//! Characteristic (semi-Lagrangian) advection of P1 fields.

use crate::error::{Error, Result};
use crate::mesh::{signed_area, MeshDomain};
use crate::par;

/// Uniform bin grid over the mesh bounding box for point location.
pub(crate) struct Locator {
    origin: [f64; 2],
    cell: f64,
    nbx: usize,
    nby: usize,
    bin_start: Vec<usize>,
    bin_tris: Vec<usize>,
    /// Triangle owning each boundary edge.
    edge_tri: Vec<usize>,
}

/// Barycentric coordinates of `p` in triangle `pts`.
fn barycentric(pts: [[f64; 2]; 3], p: [f64; 2]) -> [f64; 3] {
    let area = signed_area(pts[0], pts[1], pts[2]);
    [
        signed_area(p, pts[1], pts[2]) / area,
        signed_area(pts[0], p, pts[2]) / area,
        signed_area(pts[0], pts[1], p) / area,
    ]
}

fn clamp_weights(mut w: [f64; 3]) -> [f64; 3] {
    for v in &mut w {
        *v = v.max(0.0);
    }
    let s = w[0] + w[1] + w[2];
    [w[0] / s, w[1] / s, w[2] / s]
}

impl Locator {
    pub fn new(mesh: &MeshDomain) -> Self {
        let v = mesh.vertices();
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in v {
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        let ntri = mesh.triangles().len();
        let span = (hi[0] - lo[0]).max(hi[1] - lo[1]);
        let cell = (span / (ntri as f64).sqrt().max(1.0)).max(1e-12);
        let nbx = (((hi[0] - lo[0]) / cell).floor() as usize + 1).max(1);
        let nby = (((hi[1] - lo[1]) / cell).floor() as usize + 1).max(1);
        let mut lists = vec![Vec::new(); nbx * nby];
        let eps = 1e-12 * span.max(1.0);
        for t in 0..ntri {
            let pts = mesh.triangle_points(t);
            let xmin = pts.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min) - eps;
            let xmax = pts.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max) + eps;
            let ymin = pts.iter().map(|p| p[1]).fold(f64::INFINITY, f64::min) - eps;
            let ymax = pts.iter().map(|p| p[1]).fold(f64::NEG_INFINITY, f64::max) + eps;
            let bx = |x: f64| (((x - lo[0]) / cell).floor().max(0.0) as usize).min(nbx - 1);
            let by = |y: f64| (((y - lo[1]) / cell).floor().max(0.0) as usize).min(nby - 1);
            for j in by(ymin)..=by(ymax) {
                for i in bx(xmin)..=bx(xmax) {
                    lists[j * nbx + i].push(t);
                }
            }
        }
        let mut bin_start = Vec::with_capacity(lists.len() + 1);
        let mut bin_tris = Vec::new();
        bin_start.push(0);
        for l in lists {
            bin_tris.extend(l);
            bin_start.push(bin_tris.len());
        }
        let mut owner = std::collections::HashMap::new();
        for (t, tri) in mesh.triangles().iter().enumerate() {
            for k in 0..3 {
                owner.insert((tri[k], tri[(k + 1) % 3]), t);
            }
        }
        let edge_tri = mesh
            .boundary_edges()
            .iter()
            .map(|e| owner[&(e.a, e.b)])
            .collect();
        Locator {
            origin: lo,
            cell,
            nbx,
            nby,
            bin_start,
            bin_tris,
            edge_tri,
        }
    }

    /// Triangle containing `p` and the (clamped) barycentric weights.
    pub fn locate(&self, mesh: &MeshDomain, p: [f64; 2]) -> Option<(usize, [f64; 3])> {
        let fx = (p[0] - self.origin[0]) / self.cell;
        let fy = (p[1] - self.origin[1]) / self.cell;
        if !(fx >= 0.0 && fy >= 0.0) {
            return None;
        }
        let (i, j) = (fx as usize, fy as usize);
        if i >= self.nbx || j >= self.nby {
            return None;
        }
        let b = j * self.nbx + i;
        let mut best: Option<(usize, [f64; 3], f64)> = None;
        for &t in &self.bin_tris[self.bin_start[b]..self.bin_start[b + 1]] {
            let w = barycentric(mesh.triangle_points(t), p);
            let worst = w[0].min(w[1]).min(w[2]);
            if worst >= 0.0 {
                return Some((t, w));
            }
            if worst > -1e-10 && best.is_none_or(|(_, _, m)| worst > m) {
                best = Some((t, w, worst));
            }
        }
        best.map(|(t, w, _)| (t, clamp_weights(w)))
    }

    /// Closest point of the boundary to `p` with its owning triangle.
    pub fn project_to_boundary(&self, mesh: &MeshDomain, p: [f64; 2]) -> (usize, [f64; 2]) {
        let v = mesh.vertices();
        let mut best = (0, p, f64::INFINITY);
        for (k, e) in mesh.boundary_edges().iter().enumerate() {
            let (a, b) = (v[e.a], v[e.b]);
            let d = [b[0] - a[0], b[1] - a[1]];
            let len2 = d[0] * d[0] + d[1] * d[1];
            let s = (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0);
            let q = [a[0] + s * d[0], a[1] + s * d[1]];
            let dist = (q[0] - p[0]).hypot(q[1] - p[1]);
            if dist < best.2 {
                best = (k, q, dist);
            }
        }
        (self.edge_tri[best.0], best.1)
    }

    /// Locates `p`, moving it to the nearest boundary point when it lies
    /// outside the mesh. Returns the (possibly moved) point as well.
    pub fn locate_or_project(
        &self,
        mesh: &MeshDomain,
        p: [f64; 2],
    ) -> Result<(usize, [f64; 3], [f64; 2])> {
        if !(p[0].is_finite() && p[1].is_finite()) {
            return Err(Error::PointLocation { x: p[0], y: p[1] });
        }
        if let Some((t, w)) = self.locate(mesh, p) {
            return Ok((t, w, p));
        }
        let (t, q) = self.project_to_boundary(mesh, p);
        let w = barycentric(mesh.triangle_points(t), q);
        if w.iter().any(|&x| !x.is_finite() || x < -1e-8) {
            return Err(Error::PointLocation { x: p[0], y: p[1] });
        }
        Ok((t, clamp_weights(w), q))
    }
}

fn interpolate(mesh: &MeshDomain, f: &[f64], t: usize, w: [f64; 3]) -> f64 {
    let [a, b, c] = mesh.triangles()[t];
    w[0] * f[a] + w[1] * f[b] + w[2] * f[c]
}

/// Number of tracing substeps so that each moves at most `cfl` times the
/// shortest edge.
pub(crate) fn trace_substeps(h_min: f64, max_speed: f64, dt: f64, cfl: f64) -> usize {
    (dt.abs() * max_speed / (cfl * h_min)).ceil() as usize
}

/// Foot of a characteristic: containing triangle and barycentric weights.
pub(crate) type Foot = (usize, [f64; 3]);

/// Traces `X(x, -dt)` from every vertex through the frozen flow `(ux, uy)`
/// with `substeps` midpoint-rule steps; `dt < 0` traces downstream.
pub(crate) fn trace_feet(
    mesh: &MeshDomain,
    locator: &Locator,
    ux: &[f64],
    uy: &[f64],
    dt: f64,
    substeps: usize,
) -> Result<Vec<Foot>> {
    let h = dt / substeps.max(1) as f64;
    let velocity = |t: usize, w: [f64; 3]| [interpolate(mesh, ux, t, w), interpolate(mesh, uy, t, w)];
    let feet: Vec<Result<Foot>> = par::map_range(mesh.n_vertices(), |v| {
        let mut x = mesh.vertices()[v];
        let (mut t, mut w, _) = locator.locate_or_project(mesh, x)?;
        for _ in 0..substeps {
            let k1 = velocity(t, w);
            let mid = [x[0] - 0.5 * h * k1[0], x[1] - 0.5 * h * k1[1]];
            let (tm, wm, _) = locator.locate_or_project(mesh, mid)?;
            let k2 = velocity(tm, wm);
            let next = [x[0] - h * k2[0], x[1] - h * k2[1]];
            let (tn, wn, q) = locator.locate_or_project(mesh, next)?;
            x = q;
            t = tn;
            w = wn;
        }
        Ok((t, w))
    });
    feet.into_iter().collect()
}

/// Interpolates `f` at precomputed feet.
pub(crate) fn apply_feet(mesh: &MeshDomain, feet: &[Foot], f: &[f64]) -> Vec<f64> {
    par::map_range(feet.len(), |v| interpolate(mesh, f, feet[v].0, feet[v].1))
}

/// Back-and-forth error compensation: the upstream interpolation is
/// applied to `theta` corrected by half the round-trip error, then clamped
/// to the range of `theta` on the upstream triangle.
pub(crate) fn compensated(mesh: &MeshDomain, back: &[Foot], fwd: &[Foot], theta: &[f64]) -> Vec<f64> {
    let there = apply_feet(mesh, back, theta);
    let round_trip = apply_feet(mesh, fwd, &there);
    let corrected: Vec<f64> = (0..theta.len())
        .map(|i| theta[i] + 0.5 * (theta[i] - round_trip[i]))
        .collect();
    par::map_range(back.len(), |v| {
        let (t, w) = back[v];
        let tri = mesh.triangles()[t];
        let lo = tri.iter().map(|&k| theta[k]).fold(f64::INFINITY, f64::min);
        let hi = tri.iter().map(|&k| theta[k]).fold(f64::NEG_INFINITY, f64::max);
        interpolate(mesh, &corrected, t, w).clamp(lo, hi)
    })
}
