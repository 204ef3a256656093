//! Structured triangulations of the built-in domains, each of area 4.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{signed_area, MeshDomain};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeshShape {
    Square,
    Circle,
    #[serde(alias = "l-shape")]
    Lshape,
    Annulus,
}

impl MeshShape {
    pub fn name(self) -> &'static str {
        match self {
            MeshShape::Square => "square",
            MeshShape::Circle => "circle",
            MeshShape::Lshape => "lshape",
            MeshShape::Annulus => "annulus",
        }
    }
}

impl std::str::FromStr for MeshShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "square" | "square-mesh" => Ok(MeshShape::Square),
            "circle" | "disk" => Ok(MeshShape::Circle),
            "lshape" | "l-shape" => Ok(MeshShape::Lshape),
            "annulus" | "donut" => Ok(MeshShape::Annulus),
            other => Err(Error::param("shape", format!("unsupported mesh shape `{other}`"))),
        }
    }
}

/// Radius of the disk of area 4.
pub fn circle_radius() -> f64 {
    2.0 / PI.sqrt()
}

/// Inner and outer radii of the annulus of area 4.
pub fn annulus_radii() -> (f64, f64) {
    ((1.0 / PI).sqrt(), (5.0 / PI).sqrt())
}

/// Long and short side of the L-shaped domain.
pub fn lshape_sides() -> (f64, f64) {
    let a = 5f64.sqrt();
    (a, a - 1.0)
}

pub fn generate_mesh(shape: MeshShape, target_h: f64) -> Result<MeshDomain> {
    if !(target_h > 0.0 && target_h.is_finite()) {
        return Err(Error::param("target_h", "must be positive and finite"));
    }
    match shape {
        MeshShape::Square => square(target_h),
        MeshShape::Circle => circle(target_h),
        MeshShape::Lshape => lshape(target_h),
        MeshShape::Annulus => annulus(target_h),
    }
}

fn intervals(length: f64, h: f64) -> usize {
    ((length / h) - 1e-9).ceil().max(1.0) as usize
}

fn square(h: f64) -> Result<MeshDomain> {
    let n = intervals(2.0, h);
    let xs: Vec<f64> = (0..=n).map(|i| -1.0 + 2.0 * i as f64 / n as f64).collect();
    tensor_mesh(&xs, &xs, |_, _| true)
}

fn lshape(h: f64) -> Result<MeshDomain> {
    let (a, b) = lshape_sides();
    let n1 = intervals(b, h);
    let n2 = intervals(a - b, h);
    let mut xs: Vec<f64> = (0..=n1).map(|i| b * i as f64 / n1 as f64).collect();
    xs.extend((1..=n2).map(|i| b + (a - b) * i as f64 / n2 as f64));
    *xs.last_mut().unwrap() = a;
    tensor_mesh(&xs, &xs, |i, j| i < n1 || j < n1)
}

/// Triangulates the cells `(i, j)` of a tensor grid for which `keep` holds.
fn tensor_mesh<F: Fn(usize, usize) -> bool>(xs: &[f64], ys: &[f64], keep: F) -> Result<MeshDomain> {
    let (nx, ny) = (xs.len(), ys.len());
    let mut index = vec![usize::MAX; nx * ny];
    let mut vertices = Vec::new();
    let used = |i: usize, j: usize| -> bool {
        [(0, 0), (1, 0), (0, 1), (1, 1)].iter().any(|&(di, dj)| {
            let (ci, cj) = (i as isize - di, j as isize - dj);
            ci >= 0 && cj >= 0 && (ci as usize) < nx - 1 && (cj as usize) < ny - 1 && keep(ci as usize, cj as usize)
        })
    };
    for j in 0..ny {
        for i in 0..nx {
            if used(i, j) {
                index[j * nx + i] = vertices.len();
                vertices.push([xs[i], ys[j]]);
            }
        }
    }
    let mut triangles = Vec::new();
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            if !keep(i, j) {
                continue;
            }
            let v00 = index[j * nx + i];
            let v10 = index[j * nx + i + 1];
            let v01 = index[(j + 1) * nx + i];
            let v11 = index[(j + 1) * nx + i + 1];
            triangles.push([v00, v10, v11]);
            triangles.push([v00, v11, v01]);
        }
    }
    MeshDomain::new(vertices, triangles)
}

fn ring(r: f64, count: usize) -> Vec<[f64; 2]> {
    (0..count)
        .map(|k| {
            let a = 2.0 * PI * k as f64 / count as f64;
            [r * a.cos(), r * a.sin()]
        })
        .collect()
}

/// Connects two concentric rings (both starting at angle 0) by merging
/// their vertices in angular order.
fn stitch(inner: &[usize], outer: &[usize], pts: &[[f64; 2]], tris: &mut Vec<[usize; 3]>) {
    let (p, q) = (inner.len(), outer.len());
    let angle = |k: usize, n: usize| 2.0 * PI * k as f64 / n as f64;
    let (mut i, mut j) = (0, 0);
    while i < p || j < q {
        let advance_outer = if i == p {
            true
        } else if j == q {
            false
        } else {
            angle(j + 1, q) <= angle(i + 1, p)
        };
        let tri = if advance_outer {
            let t = [inner[i % p], outer[j % q], outer[(j + 1) % q]];
            j += 1;
            t
        } else {
            let t = [inner[i % p], outer[j % q], inner[(i + 1) % p]];
            i += 1;
            t
        };
        let mut t = tri;
        if signed_area(pts[t[0]], pts[t[1]], pts[t[2]]) < 0.0 {
            t.swap(1, 2);
        }
        tris.push(t);
    }
}

fn circle(h: f64) -> Result<MeshDomain> {
    let r = circle_radius();
    let nr = intervals(r, h);
    let mut vertices = vec![[0.0, 0.0]];
    let mut triangles = Vec::new();
    let mut prev: Vec<usize> = vec![0];
    for k in 1..=nr {
        let radius = if k == nr { r } else { r * k as f64 / nr as f64 };
        let pts = ring(radius, 6 * k);
        let start = vertices.len();
        vertices.extend(pts);
        let cur: Vec<usize> = (start..vertices.len()).collect();
        if k == 1 {
            for j in 0..cur.len() {
                triangles.push([0, cur[j], cur[(j + 1) % cur.len()]]);
            }
        } else {
            stitch(&prev, &cur, &vertices, &mut triangles);
        }
        prev = cur;
    }
    MeshDomain::new(vertices, triangles)
}

fn annulus(h: f64) -> Result<MeshDomain> {
    let (r1, r2) = annulus_radii();
    let nr = intervals(r2 - r1, h);
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    let mut prev: Vec<usize> = Vec::new();
    for k in 0..=nr {
        let radius = if k == nr { r2 } else { r1 + (r2 - r1) * k as f64 / nr as f64 };
        let count = ((2.0 * PI * radius / h).ceil() as usize).max(8);
        let start = vertices.len();
        vertices.extend(ring(radius, count));
        let cur: Vec<usize> = (start..vertices.len()).collect();
        if k > 0 {
            stitch(&prev, &cur, &vertices, &mut triangles);
        }
        prev = cur;
    }
    MeshDomain::new(vertices, triangles)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_counts() {
        let m = generate_mesh(MeshShape::Square, 0.25).unwrap();
        assert_eq!(m.n_vertices(), 81);
        assert_eq!(m.triangles().len(), 128);
        assert!((m.area() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn circle_boundary_on_exact_radius() {
        for h in [0.3, 0.1, 0.05] {
            let m = generate_mesh(MeshShape::Circle, h).unwrap();
            let r = circle_radius();
            let loops = m.boundary_loops().unwrap();
            assert_eq!(loops.len(), 1);
            for &v in &loops[0] {
                let p = m.vertices()[v];
                assert!((p[0].hypot(p[1]) - r).abs() < 1e-12);
            }
            for e in m.boundary_edges() {
                assert!(m.vertices()[e.a][0].hypot(m.vertices()[e.a][1]) > r - 1e-12);
            }
        }
        let m = generate_mesh(MeshShape::Circle, 2.0 / 128.0).unwrap();
        assert!((m.area() - 4.0).abs() < 0.02);
    }

    #[test]
    fn annulus_has_two_loops() {
        let m = generate_mesh(MeshShape::Annulus, 0.1).unwrap();
        assert_eq!(m.boundary_loops().unwrap().len(), 2);
        assert!((m.area() - 4.0).abs() < 0.02);
    }

    #[test]
    fn lshape_area_and_loop() {
        let m = generate_mesh(MeshShape::Lshape, 0.1).unwrap();
        assert!((m.area() - 4.0).abs() < 1e-12);
        assert_eq!(m.boundary_loops().unwrap().len(), 1);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(generate_mesh(MeshShape::Square, 0.0).is_err());
        assert!("hexagon".parse::<MeshShape>().is_err());
        assert_eq!("donut".parse::<MeshShape>().unwrap(), MeshShape::Annulus);
    }
}
