//! Triangulated 2-D domains.

use std::collections::HashMap;

use crate::error::{Error, Result};

/// A boundary edge oriented with the domain on its left.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryEdge {
    pub a: usize,
    pub b: usize,
    /// Outward unit normal.
    pub normal: [f64; 2],
    pub length: f64,
}

/// Conforming P1 triangulation with tagged boundary.
#[derive(Clone, Debug, PartialEq)]
pub struct MeshDomain {
    vertices: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    boundary_edges: Vec<BoundaryEdge>,
    area: f64,
}

pub(crate) fn signed_area(p: [f64; 2], q: [f64; 2], r: [f64; 2]) -> f64 {
    0.5 * ((q[0] - p[0]) * (r[1] - p[1]) - (r[0] - p[0]) * (q[1] - p[1]))
}

impl MeshDomain {
    /// Builds a mesh and derives the boundary from the triangle topology.
    pub fn new(vertices: Vec<[f64; 2]>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        let edges = Self::topology(&vertices, &triangles)?;
        let mut boundary: Vec<[usize; 2]> = edges
            .iter()
            .filter(|(_, &count)| count == 1)
            .map(|(&(a, b), _)| [a, b])
            .collect();
        boundary.sort_unstable();
        Self::assemble_parts(vertices, triangles, &boundary)
    }

    /// Builds a mesh with an explicit boundary edge list, which must match
    /// the edges used by exactly one triangle.
    pub fn with_boundary(
        vertices: Vec<[f64; 2]>,
        triangles: Vec<[usize; 3]>,
        boundary: &[[usize; 2]],
    ) -> Result<Self> {
        let edges = Self::topology(&vertices, &triangles)?;
        let mut expected: Vec<[usize; 2]> = edges
            .iter()
            .filter(|(_, &c)| c == 1)
            .map(|(&(a, b), _)| [a, b])
            .collect();
        expected.sort_unstable();
        let mut given = boundary.to_vec();
        given.sort_unstable();
        if given != expected {
            return Err(Error::InvalidDomain(
                "boundary edge list does not match the triangulation".into(),
            ));
        }
        Self::assemble_parts(vertices, triangles, boundary)
    }

    /// Directed edge use counts; fails on non-conforming or inverted input.
    fn topology(
        vertices: &[[f64; 2]],
        triangles: &[[usize; 3]],
    ) -> Result<HashMap<(usize, usize), usize>> {
        if vertices.is_empty() || triangles.is_empty() {
            return Err(Error::InvalidDomain("mesh has no vertices or triangles".into()));
        }
        let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::InvalidDomain(format!(
                    "triangle {t} references a missing vertex"
                )));
            }
            let area = signed_area(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
            if area < 0.0 {
                return Err(Error::InvalidDomain(format!(
                    "triangle {t} is negatively oriented"
                )));
            }
            for k in 0..3 {
                let e = (tri[k], tri[(k + 1) % 3]);
                let c = directed.entry(e).or_insert(0);
                *c += 1;
                if *c > 1 {
                    return Err(Error::InvalidDomain(format!(
                        "edge {e:?} is used twice with the same orientation"
                    )));
                }
            }
        }
        // An interior edge appears once in each direction; a boundary edge once.
        let mut counts = HashMap::with_capacity(directed.len());
        for &(a, b) in directed.keys() {
            let twin = directed.contains_key(&(b, a));
            counts.insert((a, b), if twin { 2 } else { 1 });
        }
        Ok(counts)
    }

    fn assemble_parts(
        vertices: Vec<[f64; 2]>,
        triangles: Vec<[usize; 3]>,
        boundary: &[[usize; 2]],
    ) -> Result<Self> {
        let boundary_edges = boundary
            .iter()
            .map(|&[a, b]| {
                let (p, q) = (vertices[a], vertices[b]);
                let (dx, dy) = (q[0] - p[0], q[1] - p[1]);
                let length = dx.hypot(dy);
                BoundaryEdge {
                    a,
                    b,
                    normal: [dy / length, -dx / length],
                    length,
                }
            })
            .collect();
        let area = triangles
            .iter()
            .map(|t| signed_area(vertices[t[0]], vertices[t[1]], vertices[t[2]]))
            .sum();
        let mesh = MeshDomain {
            vertices,
            triangles,
            boundary_edges,
            area,
        };
        mesh.boundary_loops()?;
        Ok(mesh)
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary_edges
    }

    pub fn area(&self) -> f64 {
        self.area
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        signed_area(self.vertices[a], self.vertices[b], self.vertices[c])
    }

    pub fn triangle_points(&self, t: usize) -> [[f64; 2]; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    /// Closed boundary loops as vertex sequences.
    pub fn boundary_loops(&self) -> Result<Vec<Vec<usize>>> {
        let mut next: HashMap<usize, usize> = HashMap::new();
        for e in &self.boundary_edges {
            if next.insert(e.a, e.b).is_some() {
                return Err(Error::InvalidDomain(format!(
                    "boundary vertex {} has two outgoing edges",
                    e.a
                )));
            }
        }
        let mut starts: Vec<usize> = next.keys().copied().collect();
        starts.sort_unstable();
        let mut seen = std::collections::HashSet::new();
        let mut loops = Vec::new();
        for s in starts {
            if seen.contains(&s) {
                continue;
            }
            let mut lp = vec![s];
            seen.insert(s);
            let mut v = s;
            loop {
                let Some(&n) = next.get(&v) else {
                    return Err(Error::InvalidDomain(format!(
                        "boundary is open at vertex {v}"
                    )));
                };
                if n == s {
                    break;
                }
                if !seen.insert(n) {
                    return Err(Error::InvalidDomain("boundary loops intersect".into()));
                }
                lp.push(n);
                v = n;
            }
            loops.push(lp);
        }
        Ok(loops)
    }

    /// Shortest edge over all triangles.
    pub fn min_edge_length(&self) -> f64 {
        self.edge_lengths().fold(f64::INFINITY, f64::min)
    }

    pub fn max_edge_length(&self) -> f64 {
        self.edge_lengths().fold(0.0, f64::max)
    }

    fn edge_lengths(&self) -> impl Iterator<Item = f64> + '_ {
        self.triangles.iter().flat_map(move |t| {
            (0..3).map(move |k| {
                let p = self.vertices[t[k]];
                let q = self.vertices[t[(k + 1) % 3]];
                (q[0] - p[0]).hypot(q[1] - p[1])
            })
        })
    }

    /// Flags for vertices lying on the boundary.
    pub fn boundary_vertex_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.vertices.len()];
        for e in &self.boundary_edges {
            mask[e.a] = true;
            mask[e.b] = true;
        }
        mask
    }
}
