//! UV-sphere tessellation of a shape, integrity checks, and file export.

mod obj;
mod stl;

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};

use nalgebra::Vector3;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{GombocError, Result};
use crate::surface::ShapeSpec;

pub use obj::{read_obj, write_obj};
pub use stl::{read_stl_binary, write_stl, StlFacet, StlMode};

#[derive(Clone, Debug, Serialize)]
pub struct MeshProvenance {
    pub beta: f64,
    pub phase: String,
    pub scale_r0: f64,
    pub n_theta: usize,
    pub n_phi: usize,
}

impl MeshProvenance {
    /// `gomboc beta=<value> phase=<name> r0=<value> grid=<ntheta>x<nphi>`
    pub fn header(&self) -> String {
        format!(
            "gomboc beta={} phase={} r0={} grid={}x{}",
            self.beta, self.phase, self.scale_r0, self.n_theta, self.n_phi
        )
    }
}

/// Closed triangle mesh, counter-clockwise seen from outside.
#[derive(Clone, Debug)]
pub struct TriangleMesh {
    pub vertices: Vec<Vector3<f64>>,
    /// Exact unit surface normal at each vertex.
    pub normals: Vec<Vector3<f64>>,
    pub triangles: Vec<[u32; 3]>,
    pub provenance: MeshProvenance,
}

/// Vertex layout: north pole, then `n_theta - 1` rings of `n_phi` vertices in
/// theta-major order, then the south pole.
pub fn tessellate(shape: &ShapeSpec, n_theta: usize, n_phi: usize) -> Result<TriangleMesh> {
    if n_theta < 3 || n_phi < 3 {
        return Err(GombocError::InvalidGrid(format!(
            "tessellation needs n_theta >= 3 and n_phi >= 3, got {n_theta}x{n_phi}"
        )));
    }
    let rings = n_theta - 1;
    let vertex_count = 2 + rings * n_phi;
    if vertex_count > u32::MAX as usize {
        return Err(GombocError::InvalidGrid(format!(
            "{n_theta}x{n_phi} tessellation exceeds 32-bit vertex indices"
        )));
    }
    let r0 = shape.scale_r0();
    let dt = PI / n_theta as f64;
    let dp = TAU / n_phi as f64;

    let node = |theta: f64, phi: f64| (shape.point(theta, phi) * r0, shape.normal(theta, phi));
    let mut nodes = Vec::with_capacity(vertex_count);
    nodes.push(node(0.0, 0.0));
    let rings_nodes: Vec<_> = (1..n_theta)
        .into_par_iter()
        .flat_map_iter(|i| {
            let theta = i as f64 * dt;
            (0..n_phi).map(move |j| node(theta, j as f64 * dp))
        })
        .collect();
    nodes.extend(rings_nodes);
    nodes.push(node(PI, 0.0));
    let (vertices, normals) = nodes.into_iter().unzip();

    let north = 0u32;
    let south = (vertex_count - 1) as u32;
    let v = |i: usize, j: usize| (1 + i * n_phi + j % n_phi) as u32;

    let mut triangles = Vec::with_capacity(2 * n_phi * rings);
    for j in 0..n_phi {
        triangles.push([north, v(0, j), v(0, j + 1)]);
    }
    for i in 0..rings - 1 {
        for j in 0..n_phi {
            let (a, b, c, d) = (v(i, j), v(i + 1, j), v(i + 1, j + 1), v(i, j + 1));
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    for j in 0..n_phi {
        triangles.push([south, v(rings - 1, j + 1), v(rings - 1, j)]);
    }

    Ok(TriangleMesh {
        vertices,
        normals,
        triangles,
        provenance: MeshProvenance {
            beta: shape.beta(),
            phase: shape.phase().name(),
            scale_r0: r0,
            n_theta,
            n_phi,
        },
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct MeshIntegrity {
    pub watertight: bool,
    pub consistently_oriented: bool,
    pub outward: bool,
    pub min_area: f64,
    pub non_degenerate: bool,
}

impl MeshIntegrity {
    pub fn ok(&self) -> bool {
        self.watertight && self.consistently_oriented && self.outward && self.non_degenerate
    }
}

impl TriangleMesh {
    fn corners(&self, t: &[u32; 3]) -> [Vector3<f64>; 3] {
        t.map(|i| self.vertices[i as usize])
    }

    /// Unnormalized normal from the winding.
    pub fn face_normal(&self, t: &[u32; 3]) -> Vector3<f64> {
        let [a, b, c] = self.corners(t);
        (b - a).cross(&(c - a))
    }

    /// How many triangles use each undirected edge.
    pub fn edge_use_histogram(&self) -> HashMap<usize, usize> {
        let mut uses: HashMap<(u32, u32), usize> = HashMap::new();
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                *uses.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        let mut hist = HashMap::new();
        for n in uses.values() {
            *hist.entry(*n).or_default() += 1;
        }
        hist
    }

    pub fn is_watertight(&self) -> bool {
        let hist = self.edge_use_histogram();
        hist.len() == 1 && hist.contains_key(&2)
    }

    /// Every directed edge appears once, so neighbors agree on orientation.
    pub fn is_consistently_oriented(&self) -> bool {
        let mut seen = std::collections::HashSet::new();
        self.triangles
            .iter()
            .all(|t| (0..3).all(|k| seen.insert((t[k], t[(k + 1) % 3]))))
    }

    pub fn is_outward(&self) -> bool {
        self.triangles.iter().all(|t| {
            let [a, b, c] = self.corners(t);
            let centroid = (a + b + c) / 3.0;
            centroid.dot(&self.face_normal(t)) > 0.0
        })
    }

    pub fn min_triangle_area(&self) -> f64 {
        self.triangles
            .iter()
            .map(|t| 0.5 * self.face_normal(t).norm())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn integrity(&self) -> MeshIntegrity {
        let min_area = self.min_triangle_area();
        let r0 = self.provenance.scale_r0;
        MeshIntegrity {
            watertight: self.is_watertight(),
            consistently_oriented: self.is_consistently_oriented(),
            outward: self.is_outward(),
            min_area,
            non_degenerate: min_area > 1e-14 * r0 * r0,
        }
    }

    /// Enclosed volume by the divergence theorem.
    pub fn volume(&self) -> f64 {
        self.triangles
            .iter()
            .map(|t| {
                let [a, b, c] = self.corners(t);
                a.dot(&b.cross(&c)) / 6.0
            })
            .sum()
    }

    /// Largest distance by which any vertex sticks out past the tangent plane
    /// of another vertex.
    ///
    /// On a convex surface the tangent plane at a point supports the whole
    /// body, so a result at or below zero (up to rounding) certifies that every
    /// vertex is on the convex hull of the vertex set, with the tangent plane as
    /// witness. Quadratic in the vertex count.
    pub fn hull_violation(&self) -> f64 {
        self.normals
            .par_iter()
            .zip(self.vertices.par_iter())
            .map(|(n, v)| {
                let support = n.dot(v);
                self.vertices
                    .iter()
                    .map(|w| n.dot(w) - support)
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .reduce(|| f64::NEG_INFINITY, f64::max)
    }

    /// Every vertex lies on the convex hull within `tol`.
    pub fn vertices_on_hull(&self, tol: f64) -> bool {
        self.hull_violation() <= tol
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::Preset;
    use proptest::prelude::*;

    #[test]
    fn smallest_mesh_counts() {
        let m = tessellate(&Preset::G1.shape(0.15).unwrap(), 3, 4).unwrap();
        assert_eq!(m.triangles.len(), 16);
        assert_eq!(m.vertices.len(), 10);
        assert!(m.integrity().ok());
    }

    #[test]
    fn rejects_tiny_grids() {
        let s = Preset::G1.shape(0.15).unwrap();
        assert!(tessellate(&s, 2, 8).is_err());
        assert!(tessellate(&s, 8, 2).is_err());
    }

    #[test]
    fn sphere_volume() {
        let m = tessellate(&Preset::G1.shape(1e-12).unwrap(), 128, 256).unwrap();
        let exact = 4.0 * PI / 3.0;
        assert!((m.volume() - exact).abs() / exact < 1e-3);
    }

    #[test]
    fn scaling_is_exact() {
        let s = Preset::G2.shape(0.17).unwrap();
        let a = tessellate(&s, 16, 32).unwrap();
        let b = tessellate(&s.clone().with_scale(2.0).unwrap(), 16, 32).unwrap();
        for (p, q) in a.vertices.iter().zip(&b.vertices) {
            assert_eq!(*q, *p * 2.0);
        }
        assert!((b.volume() - 8.0 * a.volume()).abs() < 1e-12 * b.volume());
    }

    #[test]
    fn header_format() {
        let m = tessellate(&Preset::G1.shape(0.15).unwrap(), 8, 16).unwrap();
        assert_eq!(m.provenance.header(), "gomboc beta=0.15 phase=linear-wrap(5) r0=1 grid=8x16");
    }

    #[test]
    fn hull_check_detects_grooves() {
        let convex = tessellate(&Preset::G1.shape(0.02).unwrap(), 32, 64).unwrap();
        assert!(convex.vertices_on_hull(1e-9));
        let grooved = tessellate(&Preset::G1.shape(0.15).unwrap(), 32, 64).unwrap();
        assert!(grooved.hull_violation() > 1e-3);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn every_tessellation_is_closed(nt in 3usize..40, np in 3usize..60, beta in 0.001f64..0.24) {
            let m = tessellate(&Preset::G2.shape(beta).unwrap(), nt, np).unwrap();
            prop_assert_eq!(m.triangles.len(), 2 * np * (nt - 1));
            prop_assert_eq!(m.vertices.len(), 2 + (nt - 1) * np);
            prop_assert!(m.integrity().ok());
        }
    }
}
