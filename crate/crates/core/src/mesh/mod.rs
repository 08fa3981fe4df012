//! Closed oriented triangle meshes with halfedge connectivity.
//!
//! Halfedge `h = 3 * f + k` runs from corner `k` of face `f` to corner
//! `(k + 1) % 3`, so `next` and `origin` are implicit and only the twin
//! table is stored. Faces are counterclockwise seen from outside; that
//! orientation defines the outward normal everywhere downstream.

mod generate;

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use thiserror::Error;

use crate::math::{angle_between, Vec3};

pub use generate::{
    generate_capsule, generate_ellipsoid, generate_icosphere, generate_torus, ring_stack,
    MAX_ICOSPHERE_LEVEL,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeshError {
    #[error("mesh has no faces")]
    Empty,
    #[error("face {face} references vertex {index}, but the mesh has {count} vertices")]
    IndexOutOfRange { face: usize, index: usize, count: usize },
    #[error("face {face} is degenerate")]
    DegenerateFace { face: usize },
    #[error("face {face} duplicates face {other}")]
    DuplicateFace { face: usize, other: usize },
    #[error("mesh has boundary edges (edge {a}-{b} of face {face} has no twin)")]
    BoundaryEdge { face: usize, a: usize, b: usize },
    #[error("inconsistent orientation: directed edge {a}->{b} appears in faces {face} and {other}")]
    InconsistentOrientation { face: usize, other: usize, a: usize, b: usize },
    #[error("vertex {vertex} is non-manifold")]
    NonManifoldVertex { vertex: usize },
    #[error("vertex {vertex} is not referenced by any face")]
    UnreferencedVertex { vertex: usize },
    #[error("vertex {vertex} has a non-finite position")]
    NonFinitePosition { vertex: usize },
    #[error("Euler characteristic {chi} is odd")]
    OddEulerCharacteristic { chi: i64 },
    #[error("mark index {index} out of range ({count} vertices)")]
    MarkOutOfRange { index: usize, count: usize },
    #[error("marks must be three distinct vertices")]
    MarksNotDistinct,
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
}

/// Closed, consistently oriented, manifold triangle mesh.
///
/// Immutable after construction; rescaling or moving vertices produces a new
/// mesh that reuses the connectivity.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    positions: Vec<Vec3>,
    faces: Vec<[u32; 3]>,
    twin: Vec<u32>,
    vertex_out: Vec<u32>,
    edge_count: usize,
    marks: Option<[usize; 3]>,
}

impl TriangleMesh {
    /// Builds and validates a mesh.
    pub fn new(positions: Vec<Vec3>, faces: Vec<[u32; 3]>) -> Result<Self, MeshError> {
        if faces.is_empty() {
            return Err(MeshError::Empty);
        }
        let n = positions.len();
        for (v, p) in positions.iter().enumerate() {
            if !p.is_finite() {
                return Err(MeshError::NonFinitePosition { vertex: v });
            }
        }
        for (f, tri) in faces.iter().enumerate() {
            for &i in tri {
                if i as usize >= n {
                    return Err(MeshError::IndexOutOfRange { face: f, index: i as usize, count: n });
                }
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(MeshError::DegenerateFace { face: f });
            }
            let [a, b, c] = tri.map(|i| positions[i as usize]);
            let cross = (b - a).cross(c - a).norm();
            let longest = (b - a).norm_squared().max((c - b).norm_squared()).max((a - c).norm_squared());
            if !(cross > f64::EPSILON * longest) {
                return Err(MeshError::DegenerateFace { face: f });
            }
        }

        let mut seen: BTreeMap<[u32; 3], usize> = BTreeMap::new();
        for (f, tri) in faces.iter().enumerate() {
            let mut key = *tri;
            key.sort_unstable();
            if let Some(&other) = seen.get(&key) {
                return Err(MeshError::DuplicateFace { face: f, other });
            }
            seen.insert(key, f);
        }

        let mut directed: BTreeMap<(u32, u32), u32> = BTreeMap::new();
        for (f, tri) in faces.iter().enumerate() {
            for k in 0..3 {
                let a = tri[k];
                let b = tri[(k + 1) % 3];
                let h = (3 * f + k) as u32;
                if let Some(&other) = directed.get(&(a, b)) {
                    return Err(MeshError::InconsistentOrientation {
                        face: f,
                        other: other as usize / 3,
                        a: a as usize,
                        b: b as usize,
                    });
                }
                directed.insert((a, b), h);
            }
        }
        let mut twin = vec![u32::MAX; 3 * faces.len()];
        for (&(a, b), &h) in &directed {
            match directed.get(&(b, a)) {
                Some(&t) => twin[h as usize] = t,
                None => {
                    return Err(MeshError::BoundaryEdge { face: h as usize / 3, a: a as usize, b: b as usize })
                }
            }
        }
        let edge_count = directed.len() / 2;

        let mut vertex_out = vec![u32::MAX; n];
        let mut incident = vec![0usize; n];
        for (f, tri) in faces.iter().enumerate() {
            for k in 0..3 {
                let v = tri[k] as usize;
                incident[v] += 1;
                if vertex_out[v] == u32::MAX {
                    vertex_out[v] = (3 * f + k) as u32;
                }
            }
        }
        let mesh = TriangleMesh { positions, faces, twin, vertex_out, edge_count, marks: None };
        for v in 0..n {
            if mesh.vertex_out[v] == u32::MAX {
                return Err(MeshError::UnreferencedVertex { vertex: v });
            }
            if mesh.outgoing(v).count() != incident[v] {
                return Err(MeshError::NonManifoldVertex { vertex: v });
            }
        }
        let chi = mesh.euler_characteristic();
        if chi.rem_euclid(2) != 0 {
            return Err(MeshError::OddEulerCharacteristic { chi });
        }
        Ok(mesh)
    }

    /// Returns a copy carrying the three marked vertex indices.
    pub fn with_marks(mut self, marks: [usize; 3]) -> Result<Self, MeshError> {
        for &m in &marks {
            if m >= self.vertex_count() {
                return Err(MeshError::MarkOutOfRange { index: m, count: self.vertex_count() });
            }
        }
        if marks[0] == marks[1] || marks[1] == marks[2] || marks[0] == marks[2] {
            return Err(MeshError::MarksNotDistinct);
        }
        self.marks = Some(marks);
        Ok(self)
    }

    /// Same connectivity and marks, new vertex positions.
    pub fn with_positions(&self, positions: Vec<Vec3>) -> Result<Self, MeshError> {
        if positions.len() != self.positions.len() {
            return Err(MeshError::InvalidParameter("position count must match vertex count"));
        }
        let mut out = TriangleMesh::new(positions, self.faces.clone())?;
        out.marks = self.marks;
        Ok(out)
    }

    pub fn positions(&self) -> &[Vec3] {
        &self.positions
    }

    pub fn position(&self, v: usize) -> Vec3 {
        self.positions[v]
    }

    pub fn faces(&self) -> &[[u32; 3]] {
        &self.faces
    }

    pub fn face(&self, f: usize) -> [usize; 3] {
        self.faces[f].map(|i| i as usize)
    }

    pub fn marks(&self) -> Option<[usize; 3]> {
        self.marks
    }

    pub fn vertex_count(&self) -> usize {
        self.positions.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn halfedge_count(&self) -> usize {
        self.twin.len()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.vertex_count() as i64 - self.edge_count as i64 + self.face_count() as i64
    }

    pub fn genus(&self) -> i64 {
        (2 - self.euler_characteristic()) / 2
    }

    #[inline]
    pub fn next(&self, h: usize) -> usize {
        3 * (h / 3) + (h % 3 + 1) % 3
    }

    #[inline]
    pub fn prev(&self, h: usize) -> usize {
        3 * (h / 3) + (h % 3 + 2) % 3
    }

    #[inline]
    pub fn twin(&self, h: usize) -> usize {
        self.twin[h] as usize
    }

    #[inline]
    pub fn origin(&self, h: usize) -> usize {
        self.faces[h / 3][h % 3] as usize
    }

    #[inline]
    pub fn target(&self, h: usize) -> usize {
        self.origin(self.next(h))
    }

    #[inline]
    pub fn halfedge_face(&self, h: usize) -> usize {
        h / 3
    }

    /// Outgoing halfedges of `v`, walking the fan around the vertex.
    pub fn outgoing(&self, v: usize) -> Outgoing<'_> {
        let start = self.vertex_out[v] as usize;
        Outgoing { mesh: self, start, current: Some(start) }
    }

    /// One-ring neighbours of `v` in fan order.
    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.outgoing(v).map(move |h| self.target(h))
    }

    pub fn face_normal_unnormalized(&self, f: usize) -> Vec3 {
        let [a, b, c] = self.face(f).map(|i| self.positions[i]);
        (b - a).cross(c - a)
    }

    pub fn face_area(&self, f: usize) -> f64 {
        0.5 * self.face_normal_unnormalized(f).norm()
    }

    pub fn face_normal(&self, f: usize) -> Vec3 {
        self.face_normal_unnormalized(f).normalized()
    }

    pub fn face_centroid(&self, f: usize) -> Vec3 {
        let [a, b, c] = self.face(f).map(|i| self.positions[i]);
        (a + b + c) / 3.0
    }

    pub fn total_area(&self) -> f64 {
        crate::math::compensated_sum((0..self.face_count()).map(|f| self.face_area(f)))
    }

    /// Signed enclosed volume; positive for outward orientation.
    pub fn signed_volume(&self) -> f64 {
        crate::math::compensated_sum((0..self.face_count()).map(|f| {
            let [a, b, c] = self.face(f).map(|i| self.positions[i]);
            a.dot(b.cross(c)) / 6.0
        }))
    }

    /// Interior angle of face `f` at its corner `k`.
    pub fn corner_angle(&self, f: usize, k: usize) -> f64 {
        let tri = self.face(f);
        let p = self.positions[tri[k]];
        let q = self.positions[tri[(k + 1) % 3]];
        let r = self.positions[tri[(k + 2) % 3]];
        angle_between(q - p, r - p)
    }

    /// Angle defect `2 pi - sum of incident corner angles` at each vertex.
    pub fn angle_defects(&self) -> Vec<f64> {
        let mut sums = vec![crate::math::CompensatedSum::new(); self.vertex_count()];
        for f in 0..self.face_count() {
            let tri = self.face(f);
            for k in 0..3 {
                sums[tri[k]].add(self.corner_angle(f, k));
            }
        }
        sums.iter().map(|s| 2.0 * PI - s.value()).collect()
    }

    pub fn quality(&self) -> MeshQuality {
        validate(self)
    }
}

/// Fan iterator over outgoing halfedges.
pub struct Outgoing<'a> {
    mesh: &'a TriangleMesh,
    start: usize,
    current: Option<usize>,
}

impl Iterator for Outgoing<'_> {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        let h = self.current?;
        let t = self.mesh.twin[self.mesh.prev(h)];
        let n = t as usize;
        self.current = if t == u32::MAX || n == self.start { None } else { Some(n) };
        Some(h)
    }
}

/// Summary geometry/topology figures of a triangle soup.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MeshQuality {
    pub vertices: usize,
    pub edges: usize,
    pub faces: usize,
    pub euler_characteristic: i64,
    pub genus: i64,
    pub min_face_area: f64,
    pub min_edge_length: f64,
    pub max_edge_length: f64,
    /// Smallest interior angle, radians.
    pub min_angle: f64,
    pub degenerate_faces: usize,
}

impl MeshQuality {
    /// Measures an arbitrary triangle soup; never fails.
    ///
    /// Faces with out-of-range indices are skipped. Genus is clamped at 0
    /// for soups whose Euler characteristic exceeds 2.
    pub fn of_soup(positions: &[Vec3], faces: &[[u32; 3]]) -> MeshQuality {
        let n = positions.len();
        let mut edges = alloc::collections::BTreeSet::new();
        let mut min_area = f64::INFINITY;
        let mut min_edge = f64::INFINITY;
        let mut max_edge = 0.0f64;
        let mut min_angle = f64::INFINITY;
        let mut degenerate = 0;
        let mut used = 0;
        for tri in faces {
            if tri.iter().any(|&i| i as usize >= n) {
                continue;
            }
            used += 1;
            let p = tri.map(|i| positions[i as usize]);
            let area = 0.5 * (p[1] - p[0]).cross(p[2] - p[0]).norm();
            min_area = min_area.min(area);
            if !(area > 0.0) || tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                degenerate += 1;
            }
            for k in 0..3 {
                let a = tri[k];
                let b = tri[(k + 1) % 3];
                edges.insert((a.min(b), a.max(b)));
                let len = (p[(k + 1) % 3] - p[k]).norm();
                min_edge = min_edge.min(len);
                max_edge = max_edge.max(len);
                let ang = angle_between(p[(k + 1) % 3] - p[k], p[(k + 2) % 3] - p[k]);
                min_angle = min_angle.min(ang);
            }
        }
        let chi = n as i64 - edges.len() as i64 + used as i64;
        MeshQuality {
            vertices: n,
            edges: edges.len(),
            faces: used,
            euler_characteristic: chi,
            genus: ((2 - chi) / 2).max(0),
            min_face_area: if used == 0 { 0.0 } else { min_area },
            min_edge_length: if used == 0 { 0.0 } else { min_edge },
            max_edge_length: max_edge,
            min_angle: if used == 0 { 0.0 } else { min_angle },
            degenerate_faces: degenerate,
        }
    }

    pub fn has_degenerate_faces(&self) -> bool {
        self.degenerate_faces > 0 || self.min_face_area == 0.0
    }
}

/// Quality record of a validated mesh.
pub fn validate(mesh: &TriangleMesh) -> MeshQuality {
    MeshQuality::of_soup(&mesh.positions, &mesh.faces)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tetra() -> (Vec<Vec3>, Vec<[u32; 3]>) {
        let p = vec![
            Vec3::new(1.0, 1.0, 1.0),
            Vec3::new(1.0, -1.0, -1.0),
            Vec3::new(-1.0, 1.0, -1.0),
            Vec3::new(-1.0, -1.0, 1.0),
        ];
        let f = vec![[0, 1, 2], [0, 2, 3], [0, 3, 1], [1, 3, 2]];
        (p, f)
    }

    #[test]
    fn tetrahedron_is_valid_and_outward() {
        let (p, f) = tetra();
        let m = TriangleMesh::new(p, f).unwrap();
        assert_eq!(m.euler_characteristic(), 2);
        assert_eq!(m.genus(), 0);
        assert!(m.signed_volume() > 0.0);
    }

    #[test]
    fn removed_face_reports_boundary() {
        let (p, mut f) = tetra();
        f.pop();
        let err = TriangleMesh::new(p, f).unwrap_err();
        assert!(matches!(err, MeshError::BoundaryEdge { .. }));
        assert!(alloc::format!("{err}").contains("mesh has boundary edges"));
    }

    #[test]
    fn flipped_face_reports_orientation() {
        let (p, mut f) = tetra();
        f[3] = [1, 2, 3];
        let err = TriangleMesh::new(p, f).unwrap_err();
        assert!(matches!(err, MeshError::InconsistentOrientation { .. }));
    }

    #[test]
    fn degenerate_and_duplicate_faces_rejected() {
        let (p, mut f) = tetra();
        f[0] = [0, 0, 2];
        assert_eq!(TriangleMesh::new(p.clone(), f).unwrap_err(), MeshError::DegenerateFace { face: 0 });
        let (_, mut f) = tetra();
        f.push([2, 0, 1]);
        assert!(matches!(TriangleMesh::new(p, f).unwrap_err(), MeshError::DuplicateFace { face: 4, other: 0 }));
    }

    #[test]
    fn collinear_face_is_degenerate() {
        let (mut p, f) = tetra();
        p[2] = (p[0] + p[1]) * 0.5;
        assert!(matches!(TriangleMesh::new(p, f).unwrap_err(), MeshError::DegenerateFace { .. }));
    }

    #[test]
    fn soup_quality_flags_zero_area() {
        let (mut p, f) = tetra();
        p[2] = (p[0] + p[1]) * 0.5;
        let q = MeshQuality::of_soup(&p, &f);
        assert_eq!(q.min_face_area, 0.0);
        assert!(q.has_degenerate_faces());
    }

    #[test]
    fn halfedge_roundtrips() {
        let m = generate_icosphere(2, 1.0).unwrap();
        for h in 0..m.halfedge_count() {
            assert_eq!(m.next(m.next(m.next(h))), h);
            assert_eq!(m.twin(m.twin(h)), h);
            assert_ne!(m.twin(h), h);
            assert_eq!(m.origin(m.twin(h)), m.target(h));
        }
        for v in 0..m.vertex_count() {
            for h in m.outgoing(v) {
                assert_eq!(m.origin(h), v);
            }
        }
    }

    #[test]
    fn marks_validated() {
        let m = generate_icosphere(0, 1.0).unwrap();
        assert!(m.clone().with_marks([0, 1, 12]).is_err());
        assert_eq!(m.clone().with_marks([0, 0, 1]).unwrap_err(), MeshError::MarksNotDistinct);
        assert_eq!(m.with_marks([0, 1, 2]).unwrap().marks(), Some([0, 1, 2]));
    }
}
