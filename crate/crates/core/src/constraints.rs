//! Residual checkers for the Gauss and Codazzi equations, the integrated
//! curvature identity, and the balancing condition for conformal Killing
//! fields.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;
use thiserror::Error;

use crate::curvature::{vertex_normals, CurvatureField};
use crate::math::{compensated_sum, tangent_frame, CompensatedSum, Mat3, Vec3};
use crate::mesh::TriangleMesh;
use crate::uniformize::UniformizationResult;

/// Version of the serialized [`ConstraintReport`] layout.
pub const CONSTRAINT_SCHEMA_VERSION: u32 = 1;

/// Vertices whose normal makes more than this angle cosine with an incident
/// face normal are skipped by the Codazzi check.
pub const MIN_FRAME_ALIGNMENT: f64 = 0.2;

/// Largest accepted condition number of a per-vertex tangent map.
pub const MAX_TANGENT_MAP_CONDITION: f64 = 1e8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConstraintError {
    #[error("conformal Killing fields need a genus-0 mesh, got genus {0}")]
    NotGenusZero(i64),
    #[error("sphere map has {got} points, mesh has {expected} vertices")]
    MapSizeMismatch { expected: usize, got: usize },
    #[error("tangent map at vertex {vertex} is degenerate (condition number {condition:e})")]
    DegenerateTangentMap { vertex: usize, condition: f64 },
    #[error("ambient curvature must be finite")]
    NonFiniteKappa,
}

/// Constant sectional curvature of the ambient space form.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AmbientCurvature(f64);

impl AmbientCurvature {
    pub const EUCLIDEAN: AmbientCurvature = AmbientCurvature(0.0);

    pub fn new(kappa: f64) -> Result<Self, ConstraintError> {
        if kappa.is_finite() {
            Ok(AmbientCurvature(kappa))
        } else {
            Err(ConstraintError::NonFiniteKappa)
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// Per-vertex ambient vectors tangent to the surface.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TangentVectorField {
    pub name: String,
    pub vectors: Vec<Vec3>,
}

impl TangentVectorField {
    /// Largest `|<X, N>|` over the vertices.
    pub fn normal_leak(&self, normals: &[Vec3]) -> f64 {
        self.vectors.iter().zip(normals).map(|(x, n)| x.dot(*n).abs()).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Norms {
    /// Area-weighted root mean square `sqrt(sum_i A_i r_i^2 / sum_i A_i)`,
    /// in the units of the residual.
    pub l2: f64,
    pub linf: f64,
}

fn norms_of(values: impl Iterator<Item = f64> + Clone, areas: &[f64]) -> Norms {
    let total = compensated_sum(areas.iter().copied());
    let l2 = (compensated_sum(values.clone().zip(areas).map(|(r, a)| r * r * a)) / total).sqrt();
    let linf = values.map(f64::abs).fold(0.0, f64::max);
    Norms { l2, linf }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GaussResidual {
    pub per_vertex: Vec<f64>,
    pub norms: Norms,
}

/// `|A|^2 - H^2 + 2K - 2 kappa` per vertex.
pub fn gauss_residual(field: &CurvatureField, kappa: AmbientCurvature) -> GaussResidual {
    let per_vertex: Vec<f64> = (0..field.vertex_count())
        .map(|v| {
            let h = field.mean[v];
            field.shape_norm_sq(v) - h * h + 2.0 * field.gauss[v] - 2.0 * kappa.get()
        })
        .collect();
    let norms = norms_of(per_vertex.iter().copied(), &field.areas);
    GaussResidual { per_vertex, norms }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CodazziResidual {
    /// Area-normalized residual in the vertex frame.
    pub per_vertex: Vec<[f64; 2]>,
    /// Residual before division by the vertex area.
    pub raw: Vec<[f64; 2]>,
    pub norms: Norms,
    /// Vertices skipped because an incident face is nearly orthogonal to
    /// the vertex tangent plane.
    pub skipped: Vec<usize>,
}

/// Gradient of the hat function of corner `k` on face `f`.
pub(crate) fn hat_gradient(mesh: &TriangleMesh, f: usize, k: usize) -> Vec3 {
    let idx = mesh.face(f);
    let xj = mesh.position(idx[(k + 1) % 3]);
    let xk = mesh.position(idx[(k + 2) % 3]);
    let n = mesh.face_normal_unnormalized(f);
    // |n| = 2 * area, so n x e / |n|^2 = n_hat x e / (2 area)
    n.cross(xk - xj) / n.norm_squared()
}

/// Per-face ambient tensors from per-vertex ambient tensors: corner average
/// squeezed onto the face plane.
pub(crate) fn face_tensors(mesh: &TriangleMesh, vertex_tensors: &[Mat3]) -> Vec<Mat3> {
    (0..mesh.face_count())
        .map(|f| {
            let p = Mat3::tangent_projector(mesh.face_normal(f));
            let avg = mesh
                .face(f)
                .iter()
                .fold(Mat3::ZERO, |acc, &i| acc.add(&vertex_tensors[i]))
                .scale(1.0 / 3.0);
            p.mul_mat(&avg).mul_mat(&p)
        })
        .collect()
}

/// Weak divergence `(1/A_i) sum_f area_f T_f grad(phi_i)` of a per-vertex
/// ambient tensor field, projected on each vertex tangent frame.
pub fn weak_divergence(mesh: &TriangleMesh, field: &CurvatureField, vertex_tensors: &[Mat3]) -> CodazziResidual {
    let n = mesh.vertex_count();
    let tf = face_tensors(mesh, vertex_tensors);
    let mut acc = vec![[CompensatedSum::new(), CompensatedSum::new(), CompensatedSum::new()]; n];
    let mut misaligned = vec![false; n];
    for f in 0..mesh.face_count() {
        let area = mesh.face_area(f);
        let nf = mesh.face_normal(f);
        for (k, &i) in mesh.face(f).iter().enumerate() {
            if nf.dot(field.normals[i]) < MIN_FRAME_ALIGNMENT {
                misaligned[i] = true;
            }
            let w = tf[f].mul_vec(hat_gradient(mesh, f, k)) * area;
            for c in 0..3 {
                acc[i][c].add(w[c]);
            }
        }
    }
    let mut per_vertex = vec![[0.0; 2]; n];
    let mut raw = vec![[0.0; 2]; n];
    let mut skipped = Vec::new();
    for i in 0..n {
        if misaligned[i] {
            skipped.push(i);
            continue;
        }
        let v = Vec3::new(acc[i][0].value(), acc[i][1].value(), acc[i][2].value());
        let [e1, e2] = field.frames[i];
        raw[i] = [v.dot(e1), v.dot(e2)];
        per_vertex[i] = [raw[i][0] / field.areas[i], raw[i][1] / field.areas[i]];
    }
    let mags: Vec<f64> = per_vertex.iter().map(|r| (r[0] * r[0] + r[1] * r[1]).sqrt()).collect();
    let norms = norms_of(mags.iter().copied(), &field.areas);
    CodazziResidual { per_vertex, raw, norms, skipped }
}

/// Weak divergence of `A - H gamma`; vanishes for smooth surfaces in a space form.
pub fn codazzi_residual(mesh: &TriangleMesh, field: &CurvatureField) -> CodazziResidual {
    let tensors: Vec<Mat3> = (0..field.vertex_count())
        .map(|v| {
            field
                .shape_ambient(v)
                .add(&Mat3::tangent_projector(field.normals[v]).scale(-field.mean[v]))
        })
        .collect();
    weak_divergence(mesh, field, &tensors)
}

/// `int |A|^2 - (int H^2 - 4 pi chi + 2 kappa a)`.
pub fn integrated_identity(field: &CurvatureField, kappa: AmbientCurvature, chi: i64) -> f64 {
    let t = crate::curvature::total_norms(field);
    t.shape_sq - (t.mean_sq - 4.0 * core::f64::consts::PI * chi as f64 + 2.0 * kappa.get() * t.area)
}

/// `int <X, grad H>` with piecewise-linear `H`, face-averaged `X` and
/// face-area quadrature. `mean_override` replaces the estimated `H`.
pub fn balancing(
    mesh: &TriangleMesh,
    field: &CurvatureField,
    x: &TangentVectorField,
    mean_override: Option<&[f64]>,
) -> f64 {
    let h = mean_override.unwrap_or(&field.mean);
    let mut acc = CompensatedSum::new();
    for f in 0..mesh.face_count() {
        let idx = mesh.face(f);
        let xbar = (x.vectors[idx[0]] + x.vectors[idx[1]] + x.vectors[idx[2]]) / 3.0;
        let grad = (0..3).fold(Vec3::ZERO, |g, k| g + hat_gradient(mesh, f, k) * h[idx[k]]);
        acc.add(mesh.face_area(f) * xbar.dot(grad));
    }
    acc.value()
}

/// Discrete divergence of a vertex field, dual to the balancing quadrature:
/// `div_i = -(1/A_i) sum_f area_f <Xbar_f, grad(phi_i)>`, so that
/// `balancing = -sum_i A_i H_i div_i` exactly.
pub fn discrete_divergence(mesh: &TriangleMesh, areas: &[f64], x: &TangentVectorField) -> Vec<f64> {
    let mut acc = vec![CompensatedSum::new(); mesh.vertex_count()];
    for f in 0..mesh.face_count() {
        let idx = mesh.face(f);
        let xbar = (x.vectors[idx[0]] + x.vectors[idx[1]] + x.vectors[idx[2]]) / 3.0;
        let area = mesh.face_area(f);
        for k in 0..3 {
            acc[idx[k]].add(area * xbar.dot(hat_gradient(mesh, f, k)));
        }
    }
    acc.iter().zip(areas).map(|(s, a)| -s.value() / a).collect()
}

/// Names of the six conformal Killing fields, rotational then essential.
pub const KILLING_FIELD_NAMES: [&str; 6] = ["rot_x", "rot_y", "rot_z", "ess_x", "ess_y", "ess_z"];

/// Rotational (`v x p`) and essential (`v - <p,v> p`) conformal fields of the
/// unit sphere, pulled back through a vertex map onto the unit sphere.
///
/// The differential of the map at each vertex is the least-squares 2x2 map
/// between projected one-ring edges.
pub fn killing_fields_from_map(
    mesh: &TriangleMesh,
    sphere_map: &[Vec3],
) -> Result<Vec<TangentVectorField>, ConstraintError> {
    if mesh.genus() != 0 {
        return Err(ConstraintError::NotGenusZero(mesh.genus()));
    }
    if sphere_map.len() != mesh.vertex_count() {
        return Err(ConstraintError::MapSizeMismatch { expected: mesh.vertex_count(), got: sphere_map.len() });
    }
    let normals = vertex_normals(mesh);
    let mut fields: Vec<TangentVectorField> = KILLING_FIELD_NAMES
        .iter()
        .map(|name| TangentVectorField { name: (*name).into(), vectors: vec![Vec3::ZERO; mesh.vertex_count()] })
        .collect();
    for i in 0..mesh.vertex_count() {
        let (t1, t2) = tangent_frame(normals[i]);
        let p = sphere_map[i];
        let (s1, s2) = tangent_frame(p);
        // Least squares: r_j = M s_j, M = (sum r s^T)(sum s s^T)^{-1}.
        let (mut ss, mut rs) = ([[0.0; 2]; 2], [[0.0; 2]; 2]);
        for j in mesh.neighbors(i) {
            let e = mesh.position(j) - mesh.position(i);
            let d = sphere_map[j] - p;
            let s = [e.dot(t1), e.dot(t2)];
            let r = [d.dot(s1), d.dot(s2)];
            for a in 0..2 {
                for b in 0..2 {
                    ss[a][b] += s[a] * s[b];
                    rs[a][b] += r[a] * s[b];
                }
            }
        }
        let inv = inverse2(ss).ok_or(ConstraintError::DegenerateTangentMap { vertex: i, condition: f64::INFINITY })?;
        let m = mul2(rs, inv);
        let condition = condition2(m);
        if !(condition <= MAX_TANGENT_MAP_CONDITION) {
            return Err(ConstraintError::DegenerateTangentMap { vertex: i, condition });
        }
        let m_inv = inverse2(m).expect("condition number checked");
        for (c, field) in fields.iter_mut().enumerate() {
            let v = Vec3::axis(c % 3);
            let y = if c < 3 { v.cross(p) } else { v - p * p.dot(v) };
            let yc = [y.dot(s1), y.dot(s2)];
            let xc = [m_inv[0][0] * yc[0] + m_inv[0][1] * yc[1], m_inv[1][0] * yc[0] + m_inv[1][1] * yc[1]];
            field.vectors[i] = t1 * xc[0] + t2 * xc[1];
        }
    }
    Ok(fields)
}

/// [`killing_fields_from_map`] applied to the map of a uniformization.
pub fn conformal_killing_fields(
    uni: &UniformizationResult,
    mesh: &TriangleMesh,
) -> Result<Vec<TangentVectorField>, ConstraintError> {
    killing_fields_from_map(mesh, &uni.sphere_map)
}

fn inverse2(m: [[f64; 2]; 2]) -> Option<[[f64; 2]; 2]> {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let scale = m.iter().flatten().map(|x| x.abs()).fold(0.0, f64::max);
    if !(det.abs() > 1e-300 && det.abs() > f64::EPSILON * scale * scale) {
        return None;
    }
    Some([[m[1][1] / det, -m[0][1] / det], [-m[1][0] / det, m[0][0] / det]])
}

fn mul2(a: [[f64; 2]; 2], b: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    [
        [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
        [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
    ]
}

/// Ratio of singular values of a 2x2 matrix.
pub(crate) fn condition2(m: [[f64; 2]; 2]) -> f64 {
    let (smax, smin) = singular_values2(m);
    if smin > 0.0 {
        smax / smin
    } else {
        f64::INFINITY
    }
}

/// Singular values `(s_max, s_min)` of a 2x2 matrix.
pub(crate) fn singular_values2(m: [[f64; 2]; 2]) -> (f64, f64) {
    let (a, b, c, d) = (m[0][0], m[0][1], m[1][0], m[1][1]);
    // s_max +- s_min from the conformal and anticonformal parts
    let p = ((a + d) * (a + d) + (c - b) * (c - b)).sqrt();
    let q = ((a - d) * (a - d) + (c + b) * (c + b)).sqrt();
    (0.5 * (p + q), 0.5 * (p - q).abs())
}

/// Residuals and integrals of the constraint equations for one mesh.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConstraintReport {
    pub schema_version: u32,
    pub mesh_id: String,
    pub kappa: f64,
    pub bandwidth_factor: f64,
    pub euler_characteristic: i64,
    pub gauss: GaussResidual,
    pub codazzi: CodazziResidual,
    pub integrated_identity_gap: f64,
    pub shape_norm_sq: f64,
    /// Balancing value per named vector field, in input order. Serialized
    /// as an object keyed by field name.
    #[cfg_attr(feature = "serde", serde(with = "named_values"))]
    pub balancing: Vec<(String, f64)>,
}

#[cfg(feature = "serde")]
mod named_values {
    use alloc::string::String;
    use alloc::vec::Vec;
    use core::fmt;

    use serde::de::{MapAccess, Visitor};
    use serde::ser::SerializeMap;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(pairs: &[(String, f64)], s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(pairs.len()))?;
        for (k, v) in pairs {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }

    struct PairVisitor;

    impl<'de> Visitor<'de> for PairVisitor {
        type Value = Vec<(String, f64)>;

        fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            f.write_str("a map from field name to value")
        }

        fn visit_map<A: MapAccess<'de>>(self, mut access: A) -> Result<Self::Value, A::Error> {
            let mut out = Vec::new();
            while let Some(entry) = access.next_entry()? {
                out.push(entry);
            }
            Ok(out)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<(String, f64)>, D::Error> {
        d.deserialize_map(PairVisitor)
    }
}

/// Runs every checker on a mesh.
pub fn check_constraints(
    mesh_id: &str,
    mesh: &TriangleMesh,
    field: &CurvatureField,
    kappa: AmbientCurvature,
    fields: &[TangentVectorField],
) -> ConstraintReport {
    let chi = mesh.euler_characteristic();
    ConstraintReport {
        schema_version: CONSTRAINT_SCHEMA_VERSION,
        mesh_id: mesh_id.into(),
        kappa: kappa.get(),
        bandwidth_factor: field.bandwidth_factor,
        euler_characteristic: chi,
        gauss: gauss_residual(field, kappa),
        codazzi: codazzi_residual(mesh, field),
        integrated_identity_gap: integrated_identity(field, kappa, chi),
        shape_norm_sq: crate::curvature::total_norms(field).shape_sq,
        balancing: fields.iter().map(|x| (x.name.clone(), balancing(mesh, field, x, None))).collect(),
    }
}
