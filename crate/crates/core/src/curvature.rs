//! Per-vertex curvature estimation, integral norms and rescaling.
//!
//! * normal `N`: algebraic sphere fit through the vertex and its one-ring,
//!   oriented by the area-weighted face normal (exact on spheres and planes);
//! * mean curvature `H = k1 + k2`: cotangent-Laplacian mean-curvature vector
//!   projected on `N` (unit sphere: `H = 2`);
//! * Gauss curvature `K`: angle defect over the mixed Voronoi area;
//! * shape operator `A`: weighted least-squares quadric fit over the two-ring
//!   in the vertex tangent frame, Gaussian weights on edge-path distance with
//!   bandwidth `1.5 x` the mean one-ring edge length.
//!
//! `H` and `trace(A)` come from different estimators; their agreement is a
//! diagnostic ([`trace_consistency`]), not a constraint.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;
use thiserror::Error;

use crate::math::{compensated_sum, dense_solve, sym3_eigen, tangent_frame, Mat3, Sym2, Vec3};
use crate::mesh::{MeshError, TriangleMesh};
use crate::sparse::CsrMatrix;

/// Bandwidth of the quadric-fit weights, in units of the mean one-ring edge length.
pub const FIT_BANDWIDTH_FACTOR: f64 = 1.5;

/// Minimum two-ring size accepted by the quadric fit.
pub const MIN_FIT_NEIGHBORS: usize = 6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CurvatureError {
    #[error("vertex {vertex}: two-ring has {count} vertices, quadric fit needs at least 6")]
    RingTooSmall { vertex: usize, count: usize },
    #[error("vertex {vertex}: quadric fit is singular")]
    SingularFit { vertex: usize },
    #[error("vertex {vertex} has zero mixed area")]
    ZeroArea { vertex: usize },
    #[error("scale factor must be positive and finite, got {0}")]
    InvalidScale(f64),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

/// Multiplier applied to vertex positions.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScaleFactor(f64);

impl ScaleFactor {
    pub fn new(lambda: f64) -> Result<Self, CurvatureError> {
        if lambda > 0.0 && lambda.is_finite() {
            Ok(ScaleFactor(lambda))
        } else {
            Err(CurvatureError::InvalidScale(lambda))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// Per-vertex first- and second-fundamental-form estimates.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CurvatureField {
    pub normals: Vec<Vec3>,
    /// `H = k1 + k2`, cotangent estimator.
    pub mean: Vec<f64>,
    pub gauss: Vec<f64>,
    /// Shape operator in the frame `frames[v]`.
    pub shape: Vec<Sym2>,
    pub frames: Vec<[Vec3; 2]>,
    /// Mixed Voronoi areas.
    pub areas: Vec<f64>,
    pub bandwidth_factor: f64,
}

impl CurvatureField {
    pub fn vertex_count(&self) -> usize {
        self.mean.len()
    }

    /// Principal curvatures `(k1, k2)`, `k1 >= k2`.
    pub fn principal(&self, v: usize) -> (f64, f64) {
        self.shape[v].eigenvalues()
    }

    /// `|A|^2 = k1^2 + k2^2`.
    pub fn shape_norm_sq(&self, v: usize) -> f64 {
        self.shape[v].norm_squared()
    }

    /// Operator norm `max(|k1|, |k2|)`.
    pub fn shape_op_norm(&self, v: usize) -> f64 {
        let (k1, k2) = self.principal(v);
        k1.abs().max(k2.abs())
    }

    /// Shape operator as an ambient 3x3 tensor supported on the tangent plane.
    pub fn shape_ambient(&self, v: usize) -> Mat3 {
        sym2_to_ambient(&self.shape[v], self.frames[v])
    }

    /// Copy with an injected mean-curvature field.
    pub fn with_mean(&self, mean: Vec<f64>) -> CurvatureField {
        assert_eq!(mean.len(), self.vertex_count());
        CurvatureField { mean, ..self.clone() }
    }

    /// Copy with an injected shape-operator field.
    pub fn with_shape(&self, shape: Vec<Sym2>) -> CurvatureField {
        assert_eq!(shape.len(), self.vertex_count());
        CurvatureField { shape, ..self.clone() }
    }

    pub fn total_area(&self) -> f64 {
        compensated_sum(self.areas.iter().copied())
    }
}

pub(crate) fn sym2_to_ambient(s: &Sym2, [e1, e2]: [Vec3; 2]) -> Mat3 {
    Mat3::outer(e1, e1)
        .scale(s.a)
        .add(&Mat3::outer(e1, e2).add(&Mat3::outer(e2, e1)).scale(s.b))
        .add(&Mat3::outer(e2, e2).scale(s.c))
}

/// Cotangent of the interior angle at each corner, indexed like halfedges
/// (`3 * f + k` is corner `k` of face `f`).
pub fn corner_cotangents(mesh: &TriangleMesh) -> Vec<f64> {
    let mut cots = Vec::with_capacity(3 * mesh.face_count());
    for f in 0..mesh.face_count() {
        let tri = mesh.face(f).map(|i| mesh.position(i));
        for k in 0..3 {
            let u = tri[(k + 1) % 3] - tri[k];
            let w = tri[(k + 2) % 3] - tri[k];
            cots.push(u.dot(w) / u.cross(w).norm());
        }
    }
    cots
}

/// Mixed Voronoi vertex areas with obtuse-triangle clamping.
pub fn mixed_areas(mesh: &TriangleMesh) -> Vec<f64> {
    let cots = corner_cotangents(mesh);
    let mut acc = vec![crate::math::CompensatedSum::new(); mesh.vertex_count()];
    for f in 0..mesh.face_count() {
        let idx = mesh.face(f);
        let p = idx.map(|i| mesh.position(i));
        let area = mesh.face_area(f);
        let obtuse = (0..3).find(|&k| (p[(k + 1) % 3] - p[k]).dot(p[(k + 2) % 3] - p[k]) < 0.0);
        for k in 0..3 {
            let contrib = match obtuse {
                None => {
                    let q = (k + 1) % 3;
                    let r = (k + 2) % 3;
                    // |PR|^2 cot Q + |PQ|^2 cot R
                    ((p[r] - p[k]).norm_squared() * cots[3 * f + q]
                        + (p[q] - p[k]).norm_squared() * cots[3 * f + r])
                        / 8.0
                }
                Some(o) if o == k => area / 2.0,
                Some(_) => area / 4.0,
            };
            acc[idx[k]].add(contrib);
        }
    }
    acc.iter().map(|a| a.value()).collect()
}

/// Barycentric (one third of incident face area) vertex areas.
pub fn barycentric_areas(mesh: &TriangleMesh) -> Vec<f64> {
    let mut acc = vec![crate::math::CompensatedSum::new(); mesh.vertex_count()];
    for f in 0..mesh.face_count() {
        let a = mesh.face_area(f) / 3.0;
        for i in mesh.face(f) {
            acc[i].add(a);
        }
    }
    acc.iter().map(|a| a.value()).collect()
}

/// Cotangent Laplacian `(L u)_i = sum_j w_ij (u_j - u_i)`,
/// `w_ij = (cot a + cot b) / 2`; negative semidefinite.
pub fn cotangent_laplacian(mesh: &TriangleMesh) -> CsrMatrix {
    let cots = corner_cotangents(mesh);
    let mut t = Vec::with_capacity(12 * mesh.face_count());
    for f in 0..mesh.face_count() {
        let idx = mesh.face(f);
        for k in 0..3 {
            let i = idx[(k + 1) % 3];
            let j = idx[(k + 2) % 3];
            let w = 0.5 * cots[3 * f + k];
            t.push((i, j, w));
            t.push((j, i, w));
            t.push((i, i, -w));
            t.push((j, j, -w));
        }
    }
    CsrMatrix::from_triplets(mesh.vertex_count(), t)
}

/// Mean-curvature vectors `H N = -(L x)_i / A_i`.
pub fn mean_curvature_vectors(mesh: &TriangleMesh, areas: &[f64]) -> Vec<Vec3> {
    let lap = cotangent_laplacian(mesh);
    let mut out = vec![Vec3::ZERO; mesh.vertex_count()];
    for (i, o) in out.iter_mut().enumerate() {
        let xi = mesh.position(i);
        let mut s = Vec3::ZERO;
        for (j, w) in lap.row(i) {
            if j != i {
                s += (mesh.position(j) - xi) * w;
            }
        }
        *o = -s / areas[i];
    }
    out
}

/// Area-weighted vertex normals.
pub fn area_weighted_normals(mesh: &TriangleMesh) -> Vec<Vec3> {
    let mut n = vec![Vec3::ZERO; mesh.vertex_count()];
    for f in 0..mesh.face_count() {
        let fn_ = mesh.face_normal_unnormalized(f);
        for i in mesh.face(f) {
            n[i] += fn_;
        }
    }
    n.into_iter().map(Vec3::normalized).collect()
}

/// Vertex normals from an algebraic sphere fit through each vertex and its
/// one-ring. Falls back to the area-weighted normal if the fit direction
/// deviates from it by more than 60 degrees.
pub fn vertex_normals(mesh: &TriangleMesh) -> Vec<Vec3> {
    let coarse = area_weighted_normals(mesh);
    (0..mesh.vertex_count())
        .map(|i| {
            let xi = mesh.position(i);
            let nbrs: Vec<Vec3> = mesh.neighbors(i).map(|j| mesh.position(j) - xi).collect();
            let scale = nbrs.iter().map(|q| q.norm()).sum::<f64>() / nbrs.len() as f64;
            let mut q_mat = Mat3::ZERO;
            let mut b = Vec3::ZERO;
            let mut s = 0.0;
            for q in &nbrs {
                let q = *q / scale;
                let r2 = q.norm_squared();
                q_mat = q_mat.add(&Mat3::outer(q, q));
                b += q * r2;
                s += r2 * r2;
            }
            let m = q_mat.add(&Mat3::outer(b, b).scale(-1.0 / s));
            let (_, vecs) = sym3_eigen(&m);
            let mut u = vecs[0].normalized();
            let c = coarse[i];
            if u.dot(c) < 0.0 {
                u = -u;
            }
            if u.dot(c) < 0.5 {
                c
            } else {
                u
            }
        })
        .collect()
}

/// Two-ring of `v` with edge-path distances, keyed by vertex index.
fn two_ring(mesh: &TriangleMesh, v: usize) -> BTreeMap<usize, f64> {
    let xv = mesh.position(v);
    let mut dist: BTreeMap<usize, f64> = BTreeMap::new();
    let ring1: Vec<usize> = mesh.neighbors(v).collect();
    for &j in &ring1 {
        dist.insert(j, (mesh.position(j) - xv).norm());
    }
    for &j in &ring1 {
        let dj = dist[&j];
        let xj = mesh.position(j);
        for k in mesh.neighbors(j) {
            if k == v {
                continue;
            }
            let d = dj + (mesh.position(k) - xj).norm();
            let e = dist.entry(k).or_insert(f64::INFINITY);
            if d < *e {
                *e = d;
            }
        }
    }
    dist
}

/// Inverse square root of an SPD 2x2 matrix.
fn inv_sqrt_spd(m: &Sym2) -> Sym2 {
    let sd = m.det().sqrt();
    let t = (m.trace() + 2.0 * sd).sqrt();
    // sqrt(M) = (M + sqrt(det) I) / t
    let r = Sym2::new((m.a + sd) / t, m.b / t, (m.c + sd) / t);
    let d = r.det();
    Sym2::new(r.c / d, -r.b / d, r.a / d)
}

fn fit_shape_operator(
    mesh: &TriangleMesh,
    v: usize,
    n: Vec3,
    [e1, e2]: [Vec3; 2],
) -> Result<Sym2, CurvatureError> {
    let ring = two_ring(mesh, v);
    if ring.len() < MIN_FIT_NEIGHBORS {
        return Err(CurvatureError::RingTooSmall { vertex: v, count: ring.len() });
    }
    let xv = mesh.position(v);
    let mean_edge = {
        let ls: Vec<f64> = mesh.neighbors(v).map(|j| (mesh.position(j) - xv).norm()).collect();
        ls.iter().sum::<f64>() / ls.len() as f64
    };
    let bw = FIT_BANDWIDTH_FACTOR * mean_edge;
    // Unknowns in scaled coordinates (u/bw, v/bw): a, b, c, d, e.
    let mut ata = [0.0f64; 25];
    let mut atb = [0.0f64; 5];
    for (&j, &d) in &ring {
        let q = mesh.position(j) - xv;
        let u = q.dot(e1) / bw;
        let w = q.dot(e2) / bw;
        let h = q.dot(n) / bw;
        let wt = (-0.5 * (d / bw) * (d / bw)).exp();
        let row = [u * u, u * w, w * w, u, w];
        for r in 0..5 {
            for c in 0..5 {
                ata[r * 5 + c] += wt * row[r] * row[c];
            }
            atb[r] += wt * row[r] * h;
        }
    }
    dense_solve(&mut ata, &mut atb, 5, 1e-13).ok_or(CurvatureError::SingularFit { vertex: v })?;
    // In unscaled coordinates f = (a u^2 + b uv + c v^2)/bw + d u + e v.
    let [a, b, c, d, e] = atb;
    let hess = Sym2::new(2.0 * a / bw, b / bw, 2.0 * c / bw);
    let first = Sym2::new(1.0 + d * d, d * e, 1.0 + e * e);
    let w = (1.0 + d * d + e * e).sqrt();
    let s = inv_sqrt_spd(&first);
    // A = -I^{-1/2} (Hess / W) I^{-1/2}; outward normal, so spheres are positive.
    let sh = mul_sym(&mul_sym_full(&s, &hess.scale(-1.0 / w)), &s);
    Ok(sh)
}

fn mul_sym_full(x: &Sym2, y: &Sym2) -> [[f64; 2]; 2] {
    [
        [x.a * y.a + x.b * y.b, x.a * y.b + x.b * y.c],
        [x.b * y.a + x.c * y.b, x.b * y.b + x.c * y.c],
    ]
}

fn mul_sym(x: &[[f64; 2]; 2], y: &Sym2) -> Sym2 {
    let m00 = x[0][0] * y.a + x[0][1] * y.b;
    let m01 = x[0][0] * y.b + x[0][1] * y.c;
    let m10 = x[1][0] * y.a + x[1][1] * y.b;
    let m11 = x[1][0] * y.b + x[1][1] * y.c;
    Sym2::new(m00, 0.5 * (m01 + m10), m11)
}

/// Estimates the full curvature field of a closed mesh.
pub fn compute_curvature(mesh: &TriangleMesh) -> Result<CurvatureField, CurvatureError> {
    let areas = mixed_areas(mesh);
    if let Some(v) = areas.iter().position(|&a| !(a > 0.0)) {
        return Err(CurvatureError::ZeroArea { vertex: v });
    }
    let normals = vertex_normals(mesh);
    let hvec = mean_curvature_vectors(mesh, &areas);
    let defects = mesh.angle_defects();
    let n = mesh.vertex_count();
    let mut mean = Vec::with_capacity(n);
    let mut gauss = Vec::with_capacity(n);
    let mut shape = Vec::with_capacity(n);
    let mut frames = Vec::with_capacity(n);
    for v in 0..n {
        let nv = normals[v];
        let (e1, e2) = tangent_frame(nv);
        mean.push(hvec[v].dot(nv));
        gauss.push(defects[v] / areas[v]);
        shape.push(fit_shape_operator(mesh, v, nv, [e1, e2])?);
        frames.push([e1, e2]);
    }
    Ok(CurvatureField { normals, mean, gauss, shape, frames, areas, bandwidth_factor: FIT_BANDWIDTH_FACTOR })
}

/// Integral norms of a curvature field under vertex-area quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TotalNorms {
    pub area: f64,
    /// `int H^2`
    pub mean_sq: f64,
    /// `int |A|^2`
    pub shape_sq: f64,
    /// `int K`
    pub gauss: f64,
}

pub fn total_norms(field: &CurvatureField) -> TotalNorms {
    let w = &field.areas;
    TotalNorms {
        area: compensated_sum(w.iter().copied()),
        mean_sq: compensated_sum(field.mean.iter().zip(w).map(|(h, a)| h * h * a)),
        shape_sq: compensated_sum((0..w.len()).map(|v| field.shape_norm_sq(v) * w[v])),
        gauss: compensated_sum(field.gauss.iter().zip(w).map(|(k, a)| k * a)),
    }
}

/// Positions multiplied by `lambda`; connectivity and marks unchanged.
pub fn rescale(mesh: &TriangleMesh, lambda: ScaleFactor) -> TriangleMesh {
    let s = lambda.get();
    mesh.with_positions(mesh.positions().iter().map(|&p| p * s).collect())
        .expect("positive rescaling preserves validity")
}

/// Traceless part `|A - (tr A / 2) Id|` per vertex.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct UmbilicDefect {
    pub per_vertex: Vec<f64>,
    pub linf: f64,
    pub l2: f64,
    pub argmax: usize,
}

pub fn umbilic_defect(field: &CurvatureField) -> UmbilicDefect {
    let per_vertex: Vec<f64> = field
        .shape
        .iter()
        .map(|s| {
            let h = 0.5 * s.trace();
            Sym2::new(s.a - h, s.b, s.c - h).norm_squared().sqrt()
        })
        .collect();
    let (argmax, linf) = per_vertex
        .iter()
        .copied()
        .enumerate()
        .fold((0, 0.0f64), |(bi, bv), (i, v)| if v > bv { (i, v) } else { (bi, bv) });
    let l2 = compensated_sum(per_vertex.iter().zip(&field.areas).map(|(d, a)| d * d * a)).sqrt();
    UmbilicDefect { per_vertex, linf, l2, argmax }
}

/// Relative L2 mismatch between `trace(A)` and the cotangent `H`.
pub fn trace_consistency(field: &CurvatureField) -> f64 {
    let w = &field.areas;
    let num = compensated_sum((0..w.len()).map(|v| {
        let d = field.shape[v].trace() - field.mean[v];
        d * d * w[v]
    }));
    let den = compensated_sum((0..w.len()).map(|v| field.mean[v] * field.mean[v] * w[v]));
    (num / den).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_ellipsoid, generate_icosphere, generate_torus};
    use core::f64::consts::PI;

    #[test]
    fn unit_sphere_level4_pointwise() {
        let m = generate_icosphere(4, 1.0).unwrap();
        let f = compute_curvature(&m).unwrap();
        for v in 0..m.vertex_count() {
            assert!((1.98..=2.02).contains(&f.mean[v]), "H[{v}] = {}", f.mean[v]);
            assert!((0.98..=1.02).contains(&f.gauss[v]), "K[{v}] = {}", f.gauss[v]);
            assert!((f.normals[v].norm() - 1.0).abs() < 1e-14);
            let [e1, e2] = f.frames[v];
            assert!(e1.dot(f.normals[v]).abs() < 1e-12 && e2.dot(f.normals[v]).abs() < 1e-12);
            assert!(e1.dot(e2).abs() < 1e-12);
        }
        let total = total_norms(&f);
        assert!((total.area - m.total_area()).abs() <= 1e-12 * total.area);
    }

    #[test]
    fn sphere_normals_are_radial() {
        let m = generate_icosphere(3, 1.0).unwrap();
        let n = vertex_normals(&m);
        for v in 0..m.vertex_count() {
            assert!((n[v] - m.position(v)).norm() < 1e-12);
        }
    }

    #[test]
    fn totals_on_unit_sphere() {
        let m = generate_icosphere(4, 1.0).unwrap();
        let t = total_norms(&compute_curvature(&m).unwrap());
        assert!((t.area / (4.0 * PI) - 1.0).abs() < 0.01);
        assert!((t.mean_sq / (16.0 * PI) - 1.0).abs() < 0.01);
        assert!((t.shape_sq / (8.0 * PI) - 1.0).abs() < 0.01);
        let m2 = generate_icosphere(4, 2.0).unwrap();
        let t2 = total_norms(&compute_curvature(&m2).unwrap());
        assert!((t2.shape_sq / (8.0 * PI) - 1.0).abs() < 0.01);
    }

    #[test]
    fn torus_total_gauss_vanishes() {
        let m = generate_torus(2.0, 1.0, 64, 32).unwrap();
        let t = total_norms(&compute_curvature(&m).unwrap());
        assert!(t.gauss.abs() < 1e-6, "{}", t.gauss);
    }

    #[test]
    fn torus_outer_ring_gauss() {
        // K = cos v / (r (R + r cos v)) = 1/3 on the outer equator (v = 0).
        let m = generate_torus(2.0, 1.0, 128, 64).unwrap();
        let f = compute_curvature(&m).unwrap();
        let expected = 1.0 / 3.0;
        // vertices with j = 0 lie on v = 0
        for i in 0..128 {
            let k = f.gauss[i * 64];
            assert!((k / expected - 1.0).abs() < 0.03, "K = {k}");
        }
    }

    #[test]
    fn rescale_is_exactly_covariant() {
        let m = generate_icosphere(3, 1.0).unwrap();
        let f = compute_curvature(&m).unwrap();
        let r = rescale(&m, ScaleFactor::new(2.0).unwrap());
        let g = compute_curvature(&r).unwrap();
        for v in 0..m.vertex_count() {
            assert!((g.mean[v] - f.mean[v] / 2.0).abs() <= 1e-12 * f.mean[v].abs());
            assert!((g.gauss[v] - f.gauss[v] / 4.0).abs() <= 1e-12 * f.gauss[v].abs());
            assert!((g.areas[v] - f.areas[v] * 4.0).abs() <= 1e-12 * g.areas[v]);
        }
        let id = rescale(&m, ScaleFactor::new(1.0).unwrap());
        assert_eq!(id.positions(), m.positions());
        assert!(ScaleFactor::new(0.0).is_err());
        assert!(ScaleFactor::new(-1.0).is_err());
    }

    #[test]
    fn ellipsoid_shape_norm_scale_invariant() {
        let m = generate_ellipsoid(2.0, 1.0, 1.0, 3).unwrap();
        let a = total_norms(&compute_curvature(&m).unwrap()).shape_sq;
        let b = total_norms(&compute_curvature(&rescale(&m, ScaleFactor::new(3.0).unwrap())).unwrap()).shape_sq;
        assert!((a - b).abs() <= 1e-10 * a);
    }

    #[test]
    fn sphere_is_nearly_umbilic() {
        let m = generate_icosphere(4, 1.0).unwrap();
        let d = umbilic_defect(&compute_curvature(&m).unwrap());
        assert!(d.linf < 0.05, "{}", d.linf);
    }

    #[test]
    fn trace_agrees_with_cotangent_mean() {
        for level in 3..=4 {
            let m = generate_icosphere(level, 1.0).unwrap();
            assert!(trace_consistency(&compute_curvature(&m).unwrap()) < 0.05);
        }
    }
}
