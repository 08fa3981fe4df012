//! Genus-0 conformal uniformization onto the unit sphere, marked-point
//! Möbius normalization, and the conformal-factor equation.
//!
//! The uniformizing map comes from a constructive flow rather than a
//! compactness argument, so every result carries the flow residual history
//! and per-face conformal distortion as evidence of quality.

mod conformal_factor;
mod flow;
pub mod mobius;
mod normalize;

use alloc::vec::Vec;

use num_traits::Float;
use thiserror::Error;

use crate::math::Vec3;
use crate::mesh::TriangleMesh;
use crate::sparse::SolveError;

pub use conformal_factor::{sigma_matching_area, solve_conformal_factor, ConformalFactor, ConformalFactorOptions};
pub use flow::{uniformize, uniformize_with, FlowOptions};
pub use mobius::{cross_ratio, recentering, spherical_distance, MobiusMap};
pub use normalize::{conformal_class_distance, mark_objective, mobius_normalize, NormalizeOptions};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum UniformizeError {
    #[error("uniformization needs a genus-0 mesh, got genus {0}")]
    NotGenusZero(i64),
    #[error("flow did not converge in {steps} steps (last motion {last_motion:e})")]
    NoConvergence { steps: usize, last_motion: f64 },
    #[error("face {face} inverted at flow step {step}")]
    FaceInversion { face: usize, step: usize },
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("mark index {0} out of range")]
    MarkOutOfRange(usize),
    #[error("marked points coincide under the map")]
    MarksCoincide,
    #[error("normalization stalled with objective {objective:e}")]
    OptimizerStalled { objective: f64 },
    #[error("result is not normalized for the given marks")]
    Unnormalized,
    #[error("Newton iteration diverged (last residual {last_residual:e})")]
    NewtonDiverged { last_residual: f64 },
    #[error("line search could not keep the conformal factor positive")]
    NonpositiveIterate,
    #[error("Gauss-Bonnet inconsistency: integral of K is {integral}, expected {expected}")]
    GaussBonnet { integral: f64, expected: f64 },
    #[error("per-vertex input has length {got}, mesh has {expected} vertices")]
    SizeMismatch { expected: usize, got: usize },
}

/// Marks and map of a normalization, stored with the result it produced.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Normalization {
    pub marks: [usize; 3],
    /// Row-major matrix entries as `(re, im)` pairs.
    pub matrix: [[(f64, f64); 2]; 2],
    /// Final value of the pairwise-distance objective before snapping.
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct UniformizationResult {
    /// Image of each vertex on the unit sphere.
    pub sphere_map: Vec<Vec3>,
    /// `u = log(image vertex area / input vertex area) / 2`.
    pub log_factor: Vec<f64>,
    /// Maximum vertex motion per flow step.
    pub residual_history: Vec<f64>,
    /// Singular-value ratio of the affine map of each face, `>= 1`.
    pub distortion: Vec<f64>,
    pub median_distortion: f64,
    pub steps: usize,
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub normalization: Option<Normalization>,
}

impl UniformizationResult {
    /// Assembles the derived fields for a given sphere map.
    pub(crate) fn from_map(
        mesh: &TriangleMesh,
        sphere_map: Vec<Vec3>,
        residual_history: Vec<f64>,
        steps: usize,
    ) -> UniformizationResult {
        let input_areas = crate::curvature::barycentric_areas(mesh);
        let image = mesh.with_positions(sphere_map.clone()).ok();
        let log_factor = match &image {
            Some(img) => crate::curvature::barycentric_areas(img)
                .iter()
                .zip(&input_areas)
                .map(|(a, b)| 0.5 * (a / b).ln())
                .collect(),
            None => alloc::vec![f64::NAN; mesh.vertex_count()],
        };
        let distortion = face_distortion(mesh, &sphere_map);
        let median_distortion = median(&distortion);
        UniformizationResult {
            sphere_map,
            log_factor,
            residual_history,
            distortion,
            median_distortion,
            steps,
            normalization: None,
        }
    }

    pub fn max_radius_error(&self) -> f64 {
        self.sphere_map.iter().map(|p| (p.norm() - 1.0).abs()).fold(0.0, f64::max)
    }
}

/// Singular-value ratio of the affine map between each input face and its image.
pub fn face_distortion(mesh: &TriangleMesh, image: &[Vec3]) -> Vec<f64> {
    (0..mesh.face_count())
        .map(|f| {
            let [i, j, k] = mesh.face(f);
            let src = local_edges(mesh.position(i), mesh.position(j), mesh.position(k));
            let dst = local_edges(image[i], image[j], image[k]);
            // J = dst * src^{-1}
            let det = src[0][0] * src[1][1] - src[0][1] * src[1][0];
            let inv = [[src[1][1] / det, -src[0][1] / det], [-src[1][0] / det, src[0][0] / det]];
            let jac = [
                [
                    dst[0][0] * inv[0][0] + dst[0][1] * inv[1][0],
                    dst[0][0] * inv[0][1] + dst[0][1] * inv[1][1],
                ],
                [
                    dst[1][0] * inv[0][0] + dst[1][1] * inv[1][0],
                    dst[1][0] * inv[0][1] + dst[1][1] * inv[1][1],
                ],
            ];
            crate::constraints::condition2(jac)
        })
        .collect()
}

/// Edge vectors `(b - a, c - a)` as columns in an in-plane orthonormal frame.
fn local_edges(a: Vec3, b: Vec3, c: Vec3) -> [[f64; 2]; 2] {
    let e1 = b - a;
    let e2 = c - a;
    let x = e1.normalized();
    let y = e1.cross(e2).cross(e1).normalized();
    [[e1.dot(x), e2.dot(x)], [e1.dot(y), e2.dot(y)]]
}

pub(crate) fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
