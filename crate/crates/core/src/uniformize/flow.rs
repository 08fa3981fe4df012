//! Conformalized mean-curvature flow: `(M_t - dt L_0) x_{t+1} = M_t x_t`
//! with the cotangent stiffness `L_0` frozen at the input and the lumped
//! mass `M_t` of the current embedding.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;

use super::mobius::recentering;
use super::{UniformizationResult, UniformizeError};
use crate::curvature::{barycentric_areas, cotangent_laplacian};
use crate::math::{dense_solve, Vec3};
use crate::mesh::TriangleMesh;
use crate::sparse::conjugate_gradient;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FlowOptions {
    /// Time step for the unit-area normalized surface.
    pub time_step: f64,
    pub max_steps: usize,
    /// Convergence threshold on the per-step maximum vertex motion.
    pub tolerance: f64,
    pub recenter_every: usize,
    pub cg_tolerance: f64,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions { time_step: 0.02, max_steps: 2000, tolerance: 1e-7, recenter_every: 10, cg_tolerance: 1e-10 }
    }
}

/// [`uniformize_with`] using default options.
pub fn uniformize(mesh: &TriangleMesh) -> Result<UniformizationResult, UniformizeError> {
    uniformize_with(mesh, &FlowOptions::default())
}

pub fn uniformize_with(mesh: &TriangleMesh, opts: &FlowOptions) -> Result<UniformizationResult, UniformizeError> {
    if mesh.genus() != 0 {
        return Err(UniformizeError::NotGenusZero(mesh.genus()));
    }
    let n = mesh.vertex_count();
    let mut x = normalized_positions(mesh, mesh.positions());
    let start = mesh.with_positions(x.clone()).expect("similarity keeps the mesh valid");
    let weights = barycentric_areas(&start);
    let lap = cotangent_laplacian(&start);
    let mut normals: Vec<Vec3> = (0..mesh.face_count()).map(|f| start.face_normal_unnormalized(f)).collect();
    let mut history = Vec::new();
    let mut coord = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    let mut converged = false;
    let mut step = 0;
    while step < opts.max_steps {
        step += 1;
        let current = mesh.with_positions(x.clone()).map_err(|_| UniformizeError::FaceInversion {
            face: first_degenerate_face(mesh, &x),
            step,
        })?;
        let mass = barycentric_areas(&current);
        let system = lap.scaled_plus_diagonal(-opts.time_step, &mass);
        let mut next = x.clone();
        for c in 0..3 {
            for i in 0..n {
                coord[i] = x[i][c];
                rhs[i] = mass[i] * coord[i];
            }
            conjugate_gradient(&system, &rhs, &mut coord, opts.cg_tolerance, 20 * n + 100)?;
            for i in 0..n {
                match c {
                    0 => next[i].x = coord[i],
                    1 => next[i].y = coord[i],
                    _ => next[i].z = coord[i],
                }
            }
        }
        let mut next = normalized_positions(mesh, &next);
        if opts.recenter_every > 0 && step % opts.recenter_every == 0 && roundness(&next) < 0.05 {
            recenter_directions(&mut next, &weights);
        }
        for f in 0..mesh.face_count() {
            let [i, j, k] = mesh.face(f);
            let nf = (next[j] - next[i]).cross(next[k] - next[i]);
            if !(nf.dot(normals[f]) > 0.0) {
                return Err(UniformizeError::FaceInversion { face: f, step });
            }
            normals[f] = nf;
        }
        let motion = x.iter().zip(&next).map(|(a, b)| (*a - *b).norm()).fold(0.0, f64::max);
        history.push(motion);
        x = next;
        if motion < opts.tolerance {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(UniformizeError::NoConvergence { steps: step, last_motion: history.last().copied().unwrap_or(f64::NAN) });
    }
    let mut sphere: Vec<Vec3> = x.iter().map(|p| p.normalized()).collect();
    conformal_centering(&mut sphere, &weights);
    Ok(UniformizationResult::from_map(mesh, sphere, history, step))
}

fn first_degenerate_face(mesh: &TriangleMesh, x: &[Vec3]) -> usize {
    (0..mesh.face_count())
        .find(|&f| {
            let [i, j, k] = mesh.face(f);
            !((x[j] - x[i]).cross(x[k] - x[i]).norm() > 0.0)
        })
        .unwrap_or(0)
}

/// Translates the area centroid to the origin and scales to unit area.
fn normalized_positions(mesh: &TriangleMesh, x: &[Vec3]) -> Vec<Vec3> {
    let mut area = 0.0;
    let mut centroid = Vec3::ZERO;
    for f in 0..mesh.face_count() {
        let [i, j, k] = mesh.face(f);
        let a = 0.5 * (x[j] - x[i]).cross(x[k] - x[i]).norm();
        area += a;
        centroid += (x[i] + x[j] + x[k]) * (a / 3.0);
    }
    let centroid = centroid / area;
    let s = 1.0 / area.sqrt();
    x.iter().map(|&p| (p - centroid) * s).collect()
}

/// Relative spread of vertex radii.
fn roundness(x: &[Vec3]) -> f64 {
    let radii: Vec<f64> = x.iter().map(|p| p.norm()).collect();
    let mean = radii.iter().sum::<f64>() / radii.len() as f64;
    radii.iter().map(|r| (r / mean - 1.0).abs()).fold(0.0, f64::max)
}

/// One recentering step: `c` with the weighted mean of `f_c(p)` vanishing to first order.
fn centering_step(points: &[Vec3], weights: &[f64]) -> Option<Vec3> {
    let mut total = 0.0;
    let mut mean = Vec3::ZERO;
    let mut cov = [0.0f64; 9];
    for (p, &w) in points.iter().zip(weights) {
        total += w;
        mean += *p * w;
        for a in 0..3 {
            for b in 0..3 {
                cov[3 * a + b] += w * p[a] * p[b];
            }
        }
    }
    let mean = mean / total;
    let mut m = [0.0f64; 9];
    for a in 0..3 {
        for b in 0..3 {
            m[3 * a + b] = if a == b { 1.0 } else { 0.0 } - cov[3 * a + b] / total;
        }
    }
    let mut rhs = [0.5 * mean.x, 0.5 * mean.y, 0.5 * mean.z];
    dense_solve(&mut m, &mut rhs, 3, 1e-14)?;
    let mut c = Vec3::from(rhs);
    if c.norm() > 0.5 {
        c = c * (0.5 / c.norm());
    }
    Some(c)
}

/// Applies the recentering to the directions, keeping radii.
fn recenter_directions(x: &mut [Vec3], weights: &[f64]) {
    let dirs: Vec<Vec3> = x.iter().map(|p| p.normalized()).collect();
    if let Some(c) = centering_step(&dirs, weights) {
        for p in x.iter_mut() {
            let r = p.norm();
            *p = recentering(c, *p / r) * r;
        }
    }
}

/// Möbius-centers points on the unit sphere so that their weighted mean vanishes.
pub(crate) fn conformal_centering(sphere: &mut [Vec3], weights: &[f64]) {
    for _ in 0..100 {
        let Some(c) = centering_step(sphere, weights) else { return };
        if c.norm() < 1e-15 {
            return;
        }
        for p in sphere.iter_mut() {
            *p = recentering(c, *p).normalized();
        }
    }
}
