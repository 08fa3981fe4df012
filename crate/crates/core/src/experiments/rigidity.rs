//! Blow-up rescaling and the constant-mean-curvature rigidity diagnostics.

use alloc::vec::Vec;

use num_traits::Float;
use thiserror::Error;

use crate::curvature::{compute_curvature, rescale, umbilic_defect, CurvatureError, CurvatureField, ScaleFactor};
use crate::math::{compensated_sum, dense_solve, Vec3};
use crate::mesh::TriangleMesh;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RigidityError {
    #[error("second fundamental form vanishes identically")]
    Flat,
    #[error(transparent)]
    Curvature(#[from] CurvatureError),
}

/// `max_v |A|(v)` (operator norm) as a scale factor.
pub fn blowup_scale(field: &CurvatureField) -> Result<ScaleFactor, RigidityError> {
    let lambda = (0..field.vertex_count()).map(|v| field.shape_op_norm(v)).fold(0.0, f64::max);
    if !(lambda > 0.0) {
        return Err(RigidityError::Flat);
    }
    Ok(ScaleFactor::new(lambda)?)
}

/// Rescales so that the largest `|A|` becomes one.
pub fn blowup_rescale(mesh: &TriangleMesh) -> Result<(TriangleMesh, ScaleFactor), RigidityError> {
    let lambda = blowup_scale(&compute_curvature(mesh)?)?;
    Ok((rescale(mesh, lambda), lambda))
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HopfRecord {
    /// `(max H - min H) / mean H`, mean area-weighted.
    pub h_const_defect: f64,
    pub umbilic_linf: f64,
    pub umbilic_l2: f64,
    /// RMS distance to the best-fit sphere over its radius.
    pub roundness: f64,
    pub fit_center: Vec3,
    pub fit_radius: f64,
}

/// Algebraic least-squares sphere `|x|^2 = 2 c.x + d`.
pub fn fit_sphere(points: &[Vec3]) -> Option<(Vec3, f64)> {
    let mut ata = [0.0f64; 16];
    let mut atb = [0.0f64; 4];
    for p in points {
        let row = [2.0 * p.x, 2.0 * p.y, 2.0 * p.z, 1.0];
        let rhs = p.norm_squared();
        for a in 0..4 {
            for b in 0..4 {
                ata[4 * a + b] += row[a] * row[b];
            }
            atb[a] += row[a] * rhs;
        }
    }
    dense_solve(&mut ata, &mut atb, 4, 1e-14)?;
    let c = Vec3::new(atb[0], atb[1], atb[2]);
    let r2 = atb[3] + c.norm_squared();
    (r2 > 0.0).then(|| (c, r2.sqrt()))
}

pub fn hopf_check(mesh: &TriangleMesh, field: &CurvatureField) -> HopfRecord {
    let area = compensated_sum(field.areas.iter().copied());
    let mean = compensated_sum(field.mean.iter().zip(&field.areas).map(|(h, a)| h * a)) / area;
    let max = field.mean.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = field.mean.iter().copied().fold(f64::INFINITY, f64::min);
    let umb = umbilic_defect(field);
    let (center, radius) = fit_sphere(mesh.positions()).unwrap_or((Vec3::ZERO, f64::NAN));
    let dev: Vec<f64> = mesh.positions().iter().map(|p| ((*p - center).norm() - radius) / radius).collect();
    let roundness = (dev.iter().map(|d| d * d).sum::<f64>() / dev.len() as f64).sqrt();
    HopfRecord {
        h_const_defect: (max - min) / mean,
        umbilic_linf: umb.linf,
        umbilic_l2: umb.l2,
        roundness,
        fit_center: center,
        fit_radius: radius,
    }
}
