//! Newton solver for the conformal factor `lambda` of `gamma = lambda^-2 gamma_0`
//! with prescribed curvature `K` over a background of constant curvature `sigma`.
//!
//! With `w = log lambda` the curvature law reads `Delta_0 w = K e^{-2w} - sigma`,
//! discretized with the background cotangent Laplacian and mixed areas as
//! `(L w)_i = A_i (K_i e^{-2 w_i} - sigma)`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_traits::Float;

use super::UniformizeError;
use crate::curvature::{cotangent_laplacian, mixed_areas};
use crate::math::compensated_sum;
use crate::mesh::TriangleMesh;
use crate::sparse::BandedLu;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConformalFactorOptions {
    /// Vertex areas of the surface carrying `K`; enables the quantitative
    /// Gauss–Bonnet check.
    pub target_areas: Option<Vec<f64>>,
    pub tolerance: Option<f64>,
    pub max_iterations: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConformalFactor {
    pub lambda: Vec<f64>,
    /// Pointwise residual `max |(L w)_i / A_i - K_i e^{-2 w_i} + sigma|` per iterate.
    pub residual_history: Vec<f64>,
}

/// `sigma` giving a target of the stated area Gauss–Bonnet consistent total curvature.
pub fn sigma_matching_area(chi: i64, target_area: f64) -> f64 {
    2.0 * PI * chi as f64 / target_area
}

fn residual(lap: &crate::sparse::CsrMatrix, areas: &[f64], k: &[f64], sigma: f64, w: &[f64]) -> Vec<f64> {
    let lw = lap.apply(w);
    (0..w.len()).map(|i| lw[i] - areas[i] * (k[i] * (-2.0 * w[i]).exp() - sigma)).collect()
}

fn pointwise_max(r: &[f64], areas: &[f64]) -> f64 {
    r.iter().zip(areas).map(|(r, a)| (r / a).abs()).fold(0.0, f64::max)
}

pub fn solve_conformal_factor(
    background: &TriangleMesh,
    k_target: &[f64],
    sigma: f64,
    opts: &ConformalFactorOptions,
) -> Result<ConformalFactor, UniformizeError> {
    let n = background.vertex_count();
    if k_target.len() != n {
        return Err(UniformizeError::SizeMismatch { expected: n, got: k_target.len() });
    }
    let tol = opts.tolerance.unwrap_or(1e-9);
    let max_iter = opts.max_iterations.unwrap_or(100);
    let areas = mixed_areas(background);
    let expected = 2.0 * PI * background.euler_characteristic() as f64;
    match &opts.target_areas {
        Some(t) => {
            if t.len() != n {
                return Err(UniformizeError::SizeMismatch { expected: n, got: t.len() });
            }
            let integral = compensated_sum(t.iter().zip(k_target).map(|(a, k)| a * k));
            if (integral - expected).abs() > 0.01 * expected.abs().max(1.0) {
                return Err(UniformizeError::GaussBonnet { integral, expected });
            }
        }
        None if expected != 0.0 => {
            // Without the target metric only the sign is meaningful.
            let integral = compensated_sum(areas.iter().zip(k_target).map(|(a, k)| a * k));
            if !(integral * expected > 0.0 && integral.abs() > 0.01 * expected.abs()) || sigma * expected <= 0.0 {
                return Err(UniformizeError::GaussBonnet { integral, expected });
            }
        }
        None => {}
    }
    let lap = cotangent_laplacian(background);
    let mut w = vec![0.0; n];
    let mut r = residual(&lap, &areas, k_target, sigma, &w);
    let mut history = vec![pointwise_max(&r, &areas)];
    while *history.last().unwrap() >= tol {
        if history.len() > max_iter {
            return Err(UniformizeError::NewtonDiverged { last_residual: *history.last().unwrap() });
        }
        let diag: Vec<f64> = (0..n).map(|i| 2.0 * areas[i] * k_target[i] * (-2.0 * w[i]).exp()).collect();
        let jac = lap.scaled_plus_diagonal(1.0, &diag);
        let lu = BandedLu::factor(&jac)?;
        let step = lu.solve(&r);
        let current = crate::sparse::norm(&r);
        let mut t = 1.0;
        loop {
            let trial: Vec<f64> = w.iter().zip(&step).map(|(w, d)| w - t * d).collect();
            if trial.iter().all(|x| x.is_finite()) {
                let rt = residual(&lap, &areas, k_target, sigma, &trial);
                if crate::sparse::norm(&rt) < (1.0 - 1e-4 * t) * current {
                    w = trial;
                    r = rt;
                    break;
                }
            }
            t *= 0.5;
            if t < 1e-10 {
                return Err(UniformizeError::NonpositiveIterate);
            }
        }
        history.push(pointwise_max(&r, &areas));
    }
    Ok(ConformalFactor { lambda: w.iter().map(|w| w.exp()).collect(), residual_history: history })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::generate_icosphere;

    #[test]
    fn identity_solution_on_round_sphere() {
        let m = generate_icosphere(3, 1.0).unwrap();
        let k = vec![1.0; m.vertex_count()];
        let s = solve_conformal_factor(&m, &k, 1.0, &ConformalFactorOptions::default()).unwrap();
        assert!(s.lambda.iter().all(|l| (l - 1.0).abs() < 1e-9));
    }

    #[test]
    fn scaled_curvature_gives_constant_factor() {
        // K = 4 on the unit sphere is the sphere of radius 1/2: lambda = 2.
        let m = generate_icosphere(3, 1.0).unwrap();
        let k = vec![4.0; m.vertex_count()];
        let s = solve_conformal_factor(&m, &k, 1.0, &ConformalFactorOptions::default()).unwrap();
        assert!(s.lambda.iter().all(|l| (l - 2.0).abs() < 1e-8), "{:?}", &s.lambda[..3]);
    }

    #[test]
    fn gauss_bonnet_violation_rejected() {
        let m = generate_icosphere(2, 1.0).unwrap();
        let k: Vec<f64> = m.positions().iter().map(|p| p.z).collect();
        assert!(matches!(
            solve_conformal_factor(&m, &k, 1.0, &ConformalFactorOptions::default()),
            Err(UniformizeError::GaussBonnet { .. })
        ));
        assert!((sigma_matching_area(2, 4.0 * PI) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ellipsoid_factor_matches_uniformization() {
        use crate::curvature::compute_curvature;
        use crate::mesh::generate_ellipsoid;
        let e = generate_ellipsoid(1.5, 1.0, 0.8, 4).unwrap();
        let uni = crate::uniformize::uniformize(&e).unwrap();
        let background = e.with_positions(uni.sphere_map.clone()).unwrap();
        let field = compute_curvature(&e).unwrap();
        let opts = ConformalFactorOptions { target_areas: Some(field.areas.clone()), ..Default::default() };
        let s = solve_conformal_factor(&background, &field.gauss, 1.0, &opts).unwrap();
        let worst = s
            .lambda
            .iter()
            .zip(&uni.log_factor)
            .map(|(l, u)| (l / u.exp() - 1.0).abs())
            .fold(0.0, f64::max);
        let spread = |v: &[f64]| {
            v.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b)) / v.iter().fold(f64::INFINITY, |a, &b| a.min(b))
        };
        let eu: Vec<f64> = uni.log_factor.iter().map(|u| u.exp()).collect();
        assert!(worst < 0.05, "{worst}");
        assert!((spread(&s.lambda) / spread(&eu) - 1.0).abs() < 0.05);
        // the last two Newton steps contract quadratically
        let h = &s.residual_history;
        for k in h.len() - 2..h.len() {
            assert!(h[k] <= 10.0 * h[k - 1] * h[k - 1], "{h:?}");
        }
    }
}
