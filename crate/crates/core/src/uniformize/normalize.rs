//! Marked-point normalization: a Möbius map placing three marked images at
//! pairwise spherical distance `pi/2`.
//!
//! The map is searched by BFGS in the chart `m = base * exp(X)`, `X` in
//! `sl(2, C)` (six real parameters), with random restarts and a Gauss–Newton
//! polish; the chart base absorbs every accepted step, which keeps the
//! determinant at one. The normalized marks are finally snapped onto the
//! coordinate axes so that two normalized results can be compared pointwise.

use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_2;

use num_complex::Complex64 as C64;
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::mobius::{spherical_distance, MobiusMap};
use super::{Normalization, UniformizationResult, UniformizeError};
use crate::math::Vec3;
use crate::mesh::TriangleMesh;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NormalizeOptions {
    pub seed: u64,
    pub restarts: usize,
    /// Accepted value of the objective.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for NormalizeOptions {
    fn default() -> Self {
        NormalizeOptions { seed: 0, restarts: 3, tolerance: 1e-16, max_iterations: 200 }
    }
}

/// `sum over pairs of (dist - pi/2)^2`.
pub fn mark_objective(points: [Vec3; 3]) -> f64 {
    residuals(points).iter().map(|r| r * r).sum()
}

fn residuals(p: [Vec3; 3]) -> [f64; 3] {
    [
        spherical_distance(p[0], p[1]) - FRAC_PI_2,
        spherical_distance(p[1], p[2]) - FRAC_PI_2,
        spherical_distance(p[0], p[2]) - FRAC_PI_2,
    ]
}

/// `exp` of the traceless matrix `[[a, b], [c, -a]]` packed as six reals.
fn exp_sl2(t: &[f64; 6]) -> MobiusMap {
    let a = C64::new(t[0], t[1]);
    let b = C64::new(t[2], t[3]);
    let c = C64::new(t[4], t[5]);
    let s2 = a * a + b * c;
    let (ch, sh_over_s) = if s2.norm() < 1e-8 {
        (C64::new(1.0, 0.0) + s2 / 2.0, C64::new(1.0, 0.0) + s2 / 6.0)
    } else {
        let s = s2.sqrt();
        (s.cosh(), s.sinh() / s)
    };
    MobiusMap::from_matrix([[ch + sh_over_s * a, sh_over_s * b], [sh_over_s * c, ch - sh_over_s * a]])
        .expect("exponential is invertible")
}

struct Problem {
    marks: [Vec3; 3],
}

impl Problem {
    fn images(&self, m: &MobiusMap) -> [Vec3; 3] {
        self.marks.map(|p| m.apply(p))
    }

    fn value(&self, base: &MobiusMap, t: &[f64; 6]) -> f64 {
        mark_objective(self.images(&base.compose(&exp_sl2(t))))
    }

    fn residuals(&self, base: &MobiusMap, t: &[f64; 6]) -> [f64; 3] {
        residuals(self.images(&base.compose(&exp_sl2(t))))
    }

    fn gradient(&self, base: &MobiusMap) -> [f64; 6] {
        let h = 1e-6;
        let mut g = [0.0; 6];
        for k in 0..6 {
            let mut tp = [0.0; 6];
            let mut tm = [0.0; 6];
            tp[k] = h;
            tm[k] = -h;
            g[k] = (self.value(base, &tp) - self.value(base, &tm)) / (2.0 * h);
        }
        g
    }

    fn jacobian(&self, base: &MobiusMap) -> [[f64; 6]; 3] {
        let h = 1e-7;
        let mut j = [[0.0; 6]; 3];
        for k in 0..6 {
            let mut tp = [0.0; 6];
            let mut tm = [0.0; 6];
            tp[k] = h;
            tm[k] = -h;
            let rp = self.residuals(base, &tp);
            let rm = self.residuals(base, &tm);
            for r in 0..3 {
                j[r][k] = (rp[r] - rm[r]) / (2.0 * h);
            }
        }
        j
    }

    /// BFGS with backtracking; returns the improved base.
    fn bfgs(&self, mut base: MobiusMap, iterations: usize, tol: f64) -> MobiusMap {
        let mut hinv = [[0.0f64; 6]; 6];
        for (i, row) in hinv.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        let mut f = self.value(&base, &[0.0; 6]);
        let mut g = self.gradient(&base);
        for _ in 0..iterations {
            if f < tol {
                break;
            }
            let mut d = [0.0; 6];
            for i in 0..6 {
                d[i] = -(0..6).map(|j| hinv[i][j] * g[j]).sum::<f64>();
            }
            let mut slope: f64 = (0..6).map(|i| d[i] * g[i]).sum();
            if !(slope < 0.0) {
                hinv = identity6();
                d = g.map(|x| -x);
                slope = -g.iter().map(|x| x * x).sum::<f64>();
            }
            // keep trial maps well inside the range where exp is accurate
            let dn = d.iter().map(|x| x * x).sum::<f64>().sqrt();
            let mut step = if dn > 1.0 { 1.0 / dn } else { 1.0 };
            let mut accepted = None;
            for _ in 0..40 {
                let t = d.map(|x| x * step);
                let ft = self.value(&base, &t);
                if ft <= f + 1e-4 * step * slope {
                    accepted = Some((t, ft));
                    break;
                }
                step *= 0.5;
            }
            let Some((t, ft)) = accepted else { break };
            base = base.compose(&exp_sl2(&t));
            let g_new = self.gradient(&base);
            let y: [f64; 6] = core::array::from_fn(|i| g_new[i] - g[i]);
            let sy: f64 = (0..6).map(|i| t[i] * y[i]).sum();
            if sy > 1e-300 {
                let hy: [f64; 6] = core::array::from_fn(|i| (0..6).map(|j| hinv[i][j] * y[j]).sum());
                let yhy: f64 = (0..6).map(|i| y[i] * hy[i]).sum();
                for i in 0..6 {
                    for j in 0..6 {
                        hinv[i][j] += ((sy + yhy) * t[i] * t[j]) / (sy * sy) - (hy[i] * t[j] + t[i] * hy[j]) / sy;
                    }
                }
            }
            f = ft;
            g = g_new;
        }
        base
    }

    /// Minimum-norm Gauss–Newton steps on the three residuals.
    fn polish(&self, mut base: MobiusMap, tol: f64) -> MobiusMap {
        for _ in 0..30 {
            let r = self.residuals(&base, &[0.0; 6]);
            let f: f64 = r.iter().map(|x| x * x).sum();
            if f < tol * 1e-4 {
                break;
            }
            let j = self.jacobian(&base);
            let mut jjt = [0.0f64; 9];
            for a in 0..3 {
                for b in 0..3 {
                    jjt[3 * a + b] = (0..6).map(|k| j[a][k] * j[b][k]).sum();
                }
            }
            let mut y = r;
            if crate::math::dense_solve(&mut jjt, &mut y, 3, 1e-14).is_none() {
                break;
            }
            let t: [f64; 6] = core::array::from_fn(|k| -(0..3).map(|a| j[a][k] * y[a]).sum::<f64>());
            let candidate = base.compose(&exp_sl2(&t));
            if self.value(&candidate, &[0.0; 6]) >= f {
                break;
            }
            base = candidate;
        }
        base
    }
}

fn identity6() -> [[f64; 6]; 6] {
    core::array::from_fn(|i| core::array::from_fn(|j| if i == j { 1.0 } else { 0.0 }))
}

/// Finds a Möbius map normalizing the marks, applies it to the map and
/// recomputes the derived fields.
pub fn mobius_normalize(
    mesh: &TriangleMesh,
    uni: &UniformizationResult,
    marks: [usize; 3],
    opts: &NormalizeOptions,
) -> Result<(UniformizationResult, MobiusMap), UniformizeError> {
    let n = uni.sphere_map.len();
    if let Some(&bad) = marks.iter().find(|&&k| k >= n) {
        return Err(UniformizeError::MarkOutOfRange(bad));
    }
    let points = marks.map(|k| uni.sphere_map[k]);
    for (a, b) in [(0, 1), (1, 2), (0, 2)] {
        if marks[a] == marks[b] || spherical_distance(points[a], points[b]) < 1e-12 {
            return Err(UniformizeError::MarksCoincide);
        }
    }
    let problem = Problem { marks: points };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut best = (f64::INFINITY, MobiusMap::IDENTITY);
    for attempt in 0..=opts.restarts {
        let start = if attempt == 0 {
            MobiusMap::IDENTITY
        } else {
            exp_sl2(&core::array::from_fn(|_| rng.gen_range(-1.0..1.0)))
        };
        let m = problem.bfgs(start, opts.max_iterations, opts.tolerance);
        let m = problem.polish(m, opts.tolerance);
        let f = mark_objective(problem.images(&m));
        if f < best.0 {
            best = (f, m);
        }
        if f < opts.tolerance {
            break;
        }
    }
    let (objective, m) = best;
    if !(objective < opts.tolerance) {
        return Err(UniformizeError::OptimizerStalled { objective });
    }
    let snap = MobiusMap::from_three_points(problem.images(&m), [Vec3::X, Vec3::Y, Vec3::Z])
        .ok_or(UniformizeError::MarksCoincide)?;
    let total = snap.compose(&m);
    let mapped: Vec<Vec3> = uni.sphere_map.iter().map(|&p| total.apply(p)).collect();
    let mut out = UniformizationResult::from_map(mesh, mapped, uni.residual_history.clone(), uni.steps);
    let mat = total.matrix();
    out.normalization = Some(Normalization {
        marks,
        matrix: core::array::from_fn(|i| core::array::from_fn(|j| (mat[i][j].re, mat[i][j].im))),
        objective,
    });
    Ok((out, total))
}

/// Normalization residual of both inputs plus the largest distance between
/// corresponding normalized mark images.
///
/// Genus-0 conformal classes are unique, so this measures only how well the
/// normalization was carried out.
pub fn conformal_class_distance(
    a: &UniformizationResult,
    b: &UniformizationResult,
    marks_a: [usize; 3],
    marks_b: [usize; 3],
) -> Result<f64, UniformizeError> {
    for (u, marks) in [(a, marks_a), (b, marks_b)] {
        match u.normalization {
            Some(nz) if nz.marks == marks => {}
            _ => return Err(UniformizeError::Unnormalized),
        }
    }
    let pa = marks_a.map(|k| a.sphere_map[k]);
    let pb = marks_b.map(|k| b.sphere_map[k]);
    let gap = (0..3).map(|k| (pa[k] - pb[k]).norm()).fold(0.0, f64::max);
    Ok(mark_objective(pa).sqrt() + mark_objective(pb).sqrt() + gap)
}
