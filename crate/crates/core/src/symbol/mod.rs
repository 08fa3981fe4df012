//! Frozen-coefficient boundary symbols and their kernels.
//!
//! Unknowns of the boundary systems are ordered
//! `(h00, h01, h02, h11, h12, h22[, phi])`, index 0 being the normal
//! direction; the immersion system has unknowns `(v1, v2, f)`. Every system
//! is evaluated at the decaying root `z = i|xi|` of the interior symbol.

mod svd;

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64 as C64;
use num_traits::Float;
use thiserror::Error;

pub use svd::{svd, Svd, MAX_SWEEPS};

/// Singular values below this fraction of the largest count as zero.
pub const KERNEL_THRESHOLD: f64 = 1e-10;

pub const BOUNDARY_UNKNOWNS: [&str; 7] = ["h00", "h01", "h02", "h11", "h12", "h22", "phi"];
pub const IMMERSION_UNKNOWNS: [&str; 3] = ["v1", "v2", "f"];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SymbolError {
    #[error("frequency must be nonzero and finite")]
    ZeroFrequency,
    #[error("SVD did not converge in {0} sweeps")]
    NotConverged(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum SystemKind {
    /// Conformal class of the boundary metric plus mean curvature.
    ConformalMean,
    /// Full boundary metric prescribed.
    Dirichlet,
    /// Linearized immersion (tangential vector field and normal graph).
    Immersion,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymbolSystem {
    pub kind: SystemKind,
    pub xi: [f64; 2],
    /// Decaying characteristic root `i|xi|`.
    pub root: C64,
    pub unknowns: Vec<&'static str>,
    /// Equation rows.
    pub rows: Vec<Vec<C64>>,
}

impl SymbolSystem {
    pub fn shape(&self) -> (usize, usize) {
        (self.rows.len(), self.unknowns.len())
    }
}

fn check_xi(xi: [f64; 2]) -> Result<f64, SymbolError> {
    let n = (xi[0] * xi[0] + xi[1] * xi[1]).sqrt();
    if n > 0.0 && n.is_finite() {
        Ok(n)
    } else {
        Err(SymbolError::ZeroFrequency)
    }
}

const Z: C64 = C64::new(0.0, 0.0);

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn im(x: f64) -> C64 {
    C64::new(0.0, x)
}

/// The two tangential-divergence rows and the normal row shared by both
/// boundary systems, over the six metric unknowns.
fn interior_compatibility_rows(xi: [f64; 2], r: f64) -> [[C64; 6]; 3] {
    let [x1, x2] = xi;
    // 2|xi| h0k - 2i sum_j xi_j h_jk + i xi_k tr h
    let k1 = [im(x1), re(2.0 * r), Z, im(-2.0 * x1) + im(x1), im(-2.0 * x2), im(x1)];
    let k2 = [im(x2), Z, re(2.0 * r), im(x2), im(-2.0 * x1), im(-2.0 * x2) + im(x2)];
    // 2|xi| h00 - 2i sum_k xi_k h0k - |xi| tr h
    let normal = [re(2.0 * r) - re(r), im(-2.0 * x1), im(-2.0 * x2), re(-r), Z, re(-r)];
    [k1, k2, normal]
}

fn pad(row: [C64; 6], width: usize) -> Vec<C64> {
    let mut v = row.to_vec();
    v.resize(width, Z);
    v
}

/// Assembles the boundary symbol of the given kind at frequency `xi`.
pub fn assemble_boundary_symbol(kind: SystemKind, xi: [f64; 2]) -> Result<SymbolSystem, SymbolError> {
    let r = check_xi(xi)?;
    let compat = interior_compatibility_rows(xi, r);
    let (unknowns, rows) = match kind {
        SystemKind::ConformalMean => {
            let w = 7;
            let mut rows = Vec::with_capacity(7);
            // tangential metric is pure trace: h_kl = phi delta_kl
            let one = re(1.0);
            rows.push(vec![Z, Z, Z, one, Z, Z, -one]);
            rows.push(vec![Z, Z, Z, Z, one, Z, Z]);
            rows.push(vec![Z, Z, Z, Z, Z, one, -one]);
            rows.extend(compat.iter().map(|&c| pad(c, w)));
            // linearized mean curvature: |xi| (h11 + h22) + 2i (xi1 h01 + xi2 h02)
            rows.push(vec![Z, im(2.0 * xi[0]), im(2.0 * xi[1]), re(r), Z, re(r), Z]);
            (BOUNDARY_UNKNOWNS.to_vec(), rows)
        }
        SystemKind::Dirichlet => {
            let one = re(1.0);
            let mut rows = vec![
                vec![Z, Z, Z, one, Z, Z],
                vec![Z, Z, Z, Z, one, Z],
                vec![Z, Z, Z, Z, Z, one],
            ];
            rows.extend(compat.iter().map(|&c| pad(c, 6)));
            (BOUNDARY_UNKNOWNS[..6].to_vec(), rows)
        }
        SystemKind::Immersion => return assemble_immersion_symbol(xi),
    };
    Ok(SymbolSystem { kind, xi, root: im(r), unknowns, rows })
}

/// Symbol of the linearized immersion map: the trace-free symmetrized
/// tangential part `xi_i v_j - (xi.v / 2) delta_ij` (four rows, `(i,j)` in
/// row-major order) and the normal part `|xi|^2 f`.
pub fn assemble_immersion_symbol(xi: [f64; 2]) -> Result<SymbolSystem, SymbolError> {
    let r = check_xi(xi)?;
    let [x1, x2] = xi;
    let rows = vec![
        vec![re(x1 / 2.0), re(-x2 / 2.0), Z],
        vec![re(x2 / 2.0), re(x1 / 2.0), Z],
        vec![re(x2 / 2.0), re(x1 / 2.0), Z],
        vec![re(-x1 / 2.0), re(x2 / 2.0), Z],
        vec![Z, Z, re(r * r)],
    ];
    Ok(SymbolSystem { kind: SystemKind::Immersion, xi, root: im(r), unknowns: IMMERSION_UNKNOWNS.to_vec(), rows })
}

/// Principal symbol `-|xi|^2 I` of the interior operator.
pub fn interior_symbol(xi: [f64; 3]) -> [[f64; 3]; 3] {
    let s = -(xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]);
    [[s, 0.0, 0.0], [0.0, s, 0.0], [0.0, 0.0, s]]
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KernelReport {
    pub kind: SystemKind,
    pub xi: [f64; 2],
    pub rows: usize,
    pub columns: usize,
    pub dimension: usize,
    /// Descending.
    pub singular_values: Vec<f64>,
    pub smallest_singular_value: f64,
    /// Kernel basis, entries as `[re, im]`, each vector scaled to unit norm
    /// with its largest entry real and positive.
    pub basis: Vec<Vec<[f64; 2]>>,
    pub unknowns: Vec<String>,
}

/// Kernel dimension and basis from an SVD of the system matrix.
pub fn kernel_analysis(sys: &SymbolSystem) -> Result<KernelReport, SymbolError> {
    let (m, n) = sys.shape();
    let s = svd(&sys.rows, n).ok_or(SymbolError::NotConverged(MAX_SWEEPS))?;
    let largest = s.singular_values[0];
    // Columns beyond the row count are kernel directions regardless of their value.
    let dimension =
        (0..n).filter(|&k| k >= m || s.singular_values[k] < KERNEL_THRESHOLD * largest).count();
    let basis = s.v[n - dimension..].iter().map(|v| canonical_phase(v)).collect();
    Ok(KernelReport {
        kind: sys.kind,
        xi: sys.xi,
        rows: m,
        columns: n,
        dimension,
        smallest_singular_value: *s.singular_values.last().unwrap(),
        singular_values: s.singular_values,
        basis,
        unknowns: sys.unknowns.iter().map(|u| String::from(*u)).collect(),
    })
}

/// Unit vector with its largest-magnitude entry rotated onto the positive reals.
pub fn canonical_phase(v: &[C64]) -> Vec<[f64; 2]> {
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let pivot = v.iter().copied().fold(Z, |best, z| if z.norm() > best.norm() + 1e-12 { z } else { best });
    let phase = if pivot.norm() > 0.0 { pivot.conj() / pivot.norm() } else { re(1.0) };
    v.iter().map(|z| {
        let w = z * phase / norm;
        [w.re, w.im]
    })
    .collect()
}

/// Closed-form Dirichlet kernel `(1, -i xi_k / (2|xi|), 0, 0, 0)`.
pub fn dirichlet_kernel_vector(xi: [f64; 2]) -> Result<Vec<C64>, SymbolError> {
    let r = check_xi(xi)?;
    Ok(vec![re(1.0), im(-xi[0] / (2.0 * r)), im(-xi[1] / (2.0 * r)), Z, Z, Z])
}

/// Largest `|phi|` over unit kernel vectors of the conformal-mean system with
/// the mean-curvature row dropped: the tangential and compatibility rows
/// alone already force `phi = 0`.
pub fn phi_elimination_residual(xi: [f64; 2]) -> Result<f64, SymbolError> {
    let mut sys = assemble_boundary_symbol(SystemKind::ConformalMean, xi)?;
    sys.rows.pop();
    let report = kernel_analysis(&sys)?;
    Ok(report.basis.iter().map(|v| (v[6][0] * v[6][0] + v[6][1] * v[6][1]).sqrt()).fold(0.0, f64::max))
}

/// Kernel reports at each sampled frequency.
pub fn scan(kind: SystemKind, samples: &[[f64; 2]]) -> Result<Vec<KernelReport>, SymbolError> {
    samples
        .iter()
        .map(|&xi| match kind {
            SystemKind::Immersion => kernel_analysis(&assemble_immersion_symbol(xi)?),
            _ => kernel_analysis(&assemble_boundary_symbol(kind, xi)?),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conformal_mean_oracle_at_unit_x() {
        // Hand assembly at xi = (1, 0), |xi| = 1, tr h = h00 + h11 + h22.
        let i = C64::i();
        let o = re(1.0);
        let expected: Vec<Vec<C64>> = vec![
            vec![Z, Z, Z, o, Z, Z, -o],
            vec![Z, Z, Z, Z, o, Z, Z],
            vec![Z, Z, Z, Z, Z, o, -o],
            // 2 h01 - 2i h11 + i (h00 + h11 + h22)
            vec![i, re(2.0), Z, -i, Z, i, Z],
            // 2 h02 - 2i h12
            vec![Z, Z, re(2.0), Z, -i * 2.0, Z, Z],
            // 2 h00 - 2i h01 - (h00 + h11 + h22)
            vec![o, -i * 2.0, Z, -o, Z, -o, Z],
            // (h11 + h22) + 2i h01
            vec![Z, i * 2.0, Z, o, Z, o, Z],
        ];
        let sys = assemble_boundary_symbol(SystemKind::ConformalMean, [1.0, 0.0]).unwrap();
        assert_eq!(sys.shape(), (7, 7));
        assert_eq!(sys.rows, expected);
        assert_eq!(sys.root, C64::new(0.0, 1.0));
    }

    #[test]
    fn dimensions_and_errors() {
        let d = assemble_boundary_symbol(SystemKind::Dirichlet, [0.0, 2.0]).unwrap();
        assert_eq!(d.shape(), (6, 6));
        assert_eq!(assemble_boundary_symbol(SystemKind::ConformalMean, [0.0, 0.0]), Err(SymbolError::ZeroFrequency));
        assert_eq!(assemble_immersion_symbol([0.0, 0.0]), Err(SymbolError::ZeroFrequency));
        assert_eq!(assemble_immersion_symbol([1.0, 0.0]).unwrap().shape(), (5, 3));
    }

    #[test]
    fn conformal_mean_is_elliptic_at_unit_x() {
        let r = kernel_analysis(&assemble_boundary_symbol(SystemKind::ConformalMean, [1.0, 0.0]).unwrap()).unwrap();
        assert_eq!(r.dimension, 0);
        assert!(r.smallest_singular_value > 0.1, "{}", r.smallest_singular_value);
    }

    #[test]
    fn dirichlet_has_one_dimensional_kernel() {
        let xi = [1.0, 0.0];
        let r = kernel_analysis(&assemble_boundary_symbol(SystemKind::Dirichlet, xi).unwrap()).unwrap();
        assert_eq!(r.dimension, 1);
        let expected = canonical_phase(&dirichlet_kernel_vector(xi).unwrap());
        for (a, b) in r.basis[0].iter().zip(&expected) {
            assert!((a[0] - b[0]).abs() < 1e-8 && (a[1] - b[1]).abs() < 1e-8);
        }
    }

    #[test]
    fn immersion_kernels() {
        for xi in [[1.0, 0.0], [3.0, 4.0]] {
            assert_eq!(kernel_analysis(&assemble_immersion_symbol(xi).unwrap()).unwrap().dimension, 0);
        }
    }

    #[test]
    fn interior_symbol_is_scalar() {
        assert_eq!(interior_symbol([1.0, 0.0, 0.0]), [[-1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, -1.0]]);
        assert_eq!(interior_symbol([0.0; 3]), [[0.0; 3]; 3].map(|r| r.map(|x: f64| -x)));
        assert_eq!(interior_symbol([1.0, 2.0, 2.0])[1][1], -9.0);
    }

    #[test]
    fn phi_is_eliminated() {
        for xi in [[1.0, 0.0], [0.3, -0.8], [-2.0, 5.0]] {
            assert!(phi_elimination_residual(xi).unwrap() < 1e-10);
        }
    }
}
