//! One-sided (Hestenes) Jacobi SVD of a small dense complex matrix.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64 as C64;
use num_traits::Float;

/// Upper bound on Jacobi sweeps.
pub const MAX_SWEEPS: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct Svd {
    /// Descending.
    pub singular_values: Vec<f64>,
    /// Right singular vectors, `v[k]` pairs with `singular_values[k]`.
    pub v: Vec<Vec<C64>>,
    pub sweeps: usize,
}

/// `None` if the sweeps do not converge within [`MAX_SWEEPS`].
pub fn svd(rows: &[Vec<C64>], cols: usize) -> Option<Svd> {
    // a[j] is column j
    let mut a: Vec<Vec<C64>> = (0..cols).map(|j| rows.iter().map(|r| r[j]).collect()).collect();
    let mut v: Vec<Vec<C64>> = (0..cols)
        .map(|j| {
            let mut e = vec![C64::new(0.0, 0.0); cols];
            e[j] = C64::new(1.0, 0.0);
            e
        })
        .collect();
    // columns below rounding level of the whole matrix are treated as zero
    let negligible = 1e-30 * a.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>();
    let mut sweeps = 0;
    loop {
        if sweeps == MAX_SWEEPS {
            return None;
        }
        sweeps += 1;
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let alpha: f64 = a[p].iter().map(|z| z.norm_sqr()).sum();
                let beta: f64 = a[q].iter().map(|z| z.norm_sqr()).sum();
                let gamma: C64 = a[p].iter().zip(&a[q]).map(|(x, y)| x.conj() * y).sum();
                let g = gamma.norm();
                if !(g > 1e-15 * (alpha * beta).sqrt()) || alpha.min(beta) <= negligible {
                    continue;
                }
                rotated = true;
                let phase = (gamma / g).conj();
                let zeta = (beta - alpha) / (2.0 * g);
                let t = if zeta >= 0.0 { 1.0 } else { -1.0 } / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut a, p, q, c, s, phase);
                rotate(&mut v, p, q, c, s, phase);
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = a.iter().map(|col| col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()).collect();
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]).then(i.cmp(&j)));
    Some(Svd {
        singular_values: order.iter().map(|&k| norms[k]).collect(),
        v: order.iter().map(|&k| v[k].clone()).collect(),
        sweeps,
    })
}

fn rotate(m: &mut [Vec<C64>], p: usize, q: usize, c: f64, s: f64, phase: C64) {
    for i in 0..m[p].len() {
        let x = m[p][i];
        let y = m[q][i] * phase;
        m[p][i] = x * c - y * s;
        m[q][i] = x * s + y * c;
    }
}
