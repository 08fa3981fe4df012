//! Sparse matrices and the two linear solvers the flows need: Jacobi
//! preconditioned conjugate gradients for SPD systems and a banded LU with
//! partial pivoting (after reverse Cuthill–McKee) for symmetric indefinite
//! Newton systems.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("conjugate gradients stalled after {iterations} iterations (relative residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("matrix is not positive definite along a search direction")]
    NotPositiveDefinite,
    #[error("singular pivot in column {column}")]
    SingularPivot { column: usize },
    #[error("dimension mismatch")]
    Dimension,
}

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Assembles an `n x n` matrix from triplets, summing duplicates.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols: Vec<usize> = Vec::with_capacity(triplets.len());
        let mut vals: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(c);
                vals.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix { n, row_ptr, cols, vals }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).filter(|&(c, _)| c == i).map(|(_, v)| v).sum()).collect()
    }

    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.n) {
            let mut s = 0.0;
            for (c, v) in self.row(i) {
                s += v * x[c];
            }
            *yi = s;
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_vec(x, &mut y);
        y
    }

    /// `alpha * self + diag(d)`, keeping the sparsity pattern.
    pub fn scaled_plus_diagonal(&self, alpha: f64, d: &[f64]) -> CsrMatrix {
        let mut out = self.clone();
        for v in out.vals.iter_mut() {
            *v *= alpha;
        }
        for i in 0..self.n {
            let mut found = false;
            for k in out.row_ptr[i]..out.row_ptr[i + 1] {
                if out.cols[k] == i {
                    out.vals[k] += d[i];
                    found = true;
                }
            }
            debug_assert!(found, "diagonal entry missing from pattern");
        }
        out
    }
}

/// Conjugate gradients with a Jacobi preconditioner.
///
/// Stops when `|b - A x| <= rel_tol * |b|`. `x` holds the initial guess.
pub fn conjugate_gradient(
    a: &CsrMatrix,
    b: &[f64],
    x: &mut [f64],
    rel_tol: f64,
    max_iter: usize,
) -> Result<usize, SolveError> {
    let n = a.dim();
    if b.len() != n || x.len() != n {
        return Err(SolveError::Dimension);
    }
    let inv_diag: Vec<f64> = a.diagonal().iter().map(|&d| if d != 0.0 { 1.0 / d } else { 1.0 }).collect();
    let b_norm = norm(b);
    if b_norm == 0.0 {
        x.iter_mut().for_each(|e| *e = 0.0);
        return Ok(0);
    }
    let mut r = vec![0.0; n];
    a.mul_vec(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for it in 0..max_iter {
        let res = norm(&r);
        if res <= rel_tol * b_norm {
            return Ok(it);
        }
        a.mul_vec(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(SolveError::NotPositiveDefinite);
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let res = norm(&r) / b_norm;
    if res <= rel_tol {
        Ok(max_iter)
    } else {
        Err(SolveError::NotConverged { iterations: max_iter, residual: res })
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Reverse Cuthill–McKee ordering of the (structurally symmetric) pattern.
pub fn reverse_cuthill_mckee(a: &CsrMatrix) -> Vec<usize> {
    let n = a.dim();
    let degree: Vec<usize> = (0..n).map(|i| a.row(i).count()).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    while order.len() < n {
        let start = (0..n).filter(|&i| !visited[i]).min_by_key(|&i| (degree[i], i)).unwrap();
        visited[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut nbrs: Vec<usize> = a.row(v).map(|(c, _)| c).filter(|&c| !visited[c]).collect();
            nbrs.sort_by_key(|&c| (degree[c], c));
            for c in nbrs {
                visited[c] = true;
                queue.push_back(c);
            }
        }
    }
    order.reverse();
    order
}

/// Banded LU factorization with partial pivoting of a permuted sparse matrix.
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    /// Row-major band storage: row `i`, column `j` at `i * width + (j + kl - i)`,
    /// widened by `kl` on the upper side for pivoting fill.
    band: Vec<f64>,
    width: usize,
    pivots: Vec<usize>,
    perm: Vec<usize>,
}

impl BandedLu {
    pub fn factor(a: &CsrMatrix) -> Result<Self, SolveError> {
        let n = a.dim();
        let perm = reverse_cuthill_mckee(a);
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut kl = 0usize;
        let mut ku0 = 0usize;
        for i in 0..n {
            for (c, _) in a.row(i) {
                let (r, c) = (inv[i], inv[c]);
                if r > c {
                    kl = kl.max(r - c);
                } else {
                    ku0 = ku0.max(c - r);
                }
            }
        }
        let ku = ku0 + kl;
        let width = kl + ku + 1;
        let mut band = vec![0.0; n * width];
        for i in 0..n {
            for (c, v) in a.row(i) {
                let (r, c) = (inv[i], inv[c]);
                band[r * width + (c + kl - r)] += v;
            }
        }
        let mut lu = BandedLu { n, kl, ku, band, width, pivots: vec![0; n], perm };
        lu.eliminate()?;
        Ok(lu)
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.band[i * self.width + (j + self.kl - i)]
    }

    #[inline]
    fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.band[i * self.width + (j + self.kl - i)]
    }

    fn eliminate(&mut self) -> Result<(), SolveError> {
        let n = self.n;
        let scale = self.band.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for k in 0..n {
            let last_row = (k + self.kl).min(n - 1);
            let mut p = k;
            let mut best = self.at(k, k).abs();
            for i in k + 1..=last_row {
                let v = self.at(i, k).abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if !(best > 1e-300 * scale.max(1e-300)) || best == 0.0 {
                return Err(SolveError::SingularPivot { column: k });
            }
            self.pivots[k] = p;
            let last_col = (k + self.ku).min(n - 1);
            if p != k {
                for j in k..=last_col {
                    let a = self.at(k, j);
                    let b = self.at(p, j);
                    *self.at_mut(k, j) = b;
                    *self.at_mut(p, j) = a;
                }
            }
            let d = self.at(k, k);
            for i in k + 1..=last_row {
                let f = self.at(i, k) / d;
                *self.at_mut(i, k) = f;
                if f == 0.0 {
                    continue;
                }
                for j in k + 1..=last_col {
                    let u = self.at(k, j);
                    *self.at_mut(i, j) -= f * u;
                }
            }
        }
        Ok(())
    }

    /// Solves `A x = b` for the original (unpermuted) matrix.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y: Vec<f64> = self.perm.iter().map(|&old| b[old]).collect();
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                y.swap(k, p);
            }
            let last_row = (k + self.kl).min(n - 1);
            for i in k + 1..=last_row {
                y[i] -= self.at(i, k) * y[k];
            }
        }
        for k in (0..n).rev() {
            let last_col = (k + self.ku).min(n - 1);
            let mut s = y[k];
            for j in k + 1..=last_col {
                s -= self.at(k, j) * y[j];
            }
            y[k] = s / self.at(k, k);
        }
        let mut x = vec![0.0; n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }
}
