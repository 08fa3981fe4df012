//! The scalar fold map `beta(a) = a + sqrt(16 pi / a)` obtained by
//! eliminating `H` from `H^2 a = 16 pi`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_traits::Float;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FoldRecord {
    pub c: f64,
    /// Minimizer `(4 pi)^(1/3)`.
    pub a_star: f64,
    /// Minimum value `3 (4 pi)^(1/3)`.
    pub beta_star: f64,
    /// Ascending.
    pub preimages: Vec<f64>,
}

pub fn fold_beta(a: f64) -> f64 {
    a + (16.0 * PI / a).sqrt()
}

/// Bisection down to adjacent floats; the left branch is steep, so a
/// relative width stop would leave `beta(a) - c` far above rounding level.
fn bisect(mut lo: f64, mut hi: f64, c: f64, increasing: bool) -> f64 {
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let above = fold_beta(mid) > c;
        if above == increasing {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    if (fold_beta(lo) - c).abs() <= (fold_beta(hi) - c).abs() {
        lo
    } else {
        hi
    }
}

pub fn fold_map_analysis(c: f64) -> FoldRecord {
    let a_star = (4.0 * PI).cbrt();
    let beta_star = fold_beta(a_star);
    let preimages = if (c - beta_star).abs() <= 1e-12 {
        vec![a_star]
    } else if c < beta_star || !c.is_finite() {
        Vec::new()
    } else {
        // beta(16 pi / c^2) > c and beta(c) > c bracket the two branches.
        let left = bisect(16.0 * PI / (c * c), a_star, c, false);
        let right = bisect(a_star, c, c, true);
        vec![left, right]
    };
    FoldRecord { c, a_star, beta_star, preimages }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_minimum() {
        let r = fold_map_analysis(10.0);
        assert!((r.a_star - 2.324_894_703_019_252_6).abs() < 1e-12);
        assert!((r.beta_star - 6.974_684_109_057_758).abs() < 1e-12);
        // derivative 1 - 2 sqrt(pi) a^(-3/2) vanishes there
        assert!((1.0 - 2.0 * PI.sqrt() * r.a_star.powf(-1.5)).abs() < 1e-14);
    }

    #[test]
    fn round_sphere_value_is_a_preimage() {
        let c = 4.0 * PI + 2.0;
        let r = fold_map_analysis(c);
        assert!(r.preimages.iter().any(|a| (a - 4.0 * PI).abs() < 1e-9));
    }

    #[test]
    fn below_and_at_minimum() {
        assert!(fold_map_analysis(1.0).preimages.is_empty());
        let star = fold_map_analysis(0.0).beta_star;
        assert_eq!(fold_map_analysis(star).preimages.len(), 1);
    }
}
