//! Möbius transformations of the unit sphere as unimodular 2x2 complex matrices.

use num_complex::Complex64 as C64;
use num_traits::Float;

use crate::math::Vec3;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Homogeneous stereographic coordinates `(a, b)` of a unit vector, with
/// `a / b = (x + iy) / (1 - z)`; the second chart is used near the north pole.
pub fn to_homogeneous(p: Vec3) -> [C64; 2] {
    if p.z <= 0.0 {
        [C64::new(p.x, p.y), C64::new(1.0 - p.z, 0.0)]
    } else {
        [C64::new(1.0 + p.z, 0.0), C64::new(p.x, -p.y)]
    }
}

pub fn from_homogeneous([a, b]: [C64; 2]) -> Vec3 {
    let ab = a * b.conj();
    let (na, nb) = (a.norm_sqr(), b.norm_sqr());
    let s = na + nb;
    Vec3::new(2.0 * ab.re / s, 2.0 * ab.im / s, (na - nb) / s)
}

/// Orientation-preserving conformal automorphism of the sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MobiusMap {
    m: [[C64; 2]; 2],
}

impl Default for MobiusMap {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl MobiusMap {
    pub const IDENTITY: MobiusMap = MobiusMap { m: [[ONE, ZERO], [ZERO, ONE]] };

    /// Scales an invertible matrix to determinant one. `None` if singular.
    pub fn from_matrix(m: [[C64; 2]; 2]) -> Option<MobiusMap> {
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        let scale = m.iter().flatten().map(|z| z.norm_sqr()).fold(0.0, f64::max);
        if !(det.norm() > 1e-14 * scale) || !det.is_finite() {
            return None;
        }
        let s = ONE / det.sqrt();
        Some(MobiusMap { m: [[m[0][0] * s, m[0][1] * s], [m[1][0] * s, m[1][1] * s]] })
    }

    pub fn matrix(&self) -> [[C64; 2]; 2] {
        self.m
    }

    pub fn det(&self) -> C64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    /// `self o other` (apply `other` first).
    pub fn compose(&self, other: &MobiusMap) -> MobiusMap {
        let (a, b) = (self.m, other.m);
        let mut c = [[ZERO; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        MobiusMap::from_matrix(c).expect("product of unimodular matrices is invertible")
    }

    pub fn inverse(&self) -> MobiusMap {
        let m = self.m;
        MobiusMap { m: [[m[1][1], -m[0][1]], [-m[1][0], m[0][0]]] }
    }

    pub fn apply_homogeneous(&self, [a, b]: [C64; 2]) -> [C64; 2] {
        [self.m[0][0] * a + self.m[0][1] * b, self.m[1][0] * a + self.m[1][1] * b]
    }

    pub fn apply(&self, p: Vec3) -> Vec3 {
        from_homogeneous(self.apply_homogeneous(to_homogeneous(p)))
    }

    /// The unique map sending `from[k]` to `to[k]`. `None` if either triple
    /// has coincident points.
    pub fn from_three_points(from: [Vec3; 3], to: [Vec3; 3]) -> Option<MobiusMap> {
        let a = normalizer(from)?;
        let b = normalizer(to)?;
        Some(b.inverse().compose(&a))
    }

    /// Frobenius distance to another map, minimized over the sign ambiguity
    /// of the matrix representative.
    pub fn matrix_distance(&self, other: &MobiusMap) -> f64 {
        let d = |s: f64| {
            let mut acc = 0.0;
            for i in 0..2 {
                for j in 0..2 {
                    acc += (self.m[i][j] - other.m[i][j] * s).norm_sqr();
                }
            }
            acc.sqrt()
        };
        d(1.0).min(d(-1.0))
    }
}

fn bracket(a: [C64; 2], b: [C64; 2]) -> C64 {
    a[0] * b[1] - a[1] * b[0]
}

/// Map sending the three points to `0`, `infinity`, `1`.
fn normalizer(p: [Vec3; 3]) -> Option<MobiusMap> {
    let [p1, p2, p3] = p.map(to_homogeneous);
    let r = bracket(p3, p2);
    let s = bracket(p3, p1);
    // w -> [w, p1][p3, p2] / ([w, p2][p3, p1])
    MobiusMap::from_matrix([[p1[1] * r, -p1[0] * r], [p2[1] * s, -p2[0] * s]])
}

/// Cross ratio `(z1, z2; z3, z4)` of four sphere points in homogeneous form.
pub fn cross_ratio(p: [Vec3; 4]) -> C64 {
    let [a, b, c, d] = p.map(to_homogeneous);
    bracket(a, c) * bracket(b, d) / (bracket(a, d) * bracket(b, c))
}

/// Great-circle distance between unit vectors.
pub fn spherical_distance(a: Vec3, b: Vec3) -> f64 {
    a.cross(b).norm().atan2(a.dot(b))
}

/// Conformal recentering `x -> (1 - |c|^2)(x - c)/|x - c|^2 - c`, `|c| < 1`.
pub fn recentering(c: Vec3, x: Vec3) -> Vec3 {
    let d = x - c;
    d * ((1.0 - c.norm_squared()) / d.norm_squared()) - c
}
