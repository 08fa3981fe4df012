//! Analytic-surface generators used as fixtures.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_traits::Float;

use super::{MeshError, TriangleMesh};
use crate::math::Vec3;

/// Largest accepted icosphere subdivision level (V = 655 362 at level 8).
pub const MAX_ICOSPHERE_LEVEL: u32 = 8;

fn unit_icosphere(level: u32) -> (Vec<Vec3>, Vec<[u32; 3]>) {
    let t = (1.0 + 5.0f64.sqrt()) / 2.0;
    let mut pos: Vec<Vec3> = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vec3::new(x, y, z).normalized())
    .collect();
    let mut faces: Vec<[u32; 3]> = alloc::vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..level {
        let mut midpoint: BTreeMap<(u32, u32), u32> = BTreeMap::new();
        let mut next_faces = Vec::with_capacity(faces.len() * 4);
        let mut mid = |a: u32, b: u32, pos: &mut Vec<Vec3>| -> u32 {
            let key = (a.min(b), a.max(b));
            *midpoint.entry(key).or_insert_with(|| {
                let p = ((pos[a as usize] + pos[b as usize]) * 0.5).normalized();
                pos.push(p);
                (pos.len() - 1) as u32
            })
        };
        for &[a, b, c] in &faces {
            let ab = mid(a, b, &mut pos);
            let bc = mid(b, c, &mut pos);
            let ca = mid(c, a, &mut pos);
            next_faces.push([a, ab, ca]);
            next_faces.push([b, bc, ab]);
            next_faces.push([c, ca, bc]);
            next_faces.push([ab, bc, ca]);
        }
        faces = next_faces;
    }
    (pos, faces)
}

/// Geodesic sphere from the subdivided icosahedron; `V = 10 * 4^level + 2`.
///
/// Positions are the unit-sphere positions multiplied by `radius`.
pub fn generate_icosphere(level: u32, radius: f64) -> Result<TriangleMesh, MeshError> {
    if level > MAX_ICOSPHERE_LEVEL {
        return Err(MeshError::InvalidParameter("icosphere level must be at most 8"));
    }
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(MeshError::InvalidParameter("icosphere radius must be positive"));
    }
    let (pos, faces) = unit_icosphere(level);
    TriangleMesh::new(pos.into_iter().map(|p| p * radius).collect(), faces)
}

/// Ellipsoid with semi-axes `(a, b, c)` on the icosphere connectivity.
pub fn generate_ellipsoid(a: f64, b: f64, c: f64, level: u32) -> Result<TriangleMesh, MeshError> {
    if !(a > 0.0 && b > 0.0 && c > 0.0) || !(a.is_finite() && b.is_finite() && c.is_finite()) {
        return Err(MeshError::InvalidParameter("ellipsoid semi-axes must be positive"));
    }
    if level > MAX_ICOSPHERE_LEVEL {
        return Err(MeshError::InvalidParameter("icosphere level must be at most 8"));
    }
    let (pos, faces) = unit_icosphere(level);
    let pos = pos.into_iter().map(|p| Vec3::new(a * p.x, b * p.y, c * p.z)).collect();
    TriangleMesh::new(pos, faces)
}

/// Torus of revolution about the z axis, `n_u` steps around the axis and
/// `n_v` around the tube.
pub fn generate_torus(major: f64, minor: f64, n_u: usize, n_v: usize) -> Result<TriangleMesh, MeshError> {
    if !(minor > 0.0 && major > minor) {
        return Err(MeshError::InvalidParameter("torus requires R > r > 0"));
    }
    if n_u < 3 || n_v < 3 {
        return Err(MeshError::InvalidParameter("torus resolution must be at least 3x3"));
    }
    let mut pos = Vec::with_capacity(n_u * n_v);
    for i in 0..n_u {
        let u = 2.0 * PI * i as f64 / n_u as f64;
        for j in 0..n_v {
            let v = 2.0 * PI * j as f64 / n_v as f64;
            let w = major + minor * v.cos();
            pos.push(Vec3::new(w * u.cos(), w * u.sin(), minor * v.sin()));
        }
    }
    let idx = |i: usize, j: usize| ((i % n_u) * n_v + (j % n_v)) as u32;
    let mut faces = Vec::with_capacity(2 * n_u * n_v);
    for i in 0..n_u {
        for j in 0..n_v {
            let a = idx(i, j);
            let b = idx(i + 1, j);
            let c = idx(i + 1, j + 1);
            let d = idx(i, j + 1);
            faces.push([a, b, c]);
            faces.push([a, c, d]);
        }
    }
    TriangleMesh::new(pos, faces)
}

/// Closed genus-0 mesh from a stack of rings between two poles.
///
/// Every ring must have the same number of points, ordered counterclockwise
/// seen from above the top pole; rings go from bottom to top.
pub fn ring_stack(bottom: Vec3, rings: &[Vec<Vec3>], top: Vec3) -> Result<TriangleMesh, MeshError> {
    let Some(first) = rings.first() else {
        return Err(MeshError::InvalidParameter("ring stack needs at least one ring"));
    };
    let m = first.len();
    if m < 3 || rings.iter().any(|r| r.len() != m) {
        return Err(MeshError::InvalidParameter("rings must share a size of at least 3"));
    }
    let mut pos = Vec::with_capacity(rings.len() * m + 2);
    pos.push(bottom);
    for r in rings {
        pos.extend_from_slice(r);
    }
    pos.push(top);
    let top_index = (pos.len() - 1) as u32;
    let ring = |r: usize, j: usize| (1 + r * m + j % m) as u32;
    let mut faces = Vec::with_capacity(2 * m * rings.len());
    for j in 0..m {
        faces.push([0, ring(0, j + 1), ring(0, j)]);
    }
    for r in 0..rings.len() - 1 {
        for j in 0..m {
            let a = ring(r, j);
            let b = ring(r, j + 1);
            let c = ring(r + 1, j);
            let d = ring(r + 1, j + 1);
            faces.push([a, b, d]);
            faces.push([a, d, c]);
        }
    }
    let last = rings.len() - 1;
    for j in 0..m {
        faces.push([top_index, ring(last, j), ring(last, j + 1)]);
    }
    TriangleMesh::new(pos, faces)
}

/// Capsule: a cylinder of the given radius and straight length along z,
/// closed by hemispherical caps. `n_around` points per ring, `n_cap` latitude
/// steps per cap, and `n_body` steps along the straight part.
pub fn generate_capsule(
    radius: f64,
    length: f64,
    n_around: usize,
    n_cap: usize,
    n_body: usize,
) -> Result<TriangleMesh, MeshError> {
    if !(radius > 0.0) || !(length >= 0.0) {
        return Err(MeshError::InvalidParameter("capsule requires radius > 0 and length >= 0"));
    }
    if n_around < 3 || n_cap < 2 || n_body < 1 {
        return Err(MeshError::InvalidParameter("capsule resolution too small"));
    }
    let half = 0.5 * length;
    let mut profile: Vec<(f64, f64)> = Vec::new();
    for k in 1..n_cap {
        let phi = 0.5 * PI * k as f64 / n_cap as f64;
        profile.push((radius * phi.sin(), -half - radius * phi.cos()));
    }
    for k in 0..=n_body {
        profile.push((radius, -half + length * k as f64 / n_body as f64));
    }
    for k in (1..n_cap).rev() {
        let phi = 0.5 * PI * k as f64 / n_cap as f64;
        profile.push((radius * phi.sin(), half + radius * phi.cos()));
    }
    let rings: Vec<Vec<Vec3>> = profile
        .iter()
        .map(|&(r, z)| {
            (0..n_around)
                .map(|j| {
                    let a = 2.0 * PI * j as f64 / n_around as f64;
                    Vec3::new(r * a.cos(), r * a.sin(), z)
                })
                .collect()
        })
        .collect();
    ring_stack(Vec3::new(0.0, 0.0, -half - radius), &rings, Vec3::new(0.0, 0.0, half + radius))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn icosphere_counts() {
        let m = generate_icosphere(0, 1.0).unwrap();
        assert_eq!((m.vertex_count(), m.edge_count(), m.face_count()), (12, 30, 20));
        assert_eq!(m.euler_characteristic(), 2);
        let m = generate_icosphere(2, 1.0).unwrap();
        assert_eq!(m.vertex_count(), 162);
        assert_eq!(m.euler_characteristic(), 2);
        for level in 0..5 {
            let m = generate_icosphere(level, 1.0).unwrap();
            assert_eq!(m.vertex_count(), 10 * 4usize.pow(level) + 2);
            assert!(m.signed_volume() > 0.0);
        }
    }

    #[test]
    fn icosphere_radius_and_scaling() {
        let m2 = generate_icosphere(1, 2.0).unwrap();
        let m1 = generate_icosphere(1, 1.0).unwrap();
        for (p, q) in m2.positions().iter().zip(m1.positions()) {
            assert!((p.norm() - 2.0).abs() <= 4.0 * f64::EPSILON);
            assert_eq!(*p, *q * 2.0);
        }
    }

    #[test]
    fn icosphere_level_guard() {
        assert!(generate_icosphere(9, 1.0).is_err());
        assert!(generate_icosphere(1, 0.0).is_err());
    }

    #[test]
    fn ellipsoid_fixture() {
        let e = generate_ellipsoid(1.0, 1.0, 1.0, 2).unwrap();
        let s = generate_icosphere(2, 1.0).unwrap();
        assert_eq!(e.positions(), s.positions());
        let e = generate_ellipsoid(2.0, 1.0, 1.0, 3).unwrap();
        assert_eq!(e.euler_characteristic(), 2);
        for p in e.positions() {
            let r = (p.x / 2.0).powi(2) + p.y * p.y + p.z * p.z;
            assert!((r - 1.0).abs() < 1e-15);
        }
        assert!(generate_ellipsoid(0.0, 1.0, 1.0, 3).is_err());
    }

    #[test]
    fn torus_fixture() {
        let t = generate_torus(2.0, 1.0, 64, 32).unwrap();
        assert_eq!(t.genus(), 1);
        assert!(t.signed_volume() > 0.0);
        let t = generate_torus(2.0, 1.0, 3, 3).unwrap();
        assert_eq!(t.vertex_count(), 9);
        assert_eq!(t.euler_characteristic(), 0);
        assert!(generate_torus(1.0, 2.0, 8, 8).is_err());
        assert!(generate_torus(2.0, 1.0, 2, 8).is_err());
    }

    #[test]
    fn capsule_fixture() {
        let c = generate_capsule(0.5, 2.0, 32, 8, 16).unwrap();
        assert_eq!(c.euler_characteristic(), 2);
        assert!(c.signed_volume() > 0.0);
    }
}
