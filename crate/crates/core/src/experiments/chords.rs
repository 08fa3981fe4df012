//! Inward normal chords: the distance from each vertex to the first point
//! of the surface met along the inward normal.

use alloc::vec::Vec;

use thiserror::Error;

use super::bvh::Bvh;
use crate::curvature::CurvatureField;
use crate::math::{angle_between, Vec3};
use crate::mesh::TriangleMesh;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChordError {
    #[error("ray from vertex {0} left the mesh without a hit")]
    RayEscaped(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ChordOptions {
    /// Both end angles below this count as a near-orthogonal chord (radians).
    pub orthogonality_threshold: f64,
    pub kappa: f64,
}

impl Default for ChordOptions {
    fn default() -> Self {
        ChordOptions { orthogonality_threshold: 5f64.to_radians(), kappa: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ChordRecord {
    pub source: usize,
    pub hit: Vec3,
    pub hit_face: usize,
    pub length: f64,
    /// Angle between the chord and the normal line at the source, in `[0, pi/2]`.
    pub source_angle: f64,
    /// Angle between the chord and the interpolated normal line at the hit.
    pub hit_angle: f64,
    pub near_orthogonal: bool,
    /// `-2 kappa l - (H(p) + H(p'))`, recorded for near-orthogonal chords.
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub frankel: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ChordScan {
    pub records: Vec<ChordRecord>,
    pub min_length: f64,
}

fn line_angle(a: Vec3, b: Vec3) -> f64 {
    let t = angle_between(a, b);
    t.min(core::f64::consts::PI - t)
}

pub fn normal_chord_scan(mesh: &TriangleMesh, field: &CurvatureField, opts: &ChordOptions) -> Result<ChordScan, ChordError> {
    let bvh = Bvh::new(mesh);
    let scale = mesh.quality().max_edge_length;
    let mut records = Vec::with_capacity(mesh.vertex_count());
    for v in 0..mesh.vertex_count() {
        let p = mesh.position(v);
        let dir = -field.normals[v];
        let hit = bvh.cast(p, dir, 1e-9 * scale, Some(v)).ok_or(ChordError::RayEscaped(v))?;
        let idx = mesh.face(hit.face);
        let hit_normal = (0..3).fold(Vec3::ZERO, |n, k| n + field.normals[idx[k]] * hit.bary[k]).normalized();
        let hit_h: f64 = (0..3).map(|k| field.mean[idx[k]] * hit.bary[k]).sum();
        let source_angle = line_angle(dir, field.normals[v]);
        let hit_angle = line_angle(dir, hit_normal);
        let near_orthogonal = source_angle < opts.orthogonality_threshold && hit_angle < opts.orthogonality_threshold;
        let frankel = near_orthogonal.then(|| -2.0 * opts.kappa * hit.t - (field.mean[v] + hit_h));
        records.push(ChordRecord {
            source: v,
            hit: p + dir * hit.t,
            hit_face: hit.face,
            length: hit.t,
            source_angle,
            hit_angle,
            near_orthogonal,
            frankel,
        });
    }
    let min_length = records.iter().map(|r| r.length).fold(f64::INFINITY, f64::min);
    Ok(ChordScan { records, min_length })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvature::compute_curvature;
    use crate::mesh::{generate_capsule, generate_icosphere};

    #[test]
    fn sphere_chords_are_diameters() {
        let m = generate_icosphere(3, 1.0).unwrap();
        let f = compute_curvature(&m).unwrap();
        let scan = normal_chord_scan(&m, &f, &ChordOptions::default()).unwrap();
        for r in &scan.records {
            assert!((r.length - 2.0).abs() < 1e-3);
            assert!(r.near_orthogonal);
            assert!((r.frankel.unwrap() + 4.0).abs() < 0.05);
        }
    }

    #[test]
    fn capsule_chord_is_tube_diameter() {
        let m = generate_capsule(0.5, 2.0, 48, 12, 24).unwrap();
        let f = compute_curvature(&m).unwrap();
        let scan = normal_chord_scan(&m, &f, &ChordOptions::default()).unwrap();
        assert!((scan.min_length - 1.0).abs() < 0.01, "{}", scan.min_length);
    }
}
