//! Closed genus-0 surfaces wrapping a helicoid, with area growing linearly in
//! the number of half-turns while the mean curvature stays in a fixed
//! positive band.
//!
//! Each member is a twisted elliptic bar: the ellipse with semi-axes
//! `(radius, half_thickness)` rotates at rate `pitch` along `z`, so its major
//! axis sweeps the helicoid `(rho cos t, rho sin t, t / pitch)` exactly. The
//! straight part spans `n` half-turns; both ends close with ellipsoidal caps.
//! The pitch is held fixed across the family and the straight part lengthens
//! with `n`, because at fixed height the sheets would approach each other
//! and force `H` to grow like `n`.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};

use num_traits::Float;
use thiserror::Error;

use super::bvh::Bvh;
use super::chords::{normal_chord_scan, ChordOptions};
use crate::curvature::{compute_curvature, total_norms, CurvatureError, CurvatureField};
use crate::math::Vec3;
use crate::mesh::{ring_stack, MeshError, TriangleMesh};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HelicoidParams {
    /// Number of half-turns of the straight part.
    pub wraps: u32,
    /// Twist rate (radians per unit length).
    pub pitch: f64,
    /// Radial extent of the helicoid ruling.
    pub radius: f64,
    /// Semi-minor axis of the cross-section.
    pub half_thickness: f64,
    /// Length of each end cap along `z`.
    pub cap_length: f64,
    /// Points around each cross-section; rows along `z` are `resolution / 3`
    /// per unit length.
    pub resolution: usize,
    /// Latitude steps per cap.
    pub cap_rows: usize,
    /// Smoothing target for the minimum mean curvature.
    pub h_min: f64,
    pub max_smoothing_iterations: usize,
}

impl Default for HelicoidParams {
    fn default() -> Self {
        HelicoidParams {
            wraps: 2,
            pitch: 1.0,
            radius: 1.0,
            half_thickness: 0.4,
            cap_length: 1.0,
            resolution: 48,
            cap_rows: 12,
            h_min: 0.05,
            max_smoothing_iterations: 50,
        }
    }
}

impl HelicoidParams {
    /// Half-height `n pi / (2 pitch)` of the helicoid slab.
    pub fn half_height(&self) -> f64 {
        self.wraps as f64 * PI / (2.0 * self.pitch)
    }

    pub fn with_wraps(&self, wraps: u32) -> Self {
        HelicoidParams { wraps, ..*self }
    }

    fn validate(&self) -> Result<(), HelicoidError> {
        if self.wraps < 1 {
            return Err(HelicoidError::InvalidParameter("wraps must be at least 1"));
        }
        if !(self.pitch > 0.0 && self.pitch.is_finite()) {
            return Err(HelicoidError::InvalidParameter("pitch must be positive"));
        }
        if !(self.radius > 0.0 && self.cap_length > 0.0) {
            return Err(HelicoidError::InvalidParameter("radius and cap length must be positive"));
        }
        if !(self.half_thickness > 0.0 && self.half_thickness < self.radius) {
            return Err(HelicoidError::ThicknessInfeasible { half_thickness: self.half_thickness, radius: self.radius });
        }
        if self.resolution < 16 || self.cap_rows < 2 {
            return Err(HelicoidError::InvalidParameter("resolution must be at least 16 and cap rows at least 2"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HelicoidError {
    #[error("invalid helicoid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("cross-section half-thickness {half_thickness} must be below the radius {radius}")]
    ThicknessInfeasible { half_thickness: f64, radius: f64 },
    #[error("faces {0} and {1} intersect")]
    SelfIntersection(usize, usize),
    #[error("smoothing stopped with min H = {min_h} at vertex {vertex} (z = {z})")]
    SmoothingStalled { min_h: f64, vertex: usize, z: f64 },
    #[error("wrap counts must be strictly increasing")]
    NotIncreasing,
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Curvature(#[from] CurvatureError),
    #[error(transparent)]
    Chords(#[from] super::chords::ChordError),
}

/// A built member with its curvature and smoothing history.
#[derive(Debug, Clone)]
pub struct HelicoidMember {
    pub params: HelicoidParams,
    pub mesh: TriangleMesh,
    pub field: CurvatureField,
    pub smoothing_iterations: usize,
}

fn bar_mesh(p: &HelicoidParams) -> Result<TriangleMesh, MeshError> {
    let z0 = p.half_height();
    let mut profile: Vec<(f64, f64)> = Vec::new();
    for k in 1..p.cap_rows {
        let t = FRAC_PI_2 * k as f64 / p.cap_rows as f64;
        profile.push((-z0 - p.cap_length * t.cos(), t.sin()));
    }
    let rows_per_unit = p.resolution as f64 / 3.0;
    let body = ((2.0 * z0 * rows_per_unit).ceil() as usize).max(1);
    for k in 0..=body {
        profile.push((-z0 + 2.0 * z0 * k as f64 / body as f64, 1.0));
    }
    for k in (1..p.cap_rows).rev() {
        let t = FRAC_PI_2 * k as f64 / p.cap_rows as f64;
        profile.push((z0 + p.cap_length * t.cos(), t.sin()));
    }
    let m = p.resolution;
    let rings: Vec<Vec<Vec3>> = profile
        .iter()
        .map(|&(z, s)| {
            let (st, ct) = (p.pitch * z).sin_cos();
            (0..m)
                .map(|j| {
                    let a = 2.0 * PI * j as f64 / m as f64;
                    let x = s * p.radius * a.cos();
                    let y = s * p.half_thickness * a.sin();
                    Vec3::new(x * ct - y * st, x * st + y * ct, z)
                })
                .collect()
        })
        .collect();
    ring_stack(Vec3::new(0.0, 0.0, -z0 - p.cap_length), &rings, Vec3::new(0.0, 0.0, z0 + p.cap_length))
}

fn min_mean(field: &CurvatureField) -> (usize, f64) {
    field.mean.iter().copied().enumerate().fold((0, f64::INFINITY), |b, (i, h)| if h < b.1 { (i, h) } else { b })
}

/// Builds a member, runs the smoothing pass if needed, and checks embeddedness.
///
/// Smoothing offsets vertices with `H < h_min` outward along the normal by
/// `tau * h^2 * (h_min - H)` (`h` the mean one-ring edge length), halving
/// `tau` until the minimum of `H` improves.
pub fn build_helicoid_member(params: &HelicoidParams) -> Result<HelicoidMember, HelicoidError> {
    params.validate()?;
    let mut mesh = bar_mesh(params)?;
    let mut field = compute_curvature(&mesh)?;
    let mut iterations = 0;
    let mut tau = 1.0;
    while min_mean(&field).1 < params.h_min && iterations < params.max_smoothing_iterations {
        let current = min_mean(&field).1;
        let mut improved = None;
        while tau > 1e-4 {
            let pos: Vec<Vec3> = (0..mesh.vertex_count())
                .map(|v| {
                    let x = mesh.position(v);
                    let deficit = params.h_min - field.mean[v];
                    if deficit <= 0.0 {
                        return x;
                    }
                    let h = mesh.neighbors(v).map(|j| (mesh.position(j) - x).norm()).sum::<f64>()
                        / mesh.neighbors(v).count() as f64;
                    x + field.normals[v] * (tau * h * h * deficit)
                })
                .collect();
            if let Ok(candidate) = mesh.with_positions(pos) {
                if let Ok(f) = compute_curvature(&candidate) {
                    if min_mean(&f).1 > current {
                        improved = Some((candidate, f));
                        break;
                    }
                }
            }
            tau *= 0.5;
        }
        let Some((m, f)) = improved else { break };
        mesh = m;
        field = f;
        iterations += 1;
    }
    let (vertex, min_h) = min_mean(&field);
    if min_h < params.h_min {
        return Err(HelicoidError::SmoothingStalled { min_h, vertex, z: mesh.position(vertex).z });
    }
    if let Some((f, g)) = Bvh::new(&mesh).first_self_intersection() {
        return Err(HelicoidError::SelfIntersection(f, g));
    }
    Ok(HelicoidMember { params: *params, mesh, field, smoothing_iterations: iterations })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FamilyRecord {
    pub wraps: u32,
    pub half_height: f64,
    pub vertices: usize,
    pub area: f64,
    pub min_h: f64,
    pub max_h: f64,
    pub max_shape_norm: f64,
    pub shape_norm_sq: f64,
    pub min_chord: f64,
    pub smoothing_iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FamilyReport {
    pub members: Vec<FamilyRecord>,
    pub area_increasing: bool,
    /// `[h_min, 1.5 x max H of the smallest member]`.
    pub h_band: [f64; 2],
    pub within_band: bool,
}

/// Failure with the records of the members built before it.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("family member with {wraps} wraps failed: {source}")]
pub struct FamilyError {
    pub wraps: u32,
    pub partial: Vec<FamilyRecord>,
    #[source]
    pub source: HelicoidError,
}

pub fn member_record(member: &HelicoidMember) -> Result<FamilyRecord, HelicoidError> {
    let f = &member.field;
    let totals = total_norms(f);
    let chords = normal_chord_scan(&member.mesh, f, &ChordOptions::default())?;
    Ok(FamilyRecord {
        wraps: member.params.wraps,
        half_height: member.params.half_height(),
        vertices: member.mesh.vertex_count(),
        area: member.mesh.total_area(),
        min_h: f.mean.iter().copied().fold(f64::INFINITY, f64::min),
        max_h: f.mean.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        max_shape_norm: (0..f.vertex_count()).map(|v| f.shape_op_norm(v)).fold(0.0, f64::max),
        shape_norm_sq: totals.shape_sq,
        min_chord: chords.min_length,
        smoothing_iterations: member.smoothing_iterations,
    })
}

/// Builds and measures one member per wrap count.
pub fn run_family(wraps: &[u32], base: &HelicoidParams) -> Result<FamilyReport, FamilyError> {
    if wraps.is_empty() || wraps.windows(2).any(|w| w[1] <= w[0]) {
        return Err(FamilyError { wraps: wraps.first().copied().unwrap_or(0), partial: Vec::new(), source: HelicoidError::NotIncreasing });
    }
    let mut members = Vec::with_capacity(wraps.len());
    for &n in wraps {
        let record = build_helicoid_member(&base.with_wraps(n)).and_then(|m| member_record(&m));
        match record {
            Ok(r) => members.push(r),
            Err(source) => return Err(FamilyError { wraps: n, partial: members, source }),
        }
    }
    Ok(summarize_family(members, base.h_min))
}

/// Family-level flags from already measured members (smallest first).
pub fn summarize_family(members: Vec<FamilyRecord>, h_min: f64) -> FamilyReport {
    let area_increasing = members.windows(2).all(|w| w[1].area > w[0].area);
    let h_band = [h_min, 1.5 * members.first().map_or(f64::NAN, |m| m.max_h)];
    let within_band = members.iter().all(|m| m.min_h >= h_band[0] && m.max_h <= h_band[1]);
    FamilyReport { members, area_increasing, h_band, within_band }
}
