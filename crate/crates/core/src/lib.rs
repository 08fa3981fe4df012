//! Numerical checks for the geometry of closed immersed surfaces in space
//! forms: discrete curvature, the Gauss and Codazzi constraints, integral
//! identities, conformal uniformization with marked-point normalization,
//! frozen-coefficient boundary symbols, and the helicoid area blow-up family.
//!
//! The crate is `no_std` and needs only `alloc`. File formats, reports and
//! the command-line driver live in the `sflab` crate.

#![no_std]
// `Float` supplies the f64 math methods under no_std. When std is in the
// crate graph (tests, or a dependent enabling it) the inherent methods win
// and the import goes unused.
#![allow(unused_imports)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod constraints;
pub mod curvature;
pub mod experiments;
pub mod math;
pub mod mesh;
pub mod sparse;
pub mod symbol;
pub mod uniformize;

pub use curvature::{CurvatureField, ScaleFactor};
pub use math::Vec3;
pub use mesh::{MeshError, MeshQuality, TriangleMesh};
