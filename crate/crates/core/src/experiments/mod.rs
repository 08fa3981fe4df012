//! Runnable versions of the constructions: the helicoid-wrapping family,
//! blow-up rescaling, normal-chord scans, rigidity diagnostics and the
//! fold map.

pub mod bvh;
mod chords;
mod fold;
mod helicoid;
mod rigidity;

pub use chords::{normal_chord_scan, ChordError, ChordOptions, ChordRecord, ChordScan};
pub use fold::{fold_beta, fold_map_analysis, FoldRecord};
pub use helicoid::{
    build_helicoid_member, member_record, run_family, summarize_family, FamilyError, FamilyRecord, FamilyReport,
    HelicoidError, HelicoidMember, HelicoidParams,
};
pub use rigidity::{blowup_rescale, blowup_scale, fit_sphere, hopf_check, HopfRecord, RigidityError};
