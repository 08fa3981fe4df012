//! File formats, report schema and command-line driver for `sflab-core`.

pub mod config;
pub mod error;
pub mod mesh_io;
pub mod report;
pub mod run;
pub mod tables;

pub use config::{Cli, Command, ExecOptions, RunConfig};
pub use error::RunError;
pub use report::{Report, REPORT_SCHEMA_VERSION};
pub use run::{execute, run};
