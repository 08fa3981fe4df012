use serde::Serialize;
use sflab_core::constraints::ConstraintError;
use sflab_core::curvature::CurvatureError;
use sflab_core::symbol::SymbolError;
use sflab_core::uniformize::UniformizeError;
use sflab_core::MeshError;
use thiserror::Error;

use crate::mesh_io::MeshIoError;

/// Failure of a run, tagged with the module it came from.
#[derive(Debug, Error)]
pub enum RunError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    MeshIo(#[from] MeshIoError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Curvature(#[from] CurvatureError),
    #[error(transparent)]
    Constraints(#[from] ConstraintError),
    #[error(transparent)]
    Uniformize(#[from] UniformizeError),
    #[error(transparent)]
    Symbol(#[from] SymbolError),
    #[error("{0}")]
    Experiments(String),
    #[error("{0}")]
    Report(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl RunError {
    pub fn module(&self) -> &'static str {
        match self {
            RunError::Config(_) => "config",
            RunError::MeshIo(_) | RunError::Mesh(_) => "mesh-core",
            RunError::Curvature(_) => "curvature",
            RunError::Constraints(_) => "constraints",
            RunError::Uniformize(_) => "uniformize",
            RunError::Symbol(_) => "symbol",
            RunError::Experiments(_) => "experiments",
            RunError::Report(_) | RunError::Io { .. } => "cli-report",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            _ => 1,
        }
    }

    /// `{"error": {"module": ..., "message": ...}}`
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Inner<'a> {
            module: &'a str,
            message: String,
        }
        #[derive(Serialize)]
        struct Outer<'a> {
            error: Inner<'a>,
        }
        serde_json::to_string(&Outer { error: Inner { module: self.module(), message: self.to_string() } })
            .expect("error serializes")
    }
}

pub fn experiments<E: std::fmt::Display>(e: E) -> RunError {
    RunError::Experiments(e.to_string())
}
