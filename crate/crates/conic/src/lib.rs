//! Second-order cone programming for trajectory transcription.
//!
//! The crate is organised in three layers:
//!
//! - [`program`]: a modelling layer ([`ConicProgram`]) with named variable
//!   slices, linear equalities, two-sided bounds, pinned variables and
//!   second-order cones over affine expressions. Programs can be dumped to
//!   a versioned JSON format for offline inspection.
//! - [`canonical`]: lowering of a [`ConicProgram`] into the standard form
//!   `min cᵀx  s.t.  Ax + s = b, s ∈ K`, where `K` is a product of zero,
//!   nonnegative and second-order cones.
//! - [`ipm`]: a homogeneous self-dual interior-point method with
//!   Nesterov-Todd scaling and Mehrotra predictor-corrector steps, backed by
//!   a sparse quasi-definite LDLᵀ factorization ([`ldl`]).
//!
//! [`verify`] recomputes optimality residuals and infeasibility certificates
//! without touching solver internals.

pub mod canonical;
pub mod catalog;
pub mod cones;
mod equilibrate;
pub mod ipm;
mod kkt;
pub mod ldl;
pub mod program;
pub mod sparse;
pub mod verify;

pub use canonical::{canonicalize, Cone, RowMap, StandardConicForm};
pub use ipm::{solve, Certificate, Residuals, Settings, SolveReport, Status};
pub use program::{ConicProgram, LinExpr, ProgramDump, RowTag, VarBlock};
pub use sparse::CscMatrix;
pub use verify::{verify_certificate, verify_kkt};

/// Errors raised while building, lowering or loading conic programs.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("inconsistent dimensions: {0}")]
    Dimension(String),

    #[error("cone {index} references an empty variable slice")]
    EmptyCone { index: usize },

    #[error("unsupported problem dump: {0}")]
    Format(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
