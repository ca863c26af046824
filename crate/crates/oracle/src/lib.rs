//! Correctness oracles that share no assembly code with the transcription:
//! a phase-plane integrator for contact-free tasks, finite-difference
//! cross-checks and a constraint auditor working from raw models.

pub mod audit;
pub mod fd;
pub mod fixtures;
pub mod phase_plane;

pub use audit::{audit, AuditReport, FamilyReport, AUDIT_TOL};
pub use fd::{fd_suite, FdCheck, FdLedger, FdOptions};
pub use phase_plane::{topp_phase_plane, PhasePlaneProfile};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] topp_core::Error),

    #[error("phase-plane oracle needs a contact-free task")]
    HasContacts,

    #[error("no acceleration bound at s = {s}: the path is dynamically singular")]
    Singular { s: f64 },

    #[error("the boundary speed {sdot} exceeds the velocity limit curve at s = {s}")]
    BoundaryInfeasible { s: f64, sdot: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
