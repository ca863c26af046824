//! Time-optimal path parameterization for manipulators in contact.
//!
//! A geometric joint path `q(s)`, `s ∈ [0, 1]`, is retimed by solving a
//! second-order cone program over `a = s̈`, `b = ṡ²`, joint torques and
//! contact wrenches. Hand-object contacts use soft-finger elliptic cones,
//! object-environment and object-object contacts use point contacts with
//! friction.

pub mod contact;
pub mod dynamics;
pub mod lie;
pub mod path;
pub mod robot;
pub mod run;
pub mod scenario;
pub mod system;
pub mod transcription;

pub use topp_conic::{Settings, SolveReport, Status};

use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("inconsistent dimensions: {0}")]
    Dimension(String),

    #[error("path coordinate {0} is outside [0, 1]")]
    Domain(f64),

    #[error("invalid path: {0}")]
    Path(String),

    #[error("invalid model: {0}")]
    Model(String),

    #[error("wrench outside model subspace (component {component} must be zero)")]
    OutsideSubspace { component: usize },

    #[error("{path}: {message}")]
    Schema { path: String, message: String },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("interval {interval}: {message}")]
    Interval { interval: usize, message: String },

    #[error(transparent)]
    Conic(#[from] topp_conic::Error),
}

impl Error {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub(crate) fn schema(path: &Path, err: impl std::fmt::Display) -> Self {
        Error::Schema {
            path: path.display().to_string(),
            message: err.to_string(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
