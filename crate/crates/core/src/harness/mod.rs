//! Experiment driver: configuration, initial-condition registry, trajectories
//! with energy traces and snapshots, convergence studies and the property suite.

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::matrix::MatrixError;
use crate::spectral::SpectralError;
use crate::vector::VectorError;

pub mod config;
pub mod converge;
pub mod field;
pub mod run;
pub mod snapshot;
pub mod trace;
pub mod verify;

pub use config::{InitialCondition, Model, RunConfig};
pub use converge::{convergence_study, halving_ladder, ConvergenceReport, REFERENCE_REFINEMENT};
pub use field::Field;
pub use run::{run_experiment, RunSummary};
pub use snapshot::{read_snapshot, write_snapshot, Snapshot, SnapshotHeader};
pub use trace::{EnergyTrace, TraceRow, TRACE_HEADER};
pub use verify::{verify_suite, Scope, VerifyReport};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{0}")]
    Validation(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: malformed snapshot: {reason}")]
    Snapshot { path: PathBuf, reason: String },
    #[error("non-finite value {value} at node {node} after step {step}")]
    NonFinite { step: usize, node: usize, value: f64 },
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error(transparent)]
    Vector(#[from] VectorError),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

impl From<SpectralError> for HarnessError {
    fn from(e: SpectralError) -> Self {
        HarnessError::Vector(e.into())
    }
}

impl HarnessError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// Process exit status: 1 for invalid input, 2 for a broken invariant, 3 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Validation(_) => 1,
            HarnessError::Vector(_) | HarnessError::Matrix(_) => match self.spectral_cause() {
                Some(SpectralError::NonFinite { .. }) => 2,
                _ => 1,
            },
            HarnessError::NonFinite { .. } | HarnessError::Invariant(_) => 2,
            HarnessError::Io { .. } | HarnessError::Snapshot { .. } => 3,
        }
    }

    fn spectral_cause(&self) -> Option<&SpectralError> {
        match self {
            HarnessError::Vector(VectorError::Spectral(e))
            | HarnessError::Matrix(MatrixError::Spectral(e))
            | HarnessError::Matrix(MatrixError::Vector(VectorError::Spectral(e))) => Some(e),
            _ => None,
        }
    }
}
