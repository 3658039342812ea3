//! Sensitivity analysis and calibration on top of the server.

pub mod batch;
pub mod calibrate;
pub mod ea;
pub mod output;
pub mod sa;
pub mod saltelli;
pub mod sobol;
pub mod sobol_seq;
pub mod stability;

use thiserror::Error;

use crate::client::ClientError;

pub use batch::{run_batch, run_stability_batch, BatchError, RunPlan};
pub use ea::{ea_simple, EaConfig, EaOutcome, GenerationStats, Individual, Lattice, MutationBounds};
pub use saltelli::{saltelli_sample, BaseSequence, SobolProblem};
pub use sobol::{sobol_analyze, SensitivityResult};
pub use stability::stability_score;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("degenerate output: {0}")]
    Degenerate(String),
    #[error(transparent)]
    Batch(#[from] BatchError),
    #[error(transparent)]
    Client(#[from] ClientError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, AnalysisError>;

pub(crate) fn invalid(msg: impl Into<String>) -> AnalysisError {
    AnalysisError::InvalidInput(msg.into())
}
