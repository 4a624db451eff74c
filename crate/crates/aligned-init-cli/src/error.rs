//! CLI error type and its process exit codes.

use std::io;
use std::path::PathBuf;

use aligned_init::data::DataError;
use aligned_init::nn::train::TrainError;
use aligned_init::nn::NnError;
use aligned_init::stats::StatsError;
use aligned_init::{InitError, LinAlgError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("validation failed: max residual {residual:.3e} exceeds {tol:.1e}")]
    CheckFailed { residual: f64, tol: f64 },
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {message}")]
    BadMatrixFile { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error(transparent)]
    Init(#[from] InitError),
    #[error(transparent)]
    LinAlg(#[from] LinAlgError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// Exit code: 2 for misuse (bad dimensions, bad flags), 1 for
    /// everything else. Model divergence is recorded in CSV, never here.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Init(InitError::InvalidDim { .. }) => 2,
            _ => 1,
        }
    }
}
