use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

/// A configuration problem, anchored to a line of the source when possible.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    pub fn new(line: Option<usize>, message: String) -> Self {
        ConfigError { line, message }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

/// Why a run stopped early.
#[derive(Debug, Clone, PartialEq)]
pub struct Abort {
    pub run_id: String,
    pub epoch: usize,
    pub step: u64,
    pub reason: String,
    /// Rows finished before the failure.
    pub completed: Vec<crate::metrics::MetricsRecord>,
}

impl fmt::Display for Abort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "run {} aborted at epoch {}, step {}: {}",
            self.run_id, self.epoch, self.step, self.reason
        )
    }
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(#[from] ConfigError),

    #[error(transparent)]
    Data(#[from] pogd_data::DataError),

    #[error(transparent)]
    Model(#[from] pogd_nn::NnError),

    #[error(transparent)]
    Optimizer(#[from] pogd_core::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path}: {message}")]
    Metrics { path: PathBuf, message: String },

    #[error("report: {0}")]
    Report(String),

    #[error("{0}")]
    Aborted(Abort),
}

impl HarnessError {
    /// Process exit code: 1 for configuration errors, 2 for everything that
    /// goes wrong at run time.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 1,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
