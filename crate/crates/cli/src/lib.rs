#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Batch harness: run configurations, experiment dispatch, artifacts and the
//! acceptance suite.

pub mod acceptance;
pub mod config;
pub mod experiments;
pub mod output;

use std::fmt;
use std::path::{Path, PathBuf};

pub use config::{Kind, RunConfig};
pub use output::Artifacts;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_INVALID_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_INCONCLUSIVE: i32 = 4;

#[derive(Debug)]
pub enum HarnessError {
    Config(String),
    Numerical(fracspde::Error),
    Io(std::io::Error),
}

impl fmt::Display for HarnessError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HarnessError::Config(m) => write!(f, "invalid configuration: {m}"),
            HarnessError::Numerical(e) => write!(f, "numerical failure: {e}"),
            HarnessError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for HarnessError {}

impl From<fracspde::Error> for HarnessError {
    fn from(e: fracspde::Error) -> Self {
        match e {
            fracspde::Error::Io(io) => HarnessError::Io(io),
            fracspde::Error::InvalidParameter(m) | fracspde::Error::GridMismatch(m) => {
                HarnessError::Config(m)
            }
            other => HarnessError::Numerical(other),
        }
    }
}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        HarnessError::Io(e)
    }
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => EXIT_INVALID_CONFIG,
            HarnessError::Numerical(_) => EXIT_NUMERICAL,
            HarnessError::Io(_) => EXIT_FAILURE,
        }
    }
}

#[derive(Debug)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub artifacts: Artifacts,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.artifacts.inconclusive {
            EXIT_INCONCLUSIVE
        } else {
            EXIT_OK
        }
    }
}

/// Validates, computes and writes every artifact of one run into `dir`.
pub fn run(config: &RunConfig, dir: &Path) -> Result<RunOutcome, HarnessError> {
    config.validate()?;
    let artifacts = experiments::dispatch(config)?;
    output::write_artifacts(dir, config, &artifacts)?;
    Ok(RunOutcome {
        dir: dir.to_path_buf(),
        artifacts,
    })
}
