//! Front end of the workbench: experiment orchestration, bound-verification
//! sweeps and episode transcripts, with deterministic CSV and SVG output.

pub mod config;
pub mod experiment;
pub mod output;
pub mod play;
pub mod stats;
pub mod verify;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Bounds(#[from] hdmc_bounds::BoundError),
}

impl CliError {
    /// Process exit status: every error is a configuration error (2);
    /// verification failures (1) are outcomes, not errors.
    pub fn exit_code(&self) -> i32 {
        2
    }
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFICATION_FAILED: i32 = 1;
