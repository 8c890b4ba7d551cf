//! Experiment harness: configuration, seeded runs, CSV artifacts and run
//! comparison. The `pawl` binary is a thin clap front end over this crate.

pub mod artifacts;
pub mod compare;
pub mod config;
pub mod experiment;

pub use artifacts::RunSummary;
pub use compare::{compare_runs, Comparison};
pub use config::ExperimentConfig;
pub use experiment::{output_root, run_experiment, run_seeds};

/// Environment variable naming the default artifact root.
pub const OUTPUT_ROOT_VAR: &str = "PAWL_OUTPUT_ROOT";

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    /// Invalid configuration or command-line input; nothing was run.
    #[error("configuration error: {0}")]
    Config(String),
    /// The sampler or target failed after the run started.
    #[error("run failed: {0}")]
    Runtime(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl HarnessError {
    /// Process exit code: 2 for configuration errors, 3 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Runtime(_) | HarnessError::Io(_) => 3,
        }
    }
}

impl From<pawl_core::Error> for HarnessError {
    fn from(e: pawl_core::Error) -> Self {
        match e {
            pawl_core::Error::Config(msg) => HarnessError::Config(msg),
            other => HarnessError::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        HarnessError::Io(e.to_string())
    }
}

impl From<csv::Error> for HarnessError {
    fn from(e: csv::Error) -> Self {
        HarnessError::Io(e.to_string())
    }
}
