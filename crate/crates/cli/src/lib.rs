//! Library half of the `bray` command: configuration, the `eval`,
//! `simulate` and `verify` commands, and CSV output.

pub mod commands;
pub mod config;
mod csv_out;

pub use commands::{cmd_eval, cmd_simulate, cmd_verify, SeedSource, SimulateOptions, VerifyRequest};
pub use config::RunConfig;

/// Environment variable that replaces the default verification seed.
pub const SEED_ENV: &str = "BRAY_SEED";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Library(#[from] brownian_ray::Error),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("{0} verification check(s) failed")]
    VerificationFailed(usize),
}

impl CliError {
    /// 1 for failed verification, 2 for anything the user has to fix.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::VerificationFailed(_) => 1,
            _ => 2,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
