//! The `boxlab` runner: configuration, subcommands, output writers and the
//! acceptance suite.

pub mod acceptance;
pub mod cli;
pub mod commands;
pub mod config;
pub mod output;

use std::fmt;

/// Errors carry the process exit code they map to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CliError {
    /// Bad configuration or parameters (exit 2).
    Schema(String),
    /// An invariant failed mid-run, or an acceptance criterion failed (exit 3).
    Invariant(String),
    /// Reading or writing files failed (exit 4).
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Schema(_) => 2,
            CliError::Invariant(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Schema(m) => write!(f, "configuration error: {m}"),
            CliError::Invariant(m) => write!(f, "invariant violated: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<boxlab_core::error::Error> for CliError {
    fn from(e: boxlab_core::error::Error) -> Self {
        use boxlab_core::error::Error;
        match e {
            Error::Invariant(_) | Error::Lp(_) => CliError::Invariant(e.to_string()),
            other => CliError::Schema(other.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Caps the global thread pool at `BOXLAB_THREADS` when it is set.
pub fn configure_threads() -> CliResult<()> {
    match std::env::var("BOXLAB_THREADS") {
        Ok(v) => {
            let n: usize = v
                .trim()
                .parse()
                .ok()
                .filter(|&n| n > 0)
                .ok_or_else(|| CliError::Schema(format!("BOXLAB_THREADS={v:?} is not a positive integer")))?;
            // A pool may already exist when called twice in one process.
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            Ok(())
        }
        Err(_) => Ok(()),
    }
}
