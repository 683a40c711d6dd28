//! Library side of the `hardy` command: configuration, commands, and the
//! acceptance suite run by `verify-all`.

use std::fmt;

pub mod commands;
pub mod config;
pub mod output;
pub mod region;
pub mod suite;

pub use config::RunConfig;

/// Process exit codes.
pub mod exit {
    pub const PASS: u8 = 0;
    pub const VIOLATION: u8 = 1;
    pub const CONFIG: u8 = 2;
    pub const RESOLUTION: u8 = 3;
}

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self { code: exit::CONFIG, message: message.into() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<hardy_core::Error> for CliError {
    fn from(e: hardy_core::Error) -> Self {
        use hardy_core::Error as E;
        let code = match &e {
            E::Resolution { .. } => exit::RESOLUTION,
            E::Invariant(_) | E::Degenerate(_) => exit::VIOLATION,
            _ => exit::CONFIG,
        };
        Self { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::config(format!("i/o error: {e}"))
    }
}
