//! Config-driven front end for tfm-core: device files, presets, commands and result export.

pub mod commands;
pub mod config;
pub mod output;
pub mod units;

use std::path::PathBuf;

use tfm_core::TfmError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io(_) => 1,
        }
    }

    /// Prefix the message with the component or key that failed.
    pub fn context(self, what: &str) -> Self {
        match self {
            CliError::Config(m) => CliError::Config(format!("{what}: {m}")),
            CliError::Numeric(m) => CliError::Numeric(format!("{what}: {m}")),
            CliError::Io(m) => CliError::Io(format!("{what}: {m}")),
        }
    }
}

impl From<TfmError> for CliError {
    fn from(e: TfmError) -> Self {
        if e.is_config() {
            CliError::Config(e.to_string())
        } else {
            CliError::Numeric(e.to_string())
        }
    }
}

/// Directory holding the shipped preset files.
pub fn preset_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../presets")
}

pub const PRESETS: [&str; 4] = ["bell_phi_minus", "mes_d3", "mes_d4", "separable"];

pub fn preset_path(name: &str) -> Result<PathBuf, CliError> {
    if !PRESETS.contains(&name) {
        return Err(CliError::Config(format!("unknown preset \"{name}\"; known presets: {}", PRESETS.join(", "))));
    }
    Ok(preset_dir().join(format!("{name}.toml")))
}
