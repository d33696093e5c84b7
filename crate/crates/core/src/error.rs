use std::io;

use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Error)]
pub enum SimError {
    /// A configuration value violates its invariant. `field` names the offending key.
    #[error("invalid configuration: {field}: {reason}")]
    Config { field: String, reason: String },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("non-finite input: {0}")]
    NonFinite(f64),

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("simulation time overflow")]
    TimeOverflow,

    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl SimError {
    pub fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        SimError::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, SimError>;
