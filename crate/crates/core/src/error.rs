//! Error taxonomy for the pipeline.
//!
//! Variants carry human-readable context; `ErrorKind` buckets them into the
//! three coarse classes the command-line tool maps to distinct exit codes.

use thiserror::Error;

use crate::types::TransducerId;

#[derive(Debug, Error)]
pub enum AdiError {
    /// Invalid configuration or parameter value.
    #[error("configuration error: {0}")]
    Config(String),

    /// Structurally invalid or inconsistent input data.
    #[error("data error: {0}")]
    Data(String),

    /// Too few observations for the requested statistic.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// Spectral estimate cannot be formed (e.g. no drive power in band).
    #[error("estimation error: {0}")]
    Estimation(String),

    /// Input outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Numerical breakdown, e.g. a singular system matrix.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// A requested actuator/sensor pair has no transfer function.
    #[error("no transfer function for actuator {actuator} -> sensor {sensor}")]
    UnknownPair {
        actuator: TransducerId,
        sensor: TransducerId,
    },

    /// Weighted localization has fewer than two transducers above the null level.
    #[error("localization undefined: fewer than two transducers exceed the null level")]
    LocalizationUndefined,
}

/// Coarse error class; the CLI maps each class to its own exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Numerical,
}

impl AdiError {
    pub fn kind(&self) -> ErrorKind {
        match self {
            AdiError::Config(_) => ErrorKind::Config,
            AdiError::Data(_) | AdiError::InsufficientData(_) | AdiError::UnknownPair { .. } => {
                ErrorKind::Data
            }
            AdiError::Estimation(_)
            | AdiError::Domain(_)
            | AdiError::Numerical(_)
            | AdiError::LocalizationUndefined => ErrorKind::Numerical,
        }
    }
}

pub type Result<T> = std::result::Result<T, AdiError>;
