//! Small shared vocabulary types used across the pipeline.

use std::fmt;

use crate::error::{AdiError, Result};

/// Identifier of one transducer patch in the array. A transducer acts as the
/// actuator in its own interrogation run and as a sensor in every other run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TransducerId(pub u32);

impl fmt::Display for TransducerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Directed (actuator, sensor) pair.
pub type PairKey = (TransducerId, TransducerId);

/// Closed frequency interval in Hz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Band {
    pub low_hz: f64,
    pub high_hz: f64,
}

impl Band {
    pub fn new(low_hz: f64, high_hz: f64) -> Result<Self> {
        if !(low_hz.is_finite() && high_hz.is_finite()) {
            return Err(AdiError::Config(format!(
                "band edges must be finite, got {low_hz} .. {high_hz}"
            )));
        }
        if !(0.0 <= low_hz && low_hz < high_hz) {
            return Err(AdiError::Config(format!(
                "band must satisfy 0 <= low < high, got {low_hz} .. {high_hz}"
            )));
        }
        Ok(Self { low_hz, high_hz })
    }

    pub fn contains(&self, freq_hz: f64) -> bool {
        freq_hz >= self.low_hz && freq_hz <= self.high_hz
    }
}

impl fmt::Display for Band {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} .. {} Hz", self.low_hz, self.high_hz)
    }
}
