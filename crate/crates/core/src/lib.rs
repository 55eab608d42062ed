//! Active damage interrogation for transducer-instrumented structures.
//!
//! The library covers the full measurement-to-diagnosis chain. A broadband
//! excitation drives one transducer while the rest listen; Welch-averaged
//! transfer functions summarize each actuator -> sensor pair; repeated
//! healthy cycles pool into a baseline with per-bin spread estimates; and
//! later cycles are scored against that baseline to produce one damage index
//! per transducer, a detection decision, and a damaged-region estimate.
//! A mass-spring chain simulator generates faithful synthetic measurements
//! so the whole pipeline can be exercised and calibrated without hardware.

pub mod baseline;
pub mod error;
mod fft;
pub mod interrogation;
pub mod seeds;
pub mod spectral;
pub mod structsim;
pub mod types;

pub use error::{AdiError, ErrorKind, Result};
pub use types::{Band, PairKey, TransducerId};
