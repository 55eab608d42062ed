//! File formats, scenario execution, and reporting around the interrogation
//! core: persistence for recordings, baselines, and reports, a deterministic
//! scenario runner, deviation exports, and threshold sweeps. The `adi`
//! binary is a thin command-line veneer over this library.

pub mod baseline_file;
pub mod error;
pub mod export;
pub mod fsio;
pub mod recording;
pub mod report;
pub mod roc;
pub mod scenario;

pub use error::{HarnessError, Result};
