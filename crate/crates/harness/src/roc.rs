//! Threshold sweep persistence.
//!
//! Runs the cost-based threshold calibration over two observed index
//! populations and writes the full candidate table as CSV so the
//! detection-rate-versus-false-alarm trade can be plotted or audited.

use std::fmt::Write as _;
use std::path::Path;

use adi_core::interrogation::{calibrate_threshold, ThresholdCalibration};

use crate::error::{HarnessError, Result};
use crate::fsio;

pub const ROC_HEADER: &str = "threshold,pd,far,cost";

/// Calibrates a threshold from healthy and damaged index samples and writes
/// the sweep table. Returns the calibration so callers can report the
/// chosen threshold.
pub fn roc_sweep(
    healthy: &[f64],
    damaged: &[f64],
    false_alarm_cost: f64,
    miss_cost: f64,
    path: &Path,
) -> Result<ThresholdCalibration> {
    let calibration = calibrate_threshold(healthy, damaged, false_alarm_cost, miss_cost)
        .map_err(HarnessError::Core)?;
    let mut text = String::with_capacity(calibration.table.len() * 48);
    text.push_str(ROC_HEADER);
    text.push('\n');
    for point in &calibration.table {
        let _ = writeln!(
            text,
            "{},{},{},{}",
            fsio::fmt_f64(point.threshold),
            fsio::fmt_f64(point.pd),
            fsio::fmt_f64(point.far),
            fsio::fmt_f64(point.cost),
        );
    }
    fsio::write_atomic(path, &text)?;
    Ok(calibration)
}
