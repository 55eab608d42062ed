//! Plot-ready export of deviation spectra.
//!
//! For one actuator-sensor pair, writes the signed normalized deviations and
//! their windowed absolute averages as CSV, one row per frequency bin. This
//! is the file a plotting tool turns into the familiar healthy-versus-damage
//! deviation plot.

use std::fmt::Write as _;
use std::path::Path;

use adi_core::baseline::{Baseline, SignatureSet};
use adi_core::interrogation::{normalized_deviation, windowed_average};
use adi_core::PairKey;

use crate::error::{HarnessError, Result};
use crate::fsio;

pub const DEVIATION_HEADER: &str = "freq_hz,z_mag,z_phase,smoothed_mag,smoothed_phase";

/// Scores `pair` from `set` against `baseline` and writes the deviation
/// table. The smoothed columns use a centered window of `window_bins` bins.
pub fn export_deviation(
    baseline: &Baseline,
    set: &SignatureSet,
    pair: PairKey,
    window_bins: usize,
    path: &Path,
) -> Result<()> {
    let tf = set.get(pair).map_err(HarnessError::Core)?;
    let dev = normalized_deviation(tf, baseline).map_err(HarnessError::Core)?;
    let smooth = windowed_average(&dev, window_bins).map_err(HarnessError::Core)?;

    let mut text = String::with_capacity(dev.freqs_hz.len() * 64);
    text.push_str(DEVIATION_HEADER);
    text.push('\n');
    for k in 0..dev.freqs_hz.len() {
        let _ = writeln!(
            text,
            "{},{},{},{},{}",
            fsio::fmt_f64(dev.freqs_hz[k]),
            fsio::fmt_f64(dev.z_mag[k]),
            fsio::fmt_f64(dev.z_phase[k]),
            fsio::fmt_f64(smooth.mag_abs[k]),
            fsio::fmt_f64(smooth.phase_abs[k]),
        );
    }
    fsio::write_atomic(path, &text)
}
