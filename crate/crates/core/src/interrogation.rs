//! Damage scoring: from baseline-referenced deviations to a diagnosis.
//!
//! The chain is deliberately simple and auditable. Each measured transfer
//! function is converted to per-bin z-scores against the baseline, the
//! absolute z-scores are smoothed with a short moving window, and the band
//! average of the smoothed curves collapses each pair to one number: the
//! cumulative average delta, in units of baseline standard deviations. Pair
//! deltas fold into one damage index per transducer, and thresholding the
//! index vector yields detection plus a damaged-region estimate.

use std::collections::{BTreeMap, BTreeSet};

use crate::baseline::Baseline;
use crate::error::{AdiError, Result};
use crate::spectral::{wrap_value, TransferFunction};
use crate::types::{Band, PairKey, TransducerId};

/// Detection threshold on the damage index, in baseline standard deviations.
pub const DEFAULT_THRESHOLD: f64 = 2.0;
/// Moving-average width used to suppress single-bin outliers.
pub const DEFAULT_WINDOW_BINS: usize = 9;
/// Damage-index level treated as the healthy noise floor by the weighted
/// localizer.
pub const DEFAULT_NULL_LEVEL: f64 = 0.8;
/// Exponent applied to above-floor index excesses before the centroid.
pub const DEFAULT_WEIGHT_EXPONENT: f64 = 2.0;

/// Per-bin z-scores of one measured pair against the baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviationSpectrum {
    pub actuator_id: TransducerId,
    pub sensor_id: TransducerId,
    pub freqs_hz: Vec<f64>,
    /// (measured magnitude - baseline mean) / baseline std, signed.
    pub z_mag: Vec<f64>,
    /// Wrapped phase deviation / baseline std, signed.
    pub z_phase: Vec<f64>,
}

/// Moving-averaged absolute deviations of one pair.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothedDeviation {
    pub actuator_id: TransducerId,
    pub sensor_id: TransducerId,
    pub freqs_hz: Vec<f64>,
    pub mag_abs: Vec<f64>,
    pub phase_abs: Vec<f64>,
    pub window_bins: usize,
}

/// Band-averaged deviation of one pair, in baseline standard deviations.
#[derive(Debug, Clone, PartialEq)]
pub struct CadResult {
    pub actuator_id: TransducerId,
    pub sensor_id: TransducerId,
    pub cad_mag: f64,
    pub cad_phase: f64,
    pub band: Band,
    pub window_bins: usize,
}

impl CadResult {
    /// Magnitude and phase routes carry equal weight in the damage index.
    pub fn combined(&self) -> f64 {
        0.5 * (self.cad_mag + self.cad_phase)
    }
}

/// One damage index per transducer, plus the pair deltas they came from.
#[derive(Debug, Clone, PartialEq)]
pub struct DamageIndexVector {
    pub di: BTreeMap<TransducerId, f64>,
    pub per_pair_cads: Vec<CadResult>,
    /// Identifier of the baseline the indices were scored against.
    pub baseline_id: String,
    /// Optional wall-clock annotation; deterministic pipelines leave it
    /// unset so identical inputs produce identical outputs.
    pub timestamp: Option<String>,
}

/// Detection outcome for one interrogation cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnosis {
    pub detected: bool,
    pub threshold: f64,
    pub di_vector: DamageIndexVector,
    /// Transducer with the largest index, populated only on detection.
    pub location_argmax: Option<TransducerId>,
    /// Continuous position estimate, populated by the caller when a
    /// weighted localization succeeds.
    pub location_estimate: Option<f64>,
}

/// Scores one measured transfer function against the baseline.
pub fn normalized_deviation(
    tf: &TransferFunction,
    baseline: &Baseline,
) -> Result<DeviationSpectrum> {
    tf.validate()?;
    let stats = baseline.get(tf.pair())?;
    if tf.freqs_hz != baseline.freqs_hz {
        return Err(AdiError::Data(format!(
            "pair {} -> {} is on a different frequency grid than the baseline",
            tf.actuator_id, tf.sensor_id
        )));
    }
    let n = tf.freqs_hz.len();
    let mut z_mag = Vec::with_capacity(n);
    let mut z_phase = Vec::with_capacity(n);
    for k in 0..n {
        z_mag.push((tf.magnitude[k] - stats.mag_mean[k]) / stats.mag_std[k]);
        z_phase.push(wrap_value(tf.phase_rad[k] - stats.phase_mean[k]) / stats.phase_std[k]);
    }
    Ok(DeviationSpectrum {
        actuator_id: tf.actuator_id,
        sensor_id: tf.sensor_id,
        freqs_hz: tf.freqs_hz.clone(),
        z_mag,
        z_phase,
    })
}

/// Centered moving average of |z| with an odd window; edge bins average over
/// the truncated part of the window that fits.
pub fn windowed_average(dev: &DeviationSpectrum, window_bins: usize) -> Result<SmoothedDeviation> {
    if window_bins == 0 || window_bins % 2 == 0 {
        return Err(AdiError::Config(format!(
            "window_bins must be odd and positive, got {window_bins}"
        )));
    }
    let n = dev.freqs_hz.len();
    if window_bins > n {
        return Err(AdiError::Config(format!(
            "window of {window_bins} bins exceeds the {n}-bin spectrum"
        )));
    }
    let half = window_bins / 2;
    let smooth = |z: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|k| {
                let lo = k.saturating_sub(half);
                let hi = (k + half).min(n - 1);
                let sum: f64 = z[lo..=hi].iter().map(|v| v.abs()).sum();
                sum / (hi - lo + 1) as f64
            })
            .collect()
    };
    Ok(SmoothedDeviation {
        actuator_id: dev.actuator_id,
        sensor_id: dev.sensor_id,
        freqs_hz: dev.freqs_hz.clone(),
        mag_abs: smooth(&dev.z_mag),
        phase_abs: smooth(&dev.z_phase),
        window_bins,
    })
}

/// Averages the smoothed absolute deviations over the analysis band.
pub fn cumulative_average_delta(smoothed: &SmoothedDeviation, band: &Band) -> Result<CadResult> {
    Band::new(band.low_hz, band.high_hz)?;
    let bins: Vec<usize> = (0..smoothed.freqs_hz.len())
        .filter(|&k| band.contains(smoothed.freqs_hz[k]))
        .collect();
    if bins.len() < 8 {
        return Err(AdiError::Config(format!(
            "band {} covers only {} bins, need at least 8 for a stable average",
            band,
            bins.len()
        )));
    }
    let m = bins.len() as f64;
    let cad_mag = bins.iter().map(|&k| smoothed.mag_abs[k]).sum::<f64>() / m;
    let cad_phase = bins.iter().map(|&k| smoothed.phase_abs[k]).sum::<f64>() / m;
    Ok(CadResult {
        actuator_id: smoothed.actuator_id,
        sensor_id: smoothed.sensor_id,
        cad_mag,
        cad_phase,
        band: *band,
        window_bins: smoothed.window_bins,
    })
}

/// Folds pair deltas into one index per transducer: the mean combined delta
/// over every pair the transducer participates in as actuator or sensor.
pub fn damage_index(cads: &[CadResult], baseline_id: &str) -> Result<DamageIndexVector> {
    if cads.is_empty() {
        return Err(AdiError::InsufficientData(
            "no pair deltas to fold into damage indices".into(),
        ));
    }
    let mut ids = BTreeSet::new();
    let mut by_pair: BTreeMap<PairKey, &CadResult> = BTreeMap::new();
    for cad in cads {
        ids.insert(cad.actuator_id);
        ids.insert(cad.sensor_id);
        if by_pair.insert((cad.actuator_id, cad.sensor_id), cad).is_some() {
            return Err(AdiError::Data(format!(
                "duplicate delta for pair {} -> {}",
                cad.actuator_id, cad.sensor_id
            )));
        }
    }
    let mut di = BTreeMap::new();
    for &i in &ids {
        let mut total = 0.0;
        let mut count = 0usize;
        for &s in &ids {
            if s == i {
                continue;
            }
            let cad = by_pair.get(&(i, s)).ok_or(AdiError::UnknownPair {
                actuator: i,
                sensor: s,
            })?;
            total += cad.combined();
            count += 1;
        }
        di.insert(i, total / count as f64);
    }
    Ok(DamageIndexVector {
        di,
        per_pair_cads: cads.to_vec(),
        baseline_id: baseline_id.to_string(),
        timestamp: None,
    })
}

/// Thresholds the index vector. Ties on the maximum resolve to the lowest
/// transducer id; the argmax is reported only when damage is declared.
pub fn detect(div: &DamageIndexVector, threshold: f64) -> Result<Diagnosis> {
    if !threshold.is_finite() || threshold <= 0.0 {
        return Err(AdiError::Config(format!(
            "threshold must be positive and finite, got {threshold}"
        )));
    }
    if div.di.is_empty() {
        return Err(AdiError::InsufficientData(
            "damage index vector is empty".into(),
        ));
    }
    let argmax = localize_argmax(div)?;
    let max = div.di[&argmax];
    let detected = max >= threshold;
    Ok(Diagnosis {
        detected,
        threshold,
        di_vector: div.clone(),
        location_argmax: detected.then_some(argmax),
        location_estimate: None,
    })
}

/// Transducer with the largest damage index; ties go to the lowest id.
pub fn localize_argmax(div: &DamageIndexVector) -> Result<TransducerId> {
    let mut best: Option<(TransducerId, f64)> = None;
    for (&id, &v) in &div.di {
        if !v.is_finite() {
            return Err(AdiError::Data(format!(
                "damage index for transducer {id} is {v}"
            )));
        }
        // Strict comparison keeps the first (lowest) id on ties because the
        // map iterates in ascending id order.
        match best {
            Some((_, bv)) if v <= bv => {}
            _ => best = Some((id, v)),
        }
    }
    best.map(|(id, _)| id)
        .ok_or_else(|| AdiError::InsufficientData("damage index vector is empty".into()))
}

/// Weighted-centroid position estimate over transducer coordinates.
///
/// Each transducer contributes weight max(DI - null_level, 0)^exponent; the
/// estimate is the weight-averaged position. Fewer than two transducers
/// above the floor cannot brace a centroid, which is reported as
/// localization-undefined so the caller can fall back to the argmax.
pub fn localize_weighted(
    div: &DamageIndexVector,
    positions: &BTreeMap<TransducerId, f64>,
    null_level: f64,
    exponent: f64,
) -> Result<f64> {
    if !null_level.is_finite() || null_level < 0.0 {
        return Err(AdiError::Config(format!(
            "null_level must be finite and non-negative, got {null_level}"
        )));
    }
    if !exponent.is_finite() || exponent <= 0.0 {
        return Err(AdiError::Config(format!(
            "weight exponent must be positive and finite, got {exponent}"
        )));
    }
    for (&id, &p) in positions {
        if !p.is_finite() {
            return Err(AdiError::Data(format!(
                "position for transducer {id} is {p}"
            )));
        }
    }
    let mut weight_sum = 0.0;
    let mut weighted_pos = 0.0;
    let mut positive = 0usize;
    for (&id, &v) in &div.di {
        let pos = positions.get(&id).ok_or_else(|| {
            AdiError::Data(format!("no position registered for transducer {id}"))
        })?;
        let excess = v - null_level;
        if excess > 0.0 {
            let w = excess.powf(exponent);
            weight_sum += w;
            weighted_pos += w * pos;
            positive += 1;
        }
    }
    if positive < 2 {
        return Err(AdiError::LocalizationUndefined);
    }
    Ok(weighted_pos / weight_sum)
}

/// One operating point of the detector during calibration.
#[derive(Debug, Clone, PartialEq)]
pub struct RocPoint {
    pub threshold: f64,
    /// Fraction of damaged samples at or above the threshold.
    pub pd: f64,
    /// Fraction of healthy samples at or above the threshold.
    pub far: f64,
    pub cost: f64,
}

/// Calibration outcome: the chosen threshold and the full sweep behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdCalibration {
    pub threshold: f64,
    pub table: Vec<RocPoint>,
}

/// Picks a detection threshold from labeled healthy and damaged index
/// samples by minimizing `false_alarm_cost * FAR + miss_cost * (1 - PD)`.
///
/// Candidates are the distinct sample values. When the classes separate
/// cleanly the whole gap has zero cost and the midpoint of the gap is
/// returned; otherwise the lowest minimal-cost candidate wins.
pub fn calibrate_threshold(
    healthy: &[f64],
    damaged: &[f64],
    false_alarm_cost: f64,
    miss_cost: f64,
) -> Result<ThresholdCalibration> {
    if !(false_alarm_cost > 0.0) || !false_alarm_cost.is_finite() {
        return Err(AdiError::Config(format!(
            "false_alarm_cost must be positive and finite, got {false_alarm_cost}"
        )));
    }
    if !(miss_cost > 0.0) || !miss_cost.is_finite() {
        return Err(AdiError::Config(format!(
            "miss_cost must be positive and finite, got {miss_cost}"
        )));
    }
    if healthy.is_empty() {
        return Err(AdiError::InsufficientData(
            "no healthy index samples to calibrate against".into(),
        ));
    }
    if damaged.is_empty() {
        return Err(AdiError::InsufficientData(
            "no damaged index samples to calibrate against".into(),
        ));
    }
    for &v in healthy.iter().chain(damaged) {
        if !v.is_finite() {
            return Err(AdiError::Domain(format!(
                "cannot calibrate on a non-finite index sample {v}"
            )));
        }
    }

    let mut candidates: Vec<f64> = healthy.iter().chain(damaged).copied().collect();
    candidates.sort_by(|a, b| a.total_cmp(b));
    candidates.dedup();

    let evaluate = |threshold: f64| -> RocPoint {
        let pd = damaged.iter().filter(|&&v| v >= threshold).count() as f64
            / damaged.len() as f64;
        let far = healthy.iter().filter(|&&v| v >= threshold).count() as f64
            / healthy.len() as f64;
        RocPoint {
            threshold,
            pd,
            far,
            cost: false_alarm_cost * far + miss_cost * (1.0 - pd),
        }
    };

    let table: Vec<RocPoint> = candidates.iter().map(|&t| evaluate(t)).collect();
    let best_cost = table
        .iter()
        .map(|p| p.cost)
        .fold(f64::INFINITY, f64::min);

    let max_healthy = healthy.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min_damaged = damaged.iter().copied().fold(f64::INFINITY, f64::min);
    let threshold = if max_healthy < min_damaged {
        // Clean separation: every threshold in the gap works equally well;
        // the midpoint maximizes margin on both sides.
        0.5 * (max_healthy + min_damaged)
    } else {
        table
            .iter()
            .find(|p| p.cost == best_cost)
            .expect("table is non-empty")
            .threshold
    };
    Ok(ThresholdCalibration { threshold, table })
}

/// Runs the full per-cycle scoring chain on one signature set: z-scores,
/// smoothing, band averaging, and index folding for every baseline pair.
pub fn interrogate_cycle(
    set: &crate::baseline::SignatureSet,
    baseline: &Baseline,
    window_bins: usize,
    band: &Band,
    baseline_id: &str,
) -> Result<DamageIndexVector> {
    let mismatches = crate::baseline::validate_signature_compatibility(baseline, set);
    if !mismatches.is_empty() {
        let mut msg = format!(
            "signature set '{}' is incompatible with the baseline:",
            set.label()
        );
        for m in &mismatches {
            msg.push_str("\n  ");
            msg.push_str(&m.to_string());
        }
        return Err(AdiError::Data(msg));
    }
    let mut cads = Vec::new();
    for (pair, tf) in set.pairs() {
        let dev = normalized_deviation(tf, baseline)?;
        let smoothed = windowed_average(&dev, window_bins)?;
        let cad = cumulative_average_delta(&smoothed, band)?;
        debug_assert_eq!((cad.actuator_id, cad.sensor_id), *pair);
        cads.push(cad);
    }
    damage_index(&cads, baseline_id)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baseline::{accumulate_baseline, SignatureSet, StdFloorPolicy};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};
    use std::f64::consts::PI;

    fn tf(a: u32, s: u32, freqs: &[f64], mags: &[f64], phases: &[f64]) -> TransferFunction {
        TransferFunction {
            actuator_id: TransducerId(a),
            sensor_id: TransducerId(s),
            freqs_hz: freqs.to_vec(),
            magnitude: mags.to_vec(),
            phase_rad: phases.to_vec(),
            coherence: vec![1.0; freqs.len()],
        }
    }

    fn dev(a: u32, s: u32, z: Vec<f64>) -> DeviationSpectrum {
        let freqs: Vec<f64> = (0..z.len()).map(|k| 100.0 + k as f64).collect();
        DeviationSpectrum {
            actuator_id: TransducerId(a),
            sensor_id: TransducerId(s),
            freqs_hz: freqs,
            z_mag: z.clone(),
            z_phase: z,
        }
    }

    fn cad(a: u32, s: u32, mag: f64, phase: f64) -> CadResult {
        CadResult {
            actuator_id: TransducerId(a),
            sensor_id: TransducerId(s),
            cad_mag: mag,
            cad_phase: phase,
            band: Band {
                low_hz: 100.0,
                high_hz: 1000.0,
            },
            window_bins: 9,
        }
    }

    fn div_from(dis: &[(u32, f64)]) -> DamageIndexVector {
        DamageIndexVector {
            di: dis
                .iter()
                .map(|&(id, v)| (TransducerId(id), v))
                .collect(),
            per_pair_cads: Vec::new(),
            baseline_id: "test".into(),
            timestamp: None,
        }
    }

    fn simple_baseline() -> Baseline {
        let freqs: Vec<f64> = (0..16).map(|k| 100.0 + 10.0 * k as f64).collect();
        let mags = vec![2.0; 16];
        let phases = vec![0.3; 16];
        let sets: Vec<SignatureSet> = (0..3)
            .map(|i| {
                SignatureSet::new(
                    format!("set{i}"),
                    vec![
                        tf(1, 2, &freqs, &mags, &phases),
                        tf(2, 1, &freqs, &mags, &phases),
                    ],
                )
                .unwrap()
            })
            .collect();
        accumulate_baseline(&sets, &StdFloorPolicy::default()).unwrap()
    }

    #[test]
    fn deviation_is_z_scored_per_bin() {
        let b = simple_baseline();
        let freqs = b.freqs_hz.clone();
        // Baseline stds are floored: mag at 2e-6 (relative to median mean 2),
        // phase at 1e-3.
        let mut mags = vec![2.0; 16];
        mags[4] = 2.0 + 3.0 * 2e-6;
        let mut phases = vec![0.3; 16];
        phases[7] = 0.3 + 2.0 * 1e-3;
        let probe = tf(1, 2, &freqs, &mags, &phases);
        let d = normalized_deviation(&probe, &b).unwrap();
        assert!((d.z_mag[4] - 3.0).abs() < 1e-6, "z_mag[4] = {}", d.z_mag[4]);
        assert!(d.z_mag[0].abs() < 1e-9);
        assert!(
            (d.z_phase[7] - 2.0).abs() < 1e-6,
            "z_phase[7] = {}",
            d.z_phase[7]
        );
    }

    #[test]
    fn deviation_wraps_phase_differences() {
        let b = {
            let freqs: Vec<f64> = (0..16).map(|k| 100.0 + 10.0 * k as f64).collect();
            let phases = vec![PI - 1e-4; 16];
            let sets: Vec<SignatureSet> = (0..3)
                .map(|i| {
                    SignatureSet::new(
                        format!("set{i}"),
                        vec![
                            tf(1, 2, &freqs, &vec![2.0; 16], &phases),
                            tf(2, 1, &freqs, &vec![2.0; 16], &phases),
                        ],
                    )
                    .unwrap()
                })
                .collect();
            accumulate_baseline(&sets, &StdFloorPolicy::default()).unwrap()
        };
        // Probe phase sits just across the seam; the raw difference is close
        // to 2pi but the wrapped difference is 2e-4.
        let probe = tf(
            1,
            2,
            &b.freqs_hz.clone(),
            &vec![2.0; 16],
            &vec![-PI + 1e-4; 16],
        );
        let d = normalized_deviation(&probe, &b).unwrap();
        assert!(
            (d.z_phase[0] - 0.2).abs() < 1e-9,
            "wrapped deviation of 2e-4 over a 1e-3 floor is 0.2, got {}",
            d.z_phase[0]
        );
    }

    #[test]
    fn deviation_rejects_unknown_pairs_and_foreign_grids() {
        let b = simple_baseline();
        let freqs = b.freqs_hz.clone();
        let alien = tf(1, 9, &freqs, &vec![2.0; 16], &vec![0.3; 16]);
        assert!(matches!(
            normalized_deviation(&alien, &b),
            Err(AdiError::UnknownPair { .. })
        ));
        let shifted: Vec<f64> = freqs.iter().map(|f| f + 0.5).collect();
        let probe = tf(1, 2, &shifted, &vec![2.0; 16], &vec![0.3; 16]);
        assert!(matches!(
            normalized_deviation(&probe, &b),
            Err(AdiError::Data(_))
        ));
    }

    #[test]
    fn windowed_average_truncates_at_the_edges() {
        let d = dev(1, 2, vec![0.0, 3.0, 0.0]);
        let s = windowed_average(&d, 3).unwrap();
        assert_eq!(
            s.mag_abs,
            vec![1.5, 1.0, 1.5],
            "edge windows cover two bins, the center covers three"
        );
    }

    #[test]
    fn windowed_average_takes_magnitudes_first() {
        // |z| goes through the window, so symmetric signs do not cancel.
        let d = dev(1, 2, vec![-2.0, 2.0, -2.0]);
        let s = windowed_average(&d, 3).unwrap();
        assert_eq!(s.mag_abs, vec![2.0, 2.0, 2.0]);
    }

    #[test]
    fn windowed_average_rejects_even_and_oversized_windows() {
        let d = dev(1, 2, vec![1.0; 16]);
        assert!(matches!(
            windowed_average(&d, 4),
            Err(AdiError::Config(_))
        ));
        assert!(matches!(
            windowed_average(&d, 0),
            Err(AdiError::Config(_))
        ));
        assert!(matches!(
            windowed_average(&d, 17),
            Err(AdiError::Config(_))
        ));
    }

    #[test]
    fn cad_of_standard_normal_scores_approaches_expected_absolute_value() {
        // E|Z| for a standard normal is sqrt(2/pi) ~= 0.7979. With 4096
        // i.i.d. bins and no smoothing the band average must land within
        // 0.05.
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let normal = StandardNormal;
        let z: Vec<f64> = (0..4096)
            .map(|_| <StandardNormal as Distribution<f64>>::sample(&normal, &mut rng))
            .collect();
        let d = dev(1, 2, z);
        let s = windowed_average(&d, 1).unwrap();
        let band = Band {
            low_hz: 0.0,
            high_hz: 1e6,
        };
        let c = cumulative_average_delta(&s, &band).unwrap();
        let expect = (2.0 / PI).sqrt();
        assert!(
            (c.cad_mag - expect).abs() < 0.05,
            "cad {} vs sqrt(2/pi) {}",
            c.cad_mag,
            expect
        );
        assert!((c.cad_phase - expect).abs() < 0.05);
    }

    #[test]
    fn cad_requires_eight_bins_in_band() {
        let d = dev(1, 2, vec![1.0; 16]);
        let s = windowed_average(&d, 1).unwrap();
        let narrow = Band {
            low_hz: 100.0,
            high_hz: 104.0,
        };
        assert!(matches!(
            cumulative_average_delta(&s, &narrow),
            Err(AdiError::Config(_))
        ));
    }

    #[test]
    fn cad_of_constant_deviation_is_that_constant() {
        let d = dev(1, 2, vec![1.7; 64]);
        for window in [1, 5, 9] {
            let s = windowed_average(&d, window).unwrap();
            let band = Band {
                low_hz: 100.0,
                high_hz: 200.0,
            };
            let c = cumulative_average_delta(&s, &band).unwrap();
            assert!(
                (c.cad_mag - 1.7).abs() < 1e-12,
                "constant input must survive window {window} unchanged"
            );
        }
    }

    #[test]
    fn damage_index_averages_each_transducers_pairs() {
        // Pair (1,2) has magnitude delta 2 and phase delta 4, combining to
        // 3; pairs (2,1) and (1,3)... use a 3-transducer round robin where
        // transducer 1's three pair deltas are 3, 1, 2.
        let cads = vec![
            cad(1, 2, 2.0, 4.0), // combined 3
            cad(1, 3, 1.0, 1.0), // combined 1
            cad(2, 1, 3.0, 1.0), // combined 2
            cad(2, 3, 1.0, 1.0),
            cad(3, 1, 1.0, 1.0),
            cad(3, 2, 1.0, 1.0),
        ];
        let div = damage_index(&cads, "b0").unwrap();
        // Transducer 1 participates as actuator in (1,2)=3 and (1,3)=1.
        assert!(
            (div.di[&TransducerId(1)] - 2.0).abs() < 1e-12,
            "mean of 3 and 1 is 2, got {}",
            div.di[&TransducerId(1)]
        );
        assert_eq!(div.baseline_id, "b0");
        assert!(div.timestamp.is_none());
    }

    #[test]
    fn damage_index_names_the_missing_pair() {
        let cads = vec![
            cad(1, 2, 1.0, 1.0),
            cad(2, 1, 1.0, 1.0),
            cad(1, 3, 1.0, 1.0),
            cad(3, 1, 1.0, 1.0),
            cad(2, 3, 1.0, 1.0),
            // (3, 2) absent
        ];
        match damage_index(&cads, "b0") {
            Err(AdiError::UnknownPair { actuator, sensor }) => {
                assert_eq!((actuator.0, sensor.0), (3, 2));
            }
            other => panic!("expected a missing-pair error, got {other:?}"),
        }
    }

    #[test]
    fn detection_thresholds_on_the_maximum_index() {
        let healthy = div_from(&[(1, 0.7), (2, 0.7), (3, 0.7), (4, 0.7)]);
        let d = detect(&healthy, 2.0).unwrap();
        assert!(!d.detected);
        assert!(d.location_argmax.is_none());

        let damaged = div_from(&[(1, 2.8), (2, 2.7), (3, 2.3), (4, 2.4)]);
        let d = detect(&damaged, 2.0).unwrap();
        assert!(d.detected);
        assert_eq!(d.location_argmax, Some(TransducerId(1)));
    }

    #[test]
    fn detection_is_inclusive_at_the_threshold() {
        let at = div_from(&[(1, 2.0), (2, 0.5)]);
        assert!(detect(&at, 2.0).unwrap().detected, "DI == threshold detects");
        let below = div_from(&[(1, 1.999999), (2, 0.5)]);
        assert!(!detect(&below, 2.0).unwrap().detected);
    }

    #[test]
    fn detection_ties_resolve_to_the_lowest_id() {
        let tied = div_from(&[(2, 5.0), (4, 5.0), (1, 3.0)]);
        let d = detect(&tied, 2.0).unwrap();
        assert_eq!(d.location_argmax, Some(TransducerId(2)));
    }

    #[test]
    fn detection_rejects_empty_vectors_and_bad_thresholds() {
        let div = div_from(&[]);
        assert!(matches!(
            detect(&div, 2.0),
            Err(AdiError::InsufficientData(_))
        ));
        let ok = div_from(&[(1, 1.0)]);
        assert!(matches!(detect(&ok, 0.0), Err(AdiError::Config(_))));
        assert!(matches!(detect(&ok, f64::NAN), Err(AdiError::Config(_))));
    }

    #[test]
    fn weighted_centroid_matches_direct_evaluation() {
        // Four transducers at 0, 1, 2, 3 m with indices 19.1, 13.4, 12.7,
        // 11.4; null level 0.8, exponent 2. Direct evaluation of
        // sum(w*x)/sum(w) with w = (DI - 0.8)^2 gives 1.04205344961344.
        let div = div_from(&[(1, 19.1), (2, 13.4), (3, 12.7), (4, 11.4)]);
        let positions: BTreeMap<TransducerId, f64> = [
            (TransducerId(1), 0.0),
            (TransducerId(2), 1.0),
            (TransducerId(3), 2.0),
            (TransducerId(4), 3.0),
        ]
        .into_iter()
        .collect();
        let x = localize_weighted(&div, &positions, 0.8, 2.0).unwrap();
        assert!(
            (x - 1.04205344961344).abs() < 1e-12,
            "weighted centroid {x}"
        );
        assert!((x - 1.0).abs() < 0.1, "estimate should sit near transducer 1");
    }

    #[test]
    fn weighted_centroid_needs_two_contributors() {
        let div = div_from(&[(1, 5.0), (2, 0.1), (3, 0.2), (4, 0.3)]);
        let positions: BTreeMap<TransducerId, f64> = [
            (TransducerId(1), 0.0),
            (TransducerId(2), 1.0),
            (TransducerId(3), 2.0),
            (TransducerId(4), 3.0),
        ]
        .into_iter()
        .collect();
        assert!(matches!(
            localize_weighted(&div, &positions, 0.8, 2.0),
            Err(AdiError::LocalizationUndefined)
        ));
    }

    #[test]
    fn weighted_centroid_requires_positions_for_every_transducer() {
        let div = div_from(&[(1, 5.0), (2, 4.0)]);
        let positions: BTreeMap<TransducerId, f64> =
            [(TransducerId(1), 0.0)].into_iter().collect();
        assert!(matches!(
            localize_weighted(&div, &positions, 0.8, 2.0),
            Err(AdiError::Data(_))
        ));
    }

    #[test]
    fn calibration_midpoints_a_clean_separation() {
        let healthy = [0.7, 1.0];
        let damaged = [2.8, 4.1, 19.1];
        let cal = calibrate_threshold(&healthy, &damaged, 1.0, 1.0).unwrap();
        assert!(
            (cal.threshold - 1.9).abs() < 1e-12,
            "midpoint of 1.0 and 2.8 is 1.9, got {}",
            cal.threshold
        );
        let at_choice: Vec<&RocPoint> = cal
            .table
            .iter()
            .filter(|p| p.cost == 0.0)
            .collect();
        assert!(!at_choice.is_empty(), "the gap should have zero cost");
    }

    #[test]
    fn calibration_matches_a_brute_force_sweep() {
        // Overlapping classes, unequal costs; grade the chosen threshold
        // against an exhaustive scan over a fine grid.
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let normal = StandardNormal;
        let healthy: Vec<f64> = (0..200)
            .map(|_| {
                0.8 + 0.3 * <StandardNormal as Distribution<f64>>::sample(&normal, &mut rng)
            })
            .collect();
        let damaged: Vec<f64> = (0..200)
            .map(|_| {
                1.6 + 0.5
                    * <StandardNormal as Distribution<f64>>::sample(&normal, &mut rng)
                        .abs()
            })
            .collect();
        let (fa, miss) = (2.0, 1.0);
        let cal = calibrate_threshold(&healthy, &damaged, fa, miss).unwrap();
        let cost_at = |t: f64| {
            let pd = damaged.iter().filter(|&&v| v >= t).count() as f64 / 200.0;
            let far = healthy.iter().filter(|&&v| v >= t).count() as f64 / 200.0;
            fa * far + miss * (1.0 - pd)
        };
        let chosen_cost = cost_at(cal.threshold);
        let mut brute_best = f64::INFINITY;
        let mut t = -1.0;
        while t < 5.0 {
            brute_best = brute_best.min(cost_at(t));
            t += 1e-3;
        }
        assert!(
            chosen_cost <= brute_best + 1e-9,
            "chosen cost {chosen_cost} vs brute-force best {brute_best}"
        );
    }

    #[test]
    fn calibration_rejects_empty_classes_and_bad_costs() {
        assert!(matches!(
            calibrate_threshold(&[], &[1.0], 1.0, 1.0),
            Err(AdiError::InsufficientData(_))
        ));
        assert!(matches!(
            calibrate_threshold(&[1.0], &[], 1.0, 1.0),
            Err(AdiError::InsufficientData(_))
        ));
        assert!(matches!(
            calibrate_threshold(&[1.0], &[2.0], 0.0, 1.0),
            Err(AdiError::Config(_))
        ));
        assert!(matches!(
            calibrate_threshold(&[1.0, f64::NAN], &[2.0], 1.0, 1.0),
            Err(AdiError::Domain(_))
        ));
    }

    #[test]
    fn scoring_is_invariant_to_uniform_magnitude_scaling() {
        // Scaling every magnitude in both baseline and measurement by the
        // same factor rescales means and spreads together, leaving z-scores
        // unchanged.
        let freqs: Vec<f64> = (0..32).map(|k| 100.0 + 10.0 * k as f64).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let normal = StandardNormal;
        let base_mags: Vec<Vec<f64>> = (0..4)
            .map(|_| {
                (0..32)
                    .map(|_| {
                        2.0 + 0.2
                            * <StandardNormal as Distribution<f64>>::sample(&normal, &mut rng)
                    })
                    .collect()
            })
            .collect();
        let probe_mags: Vec<f64> = (0..32)
            .map(|_| {
                2.5 + 0.2 * <StandardNormal as Distribution<f64>>::sample(&normal, &mut rng)
            })
            .collect();
        let phases = vec![0.4; 32];

        let z_at = |scale: f64| -> Vec<f64> {
            let sets: Vec<SignatureSet> = base_mags
                .iter()
                .enumerate()
                .map(|(i, mags)| {
                    let scaled: Vec<f64> = mags.iter().map(|m| m * scale).collect();
                    SignatureSet::new(
                        format!("set{i}"),
                        vec![
                            tf(1, 2, &freqs, &scaled, &phases),
                            tf(2, 1, &freqs, &scaled, &phases),
                        ],
                    )
                    .unwrap()
                })
                .collect();
            // Floors off so the comparison exercises the estimated spreads.
            let floor = StdFloorPolicy {
                mag_rel: 0.0,
                mag_abs: 0.0,
                phase_abs: 0.0,
            };
            let b = accumulate_baseline(&sets, &floor).unwrap();
            let scaled: Vec<f64> = probe_mags.iter().map(|m| m * scale).collect();
            let probe = tf(1, 2, &freqs, &scaled, &phases);
            normalized_deviation(&probe, &b).unwrap().z_mag
        };

        let unit = z_at(1.0);
        for scale in [1e-3, 1e3] {
            let scaled = z_at(scale);
            for k in 0..32 {
                assert!(
                    (scaled[k] - unit[k]).abs() < 1e-9,
                    "z-score moved under scale {scale} at bin {k}: {} vs {}",
                    scaled[k],
                    unit[k]
                );
            }
        }
    }

    #[test]
    fn scoring_is_invariant_to_phase_representation() {
        // Adding 2pi to every probe phase before wrapping must not change
        // the deviation: wrap_value collapses the representation.
        let b = simple_baseline();
        let freqs = b.freqs_hz.clone();
        let phases: Vec<f64> = vec![0.35; 16];
        let probe = tf(1, 2, &freqs, &vec![2.0; 16], &phases);
        let shifted_phases: Vec<f64> = phases
            .iter()
            .map(|p| crate::spectral::wrap_value(p + 2.0 * PI))
            .collect();
        let shifted = tf(1, 2, &freqs, &vec![2.0; 16], &shifted_phases);
        let d0 = normalized_deviation(&probe, &b).unwrap();
        let d1 = normalized_deviation(&shifted, &b).unwrap();
        for k in 0..16 {
            assert!(
                (d0.z_phase[k] - d1.z_phase[k]).abs() < 1e-12,
                "phase z diverged at bin {k}"
            );
        }
    }

    #[test]
    fn full_cycle_scoring_flags_an_inflated_pair() {
        let freqs: Vec<f64> = (0..32).map(|k| 100.0 + 10.0 * k as f64).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let normal = StandardNormal;
        let mut make_set = |label: &str, bump: f64| {
            let mut tfs = Vec::new();
            for (a, s) in [(1, 2), (2, 1)] {
                let mags: Vec<f64> = (0..32)
                    .map(|_| {
                        2.0 + bump
                            + 0.05
                                * <StandardNormal as Distribution<f64>>::sample(
                                    &normal, &mut rng,
                                )
                    })
                    .collect();
                let phases: Vec<f64> = (0..32)
                    .map(|_| {
                        0.02 * <StandardNormal as Distribution<f64>>::sample(&normal, &mut rng)
                    })
                    .collect();
                tfs.push(tf(a, s, &freqs, &mags, &phases));
            }
            SignatureSet::new(label, tfs).unwrap()
        };
        let sets: Vec<SignatureSet> = (0..8)
            .map(|i| make_set(&format!("set{i}"), 0.0))
            .collect();
        let b = accumulate_baseline(&sets, &StdFloorPolicy::default()).unwrap();
        let band = Band {
            low_hz: 100.0,
            high_hz: 1000.0,
        };

        let healthy = make_set("healthy", 0.0);
        let h = interrogate_cycle(&healthy, &b, 3, &band, "b0").unwrap();
        let damaged = make_set("damaged", 0.5);
        let d = interrogate_cycle(&damaged, &b, 3, &band, "b0").unwrap();
        for id in [TransducerId(1), TransducerId(2)] {
            assert!(
                d.di[&id] > 4.0 * h.di[&id].max(0.5),
                "damaged index {} should dwarf healthy {}",
                d.di[&id],
                h.di[&id]
            );
        }
    }
}
