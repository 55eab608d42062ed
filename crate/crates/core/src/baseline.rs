//! Healthy-reference accumulation over repeated interrogation cycles.
//!
//! Each interrogation cycle produces a signature set: one transfer function
//! per ordered actuator -> sensor pair. Repeating the cycle on the pristine
//! structure and pooling the sets bin by bin yields the baseline every later
//! measurement is scored against. Magnitudes average linearly; phases live on
//! the circle and use the resultant-vector mean with deviations wrapped to
//! the principal interval, so a baseline straddling the +-pi seam still gets
//! a tight spread instead of a bogus 2pi-wide one.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{AdiError, Result};
use crate::spectral::{wrap_value, TransferFunction};
use crate::types::{PairKey, TransducerId};

/// One cycle's worth of transfer functions, covering every ordered pair of a
/// transducer set on a shared frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SignatureSet {
    label: String,
    freqs_hz: Vec<f64>,
    pairs: BTreeMap<PairKey, TransferFunction>,
}

impl SignatureSet {
    /// Validates grid identity and round-robin completeness before accepting
    /// the set. Every transfer function must share a bitwise-identical
    /// frequency grid, and every ordered pair of the participating ids must
    /// be present.
    pub fn new(label: impl Into<String>, tfs: Vec<TransferFunction>) -> Result<Self> {
        let label = label.into();
        if tfs.is_empty() {
            return Err(AdiError::Data(format!(
                "signature set '{label}' has no transfer functions"
            )));
        }
        let mut pairs = BTreeMap::new();
        let mut ids = BTreeSet::new();
        for tf in &tfs {
            tf.validate()?;
            ids.insert(tf.actuator_id);
            ids.insert(tf.sensor_id);
        }
        let freqs_hz = tfs[0].freqs_hz.clone();
        for tf in tfs {
            if tf.freqs_hz != freqs_hz {
                return Err(AdiError::Data(format!(
                    "signature set '{label}': pair {} -> {} is on a different frequency grid",
                    tf.actuator_id, tf.sensor_id
                )));
            }
            if tf.actuator_id == tf.sensor_id {
                return Err(AdiError::Data(format!(
                    "signature set '{label}': transducer {} paired with itself",
                    tf.actuator_id
                )));
            }
            if pairs.insert(tf.pair(), tf).is_some() {
                return Err(AdiError::Data(format!(
                    "signature set '{label}' contains a duplicate pair"
                )));
            }
        }
        for &a in &ids {
            for &s in &ids {
                if a != s && !pairs.contains_key(&(a, s)) {
                    return Err(AdiError::Data(format!(
                        "signature set '{label}' is missing pair {a} -> {s}"
                    )));
                }
            }
        }
        Ok(Self {
            label,
            freqs_hz,
            pairs,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn freqs_hz(&self) -> &[f64] {
        &self.freqs_hz
    }

    pub fn pairs(&self) -> impl Iterator<Item = (&PairKey, &TransferFunction)> {
        self.pairs.iter()
    }

    pub fn transducer_ids(&self) -> Vec<TransducerId> {
        let mut ids = BTreeSet::new();
        for (a, s) in self.pairs.keys() {
            ids.insert(*a);
            ids.insert(*s);
        }
        ids.into_iter().collect()
    }

    pub fn get(&self, pair: PairKey) -> Result<&TransferFunction> {
        self.pairs.get(&pair).ok_or(AdiError::UnknownPair {
            actuator: pair.0,
            sensor: pair.1,
        })
    }
}

/// Per-bin reference statistics for one pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PairStats {
    pub mag_mean: Vec<f64>,
    pub mag_std: Vec<f64>,
    /// Circular mean, wrapped to (-pi, pi].
    pub phase_mean: Vec<f64>,
    /// Standard deviation of wrapped deviations from the circular mean.
    pub phase_std: Vec<f64>,
}

/// Lower bounds applied to baseline spreads so a freakishly repeatable bin
/// cannot turn measurement round-off into a huge normalized deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct StdFloorPolicy {
    /// Magnitude floor as a fraction of the pair's median mean magnitude.
    pub mag_rel: f64,
    /// Absolute magnitude floor.
    pub mag_abs: f64,
    /// Absolute phase floor in radians.
    pub phase_abs: f64,
}

impl Default for StdFloorPolicy {
    fn default() -> Self {
        Self {
            mag_rel: 1e-6,
            mag_abs: 1e-12,
            phase_abs: 1e-3,
        }
    }
}

impl StdFloorPolicy {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("mag_rel", self.mag_rel),
            ("mag_abs", self.mag_abs),
            ("phase_abs", self.phase_abs),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(AdiError::Config(format!(
                    "floor {name} must be finite and non-negative, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Pooled healthy statistics for every pair of a transducer set.
#[derive(Debug, Clone, PartialEq)]
pub struct Baseline {
    pub freqs_hz: Vec<f64>,
    pub n_datasets: usize,
    pub floor_policy: StdFloorPolicy,
    pub pairs: BTreeMap<PairKey, PairStats>,
}

impl Baseline {
    pub fn transducer_ids(&self) -> Vec<TransducerId> {
        let mut ids = BTreeSet::new();
        for (a, s) in self.pairs.keys() {
            ids.insert(*a);
            ids.insert(*s);
        }
        ids.into_iter().collect()
    }

    pub fn get(&self, pair: PairKey) -> Result<&PairStats> {
        self.pairs.get(&pair).ok_or(AdiError::UnknownPair {
            actuator: pair.0,
            sensor: pair.1,
        })
    }
}

/// One way a signature set fails to line up with a baseline.
#[derive(Debug, Clone, PartialEq)]
pub enum SignatureMismatch {
    /// The baseline has this pair but the set does not.
    MissingPair(PairKey),
    /// The set has a pair the baseline never saw.
    UnexpectedPair(PairKey),
    GridLength { baseline: usize, actual: usize },
    GridFrequency {
        index: usize,
        baseline_hz: f64,
        actual_hz: f64,
    },
}

impl std::fmt::Display for SignatureMismatch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::MissingPair((a, s)) => write!(f, "missing pair {a} -> {s}"),
            Self::UnexpectedPair((a, s)) => write!(f, "unexpected pair {a} -> {s}"),
            Self::GridLength { baseline, actual } => write!(
                f,
                "frequency grid has {actual} bins, baseline expects {baseline}"
            ),
            Self::GridFrequency {
                index,
                baseline_hz,
                actual_hz,
            } => write!(
                f,
                "bin {index} is at {actual_hz} Hz, baseline expects {baseline_hz} Hz"
            ),
        }
    }
}

/// Checks that a measurement set can be scored against a baseline; an empty
/// report means compatible.
pub fn validate_signature_compatibility(
    baseline: &Baseline,
    set: &SignatureSet,
) -> Vec<SignatureMismatch> {
    let mut report = Vec::new();
    if set.freqs_hz().len() != baseline.freqs_hz.len() {
        report.push(SignatureMismatch::GridLength {
            baseline: baseline.freqs_hz.len(),
            actual: set.freqs_hz().len(),
        });
    } else {
        for (i, (&b, &a)) in baseline
            .freqs_hz
            .iter()
            .zip(set.freqs_hz().iter())
            .enumerate()
        {
            if a != b {
                report.push(SignatureMismatch::GridFrequency {
                    index: i,
                    baseline_hz: b,
                    actual_hz: a,
                });
            }
        }
    }
    for pair in baseline.pairs.keys() {
        if set.get(*pair).is_err() {
            report.push(SignatureMismatch::MissingPair(*pair));
        }
    }
    for (pair, _) in set.pairs() {
        if !baseline.pairs.contains_key(pair) {
            report.push(SignatureMismatch::UnexpectedPair(*pair));
        }
    }
    report
}

/// Sums values in a value-sorted order so the result is independent of input
/// permutation. Baselines built from reordered dataset lists must be
/// bitwise identical.
fn stable_sum(values: &mut Vec<f64>) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    values.iter().sum()
}

/// Circular mean of phases via the resultant vector. A zero resultant has no
/// meaningful direction; by convention it reports 0.
pub(crate) fn circular_mean(phases: &[f64]) -> f64 {
    let mut sines: Vec<f64> = phases.iter().map(|p| p.sin()).collect();
    let mut cosines: Vec<f64> = phases.iter().map(|p| p.cos()).collect();
    let s = stable_sum(&mut sines);
    let c = stable_sum(&mut cosines);
    if s == 0.0 && c == 0.0 {
        0.0
    } else {
        wrap_value(s.atan2(c))
    }
}

/// Pools at least three signature sets into per-bin reference statistics.
pub fn accumulate_baseline(sets: &[SignatureSet], floor: &StdFloorPolicy) -> Result<Baseline> {
    floor.validate()?;
    if sets.len() < 3 {
        return Err(AdiError::InsufficientData(format!(
            "baseline needs at least 3 signature sets, got {}",
            sets.len()
        )));
    }
    let reference = &sets[0];
    for set in &sets[1..] {
        if set.freqs_hz() != reference.freqs_hz() {
            return Err(AdiError::Data(format!(
                "signature set '{}' is on a different frequency grid than '{}'",
                set.label(),
                reference.label()
            )));
        }
        for (pair, _) in reference.pairs() {
            if set.get(*pair).is_err() {
                return Err(AdiError::Data(format!(
                    "signature set '{}' is missing pair {} -> {} present in '{}'",
                    set.label(),
                    pair.0,
                    pair.1,
                    reference.label()
                )));
            }
        }
        for (pair, _) in set.pairs() {
            if reference.get(*pair).is_err() {
                return Err(AdiError::Data(format!(
                    "signature set '{}' has pair {} -> {} absent from '{}'",
                    set.label(),
                    pair.0,
                    pair.1,
                    reference.label()
                )));
            }
        }
    }

    let n = sets.len() as f64;
    let n_bins = reference.freqs_hz().len();
    let mut pairs = BTreeMap::new();
    for (pair, _) in reference.pairs() {
        let tfs: Vec<&TransferFunction> =
            sets.iter().map(|s| s.get(*pair).expect("checked above")).collect();
        let mut mag_mean = Vec::with_capacity(n_bins);
        let mut mag_std = Vec::with_capacity(n_bins);
        let mut phase_mean = Vec::with_capacity(n_bins);
        let mut phase_std = Vec::with_capacity(n_bins);
        for k in 0..n_bins {
            let mags: Vec<f64> = tfs.iter().map(|tf| tf.magnitude[k]).collect();
            let mean = stable_sum(&mut mags.clone()) / n;
            let mut sq: Vec<f64> = mags.iter().map(|m| (m - mean) * (m - mean)).collect();
            let var = stable_sum(&mut sq) / (n - 1.0);
            mag_mean.push(mean);
            mag_std.push(var.sqrt());

            let phases: Vec<f64> = tfs.iter().map(|tf| tf.phase_rad[k]).collect();
            let pmean = circular_mean(&phases);
            let mut psq: Vec<f64> = phases
                .iter()
                .map(|p| {
                    let d = wrap_value(p - pmean);
                    d * d
                })
                .collect();
            let pvar = stable_sum(&mut psq) / (n - 1.0);
            phase_mean.push(pmean);
            phase_std.push(pvar.sqrt());
        }

        // Relative magnitude floor keys off the pair's median mean magnitude
        // so deep anti-resonance bins do not end up with floors of zero.
        let mut sorted_means = mag_mean.clone();
        sorted_means.sort_by(|a, b| a.total_cmp(b));
        let median_mag = if sorted_means.is_empty() {
            0.0
        } else if sorted_means.len() % 2 == 1 {
            sorted_means[sorted_means.len() / 2]
        } else {
            0.5 * (sorted_means[sorted_means.len() / 2 - 1]
                + sorted_means[sorted_means.len() / 2])
        };
        let mag_floor = (floor.mag_rel * median_mag).max(floor.mag_abs);
        for s in &mut mag_std {
            *s = s.max(mag_floor);
        }
        for s in &mut phase_std {
            *s = s.max(floor.phase_abs);
        }

        pairs.insert(
            *pair,
            PairStats {
                mag_mean,
                mag_std,
                phase_mean,
                phase_std,
            },
        );
    }

    Ok(Baseline {
        freqs_hz: reference.freqs_hz().to_vec(),
        n_datasets: sets.len(),
        floor_policy: floor.clone(),
        pairs,
    })
}
