//! Broadband excitation synthesis and transfer-function estimation.
//!
//! An interrogation run drives one transducer with a broadband signal and
//! records every other transducer's response. This module generates the drive
//! signals and turns (drive, response) sample pairs into frequency-domain
//! signatures: magnitude, phase, and coherence per bin, estimated with the
//! Welch-averaged H1 ratio S_xy/S_xx. The drive channel is the noise-free
//! reference, which is exactly the situation H1 is optimal for.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{AdiError, Result};
use crate::fft::{real_from_spectrum, Fft};
use crate::types::{Band, PairKey, TransducerId};

/// Bins whose drive auto-spectrum falls below this fraction of the in-band
/// maximum are dropped instead of producing unstable ratios.
pub const SXX_FLOOR_REL: f64 = 1e-12;

/// Fraction of the duration spent in each raised-cosine edge ramp of the
/// chirp. The ramps keep spectral splatter off the band edges so short sweeps
/// still put >= 95% of their energy inside the commanded band.
const CHIRP_EDGE_FRACTION: f64 = 0.05;

/// Excitation waveform family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExcitationKind {
    LinearChirp,
    BandLimitedRandom,
}

/// Drive-signal description for one actuation run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExcitationConfig {
    pub kind: ExcitationKind,
    pub band_low_hz: f64,
    pub band_high_hz: f64,
    /// Peak amplitude for the chirp, target RMS for the random kind.
    pub amplitude: f64,
    pub duration_s: f64,
    pub sample_rate_hz: f64,
}

impl ExcitationConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("band_low_hz", self.band_low_hz),
            ("band_high_hz", self.band_high_hz),
            ("amplitude", self.amplitude),
            ("duration_s", self.duration_s),
            ("sample_rate_hz", self.sample_rate_hz),
        ] {
            if !v.is_finite() {
                return Err(AdiError::Config(format!("excitation {name} must be finite")));
            }
        }
        if !(self.band_low_hz > 0.0) {
            return Err(AdiError::Config(format!(
                "band_low_hz must be > 0, got {}",
                self.band_low_hz
            )));
        }
        if !(self.band_high_hz > self.band_low_hz) {
            return Err(AdiError::Config(format!(
                "band_high_hz must exceed band_low_hz, got {} <= {}",
                self.band_high_hz, self.band_low_hz
            )));
        }
        if !(self.band_high_hz < self.sample_rate_hz / 2.0) {
            return Err(AdiError::Config(format!(
                "band_high_hz {} must sit below the Nyquist frequency {}",
                self.band_high_hz,
                self.sample_rate_hz / 2.0
            )));
        }
        if !(self.duration_s > 0.0) {
            return Err(AdiError::Config(format!(
                "duration_s must be > 0, got {}",
                self.duration_s
            )));
        }
        if !(self.amplitude > 0.0) {
            return Err(AdiError::Config(format!(
                "amplitude must be > 0, got {}",
                self.amplitude
            )));
        }
        Ok(())
    }

    pub fn band(&self) -> Band {
        Band {
            low_hz: self.band_low_hz,
            high_hz: self.band_high_hz,
        }
    }

    pub fn n_samples(&self) -> usize {
        (self.duration_s * self.sample_rate_hz).round() as usize
    }
}

/// Sampled excitation and the multi-channel responses of one actuation run.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesRecord {
    pub actuator_id: TransducerId,
    pub sample_rate_hz: f64,
    pub excitation: Vec<f64>,
    pub responses: BTreeMap<TransducerId, Vec<f64>>,
}

impl TimeSeriesRecord {
    pub fn validate(&self) -> Result<()> {
        if !(self.sample_rate_hz > 0.0) || !self.sample_rate_hz.is_finite() {
            return Err(AdiError::Data(format!(
                "sample_rate_hz must be positive and finite, got {}",
                self.sample_rate_hz
            )));
        }
        if self.excitation.is_empty() {
            return Err(AdiError::Data("record has no excitation samples".into()));
        }
        for (id, samples) in &self.responses {
            if samples.len() != self.excitation.len() {
                return Err(AdiError::Data(format!(
                    "channel {} has {} samples but the excitation has {}",
                    id,
                    samples.len(),
                    self.excitation.len()
                )));
            }
        }
        Ok(())
    }
}

/// Taper window applied to Welch segments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowKind {
    Hann,
    Rectangular,
}

/// Settings for the Welch H1 estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralParams {
    /// Segment length in samples; power of two, at least 64.
    pub segment_length: usize,
    /// Fractional overlap between consecutive segments, in [0, 1).
    pub overlap_fraction: f64,
    pub window: WindowKind,
    /// Analysis band; bins outside it are discarded.
    pub band: Band,
}

impl SpectralParams {
    pub fn validate(&self, sample_rate_hz: f64) -> Result<()> {
        if self.segment_length < 64 || !self.segment_length.is_power_of_two() {
            return Err(AdiError::Config(format!(
                "segment_length must be a power of two >= 64, got {}",
                self.segment_length
            )));
        }
        if !(0.0..1.0).contains(&self.overlap_fraction) {
            return Err(AdiError::Config(format!(
                "overlap_fraction must lie in [0, 1), got {}",
                self.overlap_fraction
            )));
        }
        if !(self.band.high_hz < sample_rate_hz / 2.0) {
            return Err(AdiError::Config(format!(
                "analysis band top {} must sit below the Nyquist frequency {}",
                self.band.high_hz,
                sample_rate_hz / 2.0
            )));
        }
        Band::new(self.band.low_hz, self.band.high_hz)?;
        Ok(())
    }

    fn hop(&self) -> usize {
        let hop = self.segment_length
            - (self.segment_length as f64 * self.overlap_fraction).round() as usize;
        hop.max(1)
    }
}

impl Default for SpectralParams {
    fn default() -> Self {
        Self {
            segment_length: 2048,
            overlap_fraction: 0.5,
            window: WindowKind::Hann,
            band: Band {
                low_hz: 100.0,
                high_hz: 1000.0,
            },
        }
    }
}

/// Welch-averaged frequency response of one actuator -> sensor pair.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferFunction {
    pub actuator_id: TransducerId,
    pub sensor_id: TransducerId,
    /// Strictly ascending bin centers in Hz.
    pub freqs_hz: Vec<f64>,
    pub magnitude: Vec<f64>,
    /// Wrapped to (-pi, pi].
    pub phase_rad: Vec<f64>,
    /// In [0, 1] up to rounding.
    pub coherence: Vec<f64>,
}

impl TransferFunction {
    pub fn pair(&self) -> PairKey {
        (self.actuator_id, self.sensor_id)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.freqs_hz.len();
        if self.magnitude.len() != n || self.phase_rad.len() != n || self.coherence.len() != n {
            return Err(AdiError::Data(format!(
                "transfer function {} -> {} arrays have inconsistent lengths",
                self.actuator_id, self.sensor_id
            )));
        }
        if n == 0 {
            return Err(AdiError::Data(format!(
                "transfer function {} -> {} is empty",
                self.actuator_id, self.sensor_id
            )));
        }
        for w in self.freqs_hz.windows(2) {
            if !(w[1] > w[0]) {
                return Err(AdiError::Data(format!(
                    "frequencies must be strictly ascending, got {} then {}",
                    w[0], w[1]
                )));
            }
        }
        for (k, &m) in self.magnitude.iter().enumerate() {
            if !m.is_finite() || m < 0.0 {
                return Err(AdiError::Data(format!(
                    "magnitude at bin {k} is {m}, expected a finite non-negative value"
                )));
            }
        }
        for (k, &p) in self.phase_rad.iter().enumerate() {
            if !p.is_finite() || p <= -PI || p > PI {
                return Err(AdiError::Data(format!(
                    "phase at bin {k} is {p}, expected a value in (-pi, pi]"
                )));
            }
        }
        for (k, &c) in self.coherence.iter().enumerate() {
            if !c.is_finite() || !(-1e-9..=1.0 + 1e-9).contains(&c) {
                return Err(AdiError::Data(format!(
                    "coherence at bin {k} is {c}, expected a value in [0, 1]"
                )));
            }
        }
        Ok(())
    }
}

/// Generates the drive waveform for one actuation run.
///
/// The chirp is deterministic and ignores the seed; the band-limited random
/// kind draws its spectrum from a ChaCha stream seeded with `seed`.
pub fn generate_excitation(config: &ExcitationConfig, seed: u64) -> Result<Vec<f64>> {
    config.validate()?;
    let n = config.n_samples();
    if n == 0 {
        return Err(AdiError::Config(format!(
            "duration {} s at {} Hz rounds to zero samples",
            config.duration_s, config.sample_rate_hz
        )));
    }
    match config.kind {
        ExcitationKind::LinearChirp => Ok(linear_chirp(config, n)),
        ExcitationKind::BandLimitedRandom => band_limited_random(config, n, seed),
    }
}

fn linear_chirp(config: &ExcitationConfig, n: usize) -> Vec<f64> {
    let dt = 1.0 / config.sample_rate_hz;
    let sweep_rate = (config.band_high_hz - config.band_low_hz) / config.duration_s;
    let ramp = CHIRP_EDGE_FRACTION * config.duration_s;
    (0..n)
        .map(|i| {
            let t = i as f64 * dt;
            // Instantaneous frequency f0 + sweep_rate * t; the envelope only
            // shapes amplitude, so the sweep still starts exactly at f0.
            let phase = TAU * (config.band_low_hz * t + 0.5 * sweep_rate * t * t);
            let envelope = if t < ramp {
                0.5 * (1.0 - (PI * t / ramp).cos())
            } else if t > config.duration_s - ramp {
                0.5 * (1.0 - (PI * (config.duration_s - t) / ramp).cos())
            } else {
                1.0
            };
            config.amplitude * envelope * phase.sin()
        })
        .collect()
}

fn band_limited_random(config: &ExcitationConfig, n: usize, seed: u64) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = StandardNormal;
    let df = config.sample_rate_hz / n as f64;
    let band = config.band();
    let mut spec = vec![Complex64::new(0.0, 0.0); n];
    let mut populated = 0usize;
    for k in 1..=(n / 2) {
        let f = k as f64 * df;
        if band.contains(f) && k != n - k {
            let re: f64 = normal.sample(&mut rng);
            let im: f64 = normal.sample(&mut rng);
            spec[k] = Complex64::new(re, im);
            spec[n - k] = spec[k].conj();
            populated += 1;
        }
    }
    if populated == 0 {
        return Err(AdiError::Config(format!(
            "band {} contains no spectral bins at {} samples",
            band, n
        )));
    }
    let x = real_from_spectrum(&mut spec);
    let rms = (x.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
    Ok(x.into_iter().map(|v| v * config.amplitude / rms).collect())
}

/// Wraps an angle to the principal interval (-pi, pi], boundary mapped to +pi.
pub fn wrap_phase(angle_rad: f64) -> Result<f64> {
    if !angle_rad.is_finite() {
        return Err(AdiError::Domain(format!(
            "cannot wrap non-finite angle {angle_rad}"
        )));
    }
    Ok(wrap_value(angle_rad))
}

/// Infallible wrap for angles already known to be finite.
pub(crate) fn wrap_value(angle_rad: f64) -> f64 {
    let mut r = angle_rad - TAU * (angle_rad / TAU).round();
    if r <= -PI {
        r += TAU;
    }
    if r > PI {
        r -= TAU;
    }
    r
}

/// Welch H1 transfer-function estimate from one record's drive signal to the
/// named sensor channel.
///
/// Output bins are restricted to the analysis band, and bins whose drive
/// auto-spectrum sits below `SXX_FLOOR_REL` of the in-band maximum are
/// excluded entirely.
pub fn estimate_transfer_function(
    record: &TimeSeriesRecord,
    sensor_id: TransducerId,
    params: &SpectralParams,
) -> Result<TransferFunction> {
    record.validate()?;
    params.validate(record.sample_rate_hz)?;
    let seg = params.segment_length;
    let n = record.excitation.len();
    if n < 2 * seg {
        return Err(AdiError::Data(format!(
            "record has {n} samples but the estimator needs at least {} (2 segments of {seg})",
            2 * seg
        )));
    }
    let y = record.responses.get(&sensor_id).ok_or_else(|| {
        AdiError::Data(format!(
            "record from actuator {} has no channel for sensor {}",
            record.actuator_id, sensor_id
        ))
    })?;

    let window: Vec<f64> = match params.window {
        WindowKind::Hann => (0..seg)
            .map(|i| 0.5 * (1.0 - (TAU * i as f64 / seg as f64).cos()))
            .collect(),
        WindowKind::Rectangular => vec![1.0; seg],
    };

    let fft = Fft::new(seg);
    let n_bins = seg / 2 + 1;
    let mut sxx = vec![0.0f64; n_bins];
    let mut syy = vec![0.0f64; n_bins];
    let mut sxy = vec![Complex64::new(0.0, 0.0); n_bins];
    let mut bx = vec![Complex64::new(0.0, 0.0); seg];
    let mut by = vec![Complex64::new(0.0, 0.0); seg];

    let mut start = 0;
    while start + seg <= n {
        for i in 0..seg {
            bx[i] = Complex64::new(record.excitation[start + i] * window[i], 0.0);
            by[i] = Complex64::new(y[start + i] * window[i], 0.0);
        }
        fft.forward(&mut bx);
        fft.forward(&mut by);
        for k in 0..n_bins {
            sxx[k] += bx[k].norm_sqr();
            syy[k] += by[k].norm_sqr();
            sxy[k] += bx[k].conj() * by[k];
        }
        start += params.hop();
    }

    let df = record.sample_rate_hz / seg as f64;
    let mut bins: Vec<usize> = (0..n_bins)
        .filter(|&k| params.band.contains(k as f64 * df))
        .collect();
    if bins.is_empty() {
        return Err(AdiError::Config(format!(
            "analysis band {} contains no bins at resolution {df} Hz",
            params.band
        )));
    }
    let sxx_max = bins.iter().map(|&k| sxx[k]).fold(0.0f64, f64::max);
    if !(sxx_max > 0.0) || !sxx_max.is_finite() {
        return Err(AdiError::Estimation(format!(
            "no drive power inside the analysis band {}",
            params.band
        )));
    }
    bins.retain(|&k| sxx[k] >= SXX_FLOOR_REL * sxx_max);
    if bins.is_empty() {
        return Err(AdiError::Estimation(
            "every in-band bin falls below the drive power floor".into(),
        ));
    }

    let mut freqs_hz = Vec::with_capacity(bins.len());
    let mut magnitude = Vec::with_capacity(bins.len());
    let mut phase_rad = Vec::with_capacity(bins.len());
    let mut coherence = Vec::with_capacity(bins.len());
    for &k in &bins {
        let h = sxy[k] / sxx[k];
        freqs_hz.push(k as f64 * df);
        magnitude.push(h.norm());
        phase_rad.push(wrap_value(h.arg()));
        let denom = sxx[k] * syy[k];
        let coh = if denom > 0.0 {
            (sxy[k].norm_sqr() / denom).clamp(0.0, 1.0)
        } else {
            0.0
        };
        coherence.push(coh);
    }

    let tf = TransferFunction {
        actuator_id: record.actuator_id,
        sensor_id,
        freqs_hz,
        magnitude,
        phase_rad,
        coherence,
    };
    tf.validate()?;
    Ok(tf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fft::spectrum_of_real;

    fn chirp_config() -> ExcitationConfig {
        ExcitationConfig {
            kind: ExcitationKind::LinearChirp,
            band_low_hz: 100.0,
            band_high_hz: 1000.0,
            amplitude: 1.0,
            duration_s: 1.0,
            sample_rate_hz: 4096.0,
        }
    }

    fn record_from(x: Vec<f64>, pairs: Vec<(u32, Vec<f64>)>, fs: f64) -> TimeSeriesRecord {
        TimeSeriesRecord {
            actuator_id: TransducerId(1),
            sample_rate_hz: fs,
            excitation: x,
            responses: pairs
                .into_iter()
                .map(|(id, y)| (TransducerId(id), y))
                .collect(),
        }
    }

    /// Applies a frequency response to a real signal by direct spectral
    /// multiplication. This is the synthesis route the estimator tests use as
    /// their oracle; it shares nothing with the Welch segmentation path.
    fn filter_through(x: &[f64], fs: f64, h: impl Fn(f64) -> Complex64) -> Vec<f64> {
        let n = x.len();
        let mut spec = crate::fft::spectrum_of_real(x);
        for k in 0..=n / 2 {
            let f = k as f64 * fs / n as f64;
            let hv = h(f);
            spec[k] *= hv;
            if k != 0 && k != n - k {
                spec[n - k] = spec[k].conj();
            }
        }
        crate::fft::real_from_spectrum(&mut spec)
    }

    fn spectral_energy_fraction_in_band(x: &[f64], fs: f64, band: Band) -> f64 {
        let spec = spectrum_of_real(x);
        let n = x.len();
        let mut in_band = 0.0;
        let mut total = 0.0;
        for k in 0..=n / 2 {
            let f = k as f64 * fs / n as f64;
            let e = spec[k].norm_sqr();
            total += e;
            if band.contains(f) {
                in_band += e;
            }
        }
        in_band / total
    }

    #[test]
    fn chirp_length_matches_duration() {
        let x = generate_excitation(&chirp_config(), 0).unwrap();
        assert_eq!(x.len(), 4096);
    }

    #[test]
    fn chirp_starts_at_the_low_band_edge() {
        // The sweep phase first reaches pi half a period after t = 0, so the
        // time of the first downward zero crossing encodes the average
        // frequency over the opening half cycle. For a 100 Hz start swept at
        // 900 Hz/s that average sits near 102 Hz; anything inside 5 Hz of the
        // band edge confirms the sweep starts where it should.
        let x = generate_excitation(&chirp_config(), 0).unwrap();
        let fs = 4096.0;
        let mut t_cross = None;
        for i in 1..x.len() {
            if x[i - 1] > 0.0 && x[i] <= 0.0 {
                let frac = x[i - 1] / (x[i - 1] - x[i]);
                t_cross = Some((i as f64 - 1.0 + frac) / fs);
                break;
            }
        }
        let t1 = t_cross.expect("chirp never crossed zero");
        let f_start = 1.0 / (2.0 * t1);
        assert!(
            (f_start - 100.0).abs() < 5.0,
            "instantaneous start frequency {f_start} Hz, expected about 100 Hz"
        );
    }

    #[test]
    fn chirp_energy_stays_in_band() {
        for duration in [0.5, 1.0, 2.0] {
            for (lo, hi) in [(100.0, 1000.0), (200.0, 800.0)] {
                let cfg = ExcitationConfig {
                    band_low_hz: lo,
                    band_high_hz: hi,
                    duration_s: duration,
                    ..chirp_config()
                };
                let x = generate_excitation(&cfg, 0).unwrap();
                let frac = spectral_energy_fraction_in_band(
                    &x,
                    cfg.sample_rate_hz,
                    Band {
                        low_hz: lo,
                        high_hz: hi,
                    },
                );
                assert!(
                    frac >= 0.95,
                    "only {frac:.4} of chirp energy in {lo}-{hi} Hz over {duration} s"
                );
            }
        }
    }

    #[test]
    fn zero_amplitude_is_rejected() {
        let cfg = ExcitationConfig {
            amplitude: 0.0,
            ..chirp_config()
        };
        match generate_excitation(&cfg, 0) {
            Err(AdiError::Config(msg)) => assert!(msg.contains("amplitude"), "got: {msg}"),
            other => panic!("expected a configuration error, got {other:?}"),
        }
    }

    #[test]
    fn invalid_band_is_rejected() {
        let cfg = ExcitationConfig {
            band_high_hz: 3000.0,
            ..chirp_config()
        };
        assert!(matches!(
            generate_excitation(&cfg, 0),
            Err(AdiError::Config(_))
        ));
    }

    #[test]
    fn random_excitation_is_seed_deterministic() {
        let cfg = ExcitationConfig {
            kind: ExcitationKind::BandLimitedRandom,
            ..chirp_config()
        };
        let a = generate_excitation(&cfg, 7).unwrap();
        let b = generate_excitation(&cfg, 7).unwrap();
        let c = generate_excitation(&cfg, 8).unwrap();
        assert_eq!(a, b, "same seed must reproduce the same sequence");
        assert_ne!(a, c, "different seeds must differ");
    }

    #[test]
    fn random_excitation_is_zero_mean_band_confined_and_scaled() {
        let cfg = ExcitationConfig {
            kind: ExcitationKind::BandLimitedRandom,
            amplitude: 2.5,
            ..chirp_config()
        };
        let x = generate_excitation(&cfg, 3).unwrap();
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        assert!(mean.abs() < 1e-9, "mean {mean} should vanish");
        let rms = (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt();
        assert!((rms - 2.5).abs() < 1e-9, "rms {rms} should equal amplitude");

        // Synthesis zeroes out-of-band bins outright, far beyond -20 dB.
        let spec = spectrum_of_real(&x);
        let n = x.len();
        let mut in_max = 0.0f64;
        let mut out_max = 0.0f64;
        for k in 1..=n / 2 {
            let f = k as f64 * cfg.sample_rate_hz / n as f64;
            let m = spec[k].norm();
            if cfg.band().contains(f) {
                in_max = in_max.max(m);
            } else {
                out_max = out_max.max(m);
            }
        }
        assert!(
            out_max < 1e-8 * in_max,
            "out-of-band leakage {out_max} vs in-band {in_max}"
        );
    }

    #[test]
    fn wrap_phase_examples() {
        assert_eq!(wrap_phase(0.0).unwrap(), 0.0);
        assert!((wrap_phase(TAU - 0.2).unwrap() + 0.2).abs() < 1e-12);
        let w = wrap_phase(-3.0 * PI).unwrap();
        assert!(
            (w - PI).abs() < 1e-12 && w > 0.0,
            "-3pi should map to +pi, got {w}"
        );
        assert_eq!(wrap_phase(PI).unwrap(), PI);
        assert_eq!(wrap_phase(-PI).unwrap(), PI);
    }

    #[test]
    fn wrap_phase_rejects_non_finite() {
        assert!(matches!(wrap_phase(f64::NAN), Err(AdiError::Domain(_))));
        assert!(matches!(
            wrap_phase(f64::INFINITY),
            Err(AdiError::Domain(_))
        ));
    }

    #[test]
    fn wrap_phase_is_a_modular_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let normal = StandardNormal;
        for _ in 0..500 {
            let angle: f64 = <StandardNormal as Distribution<f64>>::sample(&normal, &mut rng) * 20.0;
            let w = wrap_phase(angle).unwrap();
            assert!(w > -PI && w <= PI, "wrapped {angle} to {w}");
            let k = (angle - w) / TAU;
            assert!(
                (k - k.round()).abs() < 1e-9,
                "wrap changed the angle by a non-multiple of 2pi: {angle} -> {w}"
            );
        }
    }

    #[test]
    fn static_gain_estimates_exactly() {
        let x = generate_excitation(&chirp_config(), 0).unwrap();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let record = record_from(x, vec![(2, y)], 4096.0);
        let params = SpectralParams {
            segment_length: 1024,
            ..SpectralParams::default()
        };
        let tf = estimate_transfer_function(&record, TransducerId(2), &params).unwrap();
        for k in 0..tf.freqs_hz.len() {
            assert!(
                (tf.magnitude[k] - 2.0).abs() < 1e-9,
                "magnitude {} at {} Hz",
                tf.magnitude[k],
                tf.freqs_hz[k]
            );
            assert!(
                tf.phase_rad[k].abs() < 1e-9,
                "phase {} at {} Hz",
                tf.phase_rad[k],
                tf.freqs_hz[k]
            );
            assert!(tf.coherence[k] > 1.0 - 1e-9);
        }
    }

    #[test]
    fn resonator_oracle_within_five_percent_at_coherent_bins() {
        // Broadband noise through a one-degree-of-freedom resonator; the
        // analytic response both synthesizes the output and grades the
        // estimate.
        let fs = 4096.0;
        let cfg = ExcitationConfig {
            kind: ExcitationKind::BandLimitedRandom,
            band_low_hz: 50.0,
            band_high_hz: 1500.0,
            amplitude: 1.0,
            duration_s: 8.0,
            sample_rate_hz: fs,
        };
        let x = generate_excitation(&cfg, 21).unwrap();
        let (m, f0, zeta) = (1.0, 300.0, 0.05);
        let k_spring = (TAU * f0).powi(2) * m;
        let c = 2.0 * zeta * (k_spring * m).sqrt();
        let h = |f: f64| {
            let w = TAU * f;
            Complex64::new(1.0, 0.0) / Complex64::new(k_spring - m * w * w, c * w)
        };
        let y = filter_through(&x, fs, h);
        let record = record_from(x, vec![(2, y)], fs);
        let params = SpectralParams {
            segment_length: 2048,
            overlap_fraction: 0.5,
            window: WindowKind::Hann,
            band: Band {
                low_hz: 50.0,
                high_hz: 1500.0,
            },
        };
        let tf = estimate_transfer_function(&record, TransducerId(2), &params).unwrap();
        let mut graded = 0;
        for k in 0..tf.freqs_hz.len() {
            if tf.coherence[k] < 0.99 {
                continue;
            }
            graded += 1;
            let truth = h(tf.freqs_hz[k]).norm();
            let rel = (tf.magnitude[k] - truth).abs() / truth;
            assert!(
                rel <= 0.05,
                "{}% magnitude error at {} Hz",
                100.0 * rel,
                tf.freqs_hz[k]
            );
        }
        assert!(graded > 100, "only {graded} bins passed the coherence gate");
    }

    #[test]
    fn noiseless_synthesis_matches_to_one_percent_and_twenty_milliradians() {
        // A smooth two-mode response, stationary broadband drive, no noise:
        // the estimate has to track the synthesis response tightly at
        // coherent bins. Random excitation avoids the sweep-localization
        // smearing a chirp adds on top of the window resolution, and the
        // analysis band sits strictly inside the excitation band so every
        // graded bin is fully driven.
        let fs = 4096.0;
        let cfg = ExcitationConfig {
            kind: ExcitationKind::BandLimitedRandom,
            band_low_hz: 100.0,
            band_high_hz: 1100.0,
            amplitude: 1.0,
            duration_s: 16.0,
            sample_rate_hz: fs,
        };
        let x = generate_excitation(&cfg, 7).unwrap();
        let mode = |f: f64, f0: f64, zeta: f64| {
            let (w, w0) = (TAU * f, TAU * f0);
            Complex64::new(1.0, 0.0)
                / Complex64::new(w0 * w0 - w * w, 2.0 * zeta * w0 * w)
        };
        let h = |f: f64| mode(f, 250.0, 0.08) + mode(f, 620.0, 0.06).scale(0.6);
        let y = filter_through(&x, fs, h);
        let record = record_from(x, vec![(2, y)], fs);
        let params = SpectralParams {
            segment_length: 4096,
            band: Band::new(150.0, 1000.0).unwrap(),
            ..SpectralParams::default()
        };
        let tf = estimate_transfer_function(&record, TransducerId(2), &params).unwrap();
        let mut graded = 0;
        for k in 0..tf.freqs_hz.len() {
            if tf.coherence[k] < 0.99 {
                continue;
            }
            graded += 1;
            let truth = h(tf.freqs_hz[k]);
            let rel = (tf.magnitude[k] - truth.norm()).abs() / truth.norm();
            let dphase = wrap_value(tf.phase_rad[k] - truth.arg()).abs();
            assert!(
                rel <= 0.01,
                "{}% magnitude error at {} Hz",
                100.0 * rel,
                tf.freqs_hz[k]
            );
            assert!(
                dphase <= 0.02,
                "{dphase} rad phase error at {} Hz",
                tf.freqs_hz[k]
            );
        }
        assert!(graded > 100, "only {graded} bins passed the coherence gate");
    }

    #[test]
    fn estimator_is_linear_in_the_sensor_channel() {
        let fs = 4096.0;
        let cfg = ExcitationConfig {
            duration_s: 2.0,
            ..chirp_config()
        };
        let x = generate_excitation(&cfg, 0).unwrap();
        let h = |f: f64| Complex64::new(1.0, 0.0) / Complex64::new(1.0, f / 400.0);
        let y1 = filter_through(&x, fs, h);
        let y2: Vec<f64> = y1.iter().map(|v| 3.5 * v).collect();
        let params = SpectralParams {
            segment_length: 1024,
            ..SpectralParams::default()
        };
        let r1 = record_from(x.clone(), vec![(2, y1)], fs);
        let r2 = record_from(x, vec![(2, y2)], fs);
        let tf1 = estimate_transfer_function(&r1, TransducerId(2), &params).unwrap();
        let tf2 = estimate_transfer_function(&r2, TransducerId(2), &params).unwrap();
        for k in 0..tf1.freqs_hz.len() {
            let rel = (tf2.magnitude[k] - 3.5 * tf1.magnitude[k]).abs()
                / (3.5 * tf1.magnitude[k]);
            assert!(rel < 1e-9, "magnitude scaling broke at bin {k}: {rel}");
            assert!(
                wrap_value(tf2.phase_rad[k] - tf1.phase_rad[k]).abs() < 1e-9,
                "phase moved at bin {k}"
            );
            assert!(
                (tf2.coherence[k] - tf1.coherence[k]).abs() < 1e-9,
                "coherence moved at bin {k}"
            );
        }
    }

    #[test]
    fn uncorrelated_noise_has_near_zero_coherence() {
        let cfg = ExcitationConfig {
            duration_s: 4.0,
            ..chirp_config()
        };
        let x = generate_excitation(&cfg, 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let normal = StandardNormal;
        let y: Vec<f64> = (0..x.len())
            .map(|_| <StandardNormal as Distribution<f64>>::sample(&normal, &mut rng))
            .collect();
        let record = record_from(x, vec![(2, y)], 4096.0);
        let params = SpectralParams {
            segment_length: 1024,
            ..SpectralParams::default()
        };
        let tf = estimate_transfer_function(&record, TransducerId(2), &params).unwrap();
        let mean_coh = tf.coherence.iter().sum::<f64>() / tf.coherence.len() as f64;
        assert!(
            mean_coh < 0.3,
            "mean coherence {mean_coh} for an uncorrelated channel"
        );
    }

    #[test]
    fn short_record_is_rejected() {
        let x = vec![0.5; 1000];
        let y = vec![0.5; 1000];
        let record = record_from(x, vec![(2, y)], 4096.0);
        let params = SpectralParams {
            segment_length: 1024,
            ..SpectralParams::default()
        };
        match estimate_transfer_function(&record, TransducerId(2), &params) {
            Err(AdiError::Data(msg)) => assert!(msg.contains("samples"), "got: {msg}"),
            other => panic!("expected a data error, got {other:?}"),
        }
    }

    #[test]
    fn missing_sensor_channel_is_rejected() {
        let x = generate_excitation(&chirp_config(), 0).unwrap();
        let y = x.clone();
        let record = record_from(x, vec![(2, y)], 4096.0);
        let params = SpectralParams {
            segment_length: 1024,
            ..SpectralParams::default()
        };
        assert!(matches!(
            estimate_transfer_function(&record, TransducerId(9), &params),
            Err(AdiError::Data(_))
        ));
    }

    #[test]
    fn silent_drive_is_an_estimation_error() {
        let x = vec![0.0; 4096];
        let y = vec![0.0; 4096];
        let record = record_from(x, vec![(2, y)], 4096.0);
        let params = SpectralParams {
            segment_length: 1024,
            ..SpectralParams::default()
        };
        assert!(matches!(
            estimate_transfer_function(&record, TransducerId(2), &params),
            Err(AdiError::Estimation(_))
        ));
    }

    #[test]
    fn drive_power_floor_drops_unexcited_bins() {
        // Two pure tones leave most of the band with essentially zero drive
        // power; those bins must be excluded, not returned as garbage ratios.
        let fs = 4096.0;
        let n = 8192;
        let x: Vec<f64> = (0..n)
            .map(|i| {
                let t = i as f64 / fs;
                (TAU * 256.0 * t).sin() + (TAU * 512.0 * t).sin()
            })
            .collect();
        let y = x.clone();
        let record = record_from(x, vec![(2, y)], fs);
        let params = SpectralParams {
            segment_length: 1024,
            ..SpectralParams::default()
        };
        let tf = estimate_transfer_function(&record, TransducerId(2), &params).unwrap();
        let full_band_bins = (0..=512)
            .filter(|&k| params.band.contains(k as f64 * fs / 1024.0))
            .count();
        assert!(
            tf.freqs_hz.len() < full_band_bins / 4,
            "kept {} of {} bins despite a two-tone drive",
            tf.freqs_hz.len(),
            full_band_bins
        );
        assert!(tf
            .freqs_hz
            .iter()
            .any(|&f| (f - 256.0).abs() < 4.0 + 1e-9));
    }
}
