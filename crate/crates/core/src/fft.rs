//! Thin wrapper around rustfft with the real-signal helpers this crate needs.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::FftPlanner;

/// Forward/inverse transform pair for one fixed length.
pub(crate) struct Fft {
    forward: Arc<dyn rustfft::Fft<f64>>,
    inverse: Arc<dyn rustfft::Fft<f64>>,
    len: usize,
}

impl Fft {
    pub(crate) fn new(len: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
            len,
        }
    }

    pub(crate) fn forward(&self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.len);
        self.forward.process(buf);
    }

    /// Inverse transform normalized by 1/len, so inverse(forward(x)) == x.
    pub(crate) fn inverse(&self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.len);
        self.inverse.process(buf);
        let scale = 1.0 / self.len as f64;
        for v in buf.iter_mut() {
            *v *= scale;
        }
    }
}

/// Full complex spectrum of a real signal.
pub(crate) fn spectrum_of_real(x: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    Fft::new(x.len()).forward(&mut buf);
    buf
}

/// Real signal from a spectrum that is Hermitian up to rounding; the tiny
/// imaginary residue of the inverse transform is dropped.
pub(crate) fn real_from_spectrum(spec: &mut [Complex64]) -> Vec<f64> {
    Fft::new(spec.len()).inverse(spec);
    spec.iter().map(|v| v.re).collect()
}
