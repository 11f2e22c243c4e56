//! Thin wrapper over `rustfft` for real-valued sequences.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

pub struct Fourier {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex<f64>>,
    len: usize,
}

impl Fourier {
    pub fn new(len: usize) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(len);
        let inverse = planner.plan_fft_inverse(len);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Self {
            forward,
            inverse,
            scratch: vec![Complex::new(0.0, 0.0); scratch_len],
            len,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn forward(&mut self, buf: &mut [Complex<f64>]) {
        self.forward.process_with_scratch(buf, &mut self.scratch);
    }

    /// Unnormalised inverse transform (result is `len` times the true inverse).
    pub fn inverse(&mut self, buf: &mut [Complex<f64>]) {
        self.inverse.process_with_scratch(buf, &mut self.scratch);
    }

    pub fn spectrum(&mut self, values: &[f64]) -> Vec<Complex<f64>> {
        let mut buf: Vec<Complex<f64>> = values.iter().map(|&v| Complex::new(v, 0.0)).collect();
        self.forward(&mut buf);
        buf
    }
}

/// `|X_k|` for `k = 0..N` of the discrete Fourier transform.
pub fn amplitudes(values: &[f64]) -> Vec<f64> {
    Fourier::new(values.len())
        .spectrum(values)
        .iter()
        .map(|c| c.norm())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dc_amplitude_is_sum() {
        let a = amplitudes(&[1.0, 2.0, 3.0, 4.0]);
        assert!((a[0] - 10.0).abs() < 1e-12);
        assert!((a[1] - a[3]).abs() < 1e-12);
    }

    #[test]
    fn inverse_undoes_forward_up_to_length() {
        let v = [0.5, -1.0, 2.0, 0.0, 3.0];
        let mut f = Fourier::new(v.len());
        let mut buf = f.spectrum(&v);
        f.inverse(&mut buf);
        for (b, x) in buf.iter().zip(v) {
            assert!((b.re / 5.0 - x).abs() < 1e-12);
        }
    }
}
