//! FFT-backed transforms shared by the Wiener filter and the feature extractors.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Forward and inverse complex FFT of one fixed length, applied to real input.
#[derive(Clone)]
pub struct Spectrum {
    len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Spectrum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Spectrum").field("len", &self.len).finish()
    }
}

impl Spectrum {
    pub fn new(len: usize) -> Self {
        assert!(len > 0, "FFT length must be positive");
        let mut planner = FftPlanner::new();
        Self {
            len,
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Full DFT of `input`, zero-padded (or truncated) to the transform length.
    pub fn forward(&self, input: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = (0..self.len)
            .map(|i| Complex64::new(input.get(i).copied().unwrap_or(0.0), 0.0))
            .collect();
        self.forward.process(&mut buf);
        buf
    }

    /// Real part of the normalized inverse DFT.
    pub fn inverse_real(&self, spectrum: &[Complex64]) -> Vec<f64> {
        assert_eq!(spectrum.len(), self.len);
        let mut buf = spectrum.to_vec();
        self.inverse.process(&mut buf);
        let scale = 1.0 / self.len as f64;
        buf.iter().map(|c| c.re * scale).collect()
    }

    /// `|X(k)|^2` for `k = 0..=len/2`.
    pub fn power(&self, input: &[f64]) -> Vec<f64> {
        self.forward(input)
            .iter()
            .take(self.len / 2 + 1)
            .map(|c| c.norm_sqr())
            .collect()
    }
}

/// Orthonormal type-II DCT computed through a same-length FFT.
#[derive(Clone)]
pub struct Dct2 {
    len: usize,
    fft: Arc<dyn Fft<f64>>,
    twiddles: Vec<Complex64>,
}

impl fmt::Debug for Dct2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Dct2").field("len", &self.len).finish()
    }
}

impl Dct2 {
    pub fn new(len: usize) -> Self {
        assert!(len > 0, "DCT length must be positive");
        let fft = FftPlanner::new().plan_fft_forward(len);
        let twiddles = (0..len)
            .map(|k| Complex64::from_polar(1.0, -PI * k as f64 / (2.0 * len as f64)))
            .collect();
        Self { len, fft, twiddles }
    }

    /// `X[k] = s(k) * sum_n x[n] cos(pi k (2n + 1) / 2M)` with `s(0) = sqrt(1/M)`
    /// and `s(k) = sqrt(2/M)` otherwise.
    pub fn transform(&self, input: &[f64]) -> Vec<f64> {
        let m = self.len;
        assert_eq!(input.len(), m);
        // Even samples ascending, odd samples descending.
        let mut v = vec![Complex64::new(0.0, 0.0); m];
        for (n, pair) in input.chunks(2).enumerate() {
            v[n].re = pair[0];
            if let Some(&odd) = pair.get(1) {
                v[m - 1 - n].re = odd;
            }
        }
        self.fft.process(&mut v);
        let s0 = (1.0 / m as f64).sqrt();
        let sk = (2.0 / m as f64).sqrt();
        v.iter()
            .zip(&self.twiddles)
            .enumerate()
            .map(|(k, (x, w))| (x * w).re * if k == 0 { s0 } else { sk })
            .collect()
    }
}
