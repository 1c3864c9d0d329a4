use rustfft::num_complex::Complex64;

use super::FeatureError;
use crate::dsp::Spectrum;

/// Magnitude floor inside the log of the real cepstrum.
pub const RCC_EPSILON: f64 = 1e-10;

/// Real cepstrum extractor with a planned FFT of fixed length.
#[derive(Debug, Clone)]
pub struct RealCepstrum {
    fft: Spectrum,
    n_ceps: usize,
}

impl RealCepstrum {
    pub fn new(n_ceps: usize, n_fft: usize) -> Result<Self, FeatureError> {
        if n_ceps == 0 || n_fft == 0 || n_ceps > n_fft {
            return Err(FeatureError::ConfigInvalid(format!(
                "RCC needs 1 <= n_ceps <= n_fft, got n_ceps {n_ceps}, n_fft {n_fft}"
            )));
        }
        Ok(Self {
            fft: Spectrum::new(n_fft),
            n_ceps,
        })
    }

    /// First `n_ceps` coefficients of `IDFT(log(|DFT(frame)| + 1e-10))`.
    pub fn compute(&self, frame: &[f64]) -> Result<Vec<f64>, FeatureError> {
        if frame.len() > self.fft.len() {
            return Err(FeatureError::ConfigInvalid(format!(
                "n_fft {} shorter than frame of {}",
                self.fft.len(),
                frame.len()
            )));
        }
        if frame.iter().all(|&s| s == 0.0) {
            return Err(FeatureError::ZeroFrame);
        }
        let log_mag: Vec<Complex64> = self
            .fft
            .forward(frame)
            .iter()
            .map(|c| Complex64::new((c.norm() + RCC_EPSILON).ln(), 0.0))
            .collect();
        let mut ceps = self.fft.inverse_real(&log_mag);
        ceps.truncate(self.n_ceps);
        Ok(ceps)
    }
}

/// One-shot real cepstrum `c[0..n_ceps]` of a frame.
pub fn rcc(frame: &[f64], n_ceps: usize, n_fft: usize) -> Result<Vec<f64>, FeatureError> {
    RealCepstrum::new(n_ceps, n_fft)?.compute(frame)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn impulse_has_flat_cepstrum() {
        let mut frame = vec![0.0; 64];
        frame[0] = 1.0;
        let c = rcc(&frame, 12, 64).unwrap();
        assert!(c.iter().all(|v| v.abs() < 1e-8));
    }

    #[test]
    fn gain_moves_only_c0() {
        let frame: Vec<f64> = (0..100).map(|i| ((i * 7 % 13) as f64 - 6.0) / 6.0).collect();
        let g = 3.5;
        let scaled: Vec<f64> = frame.iter().map(|s| s * g).collect();
        let a = rcc(&frame, 16, 128).unwrap();
        let b = rcc(&scaled, 16, 128).unwrap();
        assert!((b[0] - a[0] - g.ln()).abs() < 1e-9);
        for k in 1..16 {
            assert!((a[k] - b[k]).abs() < 1e-9);
        }
    }

    #[test]
    fn errors() {
        assert_eq!(rcc(&[0.0; 8], 4, 16), Err(FeatureError::ZeroFrame));
        assert!(matches!(rcc(&[1.0; 32], 4, 16), Err(FeatureError::ConfigInvalid(_))));
    }
}
