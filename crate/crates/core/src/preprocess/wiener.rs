use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::PreprocessError;
use crate::dsp::Spectrum;
use crate::signal_io::AudioBuffer;

/// Single-channel STFT Wiener filter settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WienerConfig {
    /// Leading STFT frames assumed to contain noise only.
    pub noise_estimate_frames: usize,
    /// Decision-directed weight on the previous frame's clean-speech estimate.
    pub smoothing_alpha: f64,
    /// Lower clamp on the spectral gain.
    pub gain_floor: f64,
    /// STFT frame length in samples; the hop is half of it.
    pub frame_len: usize,
}

impl Default for WienerConfig {
    fn default() -> Self {
        Self {
            noise_estimate_frames: 6,
            smoothing_alpha: 0.98,
            gain_floor: 0.1,
            frame_len: 256,
        }
    }
}

impl WienerConfig {
    pub fn validate(&self) -> Result<(), PreprocessError> {
        let bad = |m: &str| Err(PreprocessError::ConfigInvalid(m.to_string()));
        if self.noise_estimate_frames < 1 {
            return bad("wiener noise_estimate_frames must be >= 1");
        }
        if !(0.0..1.0).contains(&self.smoothing_alpha) {
            return bad("wiener smoothing_alpha must lie in [0, 1)");
        }
        if !(self.gain_floor > 0.0 && self.gain_floor < 1.0) {
            return bad("wiener gain_floor must lie in (0, 1)");
        }
        if self.frame_len < 4 || !self.frame_len.is_multiple_of(2) {
            return bad("wiener frame_len must be even and >= 4");
        }
        Ok(())
    }

    fn hop(&self) -> usize {
        self.frame_len / 2
    }
}

/// Square root of the periodic Hann window. At half-frame hop its squares sum
/// to one, so analysis followed by synthesis with it is a tight frame.
fn sqrt_hann(len: usize) -> Vec<f64> {
    (0..len)
        .map(|n| (0.5 - 0.5 * (2.0 * PI * n as f64 / len as f64).cos()).sqrt())
        .collect()
}

/// Wiener gain `xi / (1 + xi)` per STFT bin, with `xi` the decision-directed
/// a-priori SNR and the noise PSD averaged over the leading frames.
///
/// Gains are clamped to `[gain_floor, 1]` and the synthesis uses the same
/// tight-frame window as the analysis, so the output never carries more
/// energy than the input.
pub fn wiener_filter(buf: &AudioBuffer, cfg: &WienerConfig) -> Result<AudioBuffer, PreprocessError> {
    cfg.validate()?;
    let x = buf.samples();
    let n = x.len();
    let frame_len = cfg.frame_len;
    let hop = cfg.hop();
    let needed = cfg.noise_estimate_frames * frame_len;
    if n < needed {
        return Err(PreprocessError::TooShort { len: n, needed });
    }

    let window = sqrt_hann(frame_len);
    let stft = Spectrum::new(frame_len);
    let half = frame_len / 2;
    let windowed = |frame: &[f64]| -> Vec<f64> { frame.iter().zip(&window).map(|(s, w)| s * w).collect() };

    let mut noise_psd = vec![0.0; half + 1];
    for i in 0..cfg.noise_estimate_frames {
        let spec = stft.forward(&windowed(&x[i * hop..i * hop + frame_len]));
        for (acc, c) in noise_psd.iter_mut().zip(&spec) {
            *acc += c.norm_sqr();
        }
    }
    for p in &mut noise_psd {
        *p /= cfg.noise_estimate_frames as f64;
    }

    // Pad so every input sample is covered by two frames.
    let frames = (n + hop).div_ceil(hop);
    let padded_len = (frames - 1) * hop + frame_len;
    let mut padded = vec![0.0; padded_len];
    padded[hop..hop + n].copy_from_slice(x);

    let mut out = vec![0.0; padded_len];
    let mut prev_clean_power = vec![0.0; half + 1];
    let mut gains = vec![1.0; frame_len];
    for f in 0..frames {
        let start = f * hop;
        let mut spec = stft.forward(&windowed(&padded[start..start + frame_len]));
        for k in 0..=half {
            let power = spec[k].norm_sqr();
            let noise = noise_psd[k];
            let gain = if noise <= f64::MIN_POSITIVE {
                1.0
            } else {
                let posterior = power / noise;
                let prior = cfg.smoothing_alpha * prev_clean_power[k] / noise
                    + (1.0 - cfg.smoothing_alpha) * (posterior - 1.0).max(0.0);
                (prior / (1.0 + prior)).clamp(cfg.gain_floor, 1.0)
            };
            prev_clean_power[k] = gain * gain * power;
            gains[k] = gain;
            if k > 0 && k < frame_len - k {
                gains[frame_len - k] = gain;
            }
        }
        for (c, g) in spec.iter_mut().zip(&gains) {
            *c *= Complex64::new(*g, 0.0);
        }
        let frame_out = stft.inverse_real(&spec);
        for ((o, y), w) in out[start..start + frame_len]
            .iter_mut()
            .zip(&frame_out)
            .zip(&window)
        {
            *o += y * w;
        }
    }

    let samples = out[hop..hop + n].iter().map(|s| s.clamp(-1.0, 1.0)).collect();
    Ok(AudioBuffer::from_unchecked(samples, buf.sample_rate_hz()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal_io::{mix_at_snr, rms, segmental_snr_db};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn white(len: usize, std: f64, seed: u64) -> AudioBuffer {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, std).unwrap();
        AudioBuffer::from_clamped((0..len).map(|_| normal.sample(&mut rng)).collect(), 11025).unwrap()
    }

    #[test]
    fn zero_in_zero_out() {
        let b = AudioBuffer::new(vec![0.0; 4000], 11025).unwrap();
        let y = wiener_filter(&b, &WienerConfig::default()).unwrap();
        assert_eq!(y.len(), 4000);
        assert!(y.samples().iter().all(|&s| s == 0.0));
    }

    #[test]
    fn too_short_is_rejected() {
        let b = AudioBuffer::new(vec![0.1; 1000], 11025).unwrap();
        assert!(matches!(
            wiener_filter(&b, &WienerConfig::default()),
            Err(PreprocessError::TooShort { needed: 1536, .. })
        ));
    }

    #[test]
    fn tight_frame_is_perfect_reconstruction_at_unit_gain() {
        // A gain floor just below one forces every gain to ~1.
        let cfg = WienerConfig {
            gain_floor: 1.0 - 1e-15,
            ..WienerConfig::default()
        };
        let b = white(3000, 0.1, 1);
        let y = wiener_filter(&b, &cfg).unwrap();
        for (a, b) in b.samples().iter().zip(y.samples()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn noise_only_never_gains_energy() {
        for seed in 0..5 {
            let b = white(11025, 0.05, seed);
            let y = wiener_filter(&b, &WienerConfig::default()).unwrap();
            assert!(y.rms() <= b.rms());
        }
    }

    #[test]
    fn improves_segmental_snr_of_noisy_sine() {
        // 0.1 s noise-only lead-in feeds the noise estimate.
        let clean: Vec<f64> = (0..11025)
            .map(|t| {
                if t < 1103 {
                    0.0
                } else {
                    0.5 * (2.0 * PI * 440.0 * t as f64 / 11025.0).sin()
                }
            })
            .collect();
        let clean = AudioBuffer::new(clean, 11025).unwrap();
        let noise = white(11025, 0.1, 7);
        let noisy = mix_at_snr(&clean, &noise, 5.0).unwrap().audio;
        let enhanced = wiener_filter(&noisy, &WienerConfig::default()).unwrap();
        let before = segmental_snr_db(clean.samples(), noisy.samples(), 256);
        let after = segmental_snr_db(clean.samples(), enhanced.samples(), 256);
        assert!(after - before >= 3.0, "before {before:.2} after {after:.2}");
        assert!(rms(enhanced.samples()) <= rms(noisy.samples()) * (1.0 + 1e-9));
    }

    #[test]
    fn deterministic() {
        let b = white(5000, 0.2, 4);
        let cfg = WienerConfig::default();
        assert_eq!(wiener_filter(&b, &cfg).unwrap(), wiener_filter(&b, &cfg).unwrap());
    }
}
