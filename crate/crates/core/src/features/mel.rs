use serde::{Deserialize, Serialize};

use super::{FeatureError, FeatureSequence, Method};
use crate::dsp::{Dct2, Spectrum};
use crate::preprocess::FrameMatrix;

/// Floor added to filterbank energies before the log.
pub const MEL_LOG_EPSILON: f64 = 1e-10;

pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MfccConfig {
    pub n_fft: usize,
    pub n_filters: usize,
    pub n_ceps: usize,
    pub fmin_hz: f64,
    /// `None` means the Nyquist frequency.
    pub fmax_hz: Option<f64>,
    /// Keep `c0` (and drop `c[n_ceps]`) instead of `c1..=c[n_ceps]`.
    pub include_c0: bool,
}

impl Default for MfccConfig {
    fn default() -> Self {
        Self {
            n_fft: 512,
            n_filters: 26,
            n_ceps: 12,
            fmin_hz: 0.0,
            fmax_hz: None,
            include_c0: false,
        }
    }
}

impl MfccConfig {
    pub fn fmax(&self, sample_rate_hz: u32) -> f64 {
        self.fmax_hz.unwrap_or(sample_rate_hz as f64 / 2.0)
    }

    pub fn validate(&self, sample_rate_hz: u32) -> Result<(), FeatureError> {
        let nyquist = sample_rate_hz as f64 / 2.0;
        let fmax = self.fmax(sample_rate_hz);
        let highest = if self.include_c0 { self.n_ceps } else { self.n_ceps + 1 };
        let problem = if self.n_fft < 2 {
            Some("n_fft must be >= 2".to_string())
        } else if self.n_ceps < 1 || highest > self.n_filters {
            Some(format!(
                "need 1 <= n_ceps <= n_filters{}, got n_ceps {} with {} filters",
                if self.include_c0 { "" } else { " - 1" },
                self.n_ceps,
                self.n_filters
            ))
        } else if !(0.0 <= self.fmin_hz && self.fmin_hz < fmax && fmax <= nyquist) {
            Some(format!(
                "need 0 <= fmin < fmax <= {nyquist}, got {} and {fmax}",
                self.fmin_hz
            ))
        } else {
            None
        };
        match problem {
            Some(msg) => Err(FeatureError::ConfigInvalid(msg)),
            None => Ok(()),
        }
    }
}

/// Triangular filters spaced evenly on the mel scale, each peak-normalized to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct MelFilterbank {
    /// `n_filters` rows of `n_fft / 2 + 1` weights.
    pub weights: Vec<Vec<f64>>,
    /// `n_filters + 2` band edges in Hz; filter `m` spans `edges[m]..edges[m + 2]`.
    pub edges_hz: Vec<f64>,
}

impl MelFilterbank {
    pub fn centers_hz(&self) -> &[f64] {
        &self.edges_hz[1..self.edges_hz.len() - 1]
    }
}

pub fn mel_filterbank(cfg: &MfccConfig, sample_rate_hz: u32) -> Result<MelFilterbank, FeatureError> {
    cfg.validate(sample_rate_hz)?;
    let lo = hz_to_mel(cfg.fmin_hz);
    let hi = hz_to_mel(cfg.fmax(sample_rate_hz));
    let n = cfg.n_filters;
    let edges_hz: Vec<f64> = (0..n + 2)
        .map(|i| mel_to_hz(lo + (hi - lo) * i as f64 / (n + 1) as f64))
        .collect();
    let bins = cfg.n_fft / 2 + 1;
    let bin_hz = sample_rate_hz as f64 / cfg.n_fft as f64;
    let mut weights = Vec::with_capacity(n);
    for m in 0..n {
        let (left, center, right) = (edges_hz[m], edges_hz[m + 1], edges_hz[m + 2]);
        let mut row: Vec<f64> = (0..bins)
            .map(|k| {
                let f = k as f64 * bin_hz;
                if f <= left || f >= right {
                    0.0
                } else if f <= center {
                    (f - left) / (center - left)
                } else {
                    (right - f) / (right - center)
                }
            })
            .collect();
        let peak = row.iter().copied().fold(0.0, f64::max);
        if peak <= 0.0 {
            return Err(FeatureError::ConfigInvalid(format!(
                "mel filter {m} ({left:.1}-{right:.1} Hz) covers no FFT bin; raise n_fft or lower n_filters"
            )));
        }
        row.iter_mut().for_each(|w| *w /= peak);
        weights.push(row);
    }
    Ok(MelFilterbank { weights, edges_hz })
}

/// Reusable MFCC pipeline: power spectrum, mel energies, log, DCT-II.
#[derive(Debug, Clone)]
pub struct MfccExtractor {
    cfg: MfccConfig,
    bank: MelFilterbank,
    fft: Spectrum,
    dct: Dct2,
}

impl MfccExtractor {
    pub fn new(cfg: &MfccConfig, sample_rate_hz: u32) -> Result<Self, FeatureError> {
        Ok(Self {
            bank: mel_filterbank(cfg, sample_rate_hz)?,
            fft: Spectrum::new(cfg.n_fft),
            dct: Dct2::new(cfg.n_filters),
            cfg: cfg.clone(),
        })
    }

    pub fn filterbank(&self) -> &MelFilterbank {
        &self.bank
    }

    pub fn log_energies(&self, frame: &[f64]) -> Result<Vec<f64>, FeatureError> {
        if frame.len() > self.cfg.n_fft {
            return Err(FeatureError::ConfigInvalid(format!(
                "n_fft {} shorter than frame of {}",
                self.cfg.n_fft,
                frame.len()
            )));
        }
        let power = self.fft.power(frame);
        Ok(self
            .bank
            .weights
            .iter()
            .map(|row| (row.iter().zip(&power).map(|(w, p)| w * p).sum::<f64>() + MEL_LOG_EPSILON).ln())
            .collect())
    }

    /// Cepstra from log filterbank energies.
    pub fn cepstra_from_log_energies(&self, log_energies: &[f64]) -> Vec<f64> {
        let all = self.dct.transform(log_energies);
        let first = if self.cfg.include_c0 { 0 } else { 1 };
        all[first..first + self.cfg.n_ceps].to_vec()
    }

    pub fn compute(&self, frame: &[f64]) -> Result<Vec<f64>, FeatureError> {
        Ok(self.cepstra_from_log_energies(&self.log_energies(frame)?))
    }
}

pub fn mfcc(fm: &FrameMatrix, cfg: &MfccConfig) -> Result<FeatureSequence, FeatureError> {
    let extractor = MfccExtractor::new(cfg, fm.sample_rate_hz())?;
    let vectors = fm
        .frames()
        .iter()
        .map(|f| extractor.compute(f))
        .collect::<Result<Vec<_>, _>>()?;
    FeatureSequence::new(vectors, cfg.n_ceps, Method::Mfcc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn filters_peak_at_one_with_increasing_centers() {
        let bank = mel_filterbank(&MfccConfig::default(), 11025).unwrap();
        assert_eq!(bank.weights.len(), 26);
        assert_eq!(bank.weights[0].len(), 257);
        for row in &bank.weights {
            let peak = row.iter().copied().fold(0.0, f64::max);
            assert_eq!(peak, 1.0);
        }
        assert!(bank.centers_hz().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn mel_midpoint_inverts_in_closed_form() {
        let cfg = MfccConfig {
            fmax_hz: Some(5512.5),
            ..MfccConfig::default()
        };
        let bank = mel_filterbank(&cfg, 11025).unwrap();
        let mid = 0.5 * hz_to_mel(5512.5);
        let direct = 700.0 * (10f64.powf(mid / 2595.0) - 1.0);
        assert!((mel_to_hz(mid) - direct).abs() < 0.1);
        // 27 mel steps, the midpoint lands on edge 13.5 -> check a neighbouring edge round-trips.
        let e = bank.edges_hz[13];
        assert!((mel_to_hz(hz_to_mel(e)) - e).abs() < 1e-9);
    }

    #[test]
    fn tone_lands_in_its_filter() {
        let ex = MfccExtractor::new(&MfccConfig::default(), 11025).unwrap();
        let frame: Vec<f64> = (0..256)
            .map(|t| (2.0 * PI * 1000.0 * t as f64 / 11025.0).sin())
            .collect();
        let energies = ex.log_energies(&frame).unwrap();
        let best = energies
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        let edges = &ex.filterbank().edges_hz;
        assert!(edges[best] < 1000.0 && 1000.0 < edges[best + 2]);
    }

    #[test]
    fn constant_log_energies_give_zero_cepstra() {
        let ex = MfccExtractor::new(&MfccConfig::default(), 11025).unwrap();
        let c = ex.cepstra_from_log_energies(&[-3.0; 26]);
        assert!(c.iter().all(|v| v.abs() < 1e-8));
    }

    #[test]
    fn config_validation() {
        let bad = MfccConfig {
            n_ceps: 26,
            ..MfccConfig::default()
        };
        assert!(bad.validate(11025).is_err());
        let bad = MfccConfig {
            fmax_hz: Some(9000.0),
            ..MfccConfig::default()
        };
        assert!(bad.validate(11025).is_err());
        let narrow = MfccConfig {
            n_fft: 16,
            n_filters: 40,
            n_ceps: 12,
            ..MfccConfig::default()
        };
        assert!(mel_filterbank(&narrow, 11025).is_err());
    }
}
