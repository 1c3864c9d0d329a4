//! Front-end signal conditioning.
//!
//! The chain runs in a fixed order: Wiener denoising, energy-based endpoint
//! detection with silence removal, pre-emphasis, frame blocking and Hamming
//! windowing. [`preprocess`] runs all of it; each stage is also public on its
//! own.

mod endpoint;
mod wiener;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::signal_io::AudioBuffer;

pub use endpoint::{detect_endpoints, frame_energies, remove_silence, EndpointConfig, Segment};
pub use wiener::{wiener_filter, WienerConfig};

/// Floor added inside the log of [`short_term_log_energy`].
pub const LOG_ENERGY_EPSILON: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PreprocessError {
    #[error("signal too short: {len} samples, need at least {needed}")]
    TooShort { len: usize, needed: usize },
    #[error("frame is empty")]
    EmptyFrame,
    #[error("no speech segment survived endpoint detection")]
    NoSpeech,
    #[error("segment list is empty")]
    EmptySegments,
    #[error("segment [{start}, {end}) invalid for a buffer of {len} samples")]
    InvalidSegment { start: usize, end: usize, len: usize },
    #[error("pre-emphasis alpha {0} outside [0, 1]")]
    AlphaOutOfRange(f64),
    #[error("frame length {0} ms outside [10, 30]")]
    FrameMsOutOfRange(f64),
    #[error("overlap fraction {0} outside [0.25, 0.75]")]
    OverlapOutOfRange(f64),
    #[error("window has {window} taps but frames have {frame} samples")]
    LengthMismatch { window: usize, frame: usize },
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
}

impl PreprocessError {
    pub fn name(&self) -> &'static str {
        match self {
            Self::TooShort { .. } => "TooShort",
            Self::EmptyFrame => "EmptyFrame",
            Self::NoSpeech => "NoSpeech",
            Self::EmptySegments => "EmptySegments",
            Self::InvalidSegment { .. } => "InvalidSegment",
            Self::AlphaOutOfRange(_) => "AlphaOutOfRange",
            Self::FrameMsOutOfRange(_) => "FrameMsOutOfRange",
            Self::OverlapOutOfRange(_) => "OverlapOutOfRange",
            Self::LengthMismatch { .. } => "LengthMismatch",
            Self::ConfigInvalid(_) => "ConfigInvalid",
        }
    }
}

/// `10 log10(sum s^2 + 1e-12)` in dB.
pub fn short_term_log_energy(frame: &[f64]) -> Result<f64, PreprocessError> {
    if frame.is_empty() {
        return Err(PreprocessError::EmptyFrame);
    }
    let energy: f64 = frame.iter().map(|s| s * s).sum();
    Ok(10.0 * (energy + LOG_ENERGY_EPSILON).log10())
}

/// First-order FIR `y[t] = x[t] - alpha x[t-1]`, with `y[0] = x[0]`.
///
/// The output can leave `[-1, 1]` (up to magnitude 2) and is not clamped.
pub fn pre_emphasize(buf: &AudioBuffer, alpha: f64) -> Result<AudioBuffer, PreprocessError> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(PreprocessError::AlphaOutOfRange(alpha));
    }
    let x = buf.samples();
    let y = x
        .iter()
        .enumerate()
        .map(|(t, &s)| if t == 0 { s } else { s - alpha * x[t - 1] })
        .collect();
    Ok(AudioBuffer::from_unchecked(y, buf.sample_rate_hz()))
}

/// Overlapping fixed-length frames cut from a signal.
///
/// Frame `i` covers source samples `[i * hop, i * hop + frame_len)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameMatrix {
    frames: Vec<Vec<f64>>,
    frame_len: usize,
    hop: usize,
    sample_rate_hz: u32,
}

impl FrameMatrix {
    /// Cuts `samples` into frames; trailing samples that do not fill a frame are dropped.
    pub fn from_samples(
        samples: &[f64],
        frame_len: usize,
        hop: usize,
        sample_rate_hz: u32,
    ) -> Result<Self, PreprocessError> {
        if frame_len == 0 || hop == 0 || hop > frame_len {
            return Err(PreprocessError::ConfigInvalid(format!(
                "need 0 < hop <= frame_len, got hop {hop}, frame_len {frame_len}"
            )));
        }
        if samples.len() < frame_len {
            return Err(PreprocessError::TooShort {
                len: samples.len(),
                needed: frame_len,
            });
        }
        let count = (samples.len() - frame_len) / hop + 1;
        let frames = (0..count)
            .map(|i| samples[i * hop..i * hop + frame_len].to_vec())
            .collect();
        Ok(Self {
            frames,
            frame_len,
            hop,
            sample_rate_hz,
        })
    }

    /// Wraps frames that were produced elsewhere. All frames must share one length.
    pub fn from_frames(
        frames: Vec<Vec<f64>>,
        hop: usize,
        sample_rate_hz: u32,
    ) -> Result<Self, PreprocessError> {
        let frame_len = frames.first().map_or(0, Vec::len);
        if frame_len == 0 || hop == 0 || hop > frame_len {
            return Err(PreprocessError::ConfigInvalid(
                "frames must be non-empty with 0 < hop <= frame_len".into(),
            ));
        }
        if let Some(bad) = frames.iter().find(|f| f.len() != frame_len) {
            return Err(PreprocessError::LengthMismatch {
                window: frame_len,
                frame: bad.len(),
            });
        }
        Ok(Self {
            frames,
            frame_len,
            hop,
            sample_rate_hz,
        })
    }

    pub fn frames(&self) -> &[Vec<f64>] {
        &self.frames
    }

    pub fn frame_len(&self) -> usize {
        self.frame_len
    }

    pub fn hop(&self) -> usize {
        self.hop
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Source sample range covered by frame `index`.
    pub fn span(&self, index: usize) -> std::ops::Range<usize> {
        index * self.hop..index * self.hop + self.frame_len
    }
}

/// Samples per frame and hop for a frame duration and overlap fraction.
pub fn frame_geometry(frame_ms: f64, overlap_fraction: f64, sample_rate_hz: u32) -> (usize, usize) {
    let frame_len = (frame_ms * sample_rate_hz as f64 / 1000.0).round() as usize;
    let hop = ((frame_len as f64) * (1.0 - overlap_fraction)).round() as usize;
    (frame_len, hop.max(1))
}

/// Frame blocking with a duration in `[10, 30]` ms and overlap in `[0.25, 0.75]`.
pub fn frame_signal(
    buf: &AudioBuffer,
    frame_ms: f64,
    overlap_fraction: f64,
) -> Result<FrameMatrix, PreprocessError> {
    if !(10.0..=30.0).contains(&frame_ms) {
        return Err(PreprocessError::FrameMsOutOfRange(frame_ms));
    }
    if !(0.25..=0.75).contains(&overlap_fraction) {
        return Err(PreprocessError::OverlapOutOfRange(overlap_fraction));
    }
    let (frame_len, hop) = frame_geometry(frame_ms, overlap_fraction, buf.sample_rate_hz());
    FrameMatrix::from_samples(buf.samples(), frame_len, hop, buf.sample_rate_hz())
}

/// Symmetric Hamming window `0.54 - 0.46 cos(2 pi n / (N - 1))`.
pub fn hamming_window(n_len: usize) -> Result<Vec<f64>, PreprocessError> {
    if n_len < 2 {
        return Err(PreprocessError::TooShort {
            len: n_len,
            needed: 2,
        });
    }
    let denom = (n_len - 1) as f64;
    let mut w: Vec<f64> = (0..n_len)
        .map(|n| 0.54 - 0.46 * (2.0 * PI * n as f64 / denom).cos())
        .collect();
    // Mirror so w[n] == w[N-1-n] bit for bit.
    for n in 0..n_len / 2 {
        w[n_len - 1 - n] = w[n];
    }
    Ok(w)
}

pub fn apply_window(fm: &FrameMatrix, window: &[f64]) -> Result<FrameMatrix, PreprocessError> {
    if window.len() != fm.frame_len {
        return Err(PreprocessError::LengthMismatch {
            window: window.len(),
            frame: fm.frame_len,
        });
    }
    let frames = fm
        .frames
        .iter()
        .map(|f| f.iter().zip(window).map(|(s, w)| s * w).collect())
        .collect();
    Ok(FrameMatrix {
        frames,
        ..fm.clone()
    })
}

/// Parameters for the whole front-end chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreprocessConfig {
    /// `None` skips denoising.
    pub wiener: Option<WienerConfig>,
    /// `None` skips endpoint detection and silence removal.
    pub endpoint: Option<EndpointConfig>,
    pub pre_emphasis: f64,
    pub frame_ms: f64,
    pub overlap: f64,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            wiener: Some(WienerConfig::default()),
            endpoint: Some(EndpointConfig::default()),
            pre_emphasis: 0.97,
            frame_ms: 23.2,
            overlap: 0.5,
        }
    }
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<(), PreprocessError> {
        if let Some(w) = &self.wiener {
            w.validate()?;
        }
        if let Some(e) = &self.endpoint {
            e.validate()?;
        }
        if !(0.0..=1.0).contains(&self.pre_emphasis) {
            return Err(PreprocessError::AlphaOutOfRange(self.pre_emphasis));
        }
        if !(10.0..=30.0).contains(&self.frame_ms) {
            return Err(PreprocessError::FrameMsOutOfRange(self.frame_ms));
        }
        if !(0.25..=0.75).contains(&self.overlap) {
            return Err(PreprocessError::OverlapOutOfRange(self.overlap));
        }
        Ok(())
    }

    /// Same chain without denoising or endpoint detection, for noise references.
    pub fn without_cleanup(&self) -> Self {
        Self {
            wiener: None,
            endpoint: None,
            ..self.clone()
        }
    }
}

/// Denoise and strip silence, the audio-domain half of the chain.
pub fn clean_audio(buf: &AudioBuffer, cfg: &PreprocessConfig) -> Result<AudioBuffer, PreprocessError> {
    let denoised = match &cfg.wiener {
        Some(w) => wiener_filter(buf, w)?,
        None => buf.clone(),
    };
    match &cfg.endpoint {
        Some(e) => {
            let (frame_len, hop) = frame_geometry(cfg.frame_ms, cfg.overlap, buf.sample_rate_hz());
            let segments = detect_endpoints(&denoised, frame_len, hop, e)?;
            remove_silence(&denoised, &segments)
        }
        None => Ok(denoised),
    }
}

/// Full chain: denoise, endpoint/silence removal, pre-emphasis, framing, Hamming window.
pub fn preprocess(buf: &AudioBuffer, cfg: &PreprocessConfig) -> Result<FrameMatrix, PreprocessError> {
    cfg.validate()?;
    let speech = clean_audio(buf, cfg)?;
    let emphasized = pre_emphasize(&speech, cfg.pre_emphasis)?;
    let frames = frame_signal(&emphasized, cfg.frame_ms, cfg.overlap)?;
    let window = hamming_window(frames.frame_len())?;
    apply_window(&frames, &window)
}
