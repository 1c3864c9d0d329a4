//! Per-frame speech parameterizations: LPC, LPCC, RCC, MFCC and MFCC deltas.

mod cepstrum;
mod delta;
pub mod io;
mod lpc;
mod mel;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::preprocess::{preprocess, FrameMatrix, PreprocessConfig};
use crate::signal_io::AudioBuffer;

pub use cepstrum::{rcc, RealCepstrum, RCC_EPSILON};
pub use delta::delta;
pub use lpc::{autocorrelation, levinson_durbin, lpc, lpcc, LinearPredictor};
pub use mel::{
    hz_to_mel, mel_filterbank, mel_to_hz, mfcc, MelFilterbank, MfccConfig, MfccExtractor,
    MEL_LOG_EPSILON,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FeatureError {
    #[error("lag {lag} needs a frame longer than {len} samples")]
    LagTooLarge { lag: usize, len: usize },
    #[error("frame has zero energy")]
    ZeroEnergy,
    #[error("Levinson-Durbin stage {stage} produced reflection coefficient {k}")]
    UnstableRecursion { stage: usize, k: f64 },
    #[error("frame is all zeros")]
    ZeroFrame,
    #[error("invalid feature configuration: {0}")]
    ConfigInvalid(String),
    #[error("feature sequence is empty")]
    EmptySequence,
    #[error("non-finite feature value in frame {frame}")]
    NonFinite { frame: usize },
    #[error("frame {frame} has {got} values, expected {expected}")]
    DimMismatch { frame: usize, got: usize, expected: usize },
    #[error("malformed feature file: {0}")]
    Format(String),
    #[error("I/O failure: {0}")]
    Io(String),
}

impl FeatureError {
    pub fn name(&self) -> &'static str {
        match self {
            Self::LagTooLarge { .. } => "LagTooLarge",
            Self::ZeroEnergy => "ZeroEnergy",
            Self::UnstableRecursion { .. } => "UnstableRecursion",
            Self::ZeroFrame => "ZeroFrame",
            Self::ConfigInvalid(_) => "ConfigInvalid",
            Self::EmptySequence => "EmptySequence",
            Self::NonFinite { .. } => "NonFinite",
            Self::DimMismatch { .. } => "DimMismatch",
            Self::Format(_) => "Format",
            Self::Io(_) => "IoFailure",
        }
    }
}

/// Feature extraction method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Lpc,
    Lpcc,
    Rcc,
    Mfcc,
    Dmfcc,
    Ddmfcc,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Mfcc,
        Method::Dmfcc,
        Method::Ddmfcc,
        Method::Rcc,
        Method::Lpcc,
        Method::Lpc,
    ];

    /// The five methods the identification tables compare, in column order.
    pub const TABLE: [Method; 5] = [
        Method::Mfcc,
        Method::Dmfcc,
        Method::Ddmfcc,
        Method::Rcc,
        Method::Lpcc,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Lpc => "lpc",
            Method::Lpcc => "lpcc",
            Method::Rcc => "rcc",
            Method::Mfcc => "mfcc",
            Method::Dmfcc => "dmfcc",
            Method::Ddmfcc => "ddmfcc",
        }
    }

    /// Column heading used in rendered tables.
    pub fn label(self) -> &'static str {
        match self {
            Method::Lpc => "LPC",
            Method::Lpcc => "LPCC",
            Method::Rcc => "RCC",
            Method::Mfcc => "MFCC",
            Method::Dmfcc => "ΔMFCC",
            Method::Ddmfcc => "ΔΔMFCC",
        }
    }

    pub fn code(self) -> u8 {
        match self {
            Method::Lpc => 0,
            Method::Lpcc => 1,
            Method::Rcc => 2,
            Method::Mfcc => 3,
            Method::Dmfcc => 4,
            Method::Ddmfcc => 5,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.code() == code)
    }

    /// Tag after one more delta: MFCC -> DMFCC -> DDMFCC.
    pub fn advanced(self) -> Self {
        match self {
            Method::Mfcc => Method::Dmfcc,
            Method::Dmfcc => Method::Ddmfcc,
            other => other,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = FeatureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| FeatureError::ConfigInvalid(format!("unknown method '{s}'")))
    }
}

/// One feature vector per frame, all of length `dim`, all finite.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSequence {
    vectors: Vec<Vec<f64>>,
    dim: usize,
    method: Method,
}

impl FeatureSequence {
    pub fn new(vectors: Vec<Vec<f64>>, dim: usize, method: Method) -> Result<Self, FeatureError> {
        for (frame, v) in vectors.iter().enumerate() {
            if v.len() != dim {
                return Err(FeatureError::DimMismatch {
                    frame,
                    got: v.len(),
                    expected: dim,
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(FeatureError::NonFinite { frame });
            }
        }
        Ok(Self {
            vectors,
            dim,
            method,
        })
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn into_vectors(self) -> Vec<Vec<f64>> {
        self.vectors
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Time-averaged feature vector.
    pub fn mean(&self) -> Result<Vec<f64>, FeatureError> {
        if self.is_empty() {
            return Err(FeatureError::EmptySequence);
        }
        let mut m = vec![0.0; self.dim];
        for v in &self.vectors {
            for (a, x) in m.iter_mut().zip(v) {
                *a += x;
            }
        }
        let n = self.len() as f64;
        m.iter_mut().for_each(|a| *a /= n);
        Ok(m)
    }

    /// Multiplies every entry by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            vectors: self
                .vectors
                .iter()
                .map(|v| v.iter().map(|x| x * factor).collect())
                .collect(),
            ..self.clone()
        }
    }

    /// Joins two sequences of equal length frame by frame.
    fn concat(&self, other: &FeatureSequence, method: Method) -> Self {
        let vectors = self
            .vectors
            .iter()
            .zip(&other.vectors)
            .map(|(a, b)| a.iter().chain(b).copied().collect())
            .collect();
        Self {
            vectors,
            dim: self.dim + other.dim,
            method,
        }
    }
}

/// How delta methods present their features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeltaMode {
    /// Deltas alone.
    Standalone,
    /// Static MFCCs followed by each delta order.
    Concatenated,
}

impl FromStr for DeltaMode {
    type Err = FeatureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "standalone" => Ok(Self::Standalone),
            "concatenated" => Ok(Self::Concatenated),
            _ => Err(FeatureError::ConfigInvalid(format!("unknown delta mode '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureConfig {
    pub lpc_order: usize,
    pub lpcc_ceps: usize,
    /// Relative white-noise correction added to `r[0]` before Levinson-Durbin.
    pub lpc_conditioning: f64,
    pub rcc_ceps: usize,
    pub rcc_n_fft: usize,
    pub mfcc: MfccConfig,
    pub delta_window: usize,
    pub delta_mode: DeltaMode,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            lpc_order: 12,
            lpcc_ceps: 12,
            lpc_conditioning: 1e-9,
            rcc_ceps: 12,
            rcc_n_fft: 512,
            mfcc: MfccConfig::default(),
            delta_window: 2,
            delta_mode: DeltaMode::Standalone,
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self, sample_rate_hz: u32) -> Result<(), FeatureError> {
        if self.lpc_order == 0 || self.lpcc_ceps == 0 || self.rcc_ceps == 0 || self.delta_window == 0 {
            return Err(FeatureError::ConfigInvalid(
                "lpc_order, lpcc_ceps, rcc_ceps and delta_window must be >= 1".into(),
            ));
        }
        if !(self.lpc_conditioning >= 0.0 && self.lpc_conditioning.is_finite()) {
            return Err(FeatureError::ConfigInvalid("lpc_conditioning must be >= 0".into()));
        }
        if self.rcc_ceps > self.rcc_n_fft {
            return Err(FeatureError::ConfigInvalid("rcc_ceps must not exceed rcc_n_fft".into()));
        }
        self.mfcc.validate(sample_rate_hz)
    }

    /// Output dimension of `method` under this configuration.
    pub fn dim(&self, method: Method) -> usize {
        match (method, self.delta_mode) {
            (Method::Lpc, _) => self.lpc_order,
            (Method::Lpcc, _) => self.lpcc_ceps,
            (Method::Rcc, _) => self.rcc_ceps,
            (Method::Mfcc, _) | (_, DeltaMode::Standalone) => self.mfcc.n_ceps,
            (Method::Dmfcc, DeltaMode::Concatenated) => 2 * self.mfcc.n_ceps,
            (Method::Ddmfcc, DeltaMode::Concatenated) => 3 * self.mfcc.n_ceps,
        }
    }
}

/// Front-end and extractor settings together.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub preprocess: PreprocessConfig,
    pub features: FeatureConfig,
}

fn predictor(frame: &[f64], cfg: &FeatureConfig) -> Result<LinearPredictor, FeatureError> {
    let mut r = autocorrelation(frame, cfg.lpc_order)?;
    r[0] *= 1.0 + cfg.lpc_conditioning;
    levinson_durbin(&r, cfg.lpc_order)
}

/// Runs one extractor over already windowed frames.
pub fn extract_frames(
    fm: &FrameMatrix,
    method: Method,
    cfg: &FeatureConfig,
) -> Result<FeatureSequence, FeatureError> {
    cfg.validate(fm.sample_rate_hz())?;
    let per_frame = |f: &dyn Fn(&[f64]) -> Result<Vec<f64>, FeatureError>, dim: usize| {
        let vectors = fm.frames().iter().map(|x| f(x)).collect::<Result<Vec<_>, _>>()?;
        FeatureSequence::new(vectors, dim, method)
    };
    match method {
        Method::Lpc => per_frame(&|x| Ok(predictor(x, cfg)?.coeffs), cfg.lpc_order),
        Method::Lpcc => per_frame(
            &|x| lpcc(&predictor(x, cfg)?.coeffs, cfg.lpcc_ceps),
            cfg.lpcc_ceps,
        ),
        Method::Rcc => {
            let ceps = RealCepstrum::new(cfg.rcc_ceps, cfg.rcc_n_fft)?;
            per_frame(&|x| ceps.compute(x), cfg.rcc_ceps)
        }
        Method::Mfcc | Method::Dmfcc | Method::Ddmfcc => {
            let base = mfcc(fm, &cfg.mfcc)?;
            if method == Method::Mfcc {
                return Ok(base);
            }
            let d1 = delta(&base, cfg.delta_window)?;
            let (d2, tag) = if method == Method::Ddmfcc {
                (Some(delta(&d1, cfg.delta_window)?), Method::Ddmfcc)
            } else {
                (None, Method::Dmfcc)
            };
            Ok(match (cfg.delta_mode, d2) {
                (DeltaMode::Standalone, None) => d1,
                (DeltaMode::Standalone, Some(d2)) => d2,
                (DeltaMode::Concatenated, None) => base.concat(&d1, tag),
                (DeltaMode::Concatenated, Some(d2)) => base.concat(&d1, tag).concat(&d2, tag),
            })
        }
    }
}

/// Full chain: preprocessing followed by the selected extractor.
pub fn extract(
    buf: &AudioBuffer,
    method: Method,
    cfg: &PipelineConfig,
) -> Result<FeatureSequence, crate::Error> {
    let frames = preprocess(buf, &cfg.preprocess)?;
    Ok(extract_frames(&frames, method, &cfg.features)?)
}
