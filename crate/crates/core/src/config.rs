//! Run configuration: a flat key set shared by config files and command-line
//! flags, resolved into the typed per-module configs.
//!
//! A config file is a JSON object whose keys are exactly the fields of
//! [`ConfigLayer`]; the matching flag is the key with `_` replaced by `-`.
//! Unknown keys are rejected. Flags override the file, and the file overrides
//! the defaults.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dhmm::{HmmConfig, Topology};
use crate::features::{DeltaMode, FeatureConfig, Method, MfccConfig, PipelineConfig};
use crate::preprocess::{EndpointConfig, PreprocessConfig, WienerConfig};
use crate::signal_io::DEFAULT_SAMPLE_RATE_HZ;
use crate::vq::{FitnessMode, GaConfig, SearchMode};

/// Environment variable naming the config file used when none is given.
pub const CONFIG_ENV: &str = "SPKID_CONFIG";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {message}")]
    Io { path: String, message: String },
    #[error("malformed config: {0}")]
    Parse(String),
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

impl ConfigError {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Io { .. } => "IoFailure",
            Self::Parse(_) => "Parse",
            Self::Invalid(_) => "ConfigInvalid",
        }
    }
}

/// Which trainer designs the symbol codebook.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CodebookKind {
    Ga,
    Lbg,
}

impl FromStr for CodebookKind {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ga" => Ok(Self::Ga),
            "lbg" => Ok(Self::Lbg),
            _ => Err(ConfigError::Invalid(format!("unknown codebook trainer '{s}'"))),
        }
    }
}

/// What to do with a test utterance whose pipeline fails.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FailurePolicy {
    /// Count it as a misidentification.
    Error,
    /// Leave it out of the rate.
    Exclude,
}

impl FromStr for FailurePolicy {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "error" => Ok(Self::Error),
            "exclude" => Ok(Self::Exclude),
            _ => Err(ConfigError::Invalid(format!("unknown failure policy '{s}'"))),
        }
    }
}

/// Every configurable key, all optional so layers can be stacked.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, clap::Args)]
#[serde(deny_unknown_fields)]
pub struct ConfigLayer {
    /// Global seed; every stage derives its own seed from it.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Corpus manifest (JSON).
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Failed test utterances: error | exclude.
    #[arg(long)]
    pub on_failure: Option<FailurePolicy>,

    /// Run the Wiener filter before endpoint detection.
    #[arg(long)]
    pub wiener_enabled: Option<bool>,
    /// Leading frames averaged into the noise estimate.
    #[arg(long)]
    pub wiener_noise_frames: Option<usize>,
    /// Decision-directed smoothing factor in [0, 1).
    #[arg(long)]
    pub wiener_smoothing_alpha: Option<f64>,
    /// Lowest spectral gain.
    #[arg(long)]
    pub wiener_gain_floor: Option<f64>,
    /// Wiener analysis frame length in samples (even).
    #[arg(long)]
    pub wiener_frame_len: Option<usize>,

    /// Run endpoint detection and drop silence.
    #[arg(long)]
    pub endpoint_enabled: Option<bool>,
    /// Upper bound on the estimated noise floor, dB.
    #[arg(long, allow_hyphen_values = true)]
    pub endpoint_energy_floor_db: Option<f64>,
    /// Speech threshold above the noise floor, dB.
    #[arg(long)]
    pub endpoint_threshold_offset_db: Option<f64>,
    #[arg(long)]
    pub endpoint_min_speech_frames: Option<usize>,
    #[arg(long)]
    pub endpoint_min_silence_frames: Option<usize>,

    /// Pre-emphasis coefficient.
    #[arg(long)]
    pub pre_emphasis: Option<f64>,
    /// Analysis frame length, ms (10 to 30).
    #[arg(long)]
    pub frame_ms: Option<f64>,
    /// Frame overlap fraction (0.25 to 0.75).
    #[arg(long)]
    pub overlap: Option<f64>,

    #[arg(long)]
    pub lpc_order: Option<usize>,
    #[arg(long)]
    pub lpcc_ceps: Option<usize>,
    #[arg(long)]
    pub rcc_ceps: Option<usize>,
    #[arg(long)]
    pub rcc_n_fft: Option<usize>,
    #[arg(long)]
    pub mfcc_n_fft: Option<usize>,
    #[arg(long)]
    pub mfcc_filters: Option<usize>,
    #[arg(long)]
    pub mfcc_ceps: Option<usize>,
    #[arg(long)]
    pub mfcc_fmin_hz: Option<f64>,
    /// Upper filterbank edge; defaults to Nyquist.
    #[arg(long)]
    pub mfcc_fmax_hz: Option<f64>,
    #[arg(long)]
    pub mfcc_include_c0: Option<bool>,
    /// Half-width of the delta regression window, frames.
    #[arg(long)]
    pub delta_window: Option<usize>,
    /// standalone | concatenated.
    #[arg(long)]
    pub delta_mode: Option<DeltaMode>,
    /// Feature method for extract, train and identify.
    #[arg(long)]
    pub method: Option<Method>,
    /// Comma-separated methods evaluated side by side.
    #[arg(long, value_delimiter = ',')]
    pub methods: Option<Vec<Method>>,

    /// Symbol codebook trainer: ga | lbg.
    #[arg(long)]
    pub codebook: Option<CodebookKind>,
    #[arg(long)]
    pub codebook_size: Option<usize>,
    /// LBG split perturbation, relative to the per-dimension spread.
    #[arg(long)]
    pub lbg_epsilon: Option<f64>,
    /// Cap on enrollment frames used to train the symbol codebook.
    #[arg(long)]
    pub max_pool_vectors: Option<usize>,

    #[arg(long)]
    pub ga_population: Option<usize>,
    #[arg(long)]
    pub ga_generations: Option<usize>,
    /// Cut points per crossover.
    #[arg(long)]
    pub ga_crossover_points: Option<usize>,
    /// Per-gene mutation probability.
    #[arg(long)]
    pub ga_mutation_prob: Option<f64>,
    #[arg(long)]
    pub ga_elitism: Option<usize>,
    /// neg_distortion | similarity.
    #[arg(long)]
    pub ga_fitness: Option<FitnessMode>,

    /// Number of utterance groups in the group codebook.
    #[arg(long)]
    pub groups: Option<usize>,
    /// grouped | exhaustive.
    #[arg(long)]
    pub identify_mode: Option<SearchMode>,

    #[arg(long)]
    pub hmm_states: Option<usize>,
    /// left_to_right | ergodic.
    #[arg(long)]
    pub hmm_topology: Option<Topology>,
    #[arg(long)]
    pub hmm_max_iters: Option<usize>,
    #[arg(long)]
    pub hmm_tol: Option<f64>,
    #[arg(long)]
    pub hmm_emission_floor: Option<f64>,
}

impl ConfigLayer {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let mut layer = Self::from_json(&text)?;
        if let (Some(m), Some(dir)) = (&layer.manifest, path.parent()) {
            if m.is_relative() {
                layer.manifest = Some(dir.join(m));
            }
        }
        Ok(layer)
    }

    /// Keys set in `over` replace those in `self`.
    pub fn overlay(&self, over: &ConfigLayer) -> ConfigLayer {
        let mut base = serde_json::to_value(self).expect("layer serializes");
        let top = serde_json::to_value(over).expect("layer serializes");
        if let (Some(b), Some(t)) = (base.as_object_mut(), top.as_object()) {
            for (k, v) in t {
                if !v.is_null() {
                    b.insert(k.clone(), v.clone());
                }
            }
        }
        serde_json::from_value(base).expect("overlay keeps the schema")
    }

    /// Every key, sorted.
    pub fn keys() -> Vec<String> {
        match serde_json::to_value(ConfigLayer::default()) {
            Ok(serde_json::Value::Object(map)) => map.keys().cloned().collect(),
            _ => Vec::new(),
        }
    }

    pub fn resolve(&self) -> Result<SystemConfig, ConfigError> {
        let d = SystemConfig::default();
        let wiener_default = d.pipeline.preprocess.wiener.clone().unwrap_or_default();
        let endpoint_default = d.pipeline.preprocess.endpoint.clone().unwrap_or_default();
        let wiener = self.wiener_enabled.unwrap_or(true).then(|| WienerConfig {
            noise_estimate_frames: self.wiener_noise_frames.unwrap_or(wiener_default.noise_estimate_frames),
            smoothing_alpha: self.wiener_smoothing_alpha.unwrap_or(wiener_default.smoothing_alpha),
            gain_floor: self.wiener_gain_floor.unwrap_or(wiener_default.gain_floor),
            frame_len: self.wiener_frame_len.unwrap_or(wiener_default.frame_len),
        });
        let endpoint = self.endpoint_enabled.unwrap_or(true).then(|| EndpointConfig {
            energy_floor_db: self.endpoint_energy_floor_db.unwrap_or(endpoint_default.energy_floor_db),
            threshold_offset_db: self
                .endpoint_threshold_offset_db
                .unwrap_or(endpoint_default.threshold_offset_db),
            min_speech_frames: self
                .endpoint_min_speech_frames
                .unwrap_or(endpoint_default.min_speech_frames),
            min_silence_frames: self
                .endpoint_min_silence_frames
                .unwrap_or(endpoint_default.min_silence_frames),
        });
        let pp = &d.pipeline.preprocess;
        let preprocess = PreprocessConfig {
            wiener,
            endpoint,
            pre_emphasis: self.pre_emphasis.unwrap_or(pp.pre_emphasis),
            frame_ms: self.frame_ms.unwrap_or(pp.frame_ms),
            overlap: self.overlap.unwrap_or(pp.overlap),
        };
        let fd = &d.pipeline.features;
        let features = FeatureConfig {
            lpc_order: self.lpc_order.unwrap_or(fd.lpc_order),
            lpcc_ceps: self.lpcc_ceps.unwrap_or(fd.lpcc_ceps),
            lpc_conditioning: fd.lpc_conditioning,
            rcc_ceps: self.rcc_ceps.unwrap_or(fd.rcc_ceps),
            rcc_n_fft: self.rcc_n_fft.unwrap_or(fd.rcc_n_fft),
            mfcc: MfccConfig {
                n_fft: self.mfcc_n_fft.unwrap_or(fd.mfcc.n_fft),
                n_filters: self.mfcc_filters.unwrap_or(fd.mfcc.n_filters),
                n_ceps: self.mfcc_ceps.unwrap_or(fd.mfcc.n_ceps),
                fmin_hz: self.mfcc_fmin_hz.unwrap_or(fd.mfcc.fmin_hz),
                fmax_hz: self.mfcc_fmax_hz.or(fd.mfcc.fmax_hz),
                include_c0: self.mfcc_include_c0.unwrap_or(fd.mfcc.include_c0),
            },
            delta_window: self.delta_window.unwrap_or(fd.delta_window),
            delta_mode: self.delta_mode.unwrap_or(fd.delta_mode),
        };
        let ga = GaConfig {
            population_size: self.ga_population.unwrap_or(d.ga.population_size),
            generations: self.ga_generations.unwrap_or(d.ga.generations),
            crossover_points: self.ga_crossover_points.unwrap_or(d.ga.crossover_points),
            mutation_prob: self.ga_mutation_prob.unwrap_or(d.ga.mutation_prob),
            elitism_count: self.ga_elitism.unwrap_or(d.ga.elitism_count),
            seed: 0,
            fitness_mode: self.ga_fitness.unwrap_or(d.ga.fitness_mode),
            lbg_epsilon: self.lbg_epsilon.unwrap_or(d.ga.lbg_epsilon),
        };
        let hmm = HmmConfig {
            n_states: self.hmm_states.unwrap_or(d.hmm.n_states),
            topology: self.hmm_topology.unwrap_or(d.hmm.topology),
            max_iters: self.hmm_max_iters.unwrap_or(d.hmm.max_iters),
            tol: self.hmm_tol.unwrap_or(d.hmm.tol),
            emission_floor: self.hmm_emission_floor.unwrap_or(d.hmm.emission_floor),
            trans_floor: d.hmm.trans_floor,
            seed: 0,
        };
        let cfg = SystemConfig {
            seed: self.seed.unwrap_or(d.seed),
            on_failure: self.on_failure.unwrap_or(d.on_failure),
            pipeline: PipelineConfig { preprocess, features },
            method: self.method.unwrap_or(d.method),
            methods: self.methods.clone().unwrap_or(d.methods),
            codebook: self.codebook.unwrap_or(d.codebook),
            codebook_size: self.codebook_size.unwrap_or(d.codebook_size),
            max_pool_vectors: self.max_pool_vectors.unwrap_or(d.max_pool_vectors),
            ga,
            groups: self.groups.unwrap_or(d.groups),
            identify_mode: self.identify_mode.unwrap_or(d.identify_mode),
            hmm,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Fully resolved settings for training and evaluation.
///
/// Stage seeds are not stored in the nested configs; they are derived from
/// `seed` with [`stage_seed`] when each stage runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub seed: u64,
    pub on_failure: FailurePolicy,
    pub pipeline: PipelineConfig,
    pub method: Method,
    pub methods: Vec<Method>,
    pub codebook: CodebookKind,
    pub codebook_size: usize,
    pub max_pool_vectors: usize,
    pub ga: GaConfig,
    pub groups: usize,
    pub identify_mode: SearchMode,
    pub hmm: HmmConfig,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            on_failure: FailurePolicy::Error,
            pipeline: PipelineConfig::default(),
            method: Method::Mfcc,
            methods: Method::TABLE.to_vec(),
            codebook: CodebookKind::Ga,
            codebook_size: 32,
            max_pool_vectors: 4000,
            ga: GaConfig::default(),
            groups: 3,
            identify_mode: SearchMode::Grouped,
            hmm: HmmConfig::default(),
        }
    }
}

impl SystemConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |e: &dyn std::fmt::Display| ConfigError::Invalid(e.to_string());
        self.pipeline.preprocess.validate().map_err(|e| invalid(&e))?;
        self.pipeline
            .features
            .validate(DEFAULT_SAMPLE_RATE_HZ)
            .map_err(|e| invalid(&e))?;
        self.ga.validate().map_err(|e| invalid(&e))?;
        self.hmm.validate(self.codebook_size.max(1)).map_err(|e| invalid(&e))?;
        if self.codebook_size == 0 {
            return Err(ConfigError::Invalid("codebook_size must be >= 1".into()));
        }
        if self.max_pool_vectors < self.codebook_size {
            return Err(ConfigError::Invalid("max_pool_vectors must be >= codebook_size".into()));
        }
        if self.groups == 0 {
            return Err(ConfigError::Invalid("groups must be >= 1".into()));
        }
        if self.methods.is_empty() {
            return Err(ConfigError::Invalid("methods must not be empty".into()));
        }
        Ok(())
    }

    /// GA settings for `stage`, seeded from the global seed.
    pub fn ga_for(&self, stage: &str) -> GaConfig {
        GaConfig {
            seed: stage_seed(self.seed, stage),
            ..self.ga.clone()
        }
    }

    /// HMM settings for one speaker's model.
    pub fn hmm_for(&self, speaker_id: &str) -> HmmConfig {
        HmmConfig {
            seed: stage_seed(self.seed, &format!("hmm/{speaker_id}")),
            ..self.hmm.clone()
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a(text: &str) -> u64 {
    text.bytes()
        .fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3))
}

/// Seed for a named stage: `splitmix64(global ^ fnv1a(stage))`.
pub fn stage_seed(global: u64, stage: &str) -> u64 {
    splitmix64(global ^ fnv1a(stage))
}
