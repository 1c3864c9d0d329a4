//! Enrollment: everything identification needs, trained from a set of
//! utterances and stored as one versioned JSON document.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{stage_seed, CodebookKind, SystemConfig};
use crate::dhmm::{baum_welch, SpeakerModel};
use crate::features::{extract, FeatureSequence, Method, PipelineConfig};
use crate::signal_io::AudioBuffer;
use crate::vq::{
    build_groups, ga_train, identify, lbg_train, quantize, Codebook, EnrolledUtterance, Identification,
    SearchMode,
};

pub const MODEL_FORMAT: &str = "spkid-model";
pub const MODEL_VERSION: u32 = 1;
pub const MODEL_FILE: &str = "model.json";
pub const GA_HISTORY_FILE: &str = "ga_history.csv";

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("cannot access {path}: {message}")]
    Io { path: String, message: String },
    #[error("malformed model file: {0}")]
    Format(String),
    #[error("model file version {0} is not supported")]
    UnsupportedVersion(u32),
    #[error("inconsistent model: {0}")]
    Inconsistent(String),
}

impl ModelError {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Io { .. } => "IoFailure",
            Self::Format(_) => "Format",
            Self::UnsupportedVersion(_) => "UnsupportedVersion",
            Self::Inconsistent(_) => "Inconsistent",
        }
    }
}

/// One labelled recording.
#[derive(Debug, Clone)]
pub struct Utterance {
    pub speaker_id: String,
    pub utterance_id: String,
    pub audio: AudioBuffer,
}

/// Codebooks and speaker models for one feature method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainedSystem {
    pub format: String,
    pub version: u32,
    pub config: SystemConfig,
    pub method: Method,
    /// Maps frames to HMM observation symbols.
    pub symbol_codebook: Codebook,
    /// One codeword per enrollment utterance, grouped, with leaders.
    pub group_codebook: Codebook,
    pub models: BTreeMap<String, SpeakerModel>,
    /// Best GA fitness per generation; empty for LBG codebooks.
    #[serde(default)]
    pub ga_history: Vec<f64>,
}

fn extract_all(
    utts: &[Utterance],
    method: Method,
    pipeline: &PipelineConfig,
) -> Result<Vec<FeatureSequence>, crate::Error> {
    utts.par_iter().map(|u| extract(&u.audio, method, pipeline)).collect()
}

/// Trains the symbol codebook, the group codebook and one HMM per speaker.
///
/// `noise_refs` are recordings of the environmental noises; they are framed
/// without denoising or silence removal.
pub fn train(
    enroll: &[Utterance],
    noise_refs: &[AudioBuffer],
    method: Method,
    cfg: &SystemConfig,
) -> Result<TrainedSystem, crate::Error> {
    cfg.validate()?;
    let feats = extract_all(enroll, method, &cfg.pipeline)?;

    let mut pool: Vec<Vec<f64>> = feats.iter().flat_map(|f| f.vectors().iter().cloned()).collect();
    if pool.len() > cfg.max_pool_vectors {
        let mut rng = ChaCha8Rng::seed_from_u64(stage_seed(cfg.seed, "pool"));
        let mut keep = sample(&mut rng, pool.len(), cfg.max_pool_vectors).into_vec();
        keep.sort_unstable();
        pool = keep.into_iter().map(|i| std::mem::take(&mut pool[i])).collect();
    }
    let (symbol_codebook, ga_history) = match cfg.codebook {
        CodebookKind::Ga => {
            let run = ga_train(&pool, cfg.codebook_size, &cfg.ga_for("symbols"))?;
            (run.codebook, run.history)
        }
        CodebookKind::Lbg => {
            let seed = stage_seed(cfg.seed, "lbg");
            (lbg_train(&pool, cfg.codebook_size, cfg.ga.lbg_epsilon, seed)?, Vec::new())
        }
    };

    let raw = PipelineConfig {
        preprocess: cfg.pipeline.preprocess.without_cleanup(),
        features: cfg.pipeline.features.clone(),
    };
    let noise_feats: Vec<FeatureSequence> = noise_refs
        .par_iter()
        .map(|n| extract(n, method, &raw))
        .collect::<Result<_, _>>()?;
    let enrolled: Vec<EnrolledUtterance> = enroll
        .iter()
        .zip(&feats)
        .map(|(u, f)| EnrolledUtterance {
            speaker_id: u.speaker_id.clone(),
            utterance_id: u.utterance_id.clone(),
            features: f.clone(),
        })
        .collect();
    let group_codebook = build_groups(
        &enrolled,
        &noise_feats,
        cfg.groups,
        stage_seed(cfg.seed, "groups"),
        &cfg.ga_for("leaders"),
    )?;

    let mut streams: BTreeMap<&str, Vec<Vec<usize>>> = BTreeMap::new();
    for (u, f) in enroll.iter().zip(&feats) {
        let q = quantize(f, &symbol_codebook)?;
        streams.entry(u.speaker_id.as_str()).or_default().push(q.symbols);
    }
    let k = symbol_codebook.len();
    let models = streams
        .into_par_iter()
        .map(|(spk, seqs)| Ok((spk.to_string(), baum_welch(&seqs, k, &cfg.hmm_for(spk))?)))
        .collect::<Result<BTreeMap<_, _>, crate::Error>>()?;

    Ok(TrainedSystem {
        format: MODEL_FORMAT.to_string(),
        version: MODEL_VERSION,
        config: cfg.clone(),
        method,
        symbol_codebook,
        group_codebook,
        models,
        ga_history,
    })
}

impl TrainedSystem {
    pub fn identify_features(&self, probe: &FeatureSequence, mode: SearchMode) -> Result<Identification, crate::Error> {
        identify(probe, &self.group_codebook, &self.symbol_codebook, &self.models, mode)
    }

    /// Runs the enrollment front end on `audio`, then identifies it.
    pub fn identify_audio(&self, audio: &AudioBuffer, mode: SearchMode) -> Result<Identification, crate::Error> {
        let probe = extract(audio, self.method, &self.config.pipeline)?;
        self.identify_features(&probe, mode)
    }

    fn check(&self) -> Result<(), ModelError> {
        let bad = |m: String| Err(ModelError::Inconsistent(m));
        if self.format != MODEL_FORMAT {
            return Err(ModelError::Format(format!("format tag '{}'", self.format)));
        }
        if self.version != MODEL_VERSION {
            return Err(ModelError::UnsupportedVersion(self.version));
        }
        let dim = self.config.pipeline.features.dim(self.method);
        if self.symbol_codebook.dim() != dim || self.group_codebook.dim() != dim {
            return bad(format!("codebook dimension differs from the {dim} of {}", self.method));
        }
        if let Some((spk, _)) = self.models.iter().find(|(_, m)| m.n_symbols() != self.symbol_codebook.len()) {
            return bad(format!("model '{spk}' does not match the symbol codebook size"));
        }
        for meta in self.group_codebook.member_meta() {
            if !self.models.contains_key(&meta.speaker_id) {
                return bad(format!("speaker '{}' has no model", meta.speaker_id));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let sys: TrainedSystem = serde_json::from_str(text).map_err(|e| ModelError::Format(e.to_string()))?;
        sys.check()?;
        Ok(sys)
    }

    /// Writes `model.json` and, for GA codebooks, `ga_history.csv` into `dir`.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<(), ModelError> {
        let dir = dir.as_ref();
        let io = |p: &Path, e: std::io::Error| ModelError::Io {
            path: p.display().to_string(),
            message: e.to_string(),
        };
        std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
        let path = dir.join(MODEL_FILE);
        std::fs::write(&path, self.to_json() + "\n").map_err(|e| io(&path, e))?;
        if !self.ga_history.is_empty() {
            let mut csv = String::from("generation,best_fitness\n");
            for (g, f) in self.ga_history.iter().enumerate() {
                writeln!(csv, "{g},{f}").unwrap();
            }
            let path = dir.join(GA_HISTORY_FILE);
            std::fs::write(&path, csv).map_err(|e| io(&path, e))?;
        }
        Ok(())
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self, ModelError> {
        let path = dir.as_ref().join(MODEL_FILE);
        let text = std::fs::read_to_string(&path).map_err(|e| ModelError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_json(&text)
    }
}
