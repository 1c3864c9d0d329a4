use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::model::Utterance;
use crate::signal_io::{read_wav, AudioBuffer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Split {
    Enroll,
    Test,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub speaker_id: String,
    pub utterance_id: String,
    pub wav_path: PathBuf,
    pub split: Split,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseFile {
    pub noise_name: String,
    pub wav_path: PathBuf,
}

/// Which recordings enroll speakers, which are probes, and which noises and
/// SNRs the probes are tested under. Relative paths are resolved against the
/// manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusManifest {
    pub entries: Vec<ManifestEntry>,
    pub noise_files: Vec<NoiseFile>,
    pub snr_levels_db: Vec<f64>,
}

fn invalid(m: impl Into<String>) -> EvalError {
    EvalError::ManifestInvalid(m.into())
}

/// Names end up as CSV fields and table headings.
fn check_name(kind: &str, name: &str) -> Result<(), EvalError> {
    if name.is_empty() || name.contains([',', '"', '\n', '\r', '|']) {
        return Err(invalid(format!("{kind} '{name}' is empty or contains , \" | or a newline")));
    }
    Ok(())
}

impl CorpusManifest {
    pub fn from_json(text: &str) -> Result<Self, EvalError> {
        serde_json::from_str(text).map_err(|e| invalid(e.to_string()))
    }

    /// Reads a manifest and makes every path absolute.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, EvalError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
        let mut m = Self::from_json(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        m.entries.iter_mut().for_each(|e| resolve(&mut e.wav_path));
        m.noise_files.iter_mut().for_each(|n| resolve(&mut n.wav_path));
        Ok(m)
    }

    /// Every speaker enrolls and is tested at least once; ids and names are
    /// unique and well-formed; SNRs are finite.
    pub fn validate(&self) -> Result<(), EvalError> {
        if !self.entries.iter().any(|e| e.split == Split::Test) {
            return Err(invalid("no TEST entries"));
        }
        if self.noise_files.is_empty() {
            return Err(invalid("no noise files"));
        }
        if self.snr_levels_db.is_empty() || self.snr_levels_db.iter().any(|s| !s.is_finite()) {
            return Err(invalid("snr_levels_db must be a non-empty list of finite numbers"));
        }
        let mut splits: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
        let mut ids = BTreeSet::new();
        for e in &self.entries {
            check_name("speaker id", &e.speaker_id)?;
            check_name("utterance id", &e.utterance_id)?;
            if !ids.insert(e.utterance_id.as_str()) {
                return Err(invalid(format!("utterance id '{}' repeats", e.utterance_id)));
            }
            let c = splits.entry(e.speaker_id.as_str()).or_default();
            match e.split {
                Split::Enroll => c.0 += 1,
                Split::Test => c.1 += 1,
            }
        }
        if let Some((spk, _)) = splits.iter().find(|(_, (enroll, test))| *enroll == 0 || *test == 0) {
            return Err(invalid(format!("speaker '{spk}' needs at least one ENROLL and one TEST entry")));
        }
        let mut names = BTreeSet::new();
        for n in &self.noise_files {
            check_name("noise name", &n.noise_name)?;
            if !names.insert(n.noise_name.as_str()) {
                return Err(invalid(format!("noise name '{}' repeats", n.noise_name)));
            }
        }
        Ok(())
    }
}

/// A validated manifest with all audio in memory.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub enroll: Vec<Utterance>,
    pub test: Vec<Utterance>,
    pub noises: Vec<(String, AudioBuffer)>,
    pub snr_levels_db: Vec<f64>,
}

impl Corpus {
    pub fn from_manifest(m: &CorpusManifest) -> Result<Self, crate::Error> {
        m.validate()?;
        let mut enroll = Vec::new();
        let mut test = Vec::new();
        for e in &m.entries {
            let u = Utterance {
                speaker_id: e.speaker_id.clone(),
                utterance_id: e.utterance_id.clone(),
                audio: read_wav(&e.wav_path)?,
            };
            match e.split {
                Split::Enroll => enroll.push(u),
                Split::Test => test.push(u),
            }
        }
        let noises = m
            .noise_files
            .iter()
            .map(|n| Ok((n.noise_name.clone(), read_wav(&n.wav_path)?)))
            .collect::<Result<_, crate::Error>>()?;
        Ok(Self {
            enroll,
            test,
            noises,
            snr_levels_db: m.snr_levels_db.clone(),
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, crate::Error> {
        Self::from_manifest(&CorpusManifest::load(path)?)
    }

    pub fn noise_buffers(&self) -> Vec<AudioBuffer> {
        self.noises.iter().map(|(_, b)| b.clone()).collect()
    }
}
