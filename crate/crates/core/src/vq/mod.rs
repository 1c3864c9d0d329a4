//! Vector quantization: codebook design and the grouped identification search.
//!
//! Two codebooks take part in identification. The *symbol* codebook maps
//! frame vectors to discrete symbols for the per-speaker HMMs; it is trained
//! by [`ga_train`] or [`lbg_train`]. The *group* codebook holds one
//! time-averaged vector per enrolled utterance, partitioned into groups that
//! each have a leading codeword; [`encode`] picks a group by comparing a probe
//! against the leaders only.

mod ga;
mod groups;
mod identify;
mod lbg;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::FeatureSequence;

pub use ga::{ga_fitness, ga_train, Chromosome, FitnessMode, GaConfig, GaRun};
pub use groups::{build_groups, encode, EnrolledUtterance};
pub use identify::{identify, Identification, SearchMode};
pub use lbg::{lbg_train, lbg_train_traced, LbgRun};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VqError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimMismatch { left: usize, right: usize },
    #[error("zero-norm vector has no direction")]
    ZeroVector,
    #[error("sequence is empty")]
    EmptySequence,
    #[error("pool has {pool} vectors, fewer than the {k} codewords requested")]
    PoolTooSmall { pool: usize, k: usize },
    #[error("{0} utterances cannot form the requested groups")]
    TooFewUtterances(usize),
    #[error("no noise references supplied")]
    NoNoiseRefs,
    #[error("no speaker models supplied")]
    EmptyModelSet,
    #[error("speaker '{0}' has no model")]
    UnknownSpeaker(String),
    #[error("invalid codebook: {0}")]
    InvalidCodebook(String),
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
}

impl VqError {
    pub fn name(&self) -> &'static str {
        match self {
            Self::DimMismatch { .. } => "DimMismatch",
            Self::ZeroVector => "ZeroVector",
            Self::EmptySequence => "EmptySequence",
            Self::PoolTooSmall { .. } => "PoolTooSmall",
            Self::TooFewUtterances(_) => "TooFewUtterances",
            Self::NoNoiseRefs => "NoNoiseRefs",
            Self::EmptyModelSet => "EmptyModelSet",
            Self::UnknownSpeaker(_) => "UnknownSpeaker",
            Self::InvalidCodebook(_) => "InvalidCodebook",
            Self::ConfigInvalid(_) => "ConfigInvalid",
        }
    }
}

fn check_dims(a: &[f64], b: &[f64]) -> Result<(), VqError> {
    if a.len() != b.len() {
        return Err(VqError::DimMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(())
}

/// Squared Euclidean distance.
pub fn distortion(v: &[f64], w: &[f64]) -> Result<f64, VqError> {
    check_dims(v, w)?;
    Ok(sq_dist(v, w))
}

#[inline]
pub(crate) fn sq_dist(v: &[f64], w: &[f64]) -> f64 {
    v.iter().zip(w).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Cosine similarity `a . b / (|a| |b|)`.
pub fn similarity(a: &[f64], b: &[f64]) -> Result<f64, VqError> {
    check_dims(a, b)?;
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(VqError::ZeroVector);
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

/// Index and distortion of the nearest codeword; ties go to the lowest index.
pub(crate) fn nearest(v: &[f64], codewords: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in codewords.iter().enumerate() {
        let d = sq_dist(v, c);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

pub(crate) fn mean_vector(vectors: &[&[f64]]) -> Vec<f64> {
    let dim = vectors.first().map_or(0, |v| v.len());
    let mut m = vec![0.0; dim];
    for v in vectors {
        for (a, x) in m.iter_mut().zip(v.iter()) {
            *a += x;
        }
    }
    let n = vectors.len().max(1) as f64;
    m.iter_mut().for_each(|a| *a /= n);
    m
}

/// Source of a codeword trained from utterance-level vectors.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemberMeta {
    pub speaker_id: String,
    pub utterance_id: String,
}

/// How a codebook was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "trainer", rename_all = "lowercase")]
pub enum Provenance {
    Lbg { epsilon: f64, seed: u64 },
    Ga { config: GaConfig, fitness: f64 },
    Groups { groups: usize, seed: u64, ga: GaConfig },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CodebookData {
    dim: usize,
    codewords: Vec<Vec<f64>>,
    groups: Vec<Vec<usize>>,
    leaders: Vec<usize>,
    #[serde(default)]
    member_meta: Vec<MemberMeta>,
    #[serde(default)]
    provenance: Option<Provenance>,
}

/// Codewords partitioned into groups, each with one leading codeword.
///
/// Invariants, checked by every constructor and on deserialization: groups
/// partition `0..K` into non-empty disjoint sets, `leaders[g]` belongs to
/// `groups[g]`, every codeword has `dim` finite entries, and `member_meta` is
/// either empty or one entry per codeword.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CodebookData", into = "CodebookData")]
pub struct Codebook {
    dim: usize,
    codewords: Vec<Vec<f64>>,
    groups: Vec<Vec<usize>>,
    leaders: Vec<usize>,
    member_meta: Vec<MemberMeta>,
    provenance: Option<Provenance>,
}

impl TryFrom<CodebookData> for Codebook {
    type Error = VqError;

    fn try_from(d: CodebookData) -> Result<Self, VqError> {
        let cb = Codebook::new(d.codewords, d.groups, d.leaders, d.member_meta)?;
        if cb.dim != d.dim {
            return Err(VqError::InvalidCodebook(format!(
                "declared dim {} but codewords have {}",
                d.dim, cb.dim
            )));
        }
        Ok(cb.with_provenance(d.provenance))
    }
}

impl From<Codebook> for CodebookData {
    fn from(c: Codebook) -> Self {
        CodebookData {
            dim: c.dim,
            codewords: c.codewords,
            groups: c.groups,
            leaders: c.leaders,
            member_meta: c.member_meta,
            provenance: c.provenance,
        }
    }
}

impl Codebook {
    pub fn new(
        codewords: Vec<Vec<f64>>,
        groups: Vec<Vec<usize>>,
        leaders: Vec<usize>,
        member_meta: Vec<MemberMeta>,
    ) -> Result<Self, VqError> {
        let invalid = |m: String| Err(VqError::InvalidCodebook(m));
        let Some(first) = codewords.first() else {
            return invalid("no codewords".into());
        };
        let dim = first.len();
        if dim == 0 {
            return invalid("codewords have zero dimension".into());
        }
        for (i, c) in codewords.iter().enumerate() {
            if c.len() != dim {
                return invalid(format!("codeword {i} has {} entries, expected {dim}", c.len()));
            }
            if c.iter().any(|x| !x.is_finite()) {
                return invalid(format!("codeword {i} is not finite"));
            }
        }
        let k = codewords.len();
        if groups.len() != leaders.len() {
            return invalid(format!("{} groups but {} leaders", groups.len(), leaders.len()));
        }
        let mut seen = vec![false; k];
        for (g, members) in groups.iter().enumerate() {
            if members.is_empty() {
                return invalid(format!("group {g} is empty"));
            }
            for &m in members {
                if m >= k || seen[m] {
                    return invalid(format!("group {g} member {m} is out of range or repeated"));
                }
                seen[m] = true;
            }
            if !members.contains(&leaders[g]) {
                return invalid(format!("leader {} is not in group {g}", leaders[g]));
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return invalid(format!("codeword {missing} belongs to no group"));
        }
        if !member_meta.is_empty() && member_meta.len() != k {
            return invalid(format!("{} metadata entries for {k} codewords", member_meta.len()));
        }
        Ok(Self {
            dim,
            codewords,
            groups,
            leaders,
            member_meta,
            provenance: None,
        })
    }

    /// A single group holding every codeword, led by codeword 0.
    pub fn flat(codewords: Vec<Vec<f64>>) -> Result<Self, VqError> {
        let k = codewords.len();
        Self::new(codewords, vec![(0..k).collect()], vec![0], Vec::new())
    }

    pub fn with_provenance(mut self, provenance: Option<Provenance>) -> Self {
        self.provenance = provenance;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.codewords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codewords.is_empty()
    }

    pub fn codewords(&self) -> &[Vec<f64>] {
        &self.codewords
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn leaders(&self) -> &[usize] {
        &self.leaders
    }

    pub fn member_meta(&self) -> &[MemberMeta] {
        &self.member_meta
    }

    pub fn provenance(&self) -> Option<&Provenance> {
        self.provenance.as_ref()
    }

    pub fn leader_vector(&self, group: usize) -> &[f64] {
        &self.codewords[self.leaders[group]]
    }

    /// Speakers owning at least one codeword of `group`, sorted and deduplicated.
    pub fn speakers_in_group(&self, group: usize) -> Vec<&str> {
        let mut ids: Vec<&str> = self.groups[group]
            .iter()
            .filter_map(|&i| self.member_meta.get(i).map(|m| m.speaker_id.as_str()))
            .collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    /// Every codeword multiplied by `factor`; structure is kept.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            codewords: self
                .codewords
                .iter()
                .map(|c| c.iter().map(|x| x * factor).collect())
                .collect(),
            ..self.clone()
        }
    }
}

/// Symbol stream and mean distortion of a quantized sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct Quantized {
    pub symbols: Vec<usize>,
    pub avg_distortion: f64,
}

/// Maps every frame to its minimum-distortion codeword (lowest index on ties).
pub fn quantize(fs: &FeatureSequence, cb: &Codebook) -> Result<Quantized, VqError> {
    if fs.is_empty() {
        return Err(VqError::EmptySequence);
    }
    if fs.dim() != cb.dim {
        return Err(VqError::DimMismatch {
            left: fs.dim(),
            right: cb.dim,
        });
    }
    let mut total = 0.0;
    let symbols = fs
        .vectors()
        .iter()
        .map(|v| {
            let (i, d) = nearest(v, &cb.codewords);
            total += d;
            i
        })
        .collect();
    Ok(Quantized {
        symbols,
        avg_distortion: total / fs.len() as f64,
    })
}

impl fmt::Display for SearchMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SearchMode::Grouped => "grouped",
            SearchMode::Exhaustive => "exhaustive",
        })
    }
}

impl FromStr for SearchMode {
    type Err = VqError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "grouped" => Ok(SearchMode::Grouped),
            "exhaustive" => Ok(SearchMode::Exhaustive),
            _ => Err(VqError::ConfigInvalid(format!("unknown search mode '{s}'"))),
        }
    }
}
