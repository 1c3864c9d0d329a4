//! Corpus evaluation: enroll, probe under every noise and SNR, tabulate.

mod manifest;
mod report;
mod synth;

use std::collections::BTreeMap;

use rayon::prelude::*;
use thiserror::Error;

use crate::config::{stage_seed, FailurePolicy, SystemConfig};
use crate::features::Method;
use crate::model::{train, TrainedSystem, Utterance};
use crate::signal_io::{mix_at_snr_offset, AudioBuffer};
use crate::vq::SearchMode;

pub use manifest::{Corpus, CorpusManifest, ManifestEntry, NoiseFile, Split};
pub use report::{
    average_rates, format_rate, parse_csv, render_csv, render_curve, render_markdown, Averages, Cell, EvalReport,
    Failure, MethodAverage, NoiseAverage, RunMeta, CSV_HEADER,
};
pub use synth::{make_synthetic_corpus, SynthSpec, MANIFEST_FILE};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("invalid manifest: {0}")]
    ManifestInvalid(String),
    #[error("report has no cells")]
    EmptyReport,
    #[error("cannot parse report: {0}")]
    Parse(String),
    #[error("i/o failure: {0}")]
    Io(String),
}

impl EvalError {
    pub fn name(&self) -> &'static str {
        match self {
            Self::ManifestInvalid(_) => "ManifestInvalid",
            Self::EmptyReport => "EmptyReport",
            Self::Parse(_) => "Parse",
            Self::Io(_) => "IoFailure",
        }
    }
}

/// SNR of the clean condition: the added noise is 120 dB down.
pub const CLEAN_SNR_DB: f64 = 120.0;

/// Deterministic noise offset for one probe under one condition.
fn noise_offset(seed: u64, noise: &str, snr_db: f64, utt: &Utterance, noise_len: usize) -> usize {
    let slack = noise_len.saturating_sub(utt.audio.len());
    let key = format!("mix/{noise}/{snr_db}/{}", utt.utterance_id);
    (stage_seed(seed, &key) % (slack as u64 + 1)) as usize
}

/// Mixes `utt` with `noise` at `snr_db` and identifies the mixture.
pub fn probe(
    sys: &TrainedSystem,
    utt: &Utterance,
    noise_name: &str,
    noise: &AudioBuffer,
    snr_db: f64,
    mode: SearchMode,
) -> Result<String, crate::Error> {
    let offset = noise_offset(sys.config.seed, noise_name, snr_db, utt, noise.len());
    let mix = mix_at_snr_offset(&utt.audio, noise, snr_db, offset)?;
    Ok(sys.identify_audio(&mix.audio, mode)?.speaker_id)
}

fn score_conditions(
    sys: &TrainedSystem,
    corpus: &Corpus,
    method: Method,
    cfg: &SystemConfig,
) -> (Vec<Cell>, Vec<Failure>) {
    let mut cells = Vec::new();
    let mut failures = Vec::new();
    for (noise_name, noise) in &corpus.noises {
        for &snr in &corpus.snr_levels_db {
            let outcomes: Vec<Result<bool, crate::Error>> = corpus
                .test
                .par_iter()
                .map(|u| Ok(probe(sys, u, noise_name, noise, snr, cfg.identify_mode)? == u.speaker_id))
                .collect();
            let mut correct = 0;
            let mut total = 0;
            for (u, outcome) in corpus.test.iter().zip(outcomes) {
                match outcome {
                    Ok(hit) => {
                        total += 1;
                        correct += usize::from(hit);
                    }
                    Err(e) => {
                        if cfg.on_failure == FailurePolicy::Error {
                            total += 1;
                        }
                        failures.push(Failure {
                            noise: noise_name.clone(),
                            snr_db: snr,
                            method,
                            utterance_id: u.utterance_id.clone(),
                            error: e.name(),
                        });
                    }
                }
            }
            cells.push(Cell::new(noise_name, snr, method, correct, total));
        }
    }
    (cells, failures)
}

fn run_meta(cfg: &SystemConfig, failures: Vec<Failure>) -> RunMeta {
    let stages = ["pool", "symbols", "lbg", "groups", "leaders"];
    let stage_seeds = stages
        .iter()
        .map(|s| (s.to_string(), stage_seed(cfg.seed, s)))
        .collect::<BTreeMap<_, _>>();
    RunMeta {
        config: cfg.clone(),
        stage_seeds,
        failures,
    }
}

/// Enrolls on the corpus' ENROLL utterances with `method`, then scores every
/// TEST utterance under every noise and SNR. Pipeline failures on a probe are
/// recorded in the run metadata and count as misidentifications unless the
/// config excludes them.
pub fn run_identification(corpus: &Corpus, method: Method, cfg: &SystemConfig) -> Result<EvalReport, crate::Error> {
    if corpus.test.is_empty() {
        return Err(EvalError::ManifestInvalid("no TEST entries".into()).into());
    }
    let sys = train(&corpus.enroll, &corpus.noise_buffers(), method, cfg)?;
    let (cells, failures) = score_conditions(&sys, corpus, method, cfg);
    let report = EvalReport {
        cells,
        averages: None,
        run_meta: Some(run_meta(cfg, failures)),
    };
    Ok(average_rates(&report)?)
}

/// [`run_identification`] for every method in `cfg.methods`, merged into one
/// report.
pub fn evaluate(corpus: &Corpus, cfg: &SystemConfig) -> Result<EvalReport, crate::Error> {
    let mut cells = Vec::new();
    let mut failures = Vec::new();
    for &method in &cfg.methods {
        let r = run_identification(corpus, method, cfg)?;
        cells.extend(r.cells);
        failures.extend(r.run_meta.map(|m| m.failures).unwrap_or_default());
    }
    let report = EvalReport {
        cells,
        averages: None,
        run_meta: Some(run_meta(cfg, failures)),
    };
    Ok(average_rates(&report)?)
}

/// How often grouped and exhaustive search pick the same speaker on the
/// clean TEST utterances.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModeAgreement {
    pub agree: usize,
    pub total: usize,
    /// Exhaustive decisions that were correct.
    pub exhaustive_correct: usize,
    pub grouped_correct: usize,
}

pub fn compare_modes(sys: &TrainedSystem, corpus: &Corpus) -> Result<ModeAgreement, crate::Error> {
    let decisions: Vec<(String, String, &str)> = corpus
        .test
        .par_iter()
        .map(|u| {
            let g = sys.identify_audio(&u.audio, SearchMode::Grouped)?.speaker_id;
            let e = sys.identify_audio(&u.audio, SearchMode::Exhaustive)?.speaker_id;
            Ok((g, e, u.speaker_id.as_str()))
        })
        .collect::<Result<_, crate::Error>>()?;
    Ok(ModeAgreement {
        agree: decisions.iter().filter(|(g, e, _)| g == e).count(),
        total: decisions.len(),
        exhaustive_correct: decisions.iter().filter(|(_, e, t)| e == t).count(),
        grouped_correct: decisions.iter().filter(|(g, _, t)| g == t).count(),
    })
}

/// Parameter varied by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    CrossoverPoints,
    Generations,
}

impl SweepParam {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::CrossoverPoints => "crossover",
            Self::Generations => "generations",
        }
    }
}

impl std::str::FromStr for SweepParam {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "crossover" | "crossover_points" => Ok(Self::CrossoverPoints),
            "generations" => Ok(Self::Generations),
            _ => Err(EvalError::Parse(format!("unknown sweep parameter '{s}'"))),
        }
    }
}

/// One full [`run_identification`] per value, everything else fixed. The
/// rate of a point is the mean over all its cells.
pub fn sweep(
    corpus: &Corpus,
    method: Method,
    base: &SystemConfig,
    param: SweepParam,
    values: &[usize],
) -> Result<Vec<(usize, f64)>, crate::Error> {
    if values.is_empty() {
        return Err(EvalError::Parse("sweep needs at least one value".into()).into());
    }
    values
        .iter()
        .map(|&v| {
            let mut cfg = base.clone();
            match param {
                SweepParam::CrossoverPoints => cfg.ga.crossover_points = v,
                SweepParam::Generations => cfg.ga.generations = v,
            }
            let report = run_identification(corpus, method, &cfg)?;
            Ok((v, report.mean_rate()?))
        })
        .collect()
}

pub fn sweep_crossover(
    corpus: &Corpus,
    method: Method,
    base: &SystemConfig,
    points: &[usize],
) -> Result<Vec<(usize, f64)>, crate::Error> {
    sweep(corpus, method, base, SweepParam::CrossoverPoints, points)
}

pub fn sweep_generations(
    corpus: &Corpus,
    method: Method,
    base: &SystemConfig,
    gens: &[usize],
) -> Result<Vec<(usize, f64)>, crate::Error> {
    sweep(corpus, method, base, SweepParam::Generations, gens)
}
