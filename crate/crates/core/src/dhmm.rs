//! Discrete hidden Markov models over VQ symbol streams, one per speaker.

use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

const ROW_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HmmError {
    #[error("symbol {symbol} is outside the alphabet of {n_symbols}")]
    SymbolOutOfRange { symbol: usize, n_symbols: usize },
    #[error("no non-empty training sequence")]
    EmptyTrainingSet,
    #[error("symbol sequence is empty")]
    EmptySequence,
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
}

impl HmmError {
    pub fn name(&self) -> &'static str {
        match self {
            Self::SymbolOutOfRange { .. } => "SymbolOutOfRange",
            Self::EmptyTrainingSet => "EmptyTrainingSet",
            Self::EmptySequence => "EmptySequence",
            Self::InvalidModel(_) => "InvalidModel",
            Self::ConfigInvalid(_) => "ConfigInvalid",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    /// Start in state 0; each state either stays or moves to the next one.
    LeftToRight,
    /// Every transition allowed.
    Ergodic,
}

impl FromStr for Topology {
    type Err = HmmError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "left_to_right" | "ltr" => Ok(Self::LeftToRight),
            "ergodic" => Ok(Self::Ergodic),
            _ => Err(HmmError::ConfigInvalid(format!("unknown topology '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HmmConfig {
    pub n_states: usize,
    pub topology: Topology,
    pub max_iters: usize,
    /// Training stops once the total log-likelihood improves by less than this.
    pub tol: f64,
    pub emission_floor: f64,
    /// Floor for transitions the topology allows; zero disables it.
    pub trans_floor: f64,
    pub seed: u64,
}

impl Default for HmmConfig {
    fn default() -> Self {
        Self {
            n_states: 5,
            topology: Topology::LeftToRight,
            max_iters: 20,
            tol: 1e-4,
            emission_floor: 1e-8,
            trans_floor: 0.0,
            seed: 0,
        }
    }
}

impl HmmConfig {
    pub fn validate(&self, n_symbols: usize) -> Result<(), HmmError> {
        let bad = |m: String| Err(HmmError::ConfigInvalid(m));
        if self.n_states == 0 || n_symbols == 0 {
            return bad("n_states and n_symbols must be >= 1".into());
        }
        if !(self.tol >= 0.0) {
            return bad("tol must be >= 0".into());
        }
        if !(self.emission_floor >= 0.0 && self.emission_floor * (n_symbols as f64) < 1.0) {
            return bad(format!("emission_floor must lie in [0, 1/{n_symbols})"));
        }
        if !(self.trans_floor >= 0.0 && self.trans_floor * (self.n_states as f64) < 1.0) {
            return bad(format!("trans_floor must lie in [0, 1/{})", self.n_states));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ModelData {
    pi: Vec<f64>,
    trans: Vec<Vec<f64>>,
    emit: Vec<Vec<f64>>,
}

/// Initial, transition and emission distributions of one speaker.
///
/// Every distribution is non-negative and sums to one within 1e-9; this is
/// checked on construction and on deserialization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelData", into = "ModelData")]
pub struct SpeakerModel {
    pi: Vec<f64>,
    trans: Vec<Vec<f64>>,
    emit: Vec<Vec<f64>>,
}

impl TryFrom<ModelData> for SpeakerModel {
    type Error = HmmError;

    fn try_from(d: ModelData) -> Result<Self, HmmError> {
        SpeakerModel::new(d.pi, d.trans, d.emit)
    }
}

impl From<SpeakerModel> for ModelData {
    fn from(m: SpeakerModel) -> Self {
        ModelData {
            pi: m.pi,
            trans: m.trans,
            emit: m.emit,
        }
    }
}

fn check_distribution(row: &[f64], what: &str) -> Result<(), HmmError> {
    if row.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
        return Err(HmmError::InvalidModel(format!("{what} has a negative or non-finite entry")));
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > ROW_TOLERANCE {
        return Err(HmmError::InvalidModel(format!("{what} sums to {sum}")));
    }
    Ok(())
}

impl SpeakerModel {
    pub fn new(pi: Vec<f64>, trans: Vec<Vec<f64>>, emit: Vec<Vec<f64>>) -> Result<Self, HmmError> {
        let n = pi.len();
        if n == 0 || trans.len() != n || emit.len() != n {
            return Err(HmmError::InvalidModel("pi, trans and emit disagree on the state count".into()));
        }
        let k = emit[0].len();
        if k == 0 {
            return Err(HmmError::InvalidModel("empty symbol alphabet".into()));
        }
        check_distribution(&pi, "pi")?;
        for (i, (t, e)) in trans.iter().zip(&emit).enumerate() {
            if t.len() != n || e.len() != k {
                return Err(HmmError::InvalidModel(format!("row {i} has the wrong length")));
            }
            check_distribution(t, &format!("trans row {i}"))?;
            check_distribution(e, &format!("emit row {i}"))?;
        }
        Ok(Self { pi, trans, emit })
    }

    pub fn n_states(&self) -> usize {
        self.pi.len()
    }

    pub fn n_symbols(&self) -> usize {
        self.emit[0].len()
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    pub fn trans(&self) -> &[Vec<f64>] {
        &self.trans
    }

    pub fn emit(&self) -> &[Vec<f64>] {
        &self.emit
    }

    fn check_symbols(&self, symbols: &[usize]) -> Result<(), HmmError> {
        if symbols.is_empty() {
            return Err(HmmError::EmptySequence);
        }
        let k = self.n_symbols();
        match symbols.iter().find(|&&s| s >= k) {
            Some(&symbol) => Err(HmmError::SymbolOutOfRange { symbol, n_symbols: k }),
            None => Ok(()),
        }
    }

    /// `log P(symbols | model)` by the scaled forward recursion. Returns
    /// negative infinity when the sequence is impossible under the model.
    pub fn forward_log_likelihood(&self, symbols: &[usize]) -> Result<f64, HmmError> {
        self.check_symbols(symbols)?;
        Ok(self.forward(symbols).1)
    }

    /// Scaled forward variables (each row sums to one) and the log-likelihood.
    fn forward(&self, symbols: &[usize]) -> (Vec<Vec<f64>>, f64, Vec<f64>) {
        let n = self.n_states();
        let mut alpha = Vec::with_capacity(symbols.len());
        let mut scales = Vec::with_capacity(symbols.len());
        let mut ll = 0.0;
        let mut row: Vec<f64> = (0..n).map(|i| self.pi[i] * self.emit[i][symbols[0]]).collect();
        for t in 0..symbols.len() {
            if t > 0 {
                let prev: &Vec<f64> = alpha.last().unwrap();
                row = (0..n)
                    .map(|j| {
                        let into: f64 = (0..n).map(|i| prev[i] * self.trans[i][j]).sum();
                        into * self.emit[j][symbols[t]]
                    })
                    .collect();
            }
            let c: f64 = row.iter().sum();
            if !(c > 0.0) {
                return (alpha, f64::NEG_INFINITY, scales);
            }
            row.iter_mut().for_each(|a| *a /= c);
            ll += c.ln();
            scales.push(c);
            alpha.push(row.clone());
        }
        (alpha, ll, scales)
    }

    /// Scaled backward variables, using the forward scale factors.
    fn backward(&self, symbols: &[usize], scales: &[f64]) -> Vec<Vec<f64>> {
        let n = self.n_states();
        let len = symbols.len();
        let mut beta = vec![vec![0.0; n]; len];
        beta[len - 1] = vec![1.0; n];
        for t in (0..len - 1).rev() {
            for i in 0..n {
                let s: f64 = (0..n)
                    .map(|j| self.trans[i][j] * self.emit[j][symbols[t + 1]] * beta[t + 1][j])
                    .sum();
                beta[t][i] = s / scales[t + 1];
            }
        }
        beta
    }
}

/// Free-function form of [`SpeakerModel::forward_log_likelihood`].
pub fn forward_log_likelihood(model: &SpeakerModel, symbols: &[usize]) -> Result<f64, HmmError> {
    model.forward_log_likelihood(symbols)
}

/// Trained model plus the total training log-likelihood of every model the
/// re-estimation visited, starting with the initial one.
#[derive(Debug, Clone)]
pub struct BaumWelchRun {
    pub model: SpeakerModel,
    pub log_likelihoods: Vec<f64>,
}

pub fn baum_welch(
    sequences: &[Vec<usize>],
    n_symbols: usize,
    cfg: &HmmConfig,
) -> Result<SpeakerModel, HmmError> {
    Ok(baum_welch_traced(sequences, n_symbols, cfg)?.model)
}

/// Multi-sequence Baum-Welch: expected counts from all sequences are summed
/// before each re-estimation.
pub fn baum_welch_traced(
    sequences: &[Vec<usize>],
    n_symbols: usize,
    cfg: &HmmConfig,
) -> Result<BaumWelchRun, HmmError> {
    cfg.validate(n_symbols)?;
    let data: Vec<&[usize]> = sequences.iter().filter(|s| !s.is_empty()).map(Vec::as_slice).collect();
    if data.is_empty() {
        return Err(HmmError::EmptyTrainingSet);
    }
    if let Some(&symbol) = data.iter().flat_map(|s| s.iter()).find(|&&s| s >= n_symbols) {
        return Err(HmmError::SymbolOutOfRange { symbol, n_symbols });
    }
    let allowed = allowed_transitions(cfg.n_states, cfg.topology);
    let mut model = initial_model(&data, n_symbols, cfg, &allowed);
    let mut history: Vec<f64> = Vec::new();
    for _ in 0..cfg.max_iters {
        let (ll, counts) = expected_counts(&model, &data);
        let stalled = history.last().is_some_and(|&prev| ll - prev < cfg.tol);
        history.push(ll);
        if stalled {
            return Ok(BaumWelchRun {
                model,
                log_likelihoods: history,
            });
        }
        model = reestimate(&counts, cfg, &allowed);
    }
    let (ll, _) = expected_counts(&model, &data);
    history.push(ll);
    Ok(BaumWelchRun {
        model,
        log_likelihoods: history,
    })
}

fn allowed_transitions(n: usize, topology: Topology) -> Vec<Vec<bool>> {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| match topology {
                    Topology::Ergodic => true,
                    Topology::LeftToRight => j == i || j == i + 1,
                })
                .collect()
        })
        .collect()
}

/// Normalizes `row` over the allowed entries and lifts each allowed entry to
/// at least `floor` while keeping the sum at one.
fn normalize_floored(row: &mut [f64], allowed: &[bool], floor: f64) {
    let n_allowed = allowed.iter().filter(|a| **a).count() as f64;
    let total: f64 = row.iter().zip(allowed).filter(|(_, a)| **a).map(|(x, _)| *x).sum();
    let floor = floor.min(1.0 / n_allowed);
    for (x, &a) in row.iter_mut().zip(allowed) {
        *x = if !a {
            0.0
        } else if total > 0.0 {
            floor + (1.0 - floor * n_allowed) * (*x / total)
        } else {
            1.0 / n_allowed
        };
    }
}

/// Uniform segmentation of every sequence across the states seeds the
/// emission counts; transitions start near a stay-or-advance split. A small
/// seeded perturbation breaks ties between states.
fn initial_model(data: &[&[usize]], n_symbols: usize, cfg: &HmmConfig, allowed: &[Vec<bool>]) -> SpeakerModel {
    let n = cfg.n_states;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut emit = vec![vec![1.0; n_symbols]; n];
    for seq in data {
        for (t, &s) in seq.iter().enumerate() {
            emit[t * n / seq.len()][s] += 1.0;
        }
    }
    let all = vec![true; n_symbols];
    for row in emit.iter_mut() {
        row.iter_mut().for_each(|x| *x *= 1.0 + 0.1 * rng.gen::<f64>());
        normalize_floored(row, &all, cfg.emission_floor);
    }
    let mut trans = vec![vec![0.0; n]; n];
    for (i, row) in trans.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            let base = if i == j { 2.0 } else { 1.0 };
            *x = base * (1.0 + 0.1 * rng.gen::<f64>());
        }
        normalize_floored(row, &allowed[i], cfg.trans_floor);
    }
    let mut pi: Vec<f64> = (0..n).map(|_| 1.0 + 0.1 * rng.gen::<f64>()).collect();
    let pi_allowed: Vec<bool> = (0..n).map(|i| cfg.topology == Topology::Ergodic || i == 0).collect();
    normalize_floored(&mut pi, &pi_allowed, cfg.trans_floor);
    SpeakerModel { pi, trans, emit }
}

struct Counts {
    pi: Vec<f64>,
    trans: Vec<Vec<f64>>,
    emit: Vec<Vec<f64>>,
}

/// E-step over all sequences: total log-likelihood and summed expected counts.
fn expected_counts(model: &SpeakerModel, data: &[&[usize]]) -> (f64, Counts) {
    let n = model.n_states();
    let k = model.n_symbols();
    let mut counts = Counts {
        pi: vec![0.0; n],
        trans: vec![vec![0.0; n]; n],
        emit: vec![vec![0.0; k]; n],
    };
    let mut total = 0.0;
    for seq in data {
        let (alpha, ll, scales) = model.forward(seq);
        total += ll;
        if !ll.is_finite() {
            continue;
        }
        let beta = model.backward(seq, &scales);
        for (t, &o) in seq.iter().enumerate() {
            let gamma: Vec<f64> = (0..n).map(|i| alpha[t][i] * beta[t][i]).collect();
            let norm: f64 = gamma.iter().sum();
            for i in 0..n {
                let g = gamma[i] / norm;
                counts.emit[i][o] += g;
                if t == 0 {
                    counts.pi[i] += g;
                }
            }
            if t + 1 < seq.len() {
                let o_next = seq[t + 1];
                for i in 0..n {
                    for j in 0..n {
                        counts.trans[i][j] += alpha[t][i] * model.trans[i][j] * model.emit[j][o_next]
                            * beta[t + 1][j]
                            / scales[t + 1];
                    }
                }
            }
        }
    }
    (total, counts)
}

fn reestimate(counts: &Counts, cfg: &HmmConfig, allowed: &[Vec<bool>]) -> SpeakerModel {
    let n = cfg.n_states;
    let mut pi = counts.pi.clone();
    let pi_allowed: Vec<bool> = (0..n).map(|i| cfg.topology == Topology::Ergodic || i == 0).collect();
    normalize_floored(&mut pi, &pi_allowed, cfg.trans_floor);
    let mut trans = counts.trans.clone();
    for (row, mask) in trans.iter_mut().zip(allowed) {
        normalize_floored(row, mask, cfg.trans_floor);
    }
    let mut emit = counts.emit.clone();
    let all = vec![true; emit[0].len()];
    for row in emit.iter_mut() {
        normalize_floored(row, &all, cfg.emission_floor);
    }
    SpeakerModel { pi, trans, emit }
}
