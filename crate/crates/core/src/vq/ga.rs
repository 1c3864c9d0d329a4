use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lbg::{lbg_train, validate_pool};
use super::{nearest, similarity, Codebook, Provenance, VqError};

/// Objective the GA maximizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitnessMode {
    /// Mean cosine similarity of each pool vector to its most similar codeword.
    Similarity,
    /// Negative mean quantization distortion of the pool.
    NegDistortion,
}

impl std::str::FromStr for FitnessMode {
    type Err = VqError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "similarity" => Ok(Self::Similarity),
            "neg_distortion" => Ok(Self::NegDistortion),
            _ => Err(VqError::ConfigInvalid(format!("unknown fitness mode '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaConfig {
    pub population_size: usize,
    pub generations: usize,
    /// Cut points per crossover.
    pub crossover_points: usize,
    /// Per-gene probability of resampling the index.
    pub mutation_prob: f64,
    pub elitism_count: usize,
    pub seed: u64,
    pub fitness_mode: FitnessMode,
    /// Split perturbation of the LBG run that seeds one chromosome.
    pub lbg_epsilon: f64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population_size: 30,
            generations: 5,
            crossover_points: 5,
            mutation_prob: 0.05,
            elitism_count: 2,
            seed: 0,
            fitness_mode: FitnessMode::NegDistortion,
            lbg_epsilon: 0.01,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<(), VqError> {
        let bad = |m: &str| Err(VqError::ConfigInvalid(m.to_string()));
        if self.population_size < 2 {
            return bad("GA population_size must be >= 2");
        }
        if self.elitism_count < 1 || self.elitism_count > self.population_size {
            return bad("GA elitism_count must lie in [1, population_size]");
        }
        if self.crossover_points < 1 {
            return bad("GA crossover_points must be >= 1");
        }
        if !(0.0..=1.0).contains(&self.mutation_prob) {
            return bad("GA mutation_prob must lie in [0, 1]");
        }
        if !(self.lbg_epsilon > 0.0) {
            return bad("GA lbg_epsilon must be > 0");
        }
        Ok(())
    }
}

/// Indices of the pool vectors serving as codewords, with cached fitness.
#[derive(Debug, Clone, PartialEq)]
pub struct Chromosome {
    pub genes: Vec<usize>,
    pub fitness: f64,
}

/// Fitness of using `pool[genes]` as the codebook. Higher is fitter.
pub fn ga_fitness(genes: &[usize], pool: &[Vec<f64>], mode: FitnessMode) -> Result<f64, VqError> {
    if genes.is_empty() || genes.iter().any(|&g| g >= pool.len()) {
        return Err(VqError::ConfigInvalid("chromosome genes out of range".into()));
    }
    let codewords: Vec<Vec<f64>> = genes.iter().map(|&g| pool[g].clone()).collect();
    match mode {
        FitnessMode::NegDistortion => {
            let total: f64 = pool.iter().map(|v| nearest(v, &codewords).1).sum();
            Ok(-total / pool.len() as f64)
        }
        FitnessMode::Similarity => {
            let mut total = 0.0;
            for v in pool {
                let mut best = f64::NEG_INFINITY;
                for c in &codewords {
                    best = best.max(similarity(v, c)?);
                }
                total += best;
            }
            Ok(total / pool.len() as f64)
        }
    }
}

/// GA outcome: the best codebook plus the trajectory that produced it.
#[derive(Debug, Clone)]
pub struct GaRun {
    pub codebook: Codebook,
    pub best: Chromosome,
    /// Best fitness after initialization and after each generation.
    pub history: Vec<f64>,
    /// The chromosome snapped from the LBG codebook, as evaluated in generation 0.
    pub lbg_seed: Chromosome,
}

/// Genetic search over which `k` pool vectors form the codebook.
///
/// The initial population is one chromosome snapped from an LBG codebook
/// plus uniformly random index sets. Each generation keeps the
/// `elitism_count` fittest unchanged and fills the rest with children of
/// roulette-selected parents under multi-point crossover, duplicate repair and
/// per-gene mutation. The best fitness is therefore non-decreasing.
pub fn ga_train(pool: &[Vec<f64>], k: usize, cfg: &GaConfig) -> Result<GaRun, VqError> {
    cfg.validate()?;
    validate_pool(pool, k)?;
    if cfg.fitness_mode == FitnessMode::Similarity
        && pool.iter().any(|v| v.iter().all(|&x| x == 0.0))
    {
        return Err(VqError::ZeroVector);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = pool.len();
    let evaluate = |genes: &[usize]| ga_fitness(genes, pool, cfg.fitness_mode);

    let lbg = lbg_train(pool, k, cfg.lbg_epsilon, cfg.seed ^ 0x6c62_6773_6565_6421)?;
    let mut population: Vec<Vec<usize>> = vec![snap_to_pool(lbg.codewords(), pool)];
    while population.len() < cfg.population_size {
        population.push(sample(&mut rng, n, k).into_vec());
    }
    let mut scored = score(population, &evaluate)?;
    let lbg_seed = scored[0].clone();

    let mut best = fittest(&scored).clone();
    let mut history = vec![best.fitness];
    for _ in 0..cfg.generations {
        let mut order: Vec<usize> = (0..scored.len()).collect();
        order.sort_by(|&a, &b| scored[b].fitness.total_cmp(&scored[a].fitness).then(a.cmp(&b)));
        let elites: Vec<Chromosome> = order[..cfg.elitism_count].iter().map(|&i| scored[i].clone()).collect();

        let weights = roulette_weights(&scored);
        let mut children: Vec<Vec<usize>> = Vec::with_capacity(cfg.population_size);
        while elites.len() + children.len() < cfg.population_size {
            let a = &scored[spin(&weights, &mut rng)].genes;
            let b = &scored[spin(&weights, &mut rng)].genes;
            let (mut c1, mut c2) = crossover(a, b, cfg.crossover_points, &mut rng);
            for child in [&mut c1, &mut c2] {
                repair(child, n, &mut rng);
                mutate(child, n, cfg.mutation_prob, &mut rng);
            }
            children.push(c1);
            if elites.len() + children.len() < cfg.population_size {
                children.push(c2);
            }
        }
        let mut next = elites;
        next.extend(score(children, &evaluate)?);
        scored = next;
        let gen_best = fittest(&scored);
        if gen_best.fitness > best.fitness {
            best = gen_best.clone();
        }
        history.push(best.fitness);
    }

    let mut genes = best.genes.clone();
    genes.sort_unstable();
    let codewords = genes.iter().map(|&g| pool[g].clone()).collect();
    let codebook = Codebook::flat(codewords)?.with_provenance(Some(Provenance::Ga {
        config: cfg.clone(),
        fitness: best.fitness,
    }));
    Ok(GaRun {
        codebook,
        best: Chromosome {
            genes,
            fitness: best.fitness,
        },
        history,
        lbg_seed,
    })
}

/// Nearest distinct pool index for each codeword, in codeword order.
fn snap_to_pool(codewords: &[Vec<f64>], pool: &[Vec<f64>]) -> Vec<usize> {
    let mut used = vec![false; pool.len()];
    let mut genes = Vec::with_capacity(codewords.len());
    for c in codewords {
        let mut best: Option<(usize, f64)> = None;
        for (i, v) in pool.iter().enumerate() {
            if used[i] {
                continue;
            }
            let d = super::sq_dist(c, v);
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((i, d));
            }
        }
        let (i, _) = best.expect("pool has at least k vectors");
        used[i] = true;
        genes.push(i);
    }
    genes
}

fn score<F>(population: Vec<Vec<usize>>, evaluate: &F) -> Result<Vec<Chromosome>, VqError>
where
    F: Fn(&[usize]) -> Result<f64, VqError> + Sync,
{
    // Results are collected in population order regardless of scheduling.
    population
        .into_par_iter()
        .map(|genes| {
            let fitness = evaluate(&genes)?;
            Ok(Chromosome { genes, fitness })
        })
        .collect()
}

/// First chromosome with the highest fitness.
fn fittest(scored: &[Chromosome]) -> &Chromosome {
    let mut best = &scored[0];
    for c in &scored[1..] {
        if c.fitness > best.fitness {
            best = c;
        }
    }
    best
}

/// Selection weights shifted so the least fit member keeps a small share.
/// Shift and share scale with the fitness spread, so uniformly rescaling the
/// fitness leaves the weights' proportions unchanged.
fn roulette_weights(scored: &[Chromosome]) -> Vec<f64> {
    let min = scored.iter().map(|c| c.fitness).fold(f64::INFINITY, f64::min);
    let max = scored.iter().map(|c| c.fitness).fold(f64::NEG_INFINITY, f64::max);
    let spread = max - min;
    if !(spread > 0.0) {
        return vec![1.0; scored.len()];
    }
    scored.iter().map(|c| (c.fitness - min) + 1e-3 * spread).collect()
}

fn spin<R: Rng>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let mut r = rng.gen::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if r < *w {
            return i;
        }
        r -= w;
    }
    weights.len() - 1
}

/// Multi-point crossover: children alternate parents at each sorted cut.
fn crossover<R: Rng>(a: &[usize], b: &[usize], points: usize, rng: &mut R) -> (Vec<usize>, Vec<usize>) {
    let k = a.len();
    if k < 2 {
        return (a.to_vec(), b.to_vec());
    }
    let n_cuts = points.min(k - 1);
    let mut cuts: Vec<usize> = sample(rng, k - 1, n_cuts).into_iter().map(|c| c + 1).collect();
    cuts.sort_unstable();
    let mut c1 = Vec::with_capacity(k);
    let mut c2 = Vec::with_capacity(k);
    let mut swap = false;
    let mut cut_iter = cuts.into_iter().peekable();
    for i in 0..k {
        if cut_iter.peek() == Some(&i) {
            cut_iter.next();
            swap = !swap;
        }
        let (x, y) = if swap { (b[i], a[i]) } else { (a[i], b[i]) };
        c1.push(x);
        c2.push(y);
    }
    (c1, c2)
}

fn random_unused<R: Rng>(in_use: &[bool], rng: &mut R) -> usize {
    loop {
        let candidate = rng.gen_range(0..in_use.len());
        if !in_use[candidate] {
            return candidate;
        }
    }
}

/// Replaces repeated genes with random indices not yet in the chromosome.
fn repair<R: Rng>(genes: &mut [usize], n: usize, rng: &mut R) {
    let mut in_use = vec![false; n];
    let mut duplicates = Vec::new();
    for (pos, &g) in genes.iter().enumerate() {
        if in_use[g] {
            duplicates.push(pos);
        } else {
            in_use[g] = true;
        }
    }
    for pos in duplicates {
        let g = random_unused(&in_use, rng);
        in_use[g] = true;
        genes[pos] = g;
    }
}

fn mutate<R: Rng>(genes: &mut [usize], n: usize, prob: f64, rng: &mut R) {
    if genes.len() >= n || prob == 0.0 {
        return;
    }
    let mut in_use = vec![false; n];
    genes.iter().for_each(|&g| in_use[g] = true);
    for g in genes.iter_mut() {
        if rng.gen::<f64>() < prob {
            let replacement = random_unused(&in_use, rng);
            in_use[*g] = false;
            in_use[replacement] = true;
            *g = replacement;
        }
    }
}
