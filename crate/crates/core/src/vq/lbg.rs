use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{mean_vector, nearest, Codebook, Provenance, VqError};

const MAX_LLOYD_ITERS: usize = 100;

/// LBG result with the mean distortion after every Lloyd assignment, one
/// list per codebook size reached by splitting.
#[derive(Debug, Clone)]
pub struct LbgRun {
    pub codebook: Codebook,
    pub distortion_history: Vec<Vec<f64>>,
}

pub(crate) fn validate_pool(pool: &[Vec<f64>], k: usize) -> Result<usize, VqError> {
    if k == 0 {
        return Err(VqError::ConfigInvalid("codebook size must be >= 1".into()));
    }
    if pool.len() < k {
        return Err(VqError::PoolTooSmall { pool: pool.len(), k });
    }
    let dim = pool[0].len();
    if dim == 0 {
        return Err(VqError::ConfigInvalid("pool vectors have zero dimension".into()));
    }
    if let Some(bad) = pool.iter().find(|v| v.len() != dim) {
        return Err(VqError::DimMismatch {
            left: dim,
            right: bad.len(),
        });
    }
    if pool.iter().flatten().any(|x| !x.is_finite()) {
        return Err(VqError::ConfigInvalid("pool contains non-finite values".into()));
    }
    Ok(dim)
}

/// Splitting LBG: start at the pool centroid, split codewords by `+-epsilon`
/// (scaled per dimension by the pool's spread) and Lloyd-refine until there
/// are `k` codewords.
pub fn lbg_train(pool: &[Vec<f64>], k: usize, epsilon: f64, seed: u64) -> Result<Codebook, VqError> {
    Ok(lbg_train_traced(pool, k, epsilon, seed)?.codebook)
}

pub fn lbg_train_traced(
    pool: &[Vec<f64>],
    k: usize,
    epsilon: f64,
    seed: u64,
) -> Result<LbgRun, VqError> {
    let dim = validate_pool(pool, k)?;
    if !(epsilon > 0.0) {
        return Err(VqError::ConfigInvalid("LBG epsilon must be > 0".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let refs: Vec<&[f64]> = pool.iter().map(Vec::as_slice).collect();
    let centroid = mean_vector(&refs);
    let spread: Vec<f64> = (0..dim)
        .map(|j| {
            let var = pool.iter().map(|v| (v[j] - centroid[j]).powi(2)).sum::<f64>() / pool.len() as f64;
            if var > 0.0 {
                var.sqrt()
            } else {
                1.0
            }
        })
        .collect();

    let mut codewords = vec![centroid];
    let mut history = Vec::new();
    history.push(Vec::new());
    let mut cell_distortion = lloyd(pool, &mut codewords, history.last_mut().unwrap());
    while codewords.len() < k {
        let n_split = codewords.len().min(k - codewords.len());
        let mut order: Vec<usize> = (0..codewords.len()).collect();
        order.sort_by(|&a, &b| cell_distortion[b].total_cmp(&cell_distortion[a]).then(a.cmp(&b)));
        for &c in &order[..n_split] {
            let delta: Vec<f64> = spread
                .iter()
                .map(|s| if rng.gen::<bool>() { epsilon * s } else { -epsilon * s })
                .collect();
            let minus: Vec<f64> = codewords[c].iter().zip(&delta).map(|(x, d)| x - d).collect();
            codewords[c].iter_mut().zip(&delta).for_each(|(x, d)| *x += d);
            codewords.push(minus);
        }
        history.push(Vec::new());
        cell_distortion = lloyd(pool, &mut codewords, history.last_mut().unwrap());
    }
    let codebook = Codebook::flat(codewords)?.with_provenance(Some(Provenance::Lbg { epsilon, seed }));
    Ok(LbgRun {
        codebook,
        distortion_history: history,
    })
}

/// Lloyd refinement in place. Empty cells are re-seeded at the pool vector
/// farthest from its current codeword. Returns total distortion per cell.
fn lloyd(pool: &[Vec<f64>], codewords: &mut [Vec<f64>], history: &mut Vec<f64>) -> Vec<f64> {
    let k = codewords.len();
    let mut assignment: Vec<usize> = Vec::new();
    let mut cells = vec![0.0; k];
    for _ in 0..MAX_LLOYD_ITERS {
        let mut next = Vec::with_capacity(pool.len());
        let mut dists = Vec::with_capacity(pool.len());
        cells = vec![0.0; k];
        for v in pool {
            let (i, d) = nearest(v, codewords);
            next.push(i);
            dists.push(d);
            cells[i] += d;
        }
        history.push(dists.iter().sum::<f64>() / pool.len() as f64);

        let mut counts = vec![0usize; k];
        next.iter().for_each(|&i| counts[i] += 1);
        let empties: Vec<usize> = (0..k).filter(|&c| counts[c] == 0).collect();
        let converged = empties.is_empty() && next == assignment;
        assignment = next;
        if converged {
            break;
        }

        let mut sums = vec![vec![0.0; codewords[0].len()]; k];
        for (v, &i) in pool.iter().zip(&assignment) {
            sums[i].iter_mut().zip(v).for_each(|(s, x)| *s += x);
        }
        for c in 0..k {
            if counts[c] > 0 {
                codewords[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
        // Farthest vectors first, each used at most once.
        let mut by_distance: Vec<usize> = (0..pool.len()).collect();
        by_distance.sort_by(|&a, &b| dists[b].total_cmp(&dists[a]).then(a.cmp(&b)));
        for (c, &p) in empties.iter().zip(&by_distance) {
            codewords[*c] = pool[p].clone();
        }
    }
    cells
}

/// Mean distortion of `pool` under `codewords`.
#[cfg(test)]
pub(crate) fn mean_distortion(pool: &[Vec<f64>], codewords: &[Vec<f64>]) -> f64 {
    pool.iter()
        .map(|v| codewords.iter().map(|c| super::sq_dist(v, c)).fold(f64::INFINITY, f64::min))
        .sum::<f64>()
        / pool.len() as f64
}
