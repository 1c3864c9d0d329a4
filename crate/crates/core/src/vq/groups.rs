use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ga::{ga_train, GaConfig};
use super::{check_dims, similarity, sq_dist, Codebook, MemberMeta, Provenance, VqError};
use crate::features::{FeatureError, FeatureSequence};

const MAX_CLUSTER_ITERS: usize = 100;

/// One enrollment utterance with its extracted features.
#[derive(Debug, Clone)]
pub struct EnrolledUtterance {
    pub speaker_id: String,
    pub utterance_id: String,
    pub features: FeatureSequence,
}

fn time_average(fs: &FeatureSequence) -> Result<Vec<f64>, VqError> {
    fs.mean().map_err(|e| match e {
        FeatureError::EmptySequence => VqError::EmptySequence,
        other => VqError::ConfigInvalid(other.to_string()),
    })
}

/// Builds the group codebook: one codeword per enrolled utterance (its
/// time-averaged feature vector), grouped by how similar each utterance is to
/// every noise reference, with one GA-selected leader per group.
///
/// Groups are numbered by their smallest member so the result does not
/// depend on cluster labels.
pub fn build_groups(
    enrolled: &[EnrolledUtterance],
    noise_refs: &[FeatureSequence],
    g: usize,
    seed: u64,
    ga: &GaConfig,
) -> Result<Codebook, VqError> {
    if noise_refs.is_empty() {
        return Err(VqError::NoNoiseRefs);
    }
    if g == 0 {
        return Err(VqError::ConfigInvalid("group count must be >= 1".into()));
    }
    if enrolled.len() < g {
        return Err(VqError::TooFewUtterances(enrolled.len()));
    }
    let means: Vec<Vec<f64>> = enrolled
        .iter()
        .map(|u| time_average(&u.features))
        .collect::<Result<_, _>>()?;
    for m in &means[1..] {
        check_dims(&means[0], m)?;
    }
    let noise_means: Vec<Vec<f64>> = noise_refs.iter().map(time_average).collect::<Result<_, _>>()?;
    let profiles: Vec<Vec<f64>> = means
        .iter()
        .map(|m| noise_means.iter().map(|n| similarity(m, n)).collect())
        .collect::<Result<_, _>>()?;

    let assignment = cluster(&profiles, g, seed);
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); g];
    for (i, &c) in assignment.iter().enumerate() {
        groups[c].push(i);
    }
    groups.sort_by_key(|members| members[0]);

    let mut leaders = Vec::with_capacity(g);
    for members in &groups {
        let pool: Vec<Vec<f64>> = members.iter().map(|&i| means[i].clone()).collect();
        let run = ga_train(&pool, 1, ga)?;
        leaders.push(members[run.best.genes[0]]);
    }
    let meta = enrolled
        .iter()
        .map(|u| MemberMeta {
            speaker_id: u.speaker_id.clone(),
            utterance_id: u.utterance_id.clone(),
        })
        .collect();
    Ok(Codebook::new(means, groups, leaders, meta)?.with_provenance(Some(Provenance::Groups {
        groups: g,
        seed,
        ga: ga.clone(),
    })))
}

/// Seeded farthest-point initialization followed by Lloyd iteration. Every
/// cluster ends non-empty.
fn cluster(points: &[Vec<f64>], g: usize, seed: u64) -> Vec<usize> {
    let n = points.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = vec![rng.gen_range(0..n)];
    while chosen.len() < g {
        let mut best: Option<(usize, f64)> = None;
        for i in (0..n).filter(|i| !chosen.contains(i)) {
            let d = chosen.iter().map(|&c| sq_dist(&points[i], &points[c])).fold(f64::INFINITY, f64::min);
            if best.is_none_or(|(_, bd)| d > bd) {
                best = Some((i, d));
            }
        }
        chosen.push(best.expect("enough points for g clusters").0);
    }
    let mut centers: Vec<Vec<f64>> = chosen.iter().map(|&c| points[c].clone()).collect();
    let mut assignment: Vec<usize> = Vec::new();

    for _ in 0..MAX_CLUSTER_ITERS {
        let mut next: Vec<usize> = points.iter().map(|p| super::nearest(p, &centers).0).collect();
        repair_empty(points, &centers, &mut next, g);
        if next == assignment {
            break;
        }
        assignment = next;
        for (c, center) in centers.iter_mut().enumerate() {
            let members: Vec<&[f64]> = points
                .iter()
                .zip(&assignment)
                .filter(|(_, &a)| a == c)
                .map(|(p, _)| p.as_slice())
                .collect();
            *center = super::mean_vector(&members);
        }
    }
    assignment
}

/// Gives each empty cluster the point farthest from its own center, taken
/// only from clusters that can spare one.
fn repair_empty(points: &[Vec<f64>], centers: &[Vec<f64>], assignment: &mut [usize], g: usize) {
    let mut counts = vec![0usize; g];
    assignment.iter().for_each(|&a| counts[a] += 1);
    for c in 0..g {
        if counts[c] > 0 {
            continue;
        }
        let mut best: Option<(usize, f64)> = None;
        for (i, p) in points.iter().enumerate() {
            if counts[assignment[i]] < 2 {
                continue;
            }
            let d = sq_dist(p, &centers[assignment[i]]);
            if best.is_none_or(|(_, bd)| d > bd) {
                best = Some((i, d));
            }
        }
        let (i, _) = best.expect("more points than clusters");
        counts[assignment[i]] -= 1;
        assignment[i] = c;
        counts[c] = 1;
    }
}

/// Group whose leader is nearest to the probe's time-averaged vector.
pub fn encode(probe: &FeatureSequence, cb: &Codebook) -> Result<usize, VqError> {
    let m = time_average(probe)?;
    check_dims(&m, cb.leader_vector(0))?;
    let mut best = (0, f64::INFINITY);
    for g in 0..cb.groups().len() {
        let d = sq_dist(&m, cb.leader_vector(g));
        if d < best.1 {
            best = (g, d);
        }
    }
    Ok(best.0)
}
