use super::{FeatureError, FeatureSequence};

/// Regression deltas over `+-k_window` frames, replicating edge frames.
///
/// `d[t] = sum_k k (c[t+k] - c[t-k]) / (2 sum_k k^2)`. The method tag moves
/// MFCC -> DMFCC -> DDMFCC; other tags are kept.
pub fn delta(fs: &FeatureSequence, k_window: usize) -> Result<FeatureSequence, FeatureError> {
    if k_window == 0 {
        return Err(FeatureError::ConfigInvalid("delta window must be >= 1".into()));
    }
    if fs.is_empty() {
        return Err(FeatureError::EmptySequence);
    }
    let v = fs.vectors();
    let last = v.len() - 1;
    let norm = 2.0 * (1..=k_window).map(|k| (k * k) as f64).sum::<f64>();
    let out = (0..v.len())
        .map(|t| {
            let mut d = vec![0.0; fs.dim()];
            for k in 1..=k_window {
                let ahead = &v[(t + k).min(last)];
                let behind = &v[t.saturating_sub(k)];
                for ((acc, a), b) in d.iter_mut().zip(ahead).zip(behind) {
                    *acc += k as f64 * (a - b);
                }
            }
            d.iter_mut().for_each(|x| *x /= norm);
            d
        })
        .collect();
    FeatureSequence::new(out, fs.dim(), fs.method().advanced())
}
