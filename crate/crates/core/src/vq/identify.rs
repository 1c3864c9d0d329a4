use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::groups::encode;
use super::{quantize, Codebook, VqError};
use crate::dhmm::SpeakerModel;
use crate::features::FeatureSequence;

/// Which speakers are scored for a probe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchMode {
    /// Only speakers owning an utterance in the probe's encoded group.
    Grouped,
    /// Every enrolled speaker.
    Exhaustive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Identification {
    pub speaker_id: String,
    /// Encoded group; `None` in exhaustive mode.
    pub group: Option<usize>,
    /// Log-likelihood per scored speaker, in speaker id order.
    pub scores: Vec<(String, f64)>,
}

/// Closed-set decision: the candidate whose HMM gives the probe's symbol
/// stream the highest forward log-likelihood. Ties go to the lowest id.
///
/// `groups` routes the probe to a group; `symbols` turns its frames into the
/// discrete observations the models were trained on.
pub fn identify(
    probe: &FeatureSequence,
    groups: &Codebook,
    symbols: &Codebook,
    models: &BTreeMap<String, SpeakerModel>,
    mode: SearchMode,
) -> Result<Identification, crate::Error> {
    if models.is_empty() {
        return Err(VqError::EmptyModelSet.into());
    }
    let (group, candidates): (Option<usize>, Vec<&str>) = match mode {
        SearchMode::Exhaustive => (None, models.keys().map(String::as_str).collect()),
        SearchMode::Grouped => {
            let g = encode(probe, groups)?;
            let owners = groups.speakers_in_group(g);
            if owners.is_empty() {
                (Some(g), models.keys().map(String::as_str).collect())
            } else {
                (Some(g), owners)
            }
        }
    };
    let observed = quantize(probe, symbols)?.symbols;
    let mut scores = Vec::with_capacity(candidates.len());
    let mut best: Option<(usize, f64)> = None;
    for (i, id) in candidates.iter().enumerate() {
        let model = models
            .get(*id)
            .ok_or_else(|| VqError::UnknownSpeaker(id.to_string()))?;
        let ll = model.forward_log_likelihood(&observed)?;
        if best.is_none_or(|(_, b)| ll > b) {
            best = Some((i, ll));
        }
        scores.push((id.to_string(), ll));
    }
    let (winner, _) = best.expect("at least one candidate");
    Ok(Identification {
        speaker_id: candidates[winner].to_string(),
        group,
        scores,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dhmm::{baum_welch, HmmConfig};
    use crate::features::Method;
    use crate::vq::MemberMeta;

    fn seq(frames: Vec<Vec<f64>>) -> FeatureSequence {
        FeatureSequence::new(frames, 2, Method::Mfcc).unwrap()
    }

    /// Two speakers living in different corners of a 4-codeword space.
    fn fixture() -> (Codebook, Codebook, BTreeMap<String, SpeakerModel>, Vec<FeatureSequence>) {
        let symbols = Codebook::flat(vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![5.0, 5.0], vec![5.0, 6.0]]).unwrap();
        let a = seq(vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![0.0, 0.1], vec![0.0, 0.9]]);
        let b = seq(vec![vec![5.0, 5.0], vec![5.0, 6.0], vec![5.0, 5.2], vec![5.0, 5.8]]);
        let cfg = HmmConfig {
            n_states: 2,
            ..HmmConfig::default()
        };
        let mut models = BTreeMap::new();
        for (id, s) in [("a", &a), ("b", &b)] {
            let q = quantize(s, &symbols).unwrap().symbols;
            models.insert(id.to_string(), baum_welch(&[q], symbols.len(), &cfg).unwrap());
        }
        let groups = Codebook::new(
            vec![a.mean().unwrap(), b.mean().unwrap()],
            vec![vec![0], vec![1]],
            vec![0, 1],
            vec![
                MemberMeta { speaker_id: "a".into(), utterance_id: "a1".into() },
                MemberMeta { speaker_id: "b".into(), utterance_id: "b1".into() },
            ],
        )
        .unwrap();
        (groups, symbols, models, vec![a, b])
    }

    #[test]
    fn self_match_in_both_modes() {
        let (groups, symbols, models, probes) = fixture();
        for (probe, id) in probes.iter().zip(["a", "b"]) {
            for mode in [SearchMode::Exhaustive, SearchMode::Grouped] {
                let r = identify(probe, &groups, &symbols, &models, mode).unwrap();
                assert_eq!(r.speaker_id, id);
            }
        }
        let grouped = identify(&probes[1], &groups, &symbols, &models, SearchMode::Grouped).unwrap();
        assert_eq!(grouped.group, Some(1));
        assert_eq!(grouped.scores.len(), 1);
    }

    #[test]
    fn single_group_matches_exhaustive() {
        let (_, symbols, models, probes) = fixture();
        let flat = Codebook::new(
            vec![vec![0.0, 0.5], vec![5.0, 5.5]],
            vec![vec![0, 1]],
            vec![0],
            vec![
                MemberMeta { speaker_id: "a".into(), utterance_id: "a1".into() },
                MemberMeta { speaker_id: "b".into(), utterance_id: "b1".into() },
            ],
        )
        .unwrap();
        for p in &probes {
            let g = identify(p, &flat, &symbols, &models, SearchMode::Grouped).unwrap();
            let e = identify(p, &flat, &symbols, &models, SearchMode::Exhaustive).unwrap();
            assert_eq!(g.speaker_id, e.speaker_id);
            assert_eq!(g.scores, e.scores);
        }
    }

    #[test]
    fn ties_go_to_lowest_id() {
        let (groups, symbols, models, probes) = fixture();
        let same: BTreeMap<String, SpeakerModel> = ["z", "m", "c"]
            .iter()
            .map(|id| (id.to_string(), models["a"].clone()))
            .collect();
        let r = identify(&probes[0], &groups, &symbols, &same, SearchMode::Exhaustive).unwrap();
        assert_eq!(r.speaker_id, "c");
    }

    #[test]
    fn errors() {
        let (groups, symbols, models, probes) = fixture();
        let none = BTreeMap::new();
        let e = identify(&probes[0], &groups, &symbols, &none, SearchMode::Exhaustive).unwrap_err();
        assert_eq!(e.name(), "vq::EmptyModelSet");
        let mut partial = models.clone();
        partial.remove("b");
        let e = identify(&probes[1], &groups, &symbols, &partial, SearchMode::Grouped).unwrap_err();
        assert_eq!(e.name(), "vq::UnknownSpeaker");
        let wrong = FeatureSequence::new(vec![vec![1.0, 2.0, 3.0]], 3, Method::Mfcc).unwrap();
        let e = identify(&wrong, &groups, &symbols, &models, SearchMode::Exhaustive).unwrap_err();
        assert_eq!(e.name(), "vq::DimMismatch");
    }
}
