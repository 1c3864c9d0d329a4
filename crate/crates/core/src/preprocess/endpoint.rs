use serde::{Deserialize, Serialize};

use super::{short_term_log_energy, PreprocessError};
use crate::signal_io::AudioBuffer;

/// Energy-threshold endpoint detector settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndpointConfig {
    /// Upper bound on the estimated noise floor, in frame log-energy dB.
    /// When the quietest frames are louder than this the signal is taken to
    /// be speech throughout rather than a loud noise floor.
    pub energy_floor_db: f64,
    /// A frame is a speech candidate above `floor + threshold_offset_db`.
    pub threshold_offset_db: f64,
    pub min_speech_frames: usize,
    pub min_silence_frames: usize,
}

impl Default for EndpointConfig {
    fn default() -> Self {
        Self {
            energy_floor_db: -30.0,
            threshold_offset_db: 10.0,
            min_speech_frames: 5,
            min_silence_frames: 10,
        }
    }
}

impl EndpointConfig {
    pub fn validate(&self) -> Result<(), PreprocessError> {
        if self.min_speech_frames < 1 || self.min_silence_frames < 1 {
            return Err(PreprocessError::ConfigInvalid(
                "endpoint min_speech_frames and min_silence_frames must be >= 1".into(),
            ));
        }
        if !(self.threshold_offset_db > 0.0) {
            return Err(PreprocessError::ConfigInvalid(
                "endpoint threshold_offset_db must be > 0".into(),
            ));
        }
        Ok(())
    }
}

/// Half-open sample range `[start, end)` of detected speech.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub start: usize,
    pub end: usize,
}

impl Segment {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }
}

/// Log energy of every frame `[i * hop, i * hop + frame_len)`.
pub fn frame_energies(samples: &[f64], frame_len: usize, hop: usize) -> Vec<f64> {
    if frame_len == 0 || hop == 0 || samples.len() < frame_len {
        return Vec::new();
    }
    let count = (samples.len() - frame_len) / hop + 1;
    (0..count)
        .map(|i| short_term_log_energy(&samples[i * hop..i * hop + frame_len]).expect("non-empty frame"))
        .collect()
}

/// Median of the quietest 10% of frame energies (at least one frame).
fn noise_floor(energies: &[f64]) -> f64 {
    let mut sorted = energies.to_vec();
    sorted.sort_by(f64::total_cmp);
    let take = energies.len().div_ceil(10).max(1);
    let low = &sorted[..take];
    if take % 2 == 1 {
        low[take / 2]
    } else {
        0.5 * (low[take / 2 - 1] + low[take / 2])
    }
}

/// Runs of `true` as inclusive `(first, last)` index pairs.
fn runs(flags: &[bool]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, &f) in flags.iter().enumerate() {
        match (f, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                out.push((s, i - 1));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s, flags.len() - 1));
    }
    out
}

/// Finds speech segments by thresholding frame log energy against an estimated noise floor.
///
/// Candidate runs shorter than `min_speech_frames` are dropped, then gaps
/// shorter than `min_silence_frames` are bridged. A run reaching the last
/// frame extends to the end of the buffer.
pub fn detect_endpoints(
    buf: &AudioBuffer,
    frame_len: usize,
    hop: usize,
    cfg: &EndpointConfig,
) -> Result<Vec<Segment>, PreprocessError> {
    cfg.validate()?;
    if frame_len == 0 || hop == 0 || hop > frame_len {
        return Err(PreprocessError::ConfigInvalid(format!(
            "need 0 < hop <= frame_len, got hop {hop}, frame_len {frame_len}"
        )));
    }
    if buf.len() <= frame_len {
        return Err(PreprocessError::TooShort {
            len: buf.len(),
            needed: frame_len + 1,
        });
    }
    let energies = frame_energies(buf.samples(), frame_len, hop);
    let floor = noise_floor(&energies).min(cfg.energy_floor_db);
    let threshold = floor + cfg.threshold_offset_db;
    let candidates: Vec<bool> = energies.iter().map(|&e| e > threshold).collect();

    let speech: Vec<(usize, usize)> = runs(&candidates)
        .into_iter()
        .filter(|(a, b)| b - a + 1 >= cfg.min_speech_frames)
        .collect();
    let mut bridged: Vec<(usize, usize)> = Vec::with_capacity(speech.len());
    for (a, b) in speech {
        match bridged.last_mut() {
            Some(last) if a - last.1 - 1 < cfg.min_silence_frames => last.1 = b,
            _ => bridged.push((a, b)),
        }
    }
    if bridged.is_empty() {
        return Err(PreprocessError::NoSpeech);
    }

    let last_frame = energies.len() - 1;
    let mut segments: Vec<Segment> = Vec::with_capacity(bridged.len());
    for (a, b) in bridged {
        let start = a * hop;
        let end = if b == last_frame {
            buf.len()
        } else {
            b * hop + frame_len
        };
        match segments.last_mut() {
            Some(prev) if start <= prev.end => prev.end = prev.end.max(end),
            _ => segments.push(Segment { start, end }),
        }
    }
    Ok(segments)
}

/// Concatenates the speech segments in order.
pub fn remove_silence(buf: &AudioBuffer, segments: &[Segment]) -> Result<AudioBuffer, PreprocessError> {
    if segments.is_empty() {
        return Err(PreprocessError::EmptySegments);
    }
    let len = buf.len();
    let mut out = Vec::with_capacity(segments.iter().map(|s| s.end.saturating_sub(s.start)).sum());
    for s in segments {
        if s.start >= s.end || s.end > len {
            return Err(PreprocessError::InvalidSegment {
                start: s.start,
                end: s.end,
                len,
            });
        }
        out.extend_from_slice(&buf.samples()[s.start..s.end]);
    }
    Ok(AudioBuffer::from_unchecked(out, buf.sample_rate_hz()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    const SR: u32 = 11025;

    fn quiet(len: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        // -60 dB RMS background
        (0..len).map(|_| 1e-3 * 3f64.sqrt() * rng.gen_range(-1.0..1.0)).collect()
    }

    fn tone(len: usize, amp: f64) -> Vec<f64> {
        (0..len)
            .map(|t| amp * (2.0 * PI * 523.0 * t as f64 / SR as f64).sin())
            .collect()
    }

    #[test]
    fn single_tone_boundaries_within_one_frame() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let lead = (0.2 * SR as f64) as usize;
        let body = (0.5 * SR as f64) as usize;
        let mut x = quiet(lead, &mut rng);
        // -10 dB RMS
        x.extend(tone(body, 10f64.powf(-0.5) * 2f64.sqrt()));
        x.extend(quiet(lead, &mut rng));
        let b = AudioBuffer::new(x, SR).unwrap();
        let segs = detect_endpoints(&b, 256, 128, &EndpointConfig::default()).unwrap();
        assert_eq!(segs.len(), 1);
        assert!((segs[0].start as i64 - lead as i64).abs() <= 256);
        assert!((segs[0].end as i64 - (lead + body) as i64).abs() <= 256);
    }

    #[test]
    fn quiet_noise_is_no_speech() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let b = AudioBuffer::new(quiet(SR as usize, &mut rng), SR).unwrap();
        assert_eq!(
            detect_endpoints(&b, 256, 128, &EndpointConfig::default()),
            Err(PreprocessError::NoSpeech)
        );
    }

    #[test]
    fn full_scale_tone_is_one_segment() {
        let b = AudioBuffer::new(tone(5000, 1.0), SR).unwrap();
        let segs = detect_endpoints(&b, 256, 128, &EndpointConfig::default()).unwrap();
        assert_eq!(segs, vec![Segment { start: 0, end: 5000 }]);
    }

    #[test]
    fn too_short_buffer() {
        let b = AudioBuffer::new(vec![0.0; 256], SR).unwrap();
        assert!(matches!(
            detect_endpoints(&b, 256, 128, &EndpointConfig::default()),
            Err(PreprocessError::TooShort { .. })
        ));
    }

    #[test]
    fn silence_removal() {
        let b = AudioBuffer::new((0..300).map(|i| i as f64 / 300.0).collect(), SR).unwrap();
        assert_eq!(remove_silence(&b, &[Segment { start: 0, end: 300 }]).unwrap(), b);
        let out = remove_silence(
            &b,
            &[Segment { start: 10, end: 110 }, Segment { start: 200, end: 250 }],
        )
        .unwrap();
        assert_eq!(out.len(), 150);
        assert_eq!(out.samples()[100], b.samples()[200]);
        assert_eq!(remove_silence(&b, &[]), Err(PreprocessError::EmptySegments));
        assert!(matches!(
            remove_silence(&b, &[Segment { start: 250, end: 400 }]),
            Err(PreprocessError::InvalidSegment { .. })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn segments_are_disjoint_ascending_in_bounds(
            seed in 0u64..10_000,
            pieces in proptest::collection::vec((any::<bool>(), 200usize..4000), 1..8),
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut x = Vec::new();
            for (loud, len) in pieces {
                if loud { x.extend(tone(len, 0.4)) } else { x.extend(quiet(len, &mut rng)) }
            }
            prop_assume!(x.len() > 256);
            let b = AudioBuffer::new(x, SR).unwrap();
            if let Ok(segs) = detect_endpoints(&b, 256, 128, &EndpointConfig::default()) {
                for s in &segs {
                    prop_assert!(s.start < s.end && s.end <= b.len());
                }
                for w in segs.windows(2) {
                    prop_assert!(w[0].end < w[1].start);
                }
            }
        }
    }
}
