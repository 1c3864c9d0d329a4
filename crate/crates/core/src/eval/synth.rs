use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::manifest::{CorpusManifest, ManifestEntry, NoiseFile, Split};
use super::EvalError;
use crate::config::stage_seed;
use crate::signal_io::{write_wav, AudioBuffer, DEFAULT_SAMPLE_RATE_HZ};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Shape of a generated corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub speakers: usize,
    pub enroll_per_speaker: usize,
    pub test_per_speaker: usize,
    pub seed: u64,
    pub snr_levels_db: Vec<f64>,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            speakers: 5,
            enroll_per_speaker: 3,
            test_per_speaker: 2,
            seed: 0,
            snr_levels_db: vec![15.0, 10.0, 5.0, 0.0],
        }
    }
}

const LEAD_SECS: f64 = 0.25;
const VOICED_SECS: f64 = 1.0;
const NOISE_SECS: f64 = 8.0;

/// Voiced sound of speaker `s`: a harmonic series shaped by three resonances
/// whose centres move with the speaker index, framed by near-silence.
fn utterance(s: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let sr = DEFAULT_SAMPLE_RATE_HZ as f64;
    let sf = s as f64;
    let f0 = (95.0 + 23.0 * sf) * (1.0 + rng.gen_range(-0.02..0.02));
    let formants = [
        (300.0 + 110.0 * sf, 90.0),
        (1100.0 + 260.0 * sf, 130.0),
        (2400.0 + 170.0 * sf, 180.0),
    ];
    let envelope = |f: f64| -> f64 {
        formants
            .iter()
            .map(|(fc, bw)| (-0.5 * ((f - fc) / bw).powi(2)).exp())
            .sum::<f64>()
            + 0.01
    };
    let harmonics: Vec<(f64, f64, f64)> = (1..)
        .map(|h| h as f64 * f0)
        .take_while(|&f| f < 0.45 * sr)
        .map(|f| (f, envelope(f), rng.gen_range(0.0..2.0 * PI)))
        .collect();

    let lead = (LEAD_SECS * sr) as usize;
    let voiced = (VOICED_SECS * sr) as usize;
    let fade = (0.02 * sr) as usize;
    let mut out = vec![0.0; lead];
    for t in 0..voiced {
        let time = t as f64 / sr;
        let x: f64 = harmonics.iter().map(|(f, a, p)| a * (2.0 * PI * f * time + p).sin()).sum();
        let ramp = (t.min(voiced - 1 - t) as f64 / fade as f64).min(1.0);
        out.push(x * ramp);
    }
    out.extend(std::iter::repeat_n(0.0, lead));
    let peak = out.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let background = Normal::new(0.0, 10f64.powf(-50.0 / 20.0) * 0.5).unwrap();
    out.iter().map(|x| 0.5 * x / peak + background.sample(rng)).collect()
}

/// Stationary noise at RMS 0.1; `lowpass` selects a one-pole filtered
/// version of white Gaussian noise.
fn noise(lowpass: bool, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = (NOISE_SECS * DEFAULT_SAMPLE_RATE_HZ as f64) as usize;
    let g = Normal::new(0.0, 1.0).unwrap();
    let mut state = 0.0;
    let raw: Vec<f64> = (0..n)
        .map(|_| {
            let w = g.sample(rng);
            if lowpass {
                state = 0.9 * state + w;
                state
            } else {
                w
            }
        })
        .collect();
    let rms = (raw.iter().map(|x| x * x).sum::<f64>() / n as f64).sqrt();
    raw.iter().map(|x| (0.1 * x / rms).clamp(-1.0, 1.0)).collect()
}

/// Writes a separable corpus of synthetic speakers plus two noise files
/// (`white`, `lowpass`) under `out`, and returns the manifest path.
pub fn make_synthetic_corpus(out: impl AsRef<Path>, spec: &SynthSpec) -> Result<PathBuf, crate::Error> {
    if spec.speakers == 0 || spec.enroll_per_speaker == 0 || spec.test_per_speaker == 0 {
        return Err(EvalError::ManifestInvalid("a synthetic corpus needs speakers with enroll and test utterances".into()).into());
    }
    let out = out.as_ref();
    let wav_dir = out.join("wav");
    std::fs::create_dir_all(&wav_dir).map_err(|e| EvalError::Io(e.to_string()))?;
    let sr = DEFAULT_SAMPLE_RATE_HZ;
    let mut entries = Vec::new();
    for s in 0..spec.speakers {
        let speaker_id = format!("spk{s:02}");
        let mut rng = ChaCha8Rng::seed_from_u64(stage_seed(spec.seed, &format!("synth/{speaker_id}")));
        let splits = std::iter::repeat_n(Split::Enroll, spec.enroll_per_speaker)
            .chain(std::iter::repeat_n(Split::Test, spec.test_per_speaker));
        for (i, split) in splits.enumerate() {
            let utterance_id = format!("{speaker_id}_{i}");
            let rel = PathBuf::from("wav").join(format!("{utterance_id}.wav"));
            write_wav(out.join(&rel), &AudioBuffer::from_clamped(utterance(s, &mut rng), sr)?)?;
            entries.push(ManifestEntry {
                speaker_id: speaker_id.clone(),
                utterance_id,
                wav_path: rel,
                split,
            });
        }
    }
    let mut noise_files = Vec::new();
    for (name, lowpass) in [("white", false), ("lowpass", true)] {
        let mut rng = ChaCha8Rng::seed_from_u64(stage_seed(spec.seed, &format!("synth/noise/{name}")));
        let rel = PathBuf::from("wav").join(format!("noise_{name}.wav"));
        write_wav(out.join(&rel), &AudioBuffer::from_clamped(noise(lowpass, &mut rng), sr)?)?;
        noise_files.push(NoiseFile {
            noise_name: name.to_string(),
            wav_path: rel,
        });
    }
    let manifest = CorpusManifest {
        entries,
        noise_files,
        snr_levels_db: spec.snr_levels_db.clone(),
    };
    let path = out.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    std::fs::write(&path, text).map_err(|e| EvalError::Io(e.to_string()))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn writes_a_valid_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let spec = SynthSpec {
            speakers: 2,
            ..SynthSpec::default()
        };
        let path = make_synthetic_corpus(dir.path(), &spec).unwrap();
        let m = CorpusManifest::load(&path).unwrap();
        m.validate().unwrap();
        assert_eq!(m.entries.len(), 10);
        assert_eq!(m.noise_files.len(), 2);
        assert!(m.entries.iter().all(|e| e.wav_path.exists()));
    }

    #[test]
    fn generation_is_deterministic() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let spec = SynthSpec {
            speakers: 1,
            ..SynthSpec::default()
        };
        make_synthetic_corpus(a.path(), &spec).unwrap();
        make_synthetic_corpus(b.path(), &spec).unwrap();
        for f in ["wav/spk00_0.wav", "wav/noise_white.wav", "manifest.json"] {
            assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap());
        }
    }
}
