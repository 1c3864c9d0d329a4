//! Audio buffers, 16-bit PCM WAV I/O and noisy-mixture synthesis.

use std::path::Path;

use rand::Rng;
use thiserror::Error;

/// Divisor mapping signed 16-bit PCM onto `[-1.0, 1.0]`; `-32768` maps to `-1.0` exactly.
pub const PCM_SCALE: f64 = 32768.0;

/// Sample rate the pipeline assumes when it synthesizes audio.
pub const DEFAULT_SAMPLE_RATE_HZ: u32 = 11025;

#[derive(Debug, Error)]
pub enum SignalError {
    #[error("file not found: {0}")]
    MissingFile(String),
    #[error("unsupported WAV format: {0}")]
    UnsupportedFormat(String),
    #[error("I/O failure: {0}")]
    IoFailure(String),
    #[error("sample rate must be positive")]
    InvalidSampleRate,
    #[error("sample {index} = {value} lies outside [-1, 1]")]
    SampleOutOfRange { index: usize, value: f64 },
    #[error("buffer is empty")]
    EmptyBuffer,
    #[error("sample rates differ: clean {clean} Hz, noise {noise} Hz")]
    RateMismatch { clean: u32, noise: u32 },
    #[error("noise signal has zero RMS")]
    SilentNoise,
    #[error("clean signal has zero RMS")]
    SilentClean,
    #[error("noise has {noise} samples but {needed} are needed")]
    NoiseTooShort { noise: usize, needed: usize },
}

impl SignalError {
    pub fn name(&self) -> &'static str {
        match self {
            Self::MissingFile(_) => "MissingFile",
            Self::UnsupportedFormat(_) => "UnsupportedFormat",
            Self::IoFailure(_) => "IoFailure",
            Self::InvalidSampleRate => "InvalidSampleRate",
            Self::SampleOutOfRange { .. } => "SampleOutOfRange",
            Self::EmptyBuffer => "EmptyBuffer",
            Self::RateMismatch { .. } => "RateMismatch",
            Self::SilentNoise => "SilentNoise",
            Self::SilentClean => "SilentClean",
            Self::NoiseTooShort { .. } => "NoiseTooShort",
        }
    }
}

/// Mono audio with samples normalized to `[-1.0, 1.0]`.
///
/// Buffers built through [`AudioBuffer::new`] are range-checked. The
/// pre-emphasis stage is the one producer allowed to leave the unit range
/// (a first difference can reach magnitude 2), so later stages only rely on
/// samples being finite.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    samples: Vec<f64>,
    sample_rate_hz: u32,
}

impl AudioBuffer {
    pub fn new(samples: Vec<f64>, sample_rate_hz: u32) -> Result<Self, SignalError> {
        if sample_rate_hz == 0 {
            return Err(SignalError::InvalidSampleRate);
        }
        if let Some((index, &value)) = samples
            .iter()
            .enumerate()
            .find(|(_, s)| !(-1.0..=1.0).contains(*s))
        {
            return Err(SignalError::SampleOutOfRange { index, value });
        }
        Ok(Self {
            samples,
            sample_rate_hz,
        })
    }

    /// Builds a buffer from already-processed samples, clamping to `[-1, 1]`.
    pub fn from_clamped(samples: Vec<f64>, sample_rate_hz: u32) -> Result<Self, SignalError> {
        Self::new(
            samples.into_iter().map(|s| s.clamp(-1.0, 1.0)).collect(),
            sample_rate_hz,
        )
    }

    /// Skips the range check. Samples must still be finite.
    pub(crate) fn from_unchecked(samples: Vec<f64>, sample_rate_hz: u32) -> Self {
        debug_assert!(sample_rate_hz > 0);
        debug_assert!(samples.iter().all(|s| s.is_finite()));
        Self {
            samples,
            sample_rate_hz,
        }
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz as f64
    }

    pub fn rms(&self) -> f64 {
        rms(&self.samples)
    }
}

pub fn rms(samples: &[f64]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    (samples.iter().map(|s| s * s).sum::<f64>() / samples.len() as f64).sqrt()
}

/// Reads a mono 16-bit PCM RIFF/WAVE file.
pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioBuffer, SignalError> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(SignalError::MissingFile(path.display().to_string()));
    }
    let reader = hound::WavReader::open(path).map_err(|e| match e {
        hound::Error::IoError(io) => SignalError::IoFailure(io.to_string()),
        other => SignalError::UnsupportedFormat(other.to_string()),
    })?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(SignalError::UnsupportedFormat(format!(
            "{} channels, expected mono",
            spec.channels
        )));
    }
    if spec.sample_format != hound::SampleFormat::Int || spec.bits_per_sample != 16 {
        return Err(SignalError::UnsupportedFormat(format!(
            "{:?} {}-bit, expected 16-bit PCM",
            spec.sample_format, spec.bits_per_sample
        )));
    }
    let samples = reader
        .into_samples::<i16>()
        .map(|s| {
            s.map(|v| v as f64 / PCM_SCALE)
                .map_err(|e| SignalError::UnsupportedFormat(e.to_string()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    AudioBuffer::new(samples, spec.sample_rate)
}

/// Converts one normalized sample to PCM, clamping at the integer limits.
pub fn to_pcm16(sample: f64) -> i16 {
    (sample * PCM_SCALE)
        .round()
        .clamp(i16::MIN as f64, i16::MAX as f64) as i16
}

/// Writes `buf` as mono 16-bit PCM. Samples outside the PCM range are clamped.
pub fn write_wav(path: impl AsRef<Path>, buf: &AudioBuffer) -> Result<(), SignalError> {
    if buf.is_empty() {
        return Err(SignalError::EmptyBuffer);
    }
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: buf.sample_rate_hz,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let io = |e: hound::Error| SignalError::IoFailure(e.to_string());
    let mut writer = hound::WavWriter::create(path.as_ref(), spec).map_err(io)?;
    for &s in &buf.samples {
        writer.write_sample(to_pcm16(s)).map_err(io)?;
    }
    writer.finalize().map_err(io)
}

/// A clean signal with scaled noise added.
#[derive(Debug, Clone)]
pub struct Mixture {
    pub audio: AudioBuffer,
    /// Factor applied to the noise before adding it.
    pub gain: f64,
    /// Number of output samples clamped to `[-1, 1]`.
    pub clipped: usize,
}

/// Noise gain that places `rms(clean) / rms(gain * noise)` at `snr_db`.
pub fn snr_gain(clean_rms: f64, noise_rms: f64, snr_db: f64) -> f64 {
    clean_rms / (noise_rms * 10f64.powf(snr_db / 20.0))
}

/// Adds the leading segment of `noise` to `clean` at the requested SNR.
pub fn mix_at_snr(
    clean: &AudioBuffer,
    noise: &AudioBuffer,
    snr_db: f64,
) -> Result<Mixture, SignalError> {
    mix_at_snr_offset(clean, noise, snr_db, 0)
}

/// Like [`mix_at_snr`], starting from a seeded random offset into the noise.
pub fn mix_at_snr_random<R: Rng>(
    clean: &AudioBuffer,
    noise: &AudioBuffer,
    snr_db: f64,
    rng: &mut R,
) -> Result<Mixture, SignalError> {
    let slack = noise.len().saturating_sub(clean.len());
    let offset = rng.gen_range(0..=slack);
    mix_at_snr_offset(clean, noise, snr_db, offset)
}

pub fn mix_at_snr_offset(
    clean: &AudioBuffer,
    noise: &AudioBuffer,
    snr_db: f64,
    offset: usize,
) -> Result<Mixture, SignalError> {
    if clean.sample_rate_hz != noise.sample_rate_hz {
        return Err(SignalError::RateMismatch {
            clean: clean.sample_rate_hz,
            noise: noise.sample_rate_hz,
        });
    }
    if clean.is_empty() {
        return Err(SignalError::EmptyBuffer);
    }
    let needed = offset + clean.len();
    if noise.len() < needed {
        return Err(SignalError::NoiseTooShort {
            noise: noise.len(),
            needed,
        });
    }
    let segment = &noise.samples[offset..needed];
    let noise_rms = rms(segment);
    if noise_rms == 0.0 {
        return Err(SignalError::SilentNoise);
    }
    let clean_rms = clean.rms();
    if clean_rms == 0.0 {
        return Err(SignalError::SilentClean);
    }
    let gain = snr_gain(clean_rms, noise_rms, snr_db);
    let mut clipped = 0;
    let samples = clean
        .samples
        .iter()
        .zip(segment)
        .map(|(&c, &n)| {
            let y = c + gain * n;
            if !(-1.0..=1.0).contains(&y) {
                clipped += 1;
            }
            y.clamp(-1.0, 1.0)
        })
        .collect();
    Ok(Mixture {
        audio: AudioBuffer::from_unchecked(samples, clean.sample_rate_hz),
        gain,
        clipped,
    })
}

/// Segmental SNR of `estimate` against `reference` in dB.
///
/// Per-frame SNRs are clamped to `[-10, 35]` dB before averaging, the usual
/// convention that keeps silent frames from dominating the mean.
pub fn segmental_snr_db(reference: &[f64], estimate: &[f64], frame_len: usize) -> f64 {
    let n = reference.len().min(estimate.len());
    let frame_len = frame_len.max(1);
    let mut total = 0.0;
    let mut count = 0usize;
    for start in (0..n.saturating_sub(frame_len - 1)).step_by(frame_len) {
        let r = &reference[start..start + frame_len];
        let e = &estimate[start..start + frame_len];
        let signal: f64 = r.iter().map(|x| x * x).sum();
        let error: f64 = r.iter().zip(e).map(|(x, y)| (x - y) * (x - y)).sum();
        let snr = 10.0 * ((signal + 1e-20) / (error + 1e-20)).log10();
        total += snr.clamp(-10.0, 35.0);
        count += 1;
    }
    if count == 0 {
        0.0
    } else {
        total / count as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn buf(samples: Vec<f64>) -> AudioBuffer {
        AudioBuffer::new(samples, 11025).unwrap()
    }

    #[test]
    fn rejects_out_of_range_samples() {
        assert!(matches!(
            AudioBuffer::new(vec![0.0, 1.5], 8000),
            Err(SignalError::SampleOutOfRange { index: 1, .. })
        ));
        assert!(matches!(
            AudioBuffer::new(vec![0.0], 0),
            Err(SignalError::InvalidSampleRate)
        ));
        assert!(AudioBuffer::new(vec![], 8000).unwrap().is_empty());
    }

    #[test]
    fn pcm_clamps_at_integer_max() {
        assert_eq!(to_pcm16(1.0), 32767);
        assert_eq!(to_pcm16(-1.0), -32768);
        assert_eq!(to_pcm16(0.5), 16384);
    }

    #[test]
    fn wav_round_trip_within_one_step() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ramp.wav");
        let ramp: Vec<f64> = (0..100).map(|i| -1.0 + 2.0 * i as f64 / 99.0).collect();
        write_wav(&path, &buf(ramp.clone())).unwrap();
        let back = read_wav(&path).unwrap();
        assert_eq!(back.sample_rate_hz(), 11025);
        let max_err = ramp
            .iter()
            .zip(back.samples())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(max_err <= 1.0 / PCM_SCALE, "max error {max_err}");
    }

    #[test]
    fn reads_pcm_scaling_and_length() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("one_second.wav");
        let spec = hound::WavSpec {
            channels: 1,
            sample_rate: 11025,
            bits_per_sample: 16,
            sample_format: hound::SampleFormat::Int,
        };
        let mut w = hound::WavWriter::create(&path, spec).unwrap();
        w.write_sample(16384i16).unwrap();
        for _ in 1..11025 {
            w.write_sample(0i16).unwrap();
        }
        w.finalize().unwrap();
        let b = read_wav(&path).unwrap();
        assert_eq!(b.len(), 11025);
        assert_eq!(b.samples()[0], 0.5);
        assert!(b.samples()[1..].iter().all(|&s| s == 0.0));
    }

    #[test]
    fn rejects_stereo_and_float() {
        let dir = tempfile::tempdir().unwrap();
        let stereo = dir.path().join("stereo.wav");
        let spec = hound::WavSpec {
            channels: 2,
            sample_rate: 8000,
            bits_per_sample: 16,
            sample_format: hound::SampleFormat::Int,
        };
        let mut w = hound::WavWriter::create(&stereo, spec).unwrap();
        w.write_sample(0i16).unwrap();
        w.write_sample(0i16).unwrap();
        w.finalize().unwrap();
        assert!(matches!(
            read_wav(&stereo),
            Err(SignalError::UnsupportedFormat(_))
        ));

        let float = dir.path().join("float.wav");
        let spec = hound::WavSpec {
            channels: 1,
            sample_rate: 8000,
            bits_per_sample: 32,
            sample_format: hound::SampleFormat::Float,
        };
        let mut w = hound::WavWriter::create(&float, spec).unwrap();
        w.write_sample(0.25f32).unwrap();
        w.finalize().unwrap();
        assert!(matches!(
            read_wav(&float),
            Err(SignalError::UnsupportedFormat(_))
        ));
        assert!(matches!(
            read_wav(dir.path().join("absent.wav")),
            Err(SignalError::MissingFile(_))
        ));
    }

    #[test]
    fn write_empty_buffer_fails() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            write_wav(dir.path().join("e.wav"), &buf(vec![])),
            Err(SignalError::EmptyBuffer)
        ));
    }

    #[test]
    fn snr_gain_cases() {
        assert!((snr_gain(0.1, 0.1, 0.0) - 1.0).abs() < 1e-15);
        assert!((snr_gain(0.1, 0.1, 20.0) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn mix_errors() {
        let clean = buf(vec![0.1; 10]);
        let silent = buf(vec![0.0; 10]);
        assert!(matches!(
            mix_at_snr(&clean, &silent, 0.0),
            Err(SignalError::SilentNoise)
        ));
        let short = buf(vec![0.1; 5]);
        assert!(matches!(
            mix_at_snr(&clean, &short, 0.0),
            Err(SignalError::NoiseTooShort { .. })
        ));
        let other_rate = AudioBuffer::new(vec![0.1; 10], 8000).unwrap();
        assert!(matches!(
            mix_at_snr(&clean, &other_rate, 0.0),
            Err(SignalError::RateMismatch { .. })
        ));
    }

    #[test]
    fn high_snr_mix_approaches_clean() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let clean = buf((0..2000).map(|i| 0.3 * (i as f64 * 0.05).sin()).collect());
        let noise = buf((0..2000).map(|_| rng.gen_range(-0.5..0.5)).collect());
        let mix = mix_at_snr(&clean, &noise, 120.0).unwrap();
        let diff: Vec<f64> = mix
            .audio
            .samples()
            .iter()
            .zip(clean.samples())
            .map(|(a, b)| a - b)
            .collect();
        assert!(rms(&diff) < 1e-5);
    }

    #[test]
    fn random_offset_is_seeded() {
        let clean = buf(vec![0.1; 100]);
        let noise = buf((0..1000).map(|i| ((i % 7) as f64 - 3.0) / 10.0).collect());
        let a = mix_at_snr_random(&clean, &noise, 5.0, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = mix_at_snr_random(&clean, &noise, 5.0, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a.audio, b.audio);
    }

    proptest::proptest! {
        #[test]
        fn mixed_snr_matches_target(
            seed in 0u64..1000,
            snr_db in -5.0f64..30.0,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let clean: Vec<f64> = (0..512).map(|_| rng.gen_range(-0.05..0.05)).collect();
            let noise: Vec<f64> = (0..600).map(|_| rng.gen_range(-0.05..0.05)).collect();
            let clean = buf(clean);
            let noise = buf(noise);
            let mix = mix_at_snr(&clean, &noise, snr_db).unwrap();
            proptest::prop_assume!(mix.clipped == 0);
            let scaled: Vec<f64> = noise.samples()[..512].iter().map(|n| mix.gain * n).collect();
            let measured = 20.0 * (clean.rms() / rms(&scaled)).log10();
            proptest::prop_assert!((measured - snr_db).abs() < 0.01);
            let residual: Vec<f64> = mix.audio.samples().iter().zip(clean.samples()).map(|(m, c)| m - c).collect();
            let realized = 20.0 * (clean.rms() / rms(&residual)).log10();
            proptest::prop_assert!((realized - snr_db).abs() < 0.01);
        }
    }
}
