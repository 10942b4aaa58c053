//! Mono PCM audio clips, WAV I/O and synthetic test signals.

mod synth;
mod wav;

pub use synth::{bundled_corpus, synth, tone_mix_frequencies, SynthKind, BUNDLED_SECONDS};
pub use wav::{read_wav, read_wav_bytes, write_wav, write_wav_bytes};

use crate::error::{Error, Result};

/// Full-scale value of 16-bit PCM.
pub const PCM16_SCALE: f64 = 32768.0;

/// Mono audio with samples normalized to `[-1, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    samples: Vec<f64>,
    sample_rate: u32,
    source_bit_depth: u16,
}

impl AudioClip {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::Argument("sample rate must be positive".into()));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::Argument("audio samples must be finite".into()));
        }
        Ok(AudioClip {
            samples,
            sample_rate,
            source_bit_depth: 16,
        })
    }

    pub fn from_pcm16(pcm: &[i16], sample_rate: u32) -> Result<Self> {
        Self::new(pcm.iter().map(|&s| s as f64 / PCM16_SCALE).collect(), sample_rate)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn source_bit_depth(&self) -> u16 {
        self.source_bit_depth
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_seconds(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// Same rate and bit depth, new samples.
    pub fn with_samples(&self, samples: Vec<f64>) -> Result<Self> {
        let mut clip = AudioClip::new(samples, self.sample_rate)?;
        clip.source_bit_depth = self.source_bit_depth;
        Ok(clip)
    }

    /// Rounds to the nearest 16-bit PCM value with saturation.
    pub fn to_pcm16(&self) -> Vec<i16> {
        self.samples.iter().map(|&s| to_pcm16_sample(s)).collect()
    }

    /// The clip as it would come back from a 16-bit WAV file.
    pub fn quantized(&self) -> Self {
        let samples = self
            .samples
            .iter()
            .map(|&s| to_pcm16_sample(s) as f64 / PCM16_SCALE)
            .collect();
        AudioClip {
            samples,
            sample_rate: self.sample_rate,
            source_bit_depth: 16,
        }
    }
}

pub(crate) fn to_pcm16_sample(s: f64) -> i16 {
    (s * PCM16_SCALE).round().clamp(i16::MIN as f64, i16::MAX as f64) as i16
}
