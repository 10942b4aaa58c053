//! Deterministic synthetic clips standing in for music recordings.
//!
//! Every generator puts most of its energy below a few hundred hertz so the
//! coarse wavelet band carries realistic amplitudes, and keeps peaks below
//! 0.75 of full scale so moderate gain changes do not saturate.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::AudioClip;
use crate::error::{Error, Result};

/// Length of the bundled clips.
pub const BUNDLED_SECONDS: f64 = 11.6;

const RATE: u32 = 44_100;
const PEAK: f64 = 0.75;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SynthKind {
    /// Bass and mid-range partials with slow tremolo.
    ToneMix,
    /// Low-passed noise over a faint broadband floor.
    FilteredNoise,
    /// Repeating logarithmic sweeps over a bass drone.
    Chirp,
}

impl SynthKind {
    pub fn name(self) -> &'static str {
        match self {
            SynthKind::ToneMix => "tone_mix",
            SynthKind::FilteredNoise => "filtered_noise",
            SynthKind::Chirp => "chirp",
        }
    }
}

impl fmt::Display for SynthKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SynthKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tone_mix" => Ok(SynthKind::ToneMix),
            "filtered_noise" => Ok(SynthKind::FilteredNoise),
            "chirp" => Ok(SynthKind::Chirp),
            other => Err(Error::Argument(format!(
                "unknown synth kind `{other}` (expected tone_mix, filtered_noise or chirp)"
            ))),
        }
    }
}

/// Partials (Hz) that `tone_mix` uses for `seed`.
pub fn tone_mix_frequencies(seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let root = rng.random_range(55.0..98.0);
    vec![
        root,
        root * 1.5,
        rng.random_range(180.0..260.0),
        rng.random_range(400.0..700.0),
        rng.random_range(900.0..1500.0),
    ]
}

const TONE_LEVELS: [f64; 5] = [0.40, 0.25, 0.15, 0.10, 0.06];

fn tone_mix(n: usize, seed: u64) -> Vec<f64> {
    let freqs = tone_mix_frequencies(seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9E37_79B9_7F4A_7C15);
    let phases: Vec<f64> = freqs.iter().map(|_| rng.random_range(0.0..TAU)).collect();
    let rates: Vec<f64> = freqs.iter().map(|_| rng.random_range(0.1..0.6)).collect();
    (0..n)
        .map(|i| {
            let t = i as f64 / RATE as f64;
            freqs
                .iter()
                .zip(TONE_LEVELS)
                .zip(phases.iter().zip(&rates))
                .map(|((f, level), (phase, rate))| {
                    let tremolo = 1.0 + 0.3 * (TAU * rate * t + phase).sin();
                    level * tremolo * (TAU * f * t + phase).sin()
                })
                .sum()
        })
        .collect()
}

fn one_pole(signal: &mut [f64], cutoff_hz: f64) {
    let alpha = 1.0 - (-TAU * cutoff_hz / RATE as f64).exp();
    let mut state = 0.0;
    for s in signal.iter_mut() {
        state += alpha * (*s - state);
        *s = state;
    }
}

fn filtered_noise(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let white: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut low = white.clone();
    for _ in 0..3 {
        one_pole(&mut low, 120.0);
    }
    let low_rms = rms(&low).max(f64::MIN_POSITIVE);
    low.iter().zip(&white).map(|(l, w)| l / low_rms + 0.05 * w).collect()
}

fn chirp(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sweep = rng.random_range(1.3..1.6);
    let (f_lo, f_hi) = (40.0f64, 2000.0f64);
    let drone = rng.random_range(60.0..80.0);
    let k = (f_hi / f_lo).ln() / sweep;
    (0..n)
        .map(|i| {
            let t = i as f64 / RATE as f64;
            let local = t % sweep;
            // phase of an exponential sweep f(t) = f_lo e^{k t}
            let phase = TAU * f_lo * ((k * local).exp() - 1.0) / k;
            0.35 * phase.sin() + 0.3 * (TAU * drone * t).sin()
        })
        .collect()
}

fn rms(x: &[f64]) -> f64 {
    (x.iter().map(|v| v * v).sum::<f64>() / x.len().max(1) as f64).sqrt()
}

/// Generates `seconds` of 44.1 kHz audio, deterministic in `seed`.
pub fn synth(kind: SynthKind, seconds: f64, seed: u64) -> Result<AudioClip> {
    if !(seconds.is_finite() && seconds > 0.0) {
        return Err(Error::Argument(format!("duration must be positive, got {seconds}")));
    }
    let n = (seconds * RATE as f64).round() as usize;
    let mut samples = match kind {
        SynthKind::ToneMix => tone_mix(n, seed),
        SynthKind::FilteredNoise => filtered_noise(n, seed),
        SynthKind::Chirp => chirp(n, seed),
    };
    let peak = samples.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    if peak > 0.0 {
        let gain = PEAK / peak;
        samples.iter_mut().for_each(|s| *s *= gain);
    }
    Ok(AudioClip::new(samples, RATE)?.quantized())
}

/// The four clips used by the evaluation harness and acceptance tests.
pub fn bundled_corpus() -> Vec<(String, AudioClip)> {
    [
        ("tones", SynthKind::ToneMix, 1),
        ("noise", SynthKind::FilteredNoise, 2),
        ("chirp", SynthKind::Chirp, 3),
        ("tones_b", SynthKind::ToneMix, 4),
    ]
    .into_iter()
    .map(|(name, kind, seed)| {
        let clip = synth(kind, BUNDLED_SECONDS, seed).expect("bundled clip parameters are valid");
        (name.to_string(), clip)
    })
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clip_length_and_determinism() {
        let a = synth(SynthKind::ToneMix, BUNDLED_SECONDS, 9).unwrap();
        assert_eq!(a.len(), 511_560);
        assert_eq!(a, synth(SynthKind::ToneMix, BUNDLED_SECONDS, 9).unwrap());
        assert_ne!(a, synth(SynthKind::ToneMix, BUNDLED_SECONDS, 10).unwrap());
    }

    #[test]
    fn kinds_parse_and_stay_below_full_scale() {
        for kind in [SynthKind::ToneMix, SynthKind::FilteredNoise, SynthKind::Chirp] {
            assert_eq!(kind.name().parse::<SynthKind>().unwrap(), kind);
            let clip = synth(kind, 0.5, 1).unwrap();
            let peak = clip.samples().iter().fold(0.0f64, |m, s| m.max(s.abs()));
            assert!(peak <= PEAK + 1e-4 && peak > 0.5, "{kind}: {peak}");
        }
        assert!(synth(SynthKind::Chirp, 0.0, 1).is_err());
    }
}
