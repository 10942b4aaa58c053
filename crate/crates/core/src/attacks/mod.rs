//! Channel attacks: re-sampling, low-pass filtering, amplitude and time scaling.
//!
//! All attacks are deterministic functions of their input.

mod kaiser;
mod resample;

use std::fmt;
use std::str::FromStr;

use crate::audio_io::{AudioClip, PCM16_SCALE};
use crate::error::{Error, Result};

/// One attack with its parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AttackSpec {
    /// Down-sample to the given rate (Hz) and back.
    Resample(u32),
    /// Linear-phase low-pass with the given cutoff (Hz).
    Lowpass(f64),
    /// Multiply by a gain with 16-bit saturation.
    Amplitude(f64),
    /// Stretch duration by a percentage without pitch preservation.
    TimeScale(f64),
}

impl AttackSpec {
    /// Every attack of the evaluation matrix.
    pub fn table_attacks() -> Vec<AttackSpec> {
        let mut out = vec![
            AttackSpec::Resample(22_050),
            AttackSpec::Resample(11_025),
            AttackSpec::Resample(8_000),
            AttackSpec::Lowpass(3_000.0),
        ];
        out.extend([0.5, 0.8, 1.1, 1.2].map(AttackSpec::Amplitude));
        out.extend([-5.0, -2.0, 2.0, 5.0].map(AttackSpec::TimeScale));
        out
    }

    pub fn kind(&self) -> &'static str {
        match self {
            AttackSpec::Resample(_) => "resample",
            AttackSpec::Lowpass(_) => "lowpass",
            AttackSpec::Amplitude(_) => "amp",
            AttackSpec::TimeScale(_) => "timescale",
        }
    }

    pub fn parameter(&self) -> f64 {
        match *self {
            AttackSpec::Resample(r) => r as f64,
            AttackSpec::Lowpass(c) => c,
            AttackSpec::Amplitude(t) => t,
            AttackSpec::TimeScale(p) => p,
        }
    }

    pub fn apply(&self, audio: &AudioClip) -> Result<AudioClip> {
        match *self {
            AttackSpec::Resample(rate) => resample(audio, rate),
            AttackSpec::Lowpass(cutoff) => lowpass(audio, cutoff),
            AttackSpec::Amplitude(tau) => amplitude_scale(audio, tau),
            AttackSpec::TimeScale(percent) => time_scale(audio, percent),
        }
    }
}

impl fmt::Display for AttackSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.kind(), self.parameter())
    }
}

impl FromStr for AttackSpec {
    type Err = Error;

    /// Parses `resample:22050`, `lowpass:3000`, `amp:1.2` or `timescale:-5`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, value) = s
            .split_once(':')
            .ok_or_else(|| Error::Argument(format!("attack `{s}` must look like kind:value")))?;
        let number = |v: &str| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::Argument(format!("attack parameter `{v}` is not a number")))
        };
        let spec = match kind.trim() {
            "resample" => {
                let rate = number(value)?;
                if !(rate >= 1.0 && rate.fract() == 0.0 && rate <= u32::MAX as f64) {
                    return Err(Error::Argument(format!(
                        "re-sampling rate `{value}` must be a positive integer"
                    )));
                }
                AttackSpec::Resample(rate as u32)
            }
            "lowpass" => AttackSpec::Lowpass(number(value)?),
            "amp" | "amplitude" => {
                let tau = number(value)?;
                if !(tau > 0.0 && tau.is_finite()) {
                    return Err(Error::Argument(format!("gain must be positive, got {tau}")));
                }
                AttackSpec::Amplitude(tau)
            }
            "timescale" | "time" => {
                let percent = number(value)?;
                if percent.is_nan() || percent.abs() >= 50.0 {
                    return Err(Error::Argument(format!(
                        "time scaling must be within ±50%, got {percent}"
                    )));
                }
                AttackSpec::TimeScale(percent)
            }
            other => return Err(Error::Argument(format!("unknown attack kind `{other}`"))),
        };
        Ok(spec)
    }
}

/// Converts to `intermediate_rate` and back to the original rate.
pub fn resample(audio: &AudioClip, intermediate_rate: u32) -> Result<AudioClip> {
    let source = audio.sample_rate();
    if intermediate_rate == 0 || intermediate_rate > source {
        return Err(Error::Argument(format!(
            "intermediate rate {intermediate_rate} Hz must be in 1..={source} Hz"
        )));
    }
    if intermediate_rate == source {
        return Ok(audio.clone());
    }
    let ratio = source as f64 / intermediate_rate as f64;
    let x = audio.samples();
    let mid_len = ((x.len() as f64) / ratio).round() as usize;
    let down = resample::interpolate(x, mid_len, ratio);
    let up = resample::interpolate(&down, x.len(), 1.0 / ratio);
    audio.with_samples(up)
}

/// Kaiser-designed linear-phase FIR taps for a low-pass at `cutoff_hz`.
///
/// The transition band spans `[cutoff/2, 3·cutoff/2]` with at least 60 dB of
/// stopband attenuation, so the half-amplitude point sits at the cutoff.
pub fn lowpass_taps(cutoff_hz: f64, sample_rate: u32) -> Result<Vec<f64>> {
    let nyquist = sample_rate as f64 / 2.0;
    if !(cutoff_hz > 0.0 && cutoff_hz < nyquist) {
        return Err(Error::Argument(format!(
            "cutoff {cutoff_hz} Hz must lie strictly between 0 and {nyquist} Hz"
        )));
    }
    const ATTEN_DB: f64 = 65.0;
    let transition = cutoff_hz.min(nyquist - cutoff_hz);
    let delta_omega = std::f64::consts::TAU * transition / sample_rate as f64;
    let order = ((ATTEN_DB - 8.0) / (2.285 * delta_omega)).ceil() as usize;
    let len = order + 1 + (order % 2); // odd length, integer group delay
    let beta = kaiser::beta_for_attenuation(ATTEN_DB);
    let centre = (len / 2) as f64;
    let fc = cutoff_hz / sample_rate as f64;
    let mut taps: Vec<f64> = (0..len)
        .map(|i| {
            let k = i as f64 - centre;
            2.0 * fc * kaiser::sinc(2.0 * fc * k) * kaiser::kaiser(k / centre, beta)
        })
        .collect();
    let dc: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= dc);
    Ok(taps)
}

/// Zero-phase application of the low-pass (group delay removed, edges extended).
pub fn lowpass(audio: &AudioClip, cutoff_hz: f64) -> Result<AudioClip> {
    let taps = lowpass_taps(cutoff_hz, audio.sample_rate())?;
    let x = audio.samples();
    if x.is_empty() {
        return Ok(audio.clone());
    }
    let half = (taps.len() / 2) as isize;
    let last = x.len() as isize - 1;
    let out = (0..x.len() as isize)
        .map(|n| {
            taps.iter()
                .enumerate()
                .map(|(i, t)| t * x[(n + half - i as isize).clamp(0, last) as usize])
                .sum()
        })
        .collect();
    audio.with_samples(out)
}

/// Multiplies by `tau`, rounding to 16-bit PCM with saturation.
pub fn amplitude_scale(audio: &AudioClip, tau: f64) -> Result<AudioClip> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::Argument(format!("gain must be positive, got {tau}")));
    }
    if tau == 1.0 {
        return Ok(audio.clone());
    }
    let out = audio
        .samples()
        .iter()
        .map(|&s| (s * tau * PCM16_SCALE).round().clamp(i16::MIN as f64, i16::MAX as f64) / PCM16_SCALE)
        .collect();
    audio.with_samples(out)
}

/// Changes the duration by `percent` via resampling (pitch shifts with it).
///
/// The output has `round(len · (1 + percent/100))` samples at the input rate.
pub fn time_scale(audio: &AudioClip, percent: f64) -> Result<AudioClip> {
    if percent.is_nan() || percent.abs() >= 50.0 {
        return Err(Error::Argument(format!(
            "time scaling must be within ±50%, got {percent}"
        )));
    }
    if percent == 0.0 {
        return Ok(audio.clone());
    }
    let x = audio.samples();
    let out_len = (x.len() as f64 * (1.0 + percent / 100.0)).round() as usize;
    if out_len == 0 || x.is_empty() {
        return audio.with_samples(Vec::new());
    }
    let step = x.len() as f64 / out_len as f64;
    audio.with_samples(resample::interpolate(x, out_len, step))
}
