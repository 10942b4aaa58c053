//! The embedding key and its text file format.
//!
//! A key file is UTF-8 text with one `field = value` pair per line. Blank
//! lines and lines starting with `#` are ignored. Fields (all optional, the
//! defaults are shown):
//!
//! ```text
//! version = 1
//! quant_step = 26000          # Q, in raw PCM16 coefficient-sum units
//! group_size = 4              # N
//! scaling_budget = 4          # M, defaults to N
//! wavelet = db8               # haar | db4 | db8
//! levels = 7
//! pn_seed = 24301             # decimal or 0x-prefixed hex
//! scaling_mode = optimal      # optimal | fixed_ones
//! segments = 4
//! sync_length = 16            # leading bits of 0xB7C5
//! sync_max_errors = 2
//! ```

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::audio_io::PCM16_SCALE;
use crate::error::{Error, Result};
use crate::quantizer::GroupParams;
use crate::wavelet::{WaveletFamily, WaveletFilter};

pub const KEY_FORMAT_VERSION: u32 = 1;

/// Weight selection used at embedding time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub enum ScalingMode {
    /// Optimal weights per group, uniform-weight projection when none exist.
    #[default]
    Optimal,
    /// Uniform weights with projection for every group.
    FixedOnes,
}

impl ScalingMode {
    pub fn name(self) -> &'static str {
        match self {
            ScalingMode::Optimal => "optimal",
            ScalingMode::FixedOnes => "fixed_ones",
        }
    }
}

impl fmt::Display for ScalingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScalingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "optimal" => Ok(ScalingMode::Optimal),
            "fixed_ones" | "fixed" => Ok(ScalingMode::FixedOnes),
            other => Err(Error::Config(format!(
                "unknown scaling mode `{other}` (expected optimal or fixed_ones)"
            ))),
        }
    }
}

/// Secret embedding parameters shared by embedder and extractor.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbedKey {
    pub quant_step: f64,
    pub group_size: usize,
    pub scaling_budget: f64,
    pub wavelet: WaveletFamily,
    pub levels: usize,
    pub pn_seed: u64,
    pub scaling_mode: ScalingMode,
    pub segment_count: usize,
    pub sync_length: usize,
    pub sync_max_errors: usize,
}

impl Default for EmbedKey {
    fn default() -> Self {
        EmbedKey {
            quant_step: 26_000.0,
            group_size: 4,
            scaling_budget: 4.0,
            wavelet: WaveletFamily::Db8,
            levels: 7,
            pn_seed: 0x5EED,
            scaling_mode: ScalingMode::Optimal,
            segment_count: 4,
            sync_length: super::sync::SYNC_PATTERN_BITS,
            sync_max_errors: 2,
        }
    }
}

impl EmbedKey {
    /// Default key with the given group size and step; the budget follows `N`.
    pub fn with_group(group_size: usize, quant_step: f64) -> Self {
        EmbedKey {
            quant_step,
            group_size,
            scaling_budget: group_size as f64,
            ..EmbedKey::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        GroupParams::new(self.group_size, self.quant_step, self.scaling_budget)
            .map_err(|e| Error::Config(e.to_string()))?;
        if self.levels == 0 || self.levels > 20 {
            return Err(Error::Config(format!("levels must be in 1..=20, got {}", self.levels)));
        }
        if self.segment_count == 0 {
            return Err(Error::Config("segments must be at least 1".into()));
        }
        if !(1..=super::sync::SYNC_PATTERN_BITS).contains(&self.sync_length) {
            return Err(Error::Config(format!(
                "sync_length must be in 1..={}, got {}",
                super::sync::SYNC_PATTERN_BITS,
                self.sync_length
            )));
        }
        if 2 * self.sync_max_errors >= self.sync_length {
            return Err(Error::Config(format!(
                "sync_max_errors = {} must be below half the sync length {}",
                self.sync_max_errors, self.sync_length
            )));
        }
        Ok(())
    }

    /// Group parameters in normalized-sample units (`Q / 32768`).
    pub fn group_params(&self) -> Result<GroupParams> {
        GroupParams::new(self.group_size, self.quant_step / PCM16_SCALE, self.scaling_budget)
    }

    pub fn filter(&self) -> WaveletFilter {
        WaveletFilter::new(self.wavelet)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut key = EmbedKey::default();
        let mut budget_set = false;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (field, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!(
                    "key line {}: expected `field = value`, got `{line}`",
                    lineno + 1
                ))
            })?;
            let (field, value) = (field.trim(), value.trim());
            let bad = |what: &str| Error::Config(format!("key line {}: {field} = `{value}` is not {what}", lineno + 1));
            match field {
                "version" => {
                    let v: u32 = value.parse().map_err(|_| bad("an integer"))?;
                    if v != KEY_FORMAT_VERSION {
                        return Err(Error::Config(format!("unsupported key format version {v}")));
                    }
                }
                "quant_step" => key.quant_step = value.parse().map_err(|_| bad("a number"))?,
                "group_size" => key.group_size = value.parse().map_err(|_| bad("an integer"))?,
                "scaling_budget" => {
                    key.scaling_budget = value.parse().map_err(|_| bad("a number"))?;
                    budget_set = true;
                }
                "wavelet" => key.wavelet = value.parse()?,
                "levels" => key.levels = value.parse().map_err(|_| bad("an integer"))?,
                "pn_seed" => key.pn_seed = parse_u64(value).ok_or_else(|| bad("a 64-bit integer"))?,
                "scaling_mode" => key.scaling_mode = value.parse()?,
                "segments" => key.segment_count = value.parse().map_err(|_| bad("an integer"))?,
                "sync_length" => key.sync_length = value.parse().map_err(|_| bad("an integer"))?,
                "sync_max_errors" => key.sync_max_errors = value.parse().map_err(|_| bad("an integer"))?,
                other => {
                    return Err(Error::Config(format!(
                        "key line {}: unknown field `{other}`",
                        lineno + 1
                    )))
                }
            }
        }
        if !budget_set {
            key.scaling_budget = key.group_size as f64;
        }
        key.validate()?;
        Ok(key)
    }

    pub fn to_text(&self) -> String {
        format!(
            "# wavquant embedding key\n\
             version = {KEY_FORMAT_VERSION}\n\
             quant_step = {}\n\
             group_size = {}\n\
             scaling_budget = {}\n\
             wavelet = {}\n\
             levels = {}\n\
             pn_seed = {}\n\
             scaling_mode = {}\n\
             segments = {}\n\
             sync_length = {}\n\
             sync_max_errors = {}\n",
            self.quant_step,
            self.group_size,
            self.scaling_budget,
            self.wavelet,
            self.levels,
            self.pn_seed,
            self.scaling_mode,
            self.segment_count,
            self.sync_length,
            self.sync_max_errors,
        )
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

fn parse_u64(s: &str) -> Option<u64> {
    match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16).ok(),
        None => s.parse().ok(),
    }
}
