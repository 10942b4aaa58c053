//! Orthogonal discrete wavelet transform with periodic boundary extension.
//!
//! Analysis of one level computes
//!
//! ```text
//! approx[k] = Σ_n h[n] · x[(2k + n) mod len]
//! detail[k] = Σ_n g[n] · x[(2k + n) mod len]
//! ```
//!
//! with `g[n] = (-1)^n · h[L-1-n]`. Because the filter bank is orthonormal the
//! synthesis step is the transpose of the analysis step, and the transform
//! preserves energy exactly (up to rounding).

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

const SQRT_HALF: f64 = std::f64::consts::FRAC_1_SQRT_2;

const DB4_LOWPASS: [f64; 8] = [
    0.230_377_813_308_896_5,
    0.714_846_570_552_915_6,
    0.630_880_767_929_858_9,
    -0.027_983_769_416_859_854,
    -0.187_034_811_719_093_08,
    0.030_841_381_835_560_764,
    0.032_883_011_666_885_2,
    -0.010_597_401_785_069_032,
];

const DB8_LOWPASS: [f64; 16] = [
    0.054_415_842_243_104_01,
    0.312_871_590_914_299_97,
    0.675_630_736_297_289_8,
    0.585_354_683_654_206_7,
    -0.015_829_105_256_349_306,
    -0.284_015_542_961_546_9,
    0.000_472_484_573_913_282_8,
    0.128_747_426_620_478_46,
    -0.017_369_301_001_807_546,
    -0.044_088_253_930_794_75,
    0.013_981_027_917_398_282,
    0.008_746_094_047_405_777,
    -0.004_870_352_993_451_574,
    -0.000_391_740_373_376_947,
    0.000_675_449_406_450_569_4,
    -0.000_117_476_784_124_769_53,
];

/// Named orthonormal wavelet families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum WaveletFamily {
    Haar,
    Db4,
    #[default]
    Db8,
}

impl WaveletFamily {
    pub const ALL: [WaveletFamily; 3] = [WaveletFamily::Haar, WaveletFamily::Db4, WaveletFamily::Db8];

    pub fn name(self) -> &'static str {
        match self {
            WaveletFamily::Haar => "haar",
            WaveletFamily::Db4 => "db4",
            WaveletFamily::Db8 => "db8",
        }
    }

    fn lowpass(self) -> Vec<f64> {
        match self {
            WaveletFamily::Haar => vec![SQRT_HALF, SQRT_HALF],
            WaveletFamily::Db4 => DB4_LOWPASS.to_vec(),
            WaveletFamily::Db8 => DB8_LOWPASS.to_vec(),
        }
    }
}

impl fmt::Display for WaveletFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for WaveletFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "haar" | "db1" => Ok(WaveletFamily::Haar),
            "db4" => Ok(WaveletFamily::Db4),
            "db8" => Ok(WaveletFamily::Db8),
            other => Err(Error::Config(format!(
                "unknown wavelet family `{other}` (expected haar, db4 or db8)"
            ))),
        }
    }
}

/// A two-channel orthonormal filter bank.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletFilter {
    lowpass: Vec<f64>,
    highpass: Vec<f64>,
    family: WaveletFamily,
}

impl WaveletFilter {
    pub fn new(family: WaveletFamily) -> Self {
        let lowpass = family.lowpass();
        let highpass = quadrature_mirror(&lowpass);
        WaveletFilter {
            lowpass,
            highpass,
            family,
        }
    }

    pub fn haar() -> Self {
        Self::new(WaveletFamily::Haar)
    }

    pub fn lowpass_taps(&self) -> &[f64] {
        &self.lowpass
    }

    pub fn highpass_taps(&self) -> &[f64] {
        &self.highpass
    }

    pub fn family(&self) -> WaveletFamily {
        self.family
    }

    pub fn len(&self) -> usize {
        self.lowpass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lowpass.is_empty()
    }

    /// Largest deviation from the orthonormality conditions on the lowpass taps
    /// (unit norm, orthogonal to its even shifts).
    pub fn orthonormality_error(&self) -> f64 {
        let h = &self.lowpass;
        let mut worst: f64 = 0.0;
        for shift in (0..h.len()).step_by(2) {
            let dot: f64 = h.iter().zip(&h[shift..]).map(|(a, b)| a * b).sum();
            let expected = if shift == 0 { 1.0 } else { 0.0 };
            worst = worst.max((dot - expected).abs());
        }
        worst
    }
}

impl Default for WaveletFilter {
    fn default() -> Self {
        Self::new(WaveletFamily::default())
    }
}

fn quadrature_mirror(lowpass: &[f64]) -> Vec<f64> {
    let len = lowpass.len();
    (0..len)
        .map(|k| {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sign * lowpass[len - 1 - k]
        })
        .collect()
}

/// Multi-level wavelet coefficients of a signal.
#[derive(Debug, Clone, PartialEq)]
pub struct DwtPyramid {
    approx: Vec<f64>,
    /// One band per level, coarsest first.
    details: Vec<Vec<f64>>,
    original_length: usize,
}

impl DwtPyramid {
    /// Assembles a pyramid from its bands, checking the band-length structure.
    pub fn from_parts(approx: Vec<f64>, details: Vec<Vec<f64>>, original_length: usize) -> Result<Self> {
        let levels = details.len();
        if levels == 0 {
            return Err(Error::Structure("pyramid needs at least one detail band".into()));
        }
        check_divisible(original_length, levels).map_err(|e| Error::Structure(e.to_string()))?;
        let coarsest = original_length >> levels;
        if approx.len() != coarsest {
            return Err(Error::Structure(format!(
                "approximation band has {} coefficients, expected {coarsest}",
                approx.len()
            )));
        }
        for (i, band) in details.iter().enumerate() {
            let expected = coarsest << i;
            if band.len() != expected {
                return Err(Error::Structure(format!(
                    "detail band {i} has {} coefficients, expected {expected}",
                    band.len()
                )));
            }
        }
        Ok(DwtPyramid {
            approx,
            details,
            original_length,
        })
    }

    pub fn approx(&self) -> &[f64] {
        &self.approx
    }

    pub fn details(&self) -> &[Vec<f64>] {
        &self.details
    }

    pub fn levels(&self) -> usize {
        self.details.len()
    }

    pub fn original_length(&self) -> usize {
        self.original_length
    }

    /// Sum of squares over every band.
    pub fn energy(&self) -> f64 {
        let approx: f64 = self.approx.iter().map(|c| c * c).sum();
        let details: f64 = self.details.iter().flatten().map(|c| c * c).sum();
        approx + details
    }

    /// Replaces the approximation band in place.
    pub fn set_approx(&mut self, new_approx: Vec<f64>) -> Result<()> {
        if new_approx.len() != self.approx.len() {
            return Err(Error::Structure(format!(
                "replacement band has {} coefficients, pyramid approximation has {}",
                new_approx.len(),
                self.approx.len()
            )));
        }
        self.approx = new_approx;
        Ok(())
    }
}

fn check_divisible(len: usize, levels: usize) -> Result<()> {
    if levels == 0 {
        return Err(Error::Argument("decomposition needs levels >= 1".into()));
    }
    if levels >= usize::BITS as usize {
        return Err(Error::Argument(format!("{levels} levels is out of range")));
    }
    let block = 1usize << levels;
    if len == 0 || !len.is_multiple_of(block) {
        return Err(Error::Config(format!(
            "signal length {len} must be a positive multiple of 2^{levels} = {block}"
        )));
    }
    Ok(())
}

fn analyze(signal: &[f64], filter: &WaveletFilter) -> (Vec<f64>, Vec<f64>) {
    let len = signal.len();
    let half = len / 2;
    let mut approx = vec![0.0; half];
    let mut detail = vec![0.0; half];
    for k in 0..half {
        let mut a = 0.0;
        let mut d = 0.0;
        for (n, (&h, &g)) in filter.lowpass.iter().zip(&filter.highpass).enumerate() {
            let x = signal[(2 * k + n) % len];
            a += h * x;
            d += g * x;
        }
        approx[k] = a;
        detail[k] = d;
    }
    (approx, detail)
}

fn synthesize(approx: &[f64], detail: &[f64], filter: &WaveletFilter) -> Vec<f64> {
    let len = approx.len() * 2;
    let mut out = vec![0.0; len];
    for (k, (&a, &d)) in approx.iter().zip(detail).enumerate() {
        for (n, (&h, &g)) in filter.lowpass.iter().zip(&filter.highpass).enumerate() {
            out[(2 * k + n) % len] += h * a + g * d;
        }
    }
    out
}

/// Decomposes `signal` into `levels` octaves.
pub fn dwt_forward(signal: &[f64], filter: &WaveletFilter, levels: usize) -> Result<DwtPyramid> {
    check_divisible(signal.len(), levels)?;
    let mut current = signal.to_vec();
    let mut details = Vec::with_capacity(levels);
    for _ in 0..levels {
        let (approx, detail) = analyze(&current, filter);
        details.push(detail);
        current = approx;
    }
    details.reverse();
    Ok(DwtPyramid {
        approx: current,
        details,
        original_length: signal.len(),
    })
}

/// Reconstructs the signal from a pyramid produced with the same filter.
pub fn dwt_inverse(pyramid: &DwtPyramid, filter: &WaveletFilter) -> Result<Vec<f64>> {
    let mut current = pyramid.approx.clone();
    for detail in &pyramid.details {
        if detail.len() != current.len() {
            return Err(Error::Structure(format!(
                "detail band of {} coefficients cannot pair with approximation of {}",
                detail.len(),
                current.len()
            )));
        }
        current = synthesize(&current, detail, filter);
    }
    if current.len() != pyramid.original_length {
        return Err(Error::Structure(format!(
            "reconstruction has {} samples, expected {}",
            current.len(),
            pyramid.original_length
        )));
    }
    Ok(current)
}

/// Returns a copy of `pyramid` with its approximation band swapped for `new_approx`.
pub fn replace_lowest_band(pyramid: &DwtPyramid, new_approx: &[f64]) -> Result<DwtPyramid> {
    let mut out = pyramid.clone();
    out.set_approx(new_approx.to_vec())?;
    Ok(out)
}
