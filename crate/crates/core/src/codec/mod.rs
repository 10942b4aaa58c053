//! Segmented embedding and extraction in the lowest DWT band.
//!
//! The clip is cut into `segment_count` equal segments whose length is a
//! multiple of `2^levels`; the last one is zero-padded for the transform and
//! the pad is dropped again on output. Each segment carries
//! `(sync ∥ payload chunk) XOR PN`, one bit per group of `N` consecutive
//! approximation coefficients. Payload chunks fill segments in order.

mod gain;
mod key;
mod sideinfo;
mod sync;

pub use gain::{estimate_gain, GAIN_RANGE};
pub use key::{EmbedKey, ScalingMode, KEY_FORMAT_VERSION};
pub use sideinfo::{SideInfo, SIDE_INFO_VERSION};
pub use sync::{hamming, locate_sync, sync_code, PnStream, SYNC_PATTERN, SYNC_PATTERN_BITS};

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::audio_io::AudioClip;
use crate::error::{Error, Result};
use crate::metrics;
use crate::quantizer::{
    embed_bit_fixed_scaling, embed_bit_optimal, recompute_scaling_factors, residue_bit, GroupMode, GroupParams,
    ScalingVector,
};
use crate::wavelet::{dwt_forward, dwt_inverse, replace_lowest_band, WaveletFilter};

/// Embedding passes per segment, including the first.
pub const MAX_EMBED_PASSES: usize = 6;

/// Watermark bits; the sync code is added per segment from the key.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Payload {
    bits: Vec<u8>,
}

impl Payload {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if let Some(pos) = bits.iter().position(|&b| b > 1) {
            return Err(Error::Argument(format!(
                "payload bit {pos} is {}, not 0 or 1",
                bits[pos]
            )));
        }
        Ok(Payload { bits })
    }

    /// Seeded uniform random payload.
    pub fn random(len: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Payload {
            bits: (0..len).map(|_| u8::from(rng.random_bool(0.5))).collect(),
        }
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }
}

impl FromStr for Payload {
    type Err = Error;

    /// Parses a string of `0`/`1` characters; whitespace is ignored.
    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(Error::Argument(format!("payload character `{other}` is not 0 or 1"))),
            })
            .collect::<Result<Vec<u8>>>()?;
        Ok(Payload { bits })
    }
}

impl fmt::Display for Payload {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.bits {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

/// Placement of one segment in the clip.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Segment {
    pub index: usize,
    pub start: usize,
    /// Samples of the clip inside the segment.
    pub len: usize,
    /// Transform length, a multiple of `2^levels`.
    pub padded_len: usize,
    /// Coefficient groups in the approximation band.
    pub groups: usize,
}

impl Segment {
    pub fn pad(&self) -> usize {
        self.padded_len - self.len
    }
}

/// Segments covering `total_len` samples; segments past the end are omitted.
pub fn segment_layout(total_len: usize, key: &EmbedKey) -> Result<Vec<Segment>> {
    key.validate()?;
    let block = 1usize << key.levels;
    let per = total_len.div_ceil(key.segment_count * block).max(1) * block;
    Ok((0..key.segment_count)
        .map(|i| (i, i * per))
        .take_while(|&(_, start)| start < total_len)
        .map(|(index, start)| Segment {
            index,
            start,
            len: per.min(total_len - start),
            padded_len: per,
            groups: (per >> key.levels) / key.group_size,
        })
        .collect())
}

/// Embedding capacity of a clip length under a key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Capacity {
    /// One bit per group, sync included.
    pub groups_total: usize,
    /// Bits left for the payload after the per-segment sync codes.
    pub payload_bits: usize,
    pub segments: Vec<Segment>,
}

pub fn capacity(total_len: usize, key: &EmbedKey) -> Result<Capacity> {
    let segments = segment_layout(total_len, key)?;
    Ok(Capacity {
        groups_total: segments.iter().map(|s| s.groups).sum(),
        payload_bits: segments.iter().map(|s| s.groups.saturating_sub(key.sync_length)).sum(),
        segments,
    })
}

/// Summary of one embedding run.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbedReport {
    pub snr_db: f64,
    /// Equal to `groups_total`.
    pub capacity_bits: usize,
    pub payload_capacity_bits: usize,
    pub groups_total: usize,
    pub groups_embedded: usize,
    pub payload_bits: usize,
    pub pad_samples: usize,
    pub mode_histogram: BTreeMap<GroupMode, usize>,
    /// Groups re-embedded after the padded tail was dropped.
    pub repaired_groups: usize,
    /// Groups still outside the decoding margin after the last pass.
    pub unverified_groups: usize,
    /// Scaling vectors of embedded groups, present in optimal mode.
    pub side_info: Option<SideInfo>,
}

impl EmbedReport {
    pub fn mode_count(&self, mode: GroupMode) -> usize {
        self.mode_histogram.get(&mode).copied().unwrap_or(0)
    }
}

#[derive(Debug, Clone)]
struct GroupRecord {
    mode: GroupMode,
    scaling: ScalingVector,
}

struct SegmentEmbed {
    samples: Vec<f64>,
    records: Vec<GroupRecord>,
    repaired: usize,
    unverified: usize,
}

fn padded(samples: &[f64], padded_len: usize) -> Vec<f64> {
    let mut out = samples.to_vec();
    out.resize(padded_len, 0.0);
    out
}

fn group_magnitudes(approx: &[f64], group: usize, n: usize) -> Vec<f64> {
    approx[group * n..(group + 1) * n].iter().map(|c| c.abs()).collect()
}

/// Whether the weighted sum decodes to `bit` at least `Q/8` from the boundaries.
fn within_margin(weighted_sum: f64, bit: u8, q: f64) -> bool {
    let residue = weighted_sum - (weighted_sum / q).floor() * q;
    let target = if bit == 0 { 0.25 * q } else { 0.75 * q };
    (residue - target).abs() <= 0.125 * q
}

fn embed_group(approx: &mut [f64], group: usize, bit: u8, key: &EmbedKey, params: &GroupParams) -> Result<GroupRecord> {
    let n = params.group_size();
    let mags = group_magnitudes(approx, group, n);
    let result = match key.scaling_mode {
        ScalingMode::Optimal => embed_bit_optimal(&mags, bit, params)?,
        ScalingMode::FixedOnes => {
            let uniform = ScalingVector::uniform(n, params.scaling_budget());
            embed_bit_fixed_scaling(&mags, &uniform, bit, params.quant_step())?
        }
    };
    for (c, m) in approx[group * n..(group + 1) * n]
        .iter_mut()
        .zip(&result.modified_magnitudes)
    {
        *c = if c.is_sign_negative() && *c != 0.0 { -m } else { *m };
    }
    Ok(GroupRecord {
        mode: result.mode_used,
        scaling: result.scaling,
    })
}

fn embed_segment(
    samples: &[f64],
    seg: &Segment,
    tx: &[u8],
    key: &EmbedKey,
    params: &GroupParams,
    filter: &WaveletFilter,
) -> Result<SegmentEmbed> {
    let q = params.quant_step();
    let n = params.group_size();
    let mut signal = padded(samples, seg.padded_len);
    let mut records: Vec<Option<GroupRecord>> = vec![None; tx.len()];
    let mut pending: Vec<usize> = (0..tx.len()).collect();
    let mut repaired = 0;
    for pass in 0..MAX_EMBED_PASSES {
        let pyramid = dwt_forward(&signal, filter, key.levels)?;
        let mut approx = pyramid.approx().to_vec();
        for &g in &pending {
            records[g] = Some(embed_group(&mut approx, g, tx[g], key, params)?);
        }
        if pass > 0 {
            repaired += pending.len();
        }
        let mut rebuilt = dwt_inverse(&replace_lowest_band(&pyramid, &approx)?, filter)?;
        rebuilt[seg.len..].fill(0.0);
        signal = rebuilt;

        let check = dwt_forward(&signal, filter, key.levels)?;
        pending = (0..tx.len())
            .filter(|&g| {
                let record = records[g].as_ref().expect("every group embedded in the first pass");
                let sum = record.scaling.weighted_sum(&group_magnitudes(check.approx(), g, n));
                !within_margin(sum, tx[g], q)
            })
            .collect();
        if pending.is_empty() {
            break;
        }
    }
    signal.truncate(seg.len);
    Ok(SegmentEmbed {
        samples: signal,
        records: records.into_iter().map(|r| r.expect("every group embedded")).collect(),
        repaired,
        unverified: pending.len(),
    })
}

/// Bits sent in one segment before whitening: the sync code then the chunk.
fn segment_bits(key: &EmbedKey, chunk: &[u8]) -> Vec<u8> {
    let mut bits = sync_code(key.sync_length);
    bits.extend_from_slice(chunk);
    bits.iter()
        .zip(PnStream::new(key.pn_seed))
        .map(|(b, pn)| b ^ pn)
        .collect()
}

/// Embeds `payload` into `audio` under `key`.
pub fn embed(audio: &AudioClip, payload: &Payload, key: &EmbedKey) -> Result<(AudioClip, EmbedReport)> {
    let params = key.group_params()?;
    let cap = capacity(audio.len(), key)?;
    if payload.len() > cap.payload_bits {
        return Err(Error::Capacity {
            payload: payload.len(),
            capacity: cap.payload_bits,
        });
    }
    let filter = key.filter();
    let pad_samples = cap.segments.last().map_or(0, |s| s.pad());
    let mut report = EmbedReport {
        snr_db: f64::INFINITY,
        capacity_bits: cap.groups_total,
        payload_capacity_bits: cap.payload_bits,
        groups_total: cap.groups_total,
        groups_embedded: 0,
        payload_bits: payload.len(),
        pad_samples,
        mode_histogram: BTreeMap::new(),
        repaired_groups: 0,
        unverified_groups: 0,
        side_info: (key.scaling_mode == ScalingMode::Optimal)
            .then(|| SideInfo::new(key.group_size, key.scaling_budget)),
    };
    if payload.is_empty() {
        return Ok((audio.clone(), report));
    }

    let mut plan = Vec::new();
    let mut offset = 0;
    for seg in &cap.segments {
        if offset >= payload.len() {
            break;
        }
        let take = seg.groups.saturating_sub(key.sync_length).min(payload.len() - offset);
        if take == 0 {
            continue;
        }
        plan.push((*seg, segment_bits(key, &payload.bits()[offset..offset + take])));
        offset += take;
    }

    let samples = audio.samples();
    let outcomes = plan
        .par_iter()
        .map(|(seg, tx)| embed_segment(&samples[seg.start..seg.start + seg.len], seg, tx, key, &params, &filter))
        .collect::<Result<Vec<_>>>()?;

    let mut out = samples.to_vec();
    for ((seg, _), outcome) in plan.iter().zip(outcomes) {
        out[seg.start..seg.start + seg.len].copy_from_slice(&outcome.samples);
        report.groups_embedded += outcome.records.len();
        report.repaired_groups += outcome.repaired;
        report.unverified_groups += outcome.unverified;
        for (g, record) in outcome.records.into_iter().enumerate() {
            *report.mode_histogram.entry(record.mode).or_insert(0) += 1;
            if let Some(side) = report.side_info.as_mut() {
                side.insert(seg.index, g, record.scaling)?;
            }
        }
    }
    report.snr_db = metrics::snr(samples, &out)?;
    Ok((audio.with_samples(out)?, report))
}

/// Per-group decoding rule used by [`extract`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DecoderKind {
    /// Stored scaling vectors, with a blind gain estimate.
    SideInfo,
    /// Two-hypothesis weight reconstruction from the received magnitudes.
    Recompute,
    /// Uniform weights.
    Uniform,
}

impl DecoderKind {
    pub fn name(self) -> &'static str {
        match self {
            DecoderKind::SideInfo => "side_info",
            DecoderKind::Recompute => "recompute",
            DecoderKind::Uniform => "uniform",
        }
    }

    pub fn select(key: &EmbedKey, side_info: Option<&SideInfo>) -> Self {
        match (side_info, key.scaling_mode) {
            (Some(_), _) => DecoderKind::SideInfo,
            (None, ScalingMode::Optimal) => DecoderKind::Recompute,
            (None, ScalingMode::FixedOnes) => DecoderKind::Uniform,
        }
    }
}

/// Sync search result for one segment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentSync {
    pub segment: usize,
    /// Group offset of the sync code, `None` when no match was found.
    pub offset: Option<usize>,
    pub errors: Option<usize>,
    /// Payload bits read from this segment.
    pub bits: usize,
}

/// Output of [`extract`].
#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    /// Payload bits of all segments in order, including unsynchronized ones.
    pub bits: Vec<u8>,
    pub segments: Vec<SegmentSync>,
    pub decoder: DecoderKind,
    /// Gain divided out before side-info decoding; 1 for other decoders.
    pub gain: f64,
}

impl Extraction {
    /// Sync offsets of the segments where one was found.
    pub fn sync_offsets(&self) -> Vec<usize> {
        self.segments.iter().filter_map(|s| s.offset).collect()
    }

    /// Payload bits truncated to `len`.
    pub fn payload(&self, len: usize) -> &[u8] {
        &self.bits[..len.min(self.bits.len())]
    }
}

/// Extracts the payload bits of every segment.
///
/// Segments without a sync match are read from offset 0 and flagged.
pub fn extract(audio: &AudioClip, key: &EmbedKey, side_info: Option<&SideInfo>) -> Result<Extraction> {
    let params = key.group_params()?;
    if let Some(side) = side_info {
        if side.group_size() != key.group_size {
            return Err(Error::Structure(format!(
                "side info has group size {}, key has {}",
                side.group_size(),
                key.group_size
            )));
        }
    }
    let decoder = DecoderKind::select(key, side_info);
    let filter = key.filter();
    let (q, n, budget) = (params.quant_step(), params.group_size(), params.scaling_budget());
    let segments = segment_layout(audio.len(), key)?;
    let samples = audio.samples();

    let bands = segments
        .par_iter()
        .map(|seg| {
            let signal = padded(&samples[seg.start..seg.start + seg.len], seg.padded_len);
            let pyramid = dwt_forward(&signal, &filter, key.levels)?;
            Ok((0..seg.groups)
                .map(|g| group_magnitudes(pyramid.approx(), g, n))
                .collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;

    let uniform = ScalingVector::uniform(n, budget);
    let mut gain = 1.0;
    let raw: Vec<Vec<u8>> = match decoder {
        DecoderKind::SideInfo => {
            let side = side_info.expect("side-info decoder selected");
            let sums: Vec<Vec<(f64, bool)>> = segments
                .iter()
                .zip(&bands)
                .map(|(seg, groups)| {
                    groups
                        .iter()
                        .enumerate()
                        .map(|(g, mags)| match side.get(seg.index, g) {
                            Some(a) => (a.weighted_sum(mags), true),
                            None => (uniform.weighted_sum(mags), false),
                        })
                        .collect()
                })
                .collect();
            let recorded: Vec<f64> = sums.iter().flatten().filter(|s| s.1).map(|s| s.0).collect();
            gain = estimate_gain(&recorded, q);
            sums.iter()
                .map(|groups| groups.iter().map(|&(s, _)| residue_bit(s / gain, q)).collect())
                .collect()
        }
        DecoderKind::Recompute => bands
            .par_iter()
            .map(|groups| {
                groups
                    .iter()
                    .map(|mags| recompute_scaling_factors(mags, q, budget).map(|r| r.bit))
                    .collect::<Result<Vec<u8>>>()
            })
            .collect::<Result<Vec<_>>>()?,
        DecoderKind::Uniform => bands
            .iter()
            .map(|groups| {
                groups
                    .iter()
                    .map(|mags| residue_bit(uniform.weighted_sum(mags), q))
                    .collect()
            })
            .collect(),
    };

    let whitened_sync: Vec<u8> = sync_code(key.sync_length)
        .iter()
        .zip(PnStream::new(key.pn_seed))
        .map(|(b, pn)| b ^ pn)
        .collect();
    let mut bits = Vec::new();
    let mut syncs = Vec::with_capacity(segments.len());
    for (seg, decoded) in segments.iter().zip(&raw) {
        let found = locate_sync(decoded, &whitened_sync, key.sync_max_errors)
            .into_iter()
            .map(|off| (hamming(&decoded[off..off + key.sync_length], &whitened_sync), off))
            .min();
        let start = found.map_or(0, |(_, off)| off) + key.sync_length;
        let want = seg.groups.saturating_sub(key.sync_length);
        let pn = PnStream::new(key.pn_seed).skip(key.sync_length);
        let chunk: Vec<u8> = decoded
            .iter()
            .skip(start)
            .take(want)
            .zip(pn)
            .map(|(b, p)| b ^ p)
            .collect();
        syncs.push(SegmentSync {
            segment: seg.index,
            offset: found.map(|(_, off)| off),
            errors: found.map(|(e, _)| e),
            bits: chunk.len(),
        });
        bits.extend(chunk);
    }
    Ok(Extraction {
        bits,
        segments: syncs,
        decoder,
        gain,
    })
}
