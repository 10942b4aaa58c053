//! Evaluation matrix (clip × group size × mode × attack) and Q sweeps.
//!
//! Every stage is written to 16-bit PCM as a real file round trip would:
//! after embedding and after each attack. Output rows are sorted, so the
//! result does not depend on thread scheduling.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::attacks::AttackSpec;
use crate::audio_io::AudioClip;
use crate::codec::{capacity, embed, extract, DecoderKind, EmbedKey, Payload, ScalingMode};
use crate::error::Result;
use crate::metrics::positional_ber;
use crate::quantizer::GroupMode;

/// Group sizes of the evaluation matrix, each with the budget equal to `N`.
pub const TABLE_GROUP_SIZES: [usize; 2] = [4, 8];

const PAYLOAD_SEED: u64 = 0x00C0_FFEE;

pub const CSV_HEADER: &str = "clip,mode,decoder,group_size,quant_step,attack,parameter,ber_percent,snr_db,\
optimal_groups,fallback_groups,fixed_groups,sync_found,gain";

pub const SWEEP_CSV_HEADER: &str = "q,snr_db,ber_timescale_minus5_percent";

/// One channel condition of the matrix; `None` is the clean channel.
pub type Cell = Option<AttackSpec>;

/// The clean channel followed by every table attack.
pub fn table_cells() -> Vec<Cell> {
    std::iter::once(None)
        .chain(AttackSpec::table_attacks().into_iter().map(Some))
        .collect()
}

/// Key for group size `n` derived from a template: `Q` and `M` scale with `N`.
pub fn key_for_group_size(template: &EmbedKey, n: usize, mode: ScalingMode) -> EmbedKey {
    let ratio = n as f64 / template.group_size as f64;
    EmbedKey {
        group_size: n,
        quant_step: template.quant_step * ratio,
        scaling_budget: template.scaling_budget * ratio,
        scaling_mode: mode,
        ..template.clone()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub clip: String,
    pub mode: ScalingMode,
    pub decoder: DecoderKind,
    pub group_size: usize,
    pub quant_step: f64,
    /// Position in the cell list, used for ordering.
    pub cell_index: usize,
    pub attack: Cell,
    pub ber_percent: f64,
    pub snr_db: f64,
    pub optimal_groups: usize,
    pub fallback_groups: usize,
    pub fixed_groups: usize,
    pub sync_found: usize,
    pub gain: f64,
}

impl Row {
    pub fn attack_name(&self) -> &'static str {
        self.attack.map_or("none", |a| a.kind())
    }

    pub fn parameter(&self) -> f64 {
        self.attack.map_or(0.0, |a| a.parameter())
    }

    fn sort_key(&self) -> (String, usize, ScalingMode, DecoderKind, usize) {
        (
            self.clip.clone(),
            self.group_size,
            self.mode,
            self.decoder,
            self.cell_index,
        )
    }
}

fn decoders_for(mode: ScalingMode) -> &'static [DecoderKind] {
    match mode {
        ScalingMode::Optimal => &[DecoderKind::SideInfo, DecoderKind::Recompute],
        ScalingMode::FixedOnes => &[DecoderKind::Uniform],
    }
}

/// Embeds a full-capacity payload, runs every cell and decodes with every
/// decoder of the key's mode.
pub fn evaluate_clip(name: &str, audio: &AudioClip, key: &EmbedKey, cells: &[Cell]) -> Result<Vec<Row>> {
    let cap = capacity(audio.len(), key)?;
    let payload = Payload::random(cap.payload_bits, PAYLOAD_SEED ^ key.group_size as u64);
    let (marked, report) = embed(audio, &payload, key)?;
    let marked = marked.quantized();
    let rows = cells
        .par_iter()
        .enumerate()
        .map(|(cell_index, cell)| {
            let received = match cell {
                Some(attack) => attack.apply(&marked)?.quantized(),
                None => marked.clone(),
            };
            decoders_for(key.scaling_mode)
                .iter()
                .map(|&decoder| {
                    let side = match decoder {
                        DecoderKind::SideInfo => report.side_info.as_ref(),
                        _ => None,
                    };
                    let got = extract(&received, key, side)?;
                    Ok(Row {
                        clip: name.to_string(),
                        mode: key.scaling_mode,
                        decoder,
                        group_size: key.group_size,
                        quant_step: key.quant_step,
                        cell_index,
                        attack: *cell,
                        ber_percent: positional_ber(payload.bits(), got.payload(payload.len()))?,
                        snr_db: report.snr_db,
                        optimal_groups: report.mode_count(GroupMode::OptimalScaling),
                        fallback_groups: report.mode_count(GroupMode::FixedScalingFallback),
                        fixed_groups: report.mode_count(GroupMode::FixedScaling),
                        sync_found: got.sync_offsets().len(),
                        gain: got.gain,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(rows.into_iter().flatten().collect())
}

/// Full matrix over clips, [`TABLE_GROUP_SIZES`], both modes and `cells`.
pub fn evaluate(clips: &[(String, AudioClip)], template: &EmbedKey, cells: &[Cell]) -> Result<Vec<Row>> {
    let mut jobs = Vec::new();
    for (name, audio) in clips {
        for n in TABLE_GROUP_SIZES {
            for mode in [ScalingMode::Optimal, ScalingMode::FixedOnes] {
                jobs.push((name, audio, key_for_group_size(template, n, mode)));
            }
        }
    }
    let mut rows: Vec<Row> = jobs
        .par_iter()
        .map(|(name, audio, key)| evaluate_clip(name, audio, key, cells))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    rows.sort_by_key(Row::sort_key);
    Ok(rows)
}

fn fmt_db(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.4}")
    }
}

fn fmt_param(x: f64) -> String {
    if x.fract() == 0.0 {
        format!("{x:.0}")
    } else {
        format!("{x}")
    }
}

pub fn rows_to_csv(rows: &[Row]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{:.0},{},{},{:.4},{},{},{},{},{},{:.6}",
            r.clip,
            r.mode,
            r.decoder.name(),
            r.group_size,
            r.quant_step,
            r.attack_name(),
            fmt_param(r.parameter()),
            r.ber_percent,
            fmt_db(r.snr_db),
            r.optimal_groups,
            r.fallback_groups,
            r.fixed_groups,
            r.sync_found,
            r.gain,
        )
        .expect("writing to a String");
    }
    out
}

/// One BER table per (group size, mode, decoder): attacks down, clips across.
pub fn rows_to_markdown(rows: &[Row]) -> String {
    let mut clips: Vec<&str> = rows.iter().map(|r| r.clip.as_str()).collect();
    clips.sort_unstable();
    clips.dedup();
    let mut configs: Vec<(usize, ScalingMode, DecoderKind)> =
        rows.iter().map(|r| (r.group_size, r.mode, r.decoder)).collect();
    configs.sort();
    configs.dedup();

    let mut out = String::new();
    for (n, mode, decoder) in configs {
        let subset: Vec<&Row> = rows
            .iter()
            .filter(|r| (r.group_size, r.mode, r.decoder) == (n, mode, decoder))
            .collect();
        let q = subset.first().map_or(0.0, |r| r.quant_step);
        writeln!(
            out,
            "### BER (%), N = {n}, Q = {q:.0}, mode {mode}, decoder {}\n",
            decoder.name()
        )
        .unwrap();
        write!(out, "| attack |").unwrap();
        for c in &clips {
            write!(out, " {c} |").unwrap();
        }
        out.push_str(" mean |\n|---|");
        for _ in 0..=clips.len() {
            out.push_str("---:|");
        }
        out.push('\n');
        let mut cells: Vec<(usize, Cell)> = subset.iter().map(|r| (r.cell_index, r.attack)).collect();
        cells.sort_by_key(|c| c.0);
        cells.dedup_by_key(|c| c.0);
        for (idx, cell) in &cells {
            let label = cell.map_or("none".to_string(), |a| a.to_string());
            write!(out, "| {label} |").unwrap();
            let mut sum = 0.0;
            let mut count = 0;
            for c in &clips {
                match subset.iter().find(|r| r.clip == *c && r.cell_index == *idx) {
                    Some(r) => {
                        write!(out, " {:.2} |", r.ber_percent).unwrap();
                        sum += r.ber_percent;
                        count += 1;
                    }
                    None => out.push_str(" – |"),
                }
            }
            writeln!(out, " {:.2} |", if count > 0 { sum / count as f64 } else { f64::NAN }).unwrap();
        }
        write!(out, "| SNR (dB) |").unwrap();
        for c in &clips {
            match subset.iter().find(|r| r.clip == *c) {
                Some(r) => write!(out, " {} |", fmt_db_short(r.snr_db)).unwrap(),
                None => out.push_str(" – |"),
            }
        }
        out.push_str("  |\n\n");
    }
    out
}

fn fmt_db_short(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.2}")
    } else {
        fmt_db(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub q: f64,
    pub snr_db: f64,
    pub ber_timescale_minus5_percent: f64,
}

/// Embeds a full-capacity payload for each step in `q_list` and reports the
/// SNR and the BER after a −5% time scaling.
pub fn sweep_q(audio: &AudioClip, template: &EmbedKey, q_list: &[f64]) -> Result<Vec<SweepRow>> {
    q_list
        .par_iter()
        .map(|&q| {
            let key = EmbedKey {
                quant_step: q,
                ..template.clone()
            };
            key.validate()?;
            let cap = capacity(audio.len(), &key)?;
            let payload = Payload::random(cap.payload_bits, PAYLOAD_SEED ^ key.group_size as u64);
            let (marked, report) = embed(audio, &payload, &key)?;
            let attacked = AttackSpec::TimeScale(-5.0).apply(&marked.quantized())?.quantized();
            let got = extract(&attacked, &key, report.side_info.as_ref())?;
            Ok(SweepRow {
                q,
                snr_db: report.snr_db,
                ber_timescale_minus5_percent: positional_ber(payload.bits(), got.payload(payload.len()))?,
            })
        })
        .collect()
}

pub fn sweep_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_CSV_HEADER);
    out.push('\n');
    for r in rows {
        writeln!(
            out,
            "{},{},{:.4}",
            fmt_param(r.q),
            fmt_db(r.snr_db),
            r.ber_timescale_minus5_percent
        )
        .unwrap();
    }
    out
}
