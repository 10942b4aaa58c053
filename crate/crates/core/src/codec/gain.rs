//! Blind estimate of a global amplitude gain from lattice-coded sums.
//!
//! Every embedded weighted sum sits on an odd multiple of `Q/4`. After a gain
//! `τ` the received sums sit on odd multiples of `τQ/4`, so the score
//! `-mean cos(4π s / (gQ))` peaks at `g = τ` and also at `τ/3, τ/5, …`. The
//! estimator therefore returns the largest gain whose score is close to the
//! best one.

/// Gains outside this range are not searched.
pub const GAIN_RANGE: (f64, f64) = (0.25, 4.0);

const MIN_GROUPS: usize = 16;
const COARSE_GROUPS: usize = 256;
/// Largest phase advance between neighbouring coarse grid points, in radians.
const MAX_PHASE_STEP: f64 = 0.25;
/// Peaks scoring at least this fraction of the best one are aliases of it.
const ALIAS_FRACTION: f64 = 0.85;
/// Unit gain is kept when its score is within this of the best.
const UNIT_GAIN_SLACK: f64 = 0.02;
/// Below this best score the sums carry no lattice structure.
const MIN_STRUCTURE: f64 = 0.3;

fn score(sums: &[f64], q: f64, gain: f64) -> f64 {
    let k = 4.0 * std::f64::consts::PI / (gain * q);
    -sums.iter().map(|s| (k * s).cos()).sum::<f64>() / sums.len() as f64
}

/// Maximizes the score over `[lo, hi]` in log-gain by golden-section search.
fn refine(sums: &[f64], q: f64, lo: f64, hi: f64) -> (f64, f64) {
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo.ln(), hi.ln());
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (score(sums, q, c.exp()), score(sums, q, d.exp()));
    for _ in 0..40 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = score(sums, q, c.exp());
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = score(sums, q, d.exp());
        }
    }
    let g = (0.5 * (a + b)).exp();
    (g, score(sums, q, g))
}

/// Estimates the gain applied to `weighted_sums` since they were embedded
/// with step `q`. Returns exactly 1 when unit gain explains the data.
pub fn estimate_gain(weighted_sums: &[f64], q: f64) -> f64 {
    let sums: Vec<f64> = weighted_sums.iter().copied().filter(|s| s.is_finite()).collect();
    if sums.len() < MIN_GROUPS || q <= 0.0 {
        return 1.0;
    }
    let stride = sums.len().div_ceil(COARSE_GROUPS);
    let coarse: Vec<f64> = sums.iter().step_by(stride).copied().collect();
    let s_max = sums.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    if s_max == 0.0 {
        return 1.0;
    }
    let (g_lo, g_hi) = GAIN_RANGE;
    let rate = 4.0 * std::f64::consts::PI * s_max / (g_lo * q);
    let step = (MAX_PHASE_STEP / rate).min(1e-3);
    let n = ((g_hi / g_lo).ln() / step).ceil() as usize;
    let grid: Vec<f64> = (0..=n).map(|i| g_lo * (i as f64 * step).exp()).collect();
    let scores: Vec<f64> = grid.iter().map(|&g| score(&coarse, q, g)).collect();
    let coarse_best = scores.iter().cloned().fold(f64::MIN, f64::max);

    let mut peaks: Vec<(f64, f64)> = Vec::new();
    for i in 0..grid.len() {
        let left = if i > 0 { scores[i - 1] } else { f64::MIN };
        let right = if i + 1 < grid.len() { scores[i + 1] } else { f64::MIN };
        if scores[i] >= left && scores[i] >= right && scores[i] >= 0.5 * coarse_best {
            let lo = grid[i.saturating_sub(1)];
            let hi = grid[(i + 1).min(grid.len() - 1)];
            peaks.push(refine(&sums, q, lo, hi));
        }
    }
    let best = peaks.iter().map(|p| p.1).fold(f64::MIN, f64::max);
    if peaks.is_empty() || best < MIN_STRUCTURE {
        return 1.0;
    }
    if score(&sums, q, 1.0) >= best - UNIT_GAIN_SLACK {
        return 1.0;
    }
    peaks
        .iter()
        .filter(|p| p.1 >= ALIAS_FRACTION * best)
        .map(|p| p.0)
        .fold(f64::MIN, f64::max)
}
