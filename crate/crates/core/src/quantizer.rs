//! Group-amplitude quantization of wavelet coefficient magnitudes.
//!
//! One bit is carried by a group of `N` coefficient magnitudes `c` and a
//! positive weight vector `A` with `Σ a_i = M`. The weighted amplitude `A·c`
//! is steered onto the lattice point `⌊Σ|c|/Q⌋·Q + Q/4` (bit 0) or
//! `⌊Σ|c|/Q⌋·Q + 3Q/4` (bit 1); the decoder reads the bit back from the
//! residue of `A·c` modulo `Q`.
//!
//! Two embedding routes exist:
//!
//! * fixed weights, where the magnitudes are moved by the minimum-distance
//!   projection onto the hyperplane `A·x = γ`;
//! * optimal weights, where `A` itself is chosen so that `A·c = γ` holds for
//!   the untouched magnitudes, leaving the coefficients unchanged.

use crate::error::{Error, Result};

/// Largest supported group size.
pub const MAX_GROUP_SIZE: usize = 64;

const SUM_TOLERANCE: f64 = 1e-9;

/// Group configuration: size `N`, quantization step `Q` and weight budget `M`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupParams {
    group_size: usize,
    quant_step: f64,
    scaling_budget: f64,
}

impl GroupParams {
    pub fn new(group_size: usize, quant_step: f64, scaling_budget: f64) -> Result<Self> {
        if !(2..=MAX_GROUP_SIZE).contains(&group_size) {
            return Err(Error::Argument(format!(
                "group size must be in 2..={MAX_GROUP_SIZE}, got {group_size}"
            )));
        }
        check_step(quant_step)?;
        if !(scaling_budget.is_finite() && scaling_budget > 0.0) {
            return Err(Error::Argument(format!(
                "scaling budget must be positive, got {scaling_budget}"
            )));
        }
        Ok(GroupParams {
            group_size,
            quant_step,
            scaling_budget,
        })
    }

    /// Parameters with the budget set to the group size.
    pub fn with_default_budget(group_size: usize, quant_step: f64) -> Result<Self> {
        Self::new(group_size, quant_step, group_size as f64)
    }

    pub fn group_size(&self) -> usize {
        self.group_size
    }

    pub fn quant_step(&self) -> f64 {
        self.quant_step
    }

    pub fn scaling_budget(&self) -> f64 {
        self.scaling_budget
    }
}

fn check_step(q: f64) -> Result<()> {
    if q.is_finite() && q > 0.0 {
        Ok(())
    } else {
        Err(Error::Argument(format!("quantization step must be positive, got {q}")))
    }
}

/// Positive weights `a_1..a_N` whose sum is the budget `M`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingVector {
    factors: Vec<f64>,
}

impl ScalingVector {
    /// Validates positivity and that the factors sum to `budget`.
    pub fn new(factors: Vec<f64>, budget: f64) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::Argument("scaling vector is empty".into()));
        }
        if let Some(bad) = factors.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
            return Err(Error::Argument(format!("scaling factor {bad} is not positive")));
        }
        let sum: f64 = factors.iter().sum();
        if (sum - budget).abs() > SUM_TOLERANCE * budget.abs().max(1.0) {
            return Err(Error::Argument(format!(
                "scaling factors sum to {sum}, expected budget {budget}"
            )));
        }
        Ok(ScalingVector { factors })
    }

    /// Validates positivity only; the budget is whatever the factors sum to.
    pub fn from_factors(factors: Vec<f64>) -> Result<Self> {
        let sum = factors.iter().sum();
        Self::new(factors, sum)
    }

    /// `n` equal factors `budget / n`.
    pub fn uniform(n: usize, budget: f64) -> Self {
        ScalingVector {
            factors: vec![budget / n as f64; n],
        }
    }

    pub fn ones(n: usize) -> Self {
        Self::uniform(n, n as f64)
    }

    pub fn factors(&self) -> &[f64] {
        &self.factors
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn budget(&self) -> f64 {
        self.factors.iter().sum()
    }

    /// `A · magnitudes`.
    pub fn weighted_sum(&self, magnitudes: &[f64]) -> f64 {
        self.factors.iter().zip(magnitudes).map(|(a, c)| a * c).sum()
    }

    /// `A Aᵀ`, i.e. `Σ a_i²`.
    pub fn gram(&self) -> f64 {
        self.factors.iter().map(|a| a * a).sum()
    }
}

/// Lattice targets of a quantization cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantTargets {
    pub base: f64,
    pub gamma0: f64,
    pub gamma1: f64,
}

impl QuantTargets {
    pub fn for_bit(&self, bit: u8) -> f64 {
        if bit == 0 {
            self.gamma0
        } else {
            self.gamma1
        }
    }
}

/// Targets for the cell containing `sum_abs`.
pub fn quantization_targets(sum_abs: f64, q: f64) -> Result<QuantTargets> {
    check_step(q)?;
    if !(sum_abs.is_finite() && sum_abs >= 0.0) {
        return Err(Error::Argument(format!(
            "group amplitude must be nonnegative, got {sum_abs}"
        )));
    }
    let base = (sum_abs / q).floor() * q;
    Ok(QuantTargets {
        base,
        gamma0: base + 0.25 * q,
        gamma1: base + 0.75 * q,
    })
}

/// How a group was embedded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GroupMode {
    /// Weights chosen so the untouched magnitudes already hit the target.
    OptimalScaling,
    /// Optimal weights did not exist; uniform weights with projection instead.
    FixedScalingFallback,
    /// Caller-supplied weights with projection.
    FixedScaling,
}

impl GroupMode {
    pub fn name(self) -> &'static str {
        match self {
            GroupMode::OptimalScaling => "optimal_scaling",
            GroupMode::FixedScalingFallback => "fixed_scaling_fallback",
            GroupMode::FixedScaling => "fixed_scaling",
        }
    }
}

/// Outcome of embedding one bit into one group.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupEmbedResult {
    pub modified_magnitudes: Vec<f64>,
    pub scaling: ScalingVector,
    pub mode_used: GroupMode,
    /// Indices whose weight the optimal-scaling search pinned to 1.
    pub fallback_fixed_indices: Vec<usize>,
    /// Indices whose projected magnitude was clamped to 0.
    pub clamped_indices: Vec<usize>,
    pub lagrange_multiplier: f64,
}

/// Minimum-distance point on `{x ≥ 0, A·x = γ}` with its Lagrange multiplier.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub point: Vec<f64>,
    pub lagrange_multiplier: f64,
    pub clamped: Vec<usize>,
}

/// Projects `magnitudes` onto the hyperplane `weights · x = gamma`.
///
/// The unconstrained solution is `x = c − Aᵀ (A·c − γ) / (A Aᵀ)`, with
/// multiplier `λ = 2 (A·c − γ) / (A Aᵀ)`. Components pushed below zero are
/// clamped and the remaining ones re-projected until all are nonnegative.
pub fn project_to_target(magnitudes: &[f64], weights: &ScalingVector, gamma: f64) -> Result<Projection> {
    let a = weights.factors();
    if a.len() != magnitudes.len() {
        return Err(Error::Structure(format!(
            "{} magnitudes but {} scaling factors",
            magnitudes.len(),
            a.len()
        )));
    }
    if gamma < 0.0 {
        return Err(Error::Internal(format!("negative quantization target {gamma}")));
    }
    let n = a.len();
    let mut free = vec![true; n];
    let mut point = magnitudes.to_vec();
    let mut lambda = 0.0;
    for _ in 0..=n {
        let mut residual = -gamma;
        let mut gram = 0.0;
        for i in (0..n).filter(|&i| free[i]) {
            residual += a[i] * magnitudes[i];
            gram += a[i] * a[i];
        }
        if gram <= 0.0 {
            return Err(Error::Internal(format!(
                "every magnitude clamped while steering towards {gamma}"
            )));
        }
        lambda = 2.0 * residual / gram;
        let mut clamped_any = false;
        for i in 0..n {
            if free[i] {
                point[i] = magnitudes[i] - 0.5 * lambda * a[i];
                if point[i] < 0.0 {
                    free[i] = false;
                    clamped_any = true;
                }
            } else {
                point[i] = 0.0;
            }
        }
        if !clamped_any {
            let clamped = (0..n).filter(|&i| !free[i]).collect();
            return Ok(Projection {
                point,
                lagrange_multiplier: lambda,
                clamped,
            });
        }
    }
    Err(Error::Internal(format!(
        "clamping did not settle after {n} passes (λ = {lambda})"
    )))
}

fn check_magnitudes(magnitudes: &[f64]) -> Result<()> {
    if let Some(bad) = magnitudes.iter().find(|c| !(c.is_finite() && **c >= 0.0)) {
        return Err(Error::Argument(format!(
            "magnitude {bad} is not a finite nonnegative value"
        )));
    }
    Ok(())
}

/// Embeds `bit` with caller-chosen weights by projecting the magnitudes.
///
/// The target comes from the unweighted group amplitude `Σ|c_j|`, so weights
/// away from uniform pay for the bias `Σ(a_j − 1)|c_j|` in distortion.
pub fn embed_bit_fixed_scaling(
    magnitudes: &[f64],
    weights: &ScalingVector,
    bit: u8,
    q: f64,
) -> Result<GroupEmbedResult> {
    check_magnitudes(magnitudes)?;
    let targets = quantization_targets(magnitudes.iter().sum(), q)?;
    let proj = project_to_target(magnitudes, weights, targets.for_bit(bit))?;
    Ok(GroupEmbedResult {
        modified_magnitudes: proj.point,
        scaling: weights.clone(),
        mode_used: GroupMode::FixedScaling,
        fallback_fixed_indices: Vec::new(),
        clamped_indices: proj.clamped,
        lagrange_multiplier: proj.lagrange_multiplier,
    })
}

/// How an optimal weight vector was found.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalingStrategy {
    /// The minimum-length solution was positive as is.
    MinimumLength,
    /// Some weights were pinned to 1 and the rest re-solved.
    PinnedRefit,
    /// Pinning failed; a positive blend of the uniform vector and the
    /// extreme vertex of the weight simplex was used.
    InteriorBlend,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimalScaling {
    pub scaling: ScalingVector,
    pub pinned: Vec<usize>,
    pub strategy: ScalingStrategy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoSolutionReason {
    /// All magnitudes equal: the stationary condition holds for any weights.
    AllEqual,
    /// No positive weights with the given budget reach the target.
    Unreachable,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScalingOutcome {
    Optimal(OptimalScaling),
    NoOptimalSolution(NoSolutionReason),
}

impl ScalingOutcome {
    pub fn optimal(self) -> Option<OptimalScaling> {
        match self {
            ScalingOutcome::Optimal(s) => Some(s),
            ScalingOutcome::NoOptimalSolution(_) => None,
        }
    }
}

/// Minimum-length solution of `Σ a_i c_i = γ`, `Σ a_i = M` over the index set
/// `free`, eliminating the last free index.
///
/// Returns `None` when the reduced system is degenerate.
fn minimum_length_weights(magnitudes: &[f64], free: &[usize], gamma: f64, budget: f64) -> Option<Vec<f64>> {
    let (&last, rest) = free.split_last()?;
    if rest.is_empty() {
        return None;
    }
    let pivot = magnitudes[last];
    let denom: f64 = rest.iter().map(|&i| (magnitudes[i] - pivot).powi(2)).sum();
    let scale_ref = magnitudes.iter().fold(0.0f64, |m, c| m.max(*c)).max(f64::MIN_POSITIVE);
    if denom <= (1e-12 * scale_ref).powi(2) {
        return None;
    }
    let v = (gamma - budget * pivot) / denom;
    let mut weights: Vec<f64> = rest.iter().map(|&i| (magnitudes[i] - pivot) * v).collect();
    let assigned: f64 = weights.iter().sum();
    weights.push(budget - assigned);
    Some(weights)
}

/// Positive weights with `Σ a_i = M` reaching `A·c = γ` exactly.
///
/// The minimum-length solution is tried first. Any non-positive weight is
/// pinned to 1 and the system re-solved over the remaining indices with the
/// reduced budget and target; this repeats until the weights are positive or
/// fewer than two indices remain. If pinning runs out while `γ` lies strictly
/// inside the reachable interval `(M·min c, M·max c)`, the uniform vector is
/// blended towards the extreme vertex to hit `γ`.
pub fn optimal_scaling_factors(magnitudes: &[f64], gamma: f64, budget: f64) -> Result<ScalingOutcome> {
    let n = magnitudes.len();
    if n < 2 {
        return Err(Error::Argument(format!(
            "optimal scaling needs at least 2 magnitudes, got {n}"
        )));
    }
    check_magnitudes(magnitudes)?;
    if !(budget.is_finite() && budget > 0.0) {
        return Err(Error::Argument(format!(
            "scaling budget must be positive, got {budget}"
        )));
    }
    if !gamma.is_finite() {
        return Err(Error::Argument(format!("target {gamma} is not finite")));
    }
    let (lo, hi) = magnitudes
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &c| {
            (lo.min(c), hi.max(c))
        });
    if hi - lo <= 1e-12 * hi.max(f64::MIN_POSITIVE) {
        return Ok(ScalingOutcome::NoOptimalSolution(NoSolutionReason::AllEqual));
    }

    let mut pinned = vec![false; n];
    loop {
        let free: Vec<usize> = (0..n).filter(|&i| !pinned[i]).collect();
        let pinned_count = n - free.len();
        let rest_budget = budget - pinned_count as f64;
        if free.len() < 2 || rest_budget <= 0.0 {
            break;
        }
        let rest_target = gamma - (0..n).filter(|&i| pinned[i]).map(|i| magnitudes[i]).sum::<f64>();
        let Some(weights) = minimum_length_weights(magnitudes, &free, rest_target, rest_budget) else {
            break;
        };
        let non_positive: Vec<usize> = free
            .iter()
            .zip(&weights)
            .filter(|(_, &a)| a <= 0.0)
            .map(|(&i, _)| i)
            .collect();
        if non_positive.is_empty() {
            let mut factors = vec![1.0; n];
            for (&i, &a) in free.iter().zip(&weights) {
                factors[i] = a;
            }
            let pinned_idx: Vec<usize> = (0..n).filter(|&i| pinned[i]).collect();
            let strategy = if pinned_idx.is_empty() {
                ScalingStrategy::MinimumLength
            } else {
                ScalingStrategy::PinnedRefit
            };
            return Ok(ScalingOutcome::Optimal(OptimalScaling {
                scaling: ScalingVector { factors },
                pinned: pinned_idx,
                strategy,
            }));
        }
        for i in non_positive {
            pinned[i] = true;
        }
    }

    match interior_blend(magnitudes, gamma, budget, lo, hi) {
        Some(factors) => Ok(ScalingOutcome::Optimal(OptimalScaling {
            scaling: ScalingVector { factors },
            pinned: Vec::new(),
            strategy: ScalingStrategy::InteriorBlend,
        })),
        None => Ok(ScalingOutcome::NoOptimalSolution(NoSolutionReason::Unreachable)),
    }
}

fn interior_blend(magnitudes: &[f64], gamma: f64, budget: f64, lo: f64, hi: f64) -> Option<Vec<f64>> {
    let n = magnitudes.len();
    let uniform = budget / n as f64;
    let start: f64 = magnitudes.iter().map(|c| uniform * c).sum();
    let (vertex_value, vertex) = if gamma >= start {
        (budget * hi, magnitudes.iter().position(|&c| c == hi)?)
    } else {
        (budget * lo, magnitudes.iter().position(|&c| c == lo)?)
    };
    let span = vertex_value - start;
    if span == 0.0 {
        return (gamma == start).then(|| vec![uniform; n]);
    }
    let theta = (gamma - start) / span;
    if !(0.0..1.0).contains(&theta) {
        return None;
    }
    let mut factors = vec![(1.0 - theta) * uniform; n];
    factors[vertex] += theta * budget;
    Some(factors)
}

/// Whether the Hessian `[(2/M)|c_i||c_j|]` of the weight objective is
/// positive semidefinite with rank at most one.
///
/// The matrix is a scaled Gram matrix of a single vector, so this holds for
/// every finite input; the routine checks the rank-one structure directly.
pub fn hessian_check(magnitudes: &[f64], budget: f64) -> bool {
    if !(budget.is_finite() && budget > 0.0) {
        return false;
    }
    let scale = 2.0 / budget;
    let h = |i: usize, j: usize| scale * magnitudes[i].abs() * magnitudes[j].abs();
    let n = magnitudes.len();
    let peak = (0..n).map(|i| h(i, i)).fold(0.0f64, f64::max);
    let tol = 1e-12 * peak.max(f64::MIN_POSITIVE) * peak.max(1.0);
    for i in 0..n {
        if h(i, i) < 0.0 || !h(i, i).is_finite() {
            return false;
        }
        for j in 0..i {
            // rank one: every 2x2 principal minor vanishes
            if (h(i, j) - h(j, i)).abs() > tol || (h(i, i) * h(j, j) - h(i, j) * h(j, i)).abs() > tol {
                return false;
            }
        }
    }
    true
}

/// Decodes a bit from the residue of `A·c` modulo `Q`; `≥ Q/2` reads as 1.
pub fn extract_bit(magnitudes: &[f64], weights: &ScalingVector, q: f64) -> u8 {
    residue_bit(weights.weighted_sum(magnitudes), q)
}

pub(crate) fn residue_bit(weighted_sum: f64, q: f64) -> u8 {
    let residue = weighted_sum - (weighted_sum / q).floor() * q;
    u8::from(residue >= 0.5 * q)
}

/// Decoder-side weight reconstruction without side information.
#[derive(Debug, Clone, PartialEq)]
pub struct RecomputedScaling {
    pub scaling: ScalingVector,
    pub bit: u8,
    /// Neither hypothesis admitted optimal weights; uniform weights were used.
    pub used_fallback: bool,
}

/// Rebuilds the weights from received magnitudes by testing both bit
/// hypotheses.
///
/// For each hypothesis `b` the optimal weights for target `γ_b` are derived;
/// the hypothesis whose weighted sum lands closest to its own lattice residue
/// (`Q/4` or `3Q/4`) wins. Equal distances go to the weights closest to
/// uniform. With no admissible hypothesis the uniform-weight reading is used.
pub fn recompute_scaling_factors(received: &[f64], q: f64, budget: f64) -> Result<RecomputedScaling> {
    let n = received.len();
    if n < 2 {
        return Err(Error::Argument(format!("group needs at least 2 magnitudes, got {n}")));
    }
    check_magnitudes(received)?;
    let targets = quantization_targets(received.iter().sum(), q)?;
    let uniform = budget / n as f64;
    let mut best: Option<(f64, f64, u8, ScalingVector)> = None;
    for bit in [0u8, 1] {
        let Some(found) = optimal_scaling_factors(received, targets.for_bit(bit), budget)?.optimal() else {
            continue;
        };
        let sum = found.scaling.weighted_sum(received);
        let residue = sum - (sum / q).floor() * q;
        let own = if bit == 0 { 0.25 * q } else { 0.75 * q };
        let d = (residue - own).abs();
        let distance = d.min(q - d);
        let spread: f64 = found.scaling.factors().iter().map(|a| (a - uniform).powi(2)).sum();
        let better = match &best {
            None => true,
            Some((bd, bs, _, _)) => {
                if (distance - bd).abs() <= 1e-9 * q {
                    spread < *bs
                } else {
                    distance < *bd
                }
            }
        };
        if better {
            best = Some((distance, spread, bit, found.scaling));
        }
    }
    Ok(match best {
        Some((_, _, bit, scaling)) => RecomputedScaling {
            scaling,
            bit,
            used_fallback: false,
        },
        None => {
            let scaling = ScalingVector::uniform(n, budget);
            RecomputedScaling {
                bit: extract_bit(received, &scaling, q),
                scaling,
                used_fallback: true,
            }
        }
    })
}

/// Embeds `bit` with optimal weights, falling back to uniform weights and
/// projection when no positive weight vector reaches the target.
pub fn embed_bit_optimal(magnitudes: &[f64], bit: u8, params: &GroupParams) -> Result<GroupEmbedResult> {
    if magnitudes.len() != params.group_size() {
        return Err(Error::Structure(format!(
            "group of {} magnitudes, configured size {}",
            magnitudes.len(),
            params.group_size()
        )));
    }
    check_magnitudes(magnitudes)?;
    let q = params.quant_step();
    let targets = quantization_targets(magnitudes.iter().sum(), q)?;
    let outcome = optimal_scaling_factors(magnitudes, targets.for_bit(bit), params.scaling_budget())?;
    match outcome {
        ScalingOutcome::Optimal(found) => Ok(GroupEmbedResult {
            modified_magnitudes: magnitudes.to_vec(),
            scaling: found.scaling,
            mode_used: GroupMode::OptimalScaling,
            fallback_fixed_indices: found.pinned,
            clamped_indices: Vec::new(),
            lagrange_multiplier: 0.0,
        }),
        ScalingOutcome::NoOptimalSolution(_) => {
            let uniform = ScalingVector::uniform(params.group_size(), params.scaling_budget());
            let mut result = embed_bit_fixed_scaling(magnitudes, &uniform, bit, q)?;
            result.mode_used = GroupMode::FixedScalingFallback;
            Ok(result)
        }
    }
}
