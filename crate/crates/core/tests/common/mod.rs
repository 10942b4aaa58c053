//! Oracles shared by the oracle and acceptance targets.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wavquant::ScalingVector;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_weights(r: &mut ChaCha8Rng, n: usize, budget: f64) -> ScalingVector {
    let raw: Vec<f64> = (0..n).map(|_| r.random_range(0.2..2.0)).collect();
    let s: f64 = raw.iter().sum();
    ScalingVector::new(raw.iter().map(|a| a * budget / s).collect(), budget).unwrap()
}

/// Minimum of `(a·c − γ)²` over the positive simplex `Σa = M`: random
/// starts refined by exact line searches along `e_i − e_j`.
pub fn simplex_qp(c: &[f64], gamma: f64, m: f64, r: &mut ChaCha8Rng) -> f64 {
    let n = c.len();
    let objective = |a: &[f64]| (a.iter().zip(c).map(|(x, y)| x * y).sum::<f64>() - gamma).powi(2);
    let floor = 1e-12 * m;
    let mut best = f64::MAX;
    for _ in 0..8 {
        let raw: Vec<f64> = (0..n).map(|_| -r.random_range(1e-9f64..1.0).ln()).collect();
        let total: f64 = raw.iter().sum();
        let mut a: Vec<f64> = raw.iter().map(|x| x * m / total).collect();
        for _ in 0..100 {
            let before = objective(&a);
            for i in 0..n {
                for j in 0..n {
                    if i == j || c[i] == c[j] {
                        continue;
                    }
                    let r0 = a.iter().zip(c).map(|(x, y)| x * y).sum::<f64>() - gamma;
                    let lo = (floor - a[i]).min(0.0);
                    let t = (-r0 / (c[i] - c[j])).clamp(lo, (a[j] - floor).max(lo));
                    a[i] += t;
                    a[j] -= t;
                }
            }
            if objective(&a) >= before {
                break;
            }
        }
        best = best.min(objective(&a));
    }
    best
}

/// A random nonnegative point on the hyperplane `a·x = γ` near `c`.
pub fn random_feasible_point(r: &mut ChaCha8Rng, c: &[f64], a: &ScalingVector, gamma: f64) -> Option<Vec<f64>> {
    let x: Vec<f64> = c.iter().map(|v| v + r.random_range(-3.0..3.0)).collect();
    let d: Vec<f64> = c.iter().map(|_| r.random_range(-1.0..1.0)).collect();
    let ad: f64 = a.factors().iter().zip(&d).map(|(p, q)| p * q).sum();
    if ad.abs() < 1e-3 {
        return None;
    }
    let t = (gamma - a.weighted_sum(&x)) / ad;
    let y: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + t * di).collect();
    y.iter().all(|&v| v >= 0.0).then_some(y)
}

/// Minimum-norm weights for `Σa = M`, `a·c = γ` after eliminating `a_N`,
/// solved by a dense pseudo-inverse.
pub fn pseudo_inverse_weights(c: &[f64], gamma: f64, m: f64) -> Vec<f64> {
    let n = c.len();
    let cn = c[n - 1];
    let p = DMatrix::from_row_slice(1, n - 1, &c[..n - 1].iter().map(|v| v - cn).collect::<Vec<_>>());
    let b = DVector::from_element(1, gamma - m * cn);
    let x = p.pseudo_inverse(1e-300).unwrap() * b;
    let mut a: Vec<f64> = x.iter().copied().collect();
    a.push(m - x.iter().sum::<f64>());
    a
}
