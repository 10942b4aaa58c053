//! Band-limited interpolation with a tabulated Kaiser-windowed sinc.

use super::kaiser::{kaiser, sinc};

/// Zero crossings on each side of the kernel centre (64 taps in total at the
/// lower of the two rates).
const HALF_ZERO_CROSSINGS: usize = 32;
const OVERSAMPLE: usize = 1024;
const KAISER_BETA: f64 = 8.0;

pub(crate) struct SincKernel {
    table: Vec<f64>,
}

impl SincKernel {
    pub(crate) fn new() -> Self {
        let len = HALF_ZERO_CROSSINGS * OVERSAMPLE + 2;
        let table = (0..len)
            .map(|i| {
                if i % OVERSAMPLE == 0 {
                    // exact zeros at the crossings make unit-ratio conversion exact
                    return if i == 0 { 1.0 } else { 0.0 };
                }
                let x = i as f64 / OVERSAMPLE as f64;
                sinc(x) * kaiser(x / HALF_ZERO_CROSSINGS as f64, KAISER_BETA)
            })
            .collect();
        SincKernel { table }
    }

    /// Kernel value at `x` zero-crossing units from the centre.
    fn at(&self, x: f64) -> f64 {
        let pos = x.abs() * OVERSAMPLE as f64;
        let idx = pos as usize;
        if idx + 1 >= self.table.len() {
            return 0.0;
        }
        let frac = pos - idx as f64;
        self.table[idx] + frac * (self.table[idx + 1] - self.table[idx])
    }
}

/// Evaluates the band-limited signal at positions `m · step` for
/// `m in 0..out_len`, with `step` measured in input samples.
///
/// The cutoff sits at the lower of the two Nyquist frequencies.
pub(crate) fn interpolate(input: &[f64], out_len: usize, step: f64) -> Vec<f64> {
    let kernel = SincKernel::new();
    let cutoff = (1.0 / step).min(1.0);
    let reach = HALF_ZERO_CROSSINGS as f64 / cutoff;
    let last = input.len() as f64 - 1.0;
    (0..out_len)
        .map(|m| {
            let t = m as f64 * step;
            let lo = (t - reach).ceil().max(0.0);
            let hi = (t + reach).floor().min(last);
            if hi < lo {
                return 0.0;
            }
            let window = &input[lo as usize..=hi as usize];
            let acc: f64 = window
                .iter()
                .enumerate()
                .map(|(i, &s)| s * kernel.at((t - (lo + i as f64)) * cutoff))
                .sum();
            acc * cutoff
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_step_is_identity() {
        let x: Vec<f64> = (0..300).map(|i| ((i * 7919) % 257) as f64 / 257.0 - 0.5).collect();
        assert_eq!(interpolate(&x, x.len(), 1.0), x);
    }

    #[test]
    fn kernel_is_symmetric_and_bounded() {
        let k = SincKernel::new();
        assert_eq!(k.at(0.0), 1.0);
        assert_eq!(k.at(3.0), 0.0);
        assert!((k.at(0.37) - k.at(-0.37)).abs() < 1e-15);
        assert_eq!(k.at(40.0), 0.0);
    }
}
