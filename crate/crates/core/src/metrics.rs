//! Quality (SNR) and robustness (BER) measurements.

use crate::error::{Error, Result};

/// Signal-to-noise ratio in dB of `test` against `original`.
///
/// `-10·log10(‖test − original‖² / ‖original‖²)`; identical inputs give
/// `f64::INFINITY`.
pub fn snr(original: &[f64], test: &[f64]) -> Result<f64> {
    if original.len() != test.len() {
        return Err(Error::Argument(format!(
            "SNR needs equal lengths, got {} and {}",
            original.len(),
            test.len()
        )));
    }
    let signal: f64 = original.iter().map(|x| x * x).sum();
    if signal <= 0.0 {
        return Err(Error::Domain("SNR reference signal has zero energy".into()));
    }
    let noise: f64 = original.iter().zip(test).map(|(a, b)| (b - a).powi(2)).sum();
    Ok(snr_from_energies(signal, noise))
}

/// SNR in dB from a reference energy and an error energy.
pub fn snr_from_energies(signal_energy: f64, noise_energy: f64) -> f64 {
    if noise_energy == 0.0 {
        f64::INFINITY
    } else {
        -10.0 * (noise_energy / signal_energy).log10()
    }
}

/// Bit error rate in percent.
pub fn ber(sent: &[u8], received: &[u8]) -> Result<f64> {
    if sent.len() != received.len() {
        return Err(Error::Argument(format!(
            "BER needs equal lengths, got {} and {}",
            sent.len(),
            received.len()
        )));
    }
    if sent.is_empty() {
        return Err(Error::Argument("BER of an empty sequence is undefined".into()));
    }
    let errors = sent.iter().zip(received).filter(|(a, b)| a != b).count();
    Ok(100.0 * errors as f64 / sent.len() as f64)
}

/// BER over `sent.len()` bits, reading missing received bits as 0.
pub fn positional_ber(sent: &[u8], received: &[u8]) -> Result<f64> {
    let aligned: Vec<u8> = (0..sent.len()).map(|i| received.get(i).copied().unwrap_or(0)).collect();
    ber(sent, &aligned)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snr_cases() {
        let x = [1.0, -2.0, 3.0];
        assert_eq!(snr(&x, &x).unwrap(), f64::INFINITY);
        assert!((snr_from_energies(3000.0, 1.0) - 34.771_212_547_196_626).abs() < 1e-9);
        assert!(matches!(snr(&x, &[1.0]), Err(Error::Argument(_))));
        assert!(matches!(snr(&[0.0, 0.0], &[0.0, 1.0]), Err(Error::Domain(_))));
        // sign of the difference does not matter
        let up = [1.5, -2.0, 3.0];
        let down = [0.5, -2.0, 3.0];
        assert_eq!(snr(&x, &up).unwrap(), snr(&x, &down).unwrap());
    }

    #[test]
    fn ber_cases() {
        let a = vec![0u8, 1, 1, 0];
        assert_eq!(ber(&a, &a).unwrap(), 0.0);
        let flipped: Vec<u8> = a.iter().map(|b| 1 - b).collect();
        assert_eq!(ber(&a, &flipped).unwrap(), 100.0);
        let sent = vec![0u8; 100];
        let mut recv = sent.clone();
        for b in recv.iter_mut().take(5) {
            *b = 1;
        }
        assert_eq!(ber(&sent, &recv).unwrap(), 5.0);
        assert_eq!(ber(&recv, &sent).unwrap(), 5.0);
        assert!(ber(&a, &a[..2]).is_err());
        assert!(ber(&[], &[]).is_err());
        assert_eq!(positional_ber(&[1, 0, 1, 1], &[1, 0]).unwrap(), 50.0);
    }
}
