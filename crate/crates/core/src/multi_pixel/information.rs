use serde::{Deserialize, Serialize};

use super::collective::HadamardInstance;
use super::hadamard::sylvester_entry;
use crate::error::{Error, Result};

/// Information one photon through a single pixel carries about the hidden row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MutualInformation {
    /// `H(A) + H(R) - H(A, R)` from the exact joint law, in bits.
    pub exact_bits: f64,
    /// Second-order expansion `2 eps^2 / (beta^2 ln 2) * Var_pi(H[.][i])`.
    pub approx_bits: f64,
    /// Prior-independent ceiling `2 eps^2 / (beta^2 ln 2)`.
    pub cap_bits: f64,
}

fn entropy_term(p: f64) -> f64 {
    if p > 0.0 {
        -p * p.log2()
    } else {
        0.0
    }
}

fn binary_entropy(p: f64) -> f64 {
    entropy_term(p) + entropy_term(1.0 - p)
}

/// `priors[q]` is the prior weight of row `q`; `pixel` is 0-based.
pub fn pixel_mutual_information(inst: &HadamardInstance, pixel: usize, priors: &[f64]) -> Result<MutualInformation> {
    let m = inst.pixels();
    if pixel >= m {
        return Err(Error::domain(format!("pixel {pixel} out of range for M = {m}")));
    }
    if priors.len() != m || priors.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
        return Err(Error::domain(format!("priors must be {m} non-negative numbers")));
    }
    let total: f64 = priors.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::domain(format!("priors sum to {total}, not 1")));
    }
    let beta2 = 1.0 - inst.alpha * inst.alpha;
    if beta2 <= 0.0 || inst.alpha <= 0.0 {
        return Err(Error::domain("the expansion needs 0 < alpha < 1"));
    }

    // I = H(X) - sum_q pi_q H(X | q), X = transmit/absorb.
    let mut p_transmit = 0.0;
    let mut conditional = 0.0;
    let (mut mean_h, mut mean_h2) = (0.0, 0.0);
    for (q, &w) in priors.iter().enumerate() {
        let h = sylvester_entry(q, pixel);
        let t = inst.transparency(q, pixel).powi(2);
        p_transmit += w * t;
        conditional += w * binary_entropy(t);
        mean_h += w * h;
        mean_h2 += w * h * h;
    }
    let exact_bits = (binary_entropy(p_transmit) - conditional).max(0.0);
    let cap_bits = 2.0 * inst.eps * inst.eps / (beta2 * std::f64::consts::LN_2);
    let approx_bits = cap_bits * (mean_h2 - mean_h * mean_h);
    Ok(MutualInformation { exact_bits, approx_bits, cap_bits })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform(m: usize) -> Vec<f64> {
        vec![1.0 / m as f64; m]
    }

    #[test]
    fn no_contrast_no_information() {
        let inst = HadamardInstance::new(3, 2, 0.6, 0.0).unwrap();
        let mi = pixel_mutual_information(&inst, 5, &uniform(8)).unwrap();
        assert_eq!(mi.exact_bits, 0.0);
        assert_eq!(mi.approx_bits, 0.0);
    }

    #[test]
    fn uniform_priors_reach_the_cap() {
        let inst = HadamardInstance::new(3, 2, 0.6, 0.01).unwrap();
        for i in 1..8 {
            let mi = pixel_mutual_information(&inst, i, &uniform(8)).unwrap();
            assert_eq!(mi.approx_bits, mi.cap_bits);
        }
        // Column 0 is all +1: the outcome says nothing about the row.
        let mi = pixel_mutual_information(&inst, 0, &uniform(8)).unwrap();
        assert_eq!(mi.approx_bits, 0.0);
        assert!(mi.exact_bits < 1e-15);
    }

    #[test]
    fn expansion_converges() {
        let inst = HadamardInstance::new(2, 1, 0.6, 1e-3).unwrap();
        let priors = [0.1, 0.2, 0.3, 0.4];
        for i in 1..4 {
            let mi = pixel_mutual_information(&inst, i, &priors).unwrap();
            assert!((mi.exact_bits / mi.approx_bits - 1.0).abs() < 0.01);
        }
    }

    #[test]
    fn bad_priors() {
        let inst = HadamardInstance::new(1, 1, 0.6, 0.1).unwrap();
        assert!(pixel_mutual_information(&inst, 0, &[0.5, 0.6]).is_err());
        assert!(pixel_mutual_information(&inst, 0, &[1.5, -0.5]).is_err());
        assert!(pixel_mutual_information(&inst, 0, &[1.0]).is_err());
        assert!(pixel_mutual_information(&inst, 2, &[0.5, 0.5]).is_err());
    }
}
