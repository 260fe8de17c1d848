//! Probability and hypothesis-testing primitives shared by the protocol
//! simulators: inverse error function, exact binomial and truncated Poisson
//! distributions, and the equal-prior likelihood-ratio test.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which of the two candidate objects (or images) a rule points to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Hypothesis {
    One,
    Two,
}

impl Hypothesis {
    pub fn index(self) -> usize {
        match self {
            Hypothesis::One => 0,
            Hypothesis::Two => 1,
        }
    }

    pub fn from_index(i: usize) -> Self {
        if i == 0 {
            Hypothesis::One
        } else {
            Hypothesis::Two
        }
    }

    pub fn other(self) -> Self {
        match self {
            Hypothesis::One => Hypothesis::Two,
            Hypothesis::Two => Hypothesis::One,
        }
    }
}

const NORMALIZATION_TOL: f64 = 1e-12;

/// A finite distribution over strictly increasing integer outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution {
    support: Vec<i64>,
    probs: Vec<f64>,
}

impl DiscreteDistribution {
    pub fn new(support: Vec<i64>, probs: Vec<f64>) -> Result<Self> {
        if support.len() != probs.len() {
            return Err(Error::domain("support and probability lengths differ"));
        }
        if support.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::domain("support must be strictly increasing"));
        }
        if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::domain("probabilities must be finite and non-negative"));
        }
        let total: f64 = probs.iter().sum();
        if !support.is_empty() && (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::domain(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        Ok(Self { support, probs })
    }

    /// Builds a distribution from raw weights, rescaling them to sum to one.
    fn from_weights(support: Vec<i64>, mut weights: Vec<f64>) -> Self {
        let total: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= total;
        }
        Self {
            support,
            probs: weights,
        }
    }

    pub fn support(&self) -> &[i64] {
        &self.support
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    /// Probability of `outcome`, zero off the support.
    pub fn prob(&self, outcome: i64) -> f64 {
        match self.support.binary_search(&outcome) {
            Ok(i) => self.probs[i],
            Err(_) => 0.0,
        }
    }

    pub fn mean(&self) -> f64 {
        self.support
            .iter()
            .zip(&self.probs)
            .map(|(&k, &p)| k as f64 * p)
            .sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.support
            .iter()
            .zip(&self.probs)
            .map(|(&k, &p)| (k as f64 - m).powi(2) * p)
            .sum()
    }
}

/// Result of the equal-prior Bayes (likelihood-ratio) test.
#[derive(Debug, Clone, PartialEq)]
pub struct BayesTestResult {
    /// Decision for every outcome in the union of both supports.
    pub decision_rule: BTreeMap<i64, Hypothesis>,
    pub error_prob: f64,
    /// When the rule splits the outcomes (ignoring outcomes of zero mass under
    /// both hypotheses) into a lower block and an upper block, this is the
    /// largest outcome of the lower block.
    pub threshold: Option<Threshold>,
}

/// A monotone decision rule: outcomes `<= value` go to `lower`, the rest to
/// `lower.other()`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Threshold {
    pub value: i64,
    pub lower: Hypothesis,
}

impl Threshold {
    pub fn decide(&self, outcome: i64) -> Hypothesis {
        if outcome <= self.value {
            self.lower
        } else {
            self.lower.other()
        }
    }
}

/// Inverse of the error function on (-1, 1).
///
/// Starts from Winitzki's closed-form approximation and polishes with Newton
/// steps on `erf` until the update falls below 1e-12.
pub fn erf_inverse(p: f64) -> Result<f64> {
    if !(p.abs() < 1.0) {
        return Err(Error::domain(format!("erf_inverse needs |p| < 1, got {p}")));
    }
    if p == 0.0 {
        return Ok(0.0);
    }
    let a = 0.147;
    let ln = (1.0 - p * p).ln();
    let t = 2.0 / (std::f64::consts::PI * a) + ln / 2.0;
    let mut x = ((t * t - ln / a).sqrt() - t).sqrt().copysign(p);
    let two_over_sqrt_pi = std::f64::consts::FRAC_2_SQRT_PI;
    for _ in 0..100 {
        let deriv = two_over_sqrt_pi * (-x * x).exp();
        if deriv == 0.0 {
            break;
        }
        let step = (libm::erf(x) - p) / deriv;
        x -= step;
        if step.abs() <= 1e-12 * x.abs().max(1.0) {
            break;
        }
    }
    Ok(x)
}

/// `gamma(P_E) = erf^-1(1 - 2 P_E)`, the Gaussian separation factor for a
/// target error probability.
pub fn gamma(target_pe: f64) -> Result<f64> {
    erf_inverse(1.0 - 2.0 * target_pe)
}

fn ln_choose(n: u64, k: u64) -> f64 {
    libm::lgamma(n as f64 + 1.0) - libm::lgamma(k as f64 + 1.0) - libm::lgamma((n - k) as f64 + 1.0)
}

/// Binomial(n, p) probability of `k` successes.
pub fn binomial_pmf(n: u64, p: f64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    if p == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if p == 1.0 {
        return if k == n { 1.0 } else { 0.0 };
    }
    (ln_choose(n, k) + k as f64 * p.ln() + (n - k) as f64 * (-p).ln_1p()).exp()
}

/// Exact binomial distribution over `0..=n`.
pub fn binomial(n: u64, p: f64) -> Result<DiscreteDistribution> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain(format!("binomial needs 0 <= p <= 1, got {p}")));
    }
    let support: Vec<i64> = (0..=n as i64).collect();
    let weights: Vec<f64> = (0..=n).map(|k| binomial_pmf(n, p, k)).collect();
    Ok(DiscreteDistribution::from_weights(support, weights))
}

/// Poisson distribution truncated at `mean + 12 sqrt(mean)`, with the tail
/// mass folded into the last bin.
pub fn poisson(mean: f64) -> Result<DiscreteDistribution> {
    if !(mean.is_finite() && mean >= 0.0) {
        return Err(Error::domain(format!("poisson needs a finite mean >= 0, got {mean}")));
    }
    poisson_with_cutoff(mean, poisson_cutoff(mean))
}

/// Default truncation point `ceil(mean + 12 sqrt(mean))`.
pub fn poisson_cutoff(mean: f64) -> i64 {
    (mean + 12.0 * mean.sqrt()).ceil() as i64
}

/// Poisson distribution on `0..=cutoff` with the tail folded into `cutoff`.
/// Two laws compared by a test should share a cutoff.
pub fn poisson_with_cutoff(mean: f64, cutoff: i64) -> Result<DiscreteDistribution> {
    if !(mean.is_finite() && mean >= 0.0) || cutoff < 0 {
        return Err(Error::domain(format!("invalid poisson mean {mean} or cutoff {cutoff}")));
    }
    if mean == 0.0 {
        let mut w = vec![0.0; cutoff as usize + 1];
        w[0] = 1.0;
        return Ok(DiscreteDistribution::from_weights((0..=cutoff).collect(), w));
    }
    let ln_mean = mean.ln();
    let mut weights: Vec<f64> = (0..=cutoff)
        .map(|k| (k as f64 * ln_mean - mean - libm::lgamma(k as f64 + 1.0)).exp())
        .collect();
    let head: f64 = weights[..weights.len() - 1].iter().sum();
    let last = weights.len() - 1;
    weights[last] = (1.0 - head).max(weights[last]);
    Ok(DiscreteDistribution::from_weights((0..=cutoff).collect(), weights))
}

/// Equal-prior likelihood-ratio test between two distributions on a common
/// (zero-padded) support. Ties go to hypothesis one.
pub fn optimal_binary_test(
    d1: &DiscreteDistribution,
    d2: &DiscreteDistribution,
) -> Result<BayesTestResult> {
    if d1.is_empty() && d2.is_empty() {
        return Err(Error::domain("optimal_binary_test on an empty support"));
    }
    let mut outcomes: Vec<i64> = d1.support().iter().chain(d2.support()).copied().collect();
    outcomes.sort_unstable();
    outcomes.dedup();

    let mut rule = BTreeMap::new();
    let mut error = 0.0;
    // Decisions on outcomes carrying mass, for the monotonicity check.
    let mut massive: Vec<(i64, Hypothesis)> = Vec::new();
    for &x in &outcomes {
        let (p1, p2) = (d1.prob(x), d2.prob(x));
        let h = if p1 >= p2 { Hypothesis::One } else { Hypothesis::Two };
        rule.insert(x, h);
        error += p1.min(p2);
        if p1 > 0.0 || p2 > 0.0 {
            massive.push((x, h));
        }
    }
    let error_prob = (0.5 * error).min(0.5);
    let threshold = monotone_threshold(&massive);
    Ok(BayesTestResult {
        decision_rule: rule,
        error_prob,
        threshold,
    })
}

fn monotone_threshold(decisions: &[(i64, Hypothesis)]) -> Option<Threshold> {
    let first = decisions.first()?.1;
    let switches = decisions.windows(2).filter(|w| w[0].1 != w[1].1).count();
    match switches {
        0 => Some(Threshold {
            value: decisions.last()?.0,
            lower: first,
        }),
        1 => {
            let cut = decisions.iter().take_while(|(_, h)| *h == first).last()?.0;
            Some(Threshold {
                value: cut,
                lower: first,
            })
        }
        _ => None,
    }
}

/// Smallest trial count `N` whose Gaussian separation
/// `N * gap / (2 sigma sqrt(N))` reaches `sqrt(2) gamma(target_pe)`,
/// i.e. `N >= 8 sigma^2 gamma^2 / gap^2`.
pub fn gaussian_trial_count(mu_gap_per_trial: f64, sigma_per_trial: f64, target_pe: f64) -> Result<u64> {
    if !(target_pe > 0.0 && target_pe < 0.5) {
        return Err(Error::domain(format!("target_pe must lie in (0, 1/2), got {target_pe}")));
    }
    if !(mu_gap_per_trial > 0.0 && mu_gap_per_trial.is_finite()) {
        return Err(Error::domain("mean gap per trial must be positive"));
    }
    if !(sigma_per_trial > 0.0 && sigma_per_trial.is_finite()) {
        return Err(Error::domain("sigma per trial must be positive"));
    }
    let g = gamma(target_pe)?;
    let exact = 8.0 * sigma_per_trial.powi(2) * g * g / mu_gap_per_trial.powi(2);
    if exact > 1e15 {
        return Err(Error::Resource(format!("required trial count {exact:.3e} is too large")));
    }
    let mut n = exact.ceil().max(1.0) as u64;
    // Guard against ceil landing one above the root after rounding.
    while n > 1 && ((n - 1) as f64) >= exact * (1.0 + 1e-12) {
        n -= 1;
    }
    Ok(n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_mean_var(n: u64, p: f64) -> (f64, f64) {
        // Direct summation with the pmf written out independently.
        let mut mean = 0.0;
        let mut second = 0.0;
        for k in 0..=n {
            let mut c = 1.0f64;
            for i in 0..k {
                c *= (n - i) as f64 / (i + 1) as f64;
            }
            let pk = c * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32);
            mean += k as f64 * pk;
            second += (k * k) as f64 * pk;
        }
        (mean, second - mean * mean)
    }

    #[test]
    fn erf_inverse_reference_values() {
        assert_eq!(erf_inverse(0.0).unwrap(), 0.0);
        // gamma(0.1) ~ 0.91 and gamma(0.01) ~ 1.65.
        let g1 = gamma(0.1).unwrap();
        let g2 = gamma(0.01).unwrap();
        assert!((g1 - 0.906).abs() < 1e-3, "{g1}");
        assert!((g2 - 1.645).abs() < 1e-3, "{g2}");
        assert!((erf_inverse(-0.8).unwrap() + g1).abs() < 1e-15);
    }

    #[test]
    fn erf_inverse_rejects_boundary() {
        assert!(matches!(erf_inverse(1.0), Err(Error::Domain(_))));
        assert!(matches!(erf_inverse(-1.5), Err(Error::Domain(_))));
        assert!(erf_inverse(f64::NAN).is_err());
    }

    #[test]
    fn erf_inverse_round_trips_across_range() {
        for i in -999..=999 {
            let p = i as f64 / 1000.0;
            let x = erf_inverse(p).unwrap();
            assert!((libm::erf(x) - p).abs() < 1e-10, "p={p}");
        }
    }

    #[test]
    fn binomial_small_cases() {
        let d = binomial(1, 0.36).unwrap();
        assert!((d.prob(0) - 0.64).abs() < 1e-15);
        assert!((d.prob(1) - 0.36).abs() < 1e-15);
        let d = binomial(2, 0.5).unwrap();
        assert!((d.prob(0) - 0.25).abs() < 1e-15);
        assert!((d.prob(1) - 0.5).abs() < 1e-15);
        assert!((d.prob(2) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn binomial_moments_match_direct_summation() {
        let (m, v) = brute_mean_var(50, 0.36);
        assert!((m - 18.0).abs() < 1e-10);
        assert!((v - 11.52).abs() < 1e-10);
        let d = binomial(50, 0.36).unwrap();
        assert!((d.mean() - m).abs() < 1e-10);
        assert!((d.variance() - v).abs() < 1e-10);
    }

    #[test]
    fn binomial_edges() {
        let d = binomial(5, 0.0).unwrap();
        assert_eq!(d.prob(0), 1.0);
        let d = binomial(5, 1.0).unwrap();
        assert_eq!(d.prob(5), 1.0);
        assert!(binomial(3, 1.2).is_err());
        let d = binomial(0, 0.3).unwrap();
        assert_eq!(d.support(), &[0]);
    }

    #[test]
    fn poisson_is_normalized_with_folded_tail() {
        let d = poisson(25.0).unwrap();
        let total: f64 = d.probs().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert_eq!(*d.support().last().unwrap(), 85);
        assert!((d.mean() - 25.0).abs() < 1e-9);
        assert_eq!(poisson(0.0).unwrap().support(), &[0]);
        assert!(poisson(-1.0).is_err());
    }

    #[test]
    fn distribution_validation() {
        assert!(DiscreteDistribution::new(vec![0, 1], vec![0.5, 0.5]).is_ok());
        assert!(DiscreteDistribution::new(vec![1, 0], vec![0.5, 0.5]).is_err());
        assert!(DiscreteDistribution::new(vec![0, 1], vec![0.7, 0.5]).is_err());
        assert!(DiscreteDistribution::new(vec![0, 1], vec![1.5, -0.5]).is_err());
    }

    #[test]
    fn identical_distributions_are_a_coin_flip() {
        let d = binomial(10, 0.3).unwrap();
        let t = optimal_binary_test(&d, &d).unwrap();
        assert!((t.error_prob - 0.5).abs() < 1e-12);
    }

    #[test]
    fn two_outcome_test_by_hand() {
        // P(0|1)=0.64, P(0|2)=0.51; P(1|1)=0.36, P(1|2)=0.49.
        let t = optimal_binary_test(&binomial(1, 0.36).unwrap(), &binomial(1, 0.49).unwrap()).unwrap();
        assert_eq!(t.decision_rule[&0], Hypothesis::One);
        assert_eq!(t.decision_rule[&1], Hypothesis::Two);
        assert!((t.error_prob - 0.435).abs() < 1e-12);
        assert_eq!(
            t.threshold,
            Some(Threshold {
                value: 0,
                lower: Hypothesis::One
            })
        );
    }

    #[test]
    fn disjoint_supports_have_zero_error() {
        let t = optimal_binary_test(&binomial(1, 0.0).unwrap(), &binomial(1, 1.0).unwrap()).unwrap();
        assert_eq!(t.error_prob, 0.0);
    }

    #[test]
    fn empty_support_is_rejected() {
        let e = DiscreteDistribution::new(vec![], vec![]).unwrap();
        assert!(optimal_binary_test(&e, &e).is_err());
    }

    #[test]
    fn trial_count_examples() {
        // Counting protocol at alpha=0.6, eps=0.01.
        assert_eq!(gaussian_trial_count(0.024, 0.48, 0.1).unwrap(), 2628);
        let g = gamma(0.1).unwrap();
        assert_eq!(gaussian_trial_count(1.0, 0.5, 0.1).unwrap(), (2.0 * g * g).ceil() as u64);
        let n1 = gaussian_trial_count(0.01, 0.5, 0.05).unwrap() as f64;
        let n2 = gaussian_trial_count(0.02, 0.5, 0.05).unwrap() as f64;
        assert!((n1 / n2 - 4.0).abs() < 4.0 / n2 + 1e-9);
        assert!(gaussian_trial_count(0.1, 0.5, 0.5).is_err());
        assert!(gaussian_trial_count(0.1, 0.5, 0.0).is_err());
    }

    #[test]
    fn threshold_sweep_never_beats_bayes() {
        let d1 = binomial(40, 0.3).unwrap();
        let d2 = binomial(40, 0.45).unwrap();
        let bayes = optimal_binary_test(&d1, &d2).unwrap();
        for t in -1..=40 {
            let err = 0.5
                * ((t + 1..=40).map(|k| d1.prob(k)).sum::<f64>()
                    + (0..=t).map(|k| d2.prob(k)).sum::<f64>());
            assert!(bayes.error_prob <= err + 1e-15);
        }
    }
}
