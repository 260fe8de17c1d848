//! Single-pixel protocols: transmission counting with a number-state or
//! Poisson source, and the k-pass Mach-Zehnder interferometer.
//!
//! Each protocol has an analytic planner (photon budget, decision rule,
//! predicted error and absorption) and a seeded Monte Carlo executor.

use num_complex::Complex64;
use rand_distr::{Binomial, Distribution, Geometric, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::TwoObjectTask;
use crate::error::{Error, Result};
use crate::seed::{stream, SimRng};
use crate::stats::{
    binomial, binomial_pmf, gaussian_trial_count, optimal_binary_test, poisson_cutoff, poisson_with_cutoff,
    Hypothesis, Threshold,
};

const MODULUS_TOL: f64 = 1e-9;

/// Photon source for the counting protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    /// Exactly `N` photons, sent one by one.
    Fock,
    /// Coherent light with mean photon number `N`.
    Poisson,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CountingPlan {
    pub source: Source,
    /// Photons sent (mean photon number for a Poisson source).
    pub n: u64,
    /// Transmitted counts `<= threshold.value` are attributed to `threshold.lower`.
    pub threshold: Threshold,
    /// Exact error of the likelihood-ratio test on the transmitted count.
    pub predicted_pe: f64,
    /// `beta^2 N` with `beta` taken at the mean amplitude.
    pub predicted_nabs: f64,
    /// `(1 - |alpha_i|^2) N` for each object.
    pub predicted_nabs_per_object: [f64; 2],
}

impl CountingPlan {
    /// Mean absorption over both objects with equal priors.
    pub fn expected_absorbed(&self) -> f64 {
        0.5 * (self.predicted_nabs_per_object[0] + self.predicted_nabs_per_object[1])
    }
}

fn check_target(target_pe: f64) -> Result<()> {
    if !(target_pe > 0.0 && target_pe <= 0.5) {
        return Err(Error::domain(format!("target_pe must lie in (0, 1/2], got {target_pe}")));
    }
    Ok(())
}

/// Plans transmission counting: photon budget from the Gaussian separation
/// rule, decision threshold and error from the exact count distributions.
pub fn plan_counting(task: &TwoObjectTask, target_pe: f64, source: Source) -> Result<CountingPlan> {
    check_target(target_pe)?;
    let p = [task.alpha1.norm_sqr(), task.alpha2.norm_sqr()];
    let gap = (p[1] - p[0]).abs();
    if gap <= MODULUS_TOL * p[0].max(p[1]).max(f64::MIN_POSITIVE) {
        return Err(Error::CountingFails);
    }
    let alpha = task.alpha_mean.norm();
    let sigma = match source {
        Source::Fock => alpha * task.beta_mean,
        Source::Poisson => alpha,
    };
    let n = if target_pe == 0.5 {
        0
    } else {
        gaussian_trial_count(gap, sigma, target_pe)?
    };
    let cutoff = poisson_cutoff(n as f64 * p[0].max(p[1]));
    let dist = |q: f64| match source {
        Source::Fock => binomial(n, q),
        Source::Poisson => poisson_with_cutoff(n as f64 * q, cutoff),
    };
    let test = optimal_binary_test(&dist(p[0])?, &dist(p[1])?)?;
    let threshold = test
        .threshold
        .ok_or_else(|| Error::Validation("count likelihood ratio is not monotone".into()))?;
    let nf = n as f64;
    Ok(CountingPlan {
        source,
        n,
        threshold,
        predicted_pe: test.error_prob,
        predicted_nabs: task.beta_mean.powi(2) * nf,
        predicted_nabs_per_object: [(1.0 - p[0]) * nf, (1.0 - p[1]) * nf],
    })
}

/// One simulated experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub true_object: Hypothesis,
    pub guessed: Hypothesis,
    pub absorbed: u64,
    /// Transmitted photons (counting) or arm-0 detections (interferometer).
    pub detected: u64,
}

impl TrialOutcome {
    pub fn is_error(&self) -> bool {
        self.true_object != self.guessed
    }
}

fn sample_binomial(rng: &mut SimRng, n: u64, p: f64) -> u64 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    Binomial::new(n, p).expect("p checked in range").sample(rng)
}

/// Runs the counting protocol once against `true_object`.
pub fn run_counting(plan: &CountingPlan, task: &TwoObjectTask, true_object: Hypothesis, seed: u64) -> TrialOutcome {
    counting_trial(plan, task, true_object, &mut stream(seed, &[]))
}

fn counting_trial(plan: &CountingPlan, task: &TwoObjectTask, truth: Hypothesis, rng: &mut SimRng) -> TrialOutcome {
    let t = task.transparency(truth.index()).alpha().norm_sqr();
    let (sent, transmitted) = match plan.source {
        Source::Fock => (plan.n, sample_binomial(rng, plan.n, t)),
        Source::Poisson => {
            let sent = if plan.n == 0 {
                0
            } else {
                Poisson::new(plan.n as f64).expect("positive mean").sample(rng) as u64
            };
            (sent, sample_binomial(rng, sent, t))
        }
    };
    TrialOutcome {
        true_object: truth,
        guessed: plan.threshold.decide(transmitted as i64),
        absorbed: sent - transmitted,
        detected: transmitted,
    }
}

/// Aggregate of a batch of seeded trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloSummary {
    pub trials: u64,
    pub errors: u64,
    pub error_rate: f64,
    /// Binomial standard error of `error_rate`.
    pub error_se: f64,
    pub mean_absorbed: f64,
    pub absorbed_se: f64,
}

impl MonteCarloSummary {
    pub fn from_outcomes(outcomes: &[TrialOutcome]) -> Self {
        let absorbed: Vec<f64> = outcomes.iter().map(|o| o.absorbed as f64).collect();
        let errors = outcomes.iter().filter(|o| o.is_error()).count() as u64;
        Self::from_parts(errors, &absorbed)
    }

    pub fn from_parts(errors: u64, absorbed: &[f64]) -> Self {
        let n = absorbed.len() as u64;
        let nf = n.max(1) as f64;
        let rate = errors as f64 / nf;
        let (mean, se) = mean_and_se(absorbed);
        Self {
            trials: n,
            errors,
            error_rate: rate,
            error_se: (rate * (1.0 - rate) / nf).sqrt(),
            mean_absorbed: mean,
            absorbed_se: se,
        }
    }
}

/// Sample mean and its standard error; summation in slice order.
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Truth for trial `t`: objects alternate so both priors are equal.
pub fn truth_for_trial(t: u64) -> Hypothesis {
    Hypothesis::from_index((t % 2) as usize)
}

/// Runs `trials` independent counting experiments; trial `t` draws from
/// stream `(master_seed, sweep_index, t)`.
pub fn simulate_counting(
    plan: &CountingPlan,
    task: &TwoObjectTask,
    trials: u64,
    master_seed: u64,
    sweep_index: u64,
) -> Vec<TrialOutcome> {
    (0..trials)
        .into_par_iter()
        .map(|t| counting_trial(plan, task, truth_for_trial(t), &mut stream(master_seed, &[sweep_index, t])))
        .collect()
}

/// Passes through the object per photon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PassCount {
    Fixed(u32),
    /// `k = round(1/delta)` with `|alpha| = 1 - delta`.
    Auto,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterferometerPlan {
    pub k: u32,
    /// Photons launched.
    pub n: u64,
    /// Photons that must survive for the arm-0 statistic to reach the target.
    pub n_detected: u64,
    /// Common modulus `|alpha_1| = |alpha_2|`.
    pub alpha: f64,
    /// Half the relative phase: `alpha_{1,2} = alpha e^{-+ i eta}` after global-phase removal.
    pub eta: f64,
    /// Arm-0 probability given survival, per object.
    pub chi: [f64; 2],
    /// Per-photon survival probability `(1 + alpha^{2k}) / 2`.
    pub survival: f64,
    /// Exact error of the likelihood-ratio test on the arm-0 count.
    pub predicted_pe: f64,
    /// `N (1 - alpha^{2k}) / 2`.
    pub predicted_nabs: f64,
}

impl InterferometerPlan {
    pub fn absorption_per_photon(&self) -> f64 {
        1.0 - self.survival
    }
}

/// Output probabilities `(absorbed, arm 0, arm 1)` for one photon: the first
/// splitter sends amplitude `1/sqrt2` into each arm, the object arm picks up
/// `amp^k`, and the second splitter maps `(a0, a1)` to
/// `((a0 + i a1)/sqrt2, (i a0 + a1)/sqrt2)`.
pub fn photon_outcome_probs(amp: Complex64, k: u32) -> [f64; 3] {
    let i = Complex64::new(0.0, 1.0);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let a0 = Complex64::new(h, 0.0);
    let a1 = amp.powu(k) * h;
    let out0 = (a0 + i * a1) * h;
    let out1 = (i * a0 + a1) * h;
    let (p0, p1) = (out0.norm_sqr(), out1.norm_sqr());
    [(1.0 - p0 - p1).max(0.0), p0, p1]
}

/// Removes the global phase: returns `(alpha, eta)` with `alpha_{1,2} = alpha e^{-+ i eta}`.
fn phase_only_form(task: &TwoObjectTask) -> Result<(f64, f64)> {
    let (r1, r2) = (task.alpha1.norm(), task.alpha2.norm());
    if (r1 - r2).abs() > MODULUS_TOL * r1.max(r2) {
        return Err(Error::Regime(format!(
            "interferometry here needs |alpha1| = |alpha2| (got {r1} and {r2}); use counting"
        )));
    }
    if r1 == 0.0 {
        return Err(Error::Regime("opaque objects transmit nothing".into()));
    }
    let rel = (task.alpha1.conj() * task.alpha2).arg();
    Ok((0.5 * (r1 + r2), 0.5 * rel))
}

/// `chi_i = |1 + i a_i^k|^2 / (2 (1 + |a_i|^{2k}))`.
pub fn arm0_given_survival(amp: Complex64, k: u32) -> f64 {
    let i = Complex64::new(0.0, 1.0);
    (Complex64::new(1.0, 0.0) + i * amp.powu(k)).norm_sqr() / (2.0 * (1.0 + amp.norm_sqr().powi(k as i32)))
}

pub fn plan_interferometer(task: &TwoObjectTask, passes: PassCount, target_pe: f64) -> Result<InterferometerPlan> {
    check_target(target_pe)?;
    let (alpha, eta) = phase_only_form(task)?;
    let k = match passes {
        PassCount::Fixed(0) => return Err(Error::domain("k must be at least 1")),
        PassCount::Fixed(k) => k,
        PassCount::Auto => {
            let delta = 1.0 - alpha;
            if delta <= 0.0 {
                return Err(Error::Regime("automatic k needs |alpha| < 1".into()));
            }
            let k = (1.0 / delta).round().max(1.0);
            if k > 1e6 {
                return Err(Error::Resource(format!("k = {k} passes is too many")));
            }
            k as u32
        }
    };
    let amps = [Complex64::from_polar(alpha, -eta), Complex64::from_polar(alpha, eta)];
    let chi = [arm0_given_survival(amps[0], k), arm0_given_survival(amps[1], k)];
    let gap = (chi[1] - chi[0]).abs();
    if gap == 0.0 {
        return Err(Error::precondition("the two objects give identical arm-0 statistics"));
    }
    let a2k = alpha.powi(2 * k as i32);
    let survival = 0.5 * (1.0 + a2k);
    let n_detected = if target_pe == 0.5 {
        0
    } else {
        gaussian_trial_count(gap, 0.5, target_pe)?
    };
    let n = (n_detected as f64 / survival).ceil() as u64;
    let predicted_pe = interferometer_error(n, survival, chi);
    Ok(InterferometerPlan {
        k,
        n,
        n_detected,
        alpha,
        eta,
        chi,
        survival,
        predicted_pe,
        predicted_nabs: n as f64 * (1.0 - a2k) / 2.0,
    })
}

/// Log-likelihood-ratio decision on `arm0` detections among `survivors`;
/// ties go to object one.
fn decide_arm0(chi: [f64; 2], survivors: u64, arm0: u64) -> Hypothesis {
    let ll = |c: f64| {
        let a = if arm0 == 0 { 0.0 } else { arm0 as f64 * c.ln() };
        let b = if survivors == arm0 { 0.0 } else { (survivors - arm0) as f64 * (-c).ln_1p() };
        a + b
    };
    if ll(chi[0]) >= ll(chi[1]) {
        Hypothesis::One
    } else {
        Hypothesis::Two
    }
}

/// Exact error of the arm-0 test: the survivor count has the same law under
/// both objects, so the error is the survivor-weighted binomial Bayes error.
/// Terms are summed in survivor order so the result is reproducible.
fn interferometer_error(n: u64, survival: f64, chi: [f64; 2]) -> f64 {
    let window = |mean: f64, sd: f64, hi: u64| {
        let lo = (mean - 12.0 * sd - 1.0).floor().max(0.0) as u64;
        let top = ((mean + 12.0 * sd + 1.0).ceil() as u64).min(hi);
        lo..=top
    };
    let sd_s = (n as f64 * survival * (1.0 - survival)).sqrt();
    window(n as f64 * survival, sd_s, n)
        .into_par_iter()
        .map(|s| {
            let w = binomial_pmf(n, survival, s);
            if w < 1e-300 {
                return 0.0;
            }
            let mid = s as f64 * 0.5 * (chi[0] + chi[1]);
            let sd = (s as f64 * 0.25).sqrt();
            let err: f64 = window(mid, sd + 2.0 * s as f64 * (chi[0] - chi[1]).abs(), s)
                .map(|x| binomial_pmf(s, chi[0], x).min(binomial_pmf(s, chi[1], x)))
                .sum();
            w * 0.5 * err
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum::<f64>()
        .min(0.5)
}

fn interferometer_trial(
    plan: &InterferometerPlan,
    truth: Hypothesis,
    rng: &mut SimRng,
) -> TrialOutcome {
    let sign = if truth == Hypothesis::One { -1.0 } else { 1.0 };
    let [p_abs, p0, _] = photon_outcome_probs(Complex64::from_polar(plan.alpha, sign * plan.eta), plan.k);
    let absorbed = sample_binomial(rng, plan.n, p_abs);
    let survivors = plan.n - absorbed;
    let arm0 = sample_binomial(rng, survivors, p0 / (1.0 - p_abs));
    TrialOutcome {
        true_object: truth,
        guessed: decide_arm0(plan.chi, survivors, arm0),
        absorbed,
        detected: arm0,
    }
}

/// Runs the interferometer once: each photon is absorbed, detected in arm 0,
/// or detected in arm 1, with probabilities from the beam-splitter amplitudes.
pub fn run_interferometer(
    plan: &InterferometerPlan,
    _task: &TwoObjectTask,
    true_object: Hypothesis,
    seed: u64,
) -> TrialOutcome {
    interferometer_trial(plan, true_object, &mut stream(seed, &[]))
}

pub fn simulate_interferometer(
    plan: &InterferometerPlan,
    trials: u64,
    master_seed: u64,
    sweep_index: u64,
) -> Vec<TrialOutcome> {
    (0..trials)
        .into_par_iter()
        .map(|t| interferometer_trial(plan, truth_for_trial(t), &mut stream(master_seed, &[sweep_index, t])))
        .collect()
}

/// Builds the phase-only task `alpha e^{-+ i eta}` with `|eps| = alpha sin(eta) = eps`.
pub fn phase_only_task(alpha: f64, eps: f64) -> Result<TwoObjectTask> {
    if !(alpha > 0.0 && eps >= 0.0 && eps <= alpha) {
        return Err(Error::domain("phase-only task needs 0 <= eps <= alpha"));
    }
    let eta = (eps / alpha).asin();
    crate::domain::make_task(Complex64::from_polar(alpha, -eta), Complex64::from_polar(alpha, eta))
}

/// Repeats an attempt that absorbs one photon with probability `p_abs` until
/// an attempt absorbs nothing; returns the absorbed count of each trial.
/// Trial `t` draws from stream `(master_seed, sweep_index, t)`.
pub fn simulate_repeat_until_clean(p_abs: f64, trials: u64, master_seed: u64, sweep_index: u64) -> Result<Vec<u64>> {
    if !(0.0..1.0).contains(&p_abs) {
        return Err(Error::domain(format!("absorption probability must lie in [0, 1), got {p_abs}")));
    }
    let clean = Geometric::new(1.0 - p_abs).map_err(|e| Error::domain(e.to_string()))?;
    Ok((0..trials)
        .into_par_iter()
        .map(|t| clean.sample(&mut stream(master_seed, &[sweep_index, t])))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::make_real_task;
    use crate::stats::gamma;

    #[test]
    fn repetition_mean() {
        let p = 0.3;
        let xs: Vec<f64> = simulate_repeat_until_clean(p, 20_000, 1, 0).unwrap().into_iter().map(|x| x as f64).collect();
        let (mean, se) = mean_and_se(&xs);
        assert!((mean - p / (1.0 - p)).abs() < 4.0 * se);
        assert!(simulate_repeat_until_clean(1.0, 1, 1, 0).is_err());
    }

    #[test]
    fn counting_plan_matches_closed_form() {
        let t = make_real_task(0.59, 0.61).unwrap();
        let plan = plan_counting(&t, 0.1, Source::Fock).unwrap();
        assert_eq!(plan.n, 2628);
        assert!((plan.predicted_nabs - 0.64 * 2628.0).abs() < 1e-9);
        let g = gamma(0.1).unwrap();
        let nc2 = 0.8f64.powi(4) * g * g / (2.0 * 1e-4);
        assert!((plan.predicted_nabs / nc2 - 1.0).abs() < 1e-3);
        let mu = [0.3481 * 2628.0, 0.3721 * 2628.0];
        let th = plan.threshold.value as f64;
        assert!(mu[0] <= th && th <= mu[1]);
        assert_eq!(plan.threshold.lower, Hypothesis::One);
        assert!(plan.predicted_pe > 0.08 && plan.predicted_pe < 0.12);
    }

    #[test]
    fn phase_only_counting_fails() {
        let t = phase_only_task(0.8, 0.01).unwrap();
        assert_eq!(plan_counting(&t, 0.1, Source::Fock), Err(Error::CountingFails));
        assert_eq!(plan_counting(&t, 0.1, Source::Poisson), Err(Error::CountingFails));
    }

    #[test]
    fn guessing_is_free() {
        let t = make_real_task(0.59, 0.61).unwrap();
        let plan = plan_counting(&t, 0.5, Source::Fock).unwrap();
        assert_eq!(plan.n, 0);
        assert_eq!(plan.predicted_pe, 0.5);
        assert_eq!(plan.predicted_nabs, 0.0);
    }

    #[test]
    fn poisson_source_loses_a_beta_squared() {
        let t = make_real_task(0.59, 0.61).unwrap();
        let fock = plan_counting(&t, 0.1, Source::Fock).unwrap();
        let coh = plan_counting(&t, 0.1, Source::Poisson).unwrap();
        let ratio = fock.predicted_nabs / coh.predicted_nabs;
        assert!((ratio - 0.64).abs() < 1e-3, "{ratio}");
        assert!(coh.predicted_pe < 0.12);
    }

    #[test]
    fn transparent_and_opaque_objects() {
        let t = make_real_task(0.0, 1.0).unwrap();
        let plan = CountingPlan {
            source: Source::Fock,
            n: 50,
            threshold: Threshold { value: 0, lower: Hypothesis::One },
            predicted_pe: 0.0,
            predicted_nabs: 0.0,
            predicted_nabs_per_object: [50.0, 0.0],
        };
        for seed in 0..10 {
            let o = run_counting(&plan, &t, Hypothesis::Two, seed);
            assert_eq!((o.detected, o.absorbed), (50, 0));
            let o = run_counting(&plan, &t, Hypothesis::One, seed);
            assert_eq!((o.detected, o.guessed), (0, Hypothesis::One));
        }
    }

    #[test]
    fn beam_splitter_probabilities_match_closed_form() {
        for &(a, eta, k) in &[(0.8, 0.1, 1u32), (0.95, 0.01, 20), (0.5, -0.3, 3)] {
            let amp = Complex64::from_polar(a, eta);
            let [pa, p0, p1] = photon_outcome_probs(amp, k);
            let a2k = f64::powi(a, 2 * k as i32);
            assert!((pa - 0.5 * (1.0 - a2k)).abs() < 1e-14);
            assert!((pa + p0 + p1 - 1.0).abs() < 1e-14);
            assert!((p0 / (1.0 - pa) - arm0_given_survival(amp, k)).abs() < 1e-13);
        }
        // Real amplitude: the arm-0 frequency is one half.
        assert!((arm0_given_survival(Complex64::new(0.8, 0.0), 1) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn chi_gap_closed_form() {
        let (a, eta) = (0.8f64, 0.1f64);
        let t = crate::domain::make_task(Complex64::from_polar(a, -eta), Complex64::from_polar(a, eta)).unwrap();
        let plan = plan_interferometer(&t, PassCount::Fixed(1), 0.1).unwrap();
        let gap = plan.chi[0] - plan.chi[1];
        assert!((gap - 2.0 * a * eta.sin() / (1.0 + a * a)).abs() < 1e-14);
        assert!((gap - 0.0974).abs() < 1e-4);
    }

    #[test]
    fn k1_interferometer_budget() {
        let t = phase_only_task(0.8, 0.01).unwrap();
        let plan = plan_interferometer(&t, PassCount::Fixed(1), 0.1).unwrap();
        let g = gamma(0.1).unwrap();
        let expected = g * g * 0.36 * 1.64 / (2.0 * 1e-4);
        assert!((plan.predicted_nabs / expected - 1.0).abs() < 1e-3, "{} vs {expected}", plan.predicted_nabs);
        assert!(plan.predicted_pe < 0.105 && plan.predicted_pe > 0.09, "{}", plan.predicted_pe);
    }

    #[test]
    fn auto_k_absorption() {
        let t = phase_only_task(0.95, 0.001).unwrap();
        let plan = plan_interferometer(&t, PassCount::Auto, 0.1).unwrap();
        assert_eq!(plan.k, 20);
        assert!((plan.absorption_per_photon() - 0.5 * (1.0 - 0.95f64.powi(40))).abs() < 1e-15);
        assert!((plan.absorption_per_photon() - 0.4357).abs() < 1e-4);
        assert!((0.5 * (1.0 - (-2.0f64).exp()) - 0.4323).abs() < 1e-4);
    }

    #[test]
    fn interferometer_regime_errors() {
        let t = make_real_task(0.59, 0.61).unwrap();
        assert!(matches!(plan_interferometer(&t, PassCount::Fixed(1), 0.1), Err(Error::Regime(_))));
        let lossless = phase_only_task(1.0, 0.01).unwrap();
        assert!(matches!(plan_interferometer(&lossless, PassCount::Auto, 0.1), Err(Error::Regime(_))));
        let same = phase_only_task(0.8, 0.0).unwrap();
        assert!(plan_interferometer(&same, PassCount::Fixed(1), 0.1).is_err());
    }

    #[test]
    fn lossless_interferometer_never_absorbs() {
        let t = phase_only_task(1.0, 0.05).unwrap();
        let plan = plan_interferometer(&t, PassCount::Fixed(1), 0.1).unwrap();
        for seed in 0..20 {
            assert_eq!(run_interferometer(&plan, &t, Hypothesis::One, seed).absorbed, 0);
        }
    }

    #[test]
    fn simulation_is_deterministic() {
        let t = make_real_task(0.59, 0.61).unwrap();
        let plan = plan_counting(&t, 0.1, Source::Fock).unwrap();
        let a = simulate_counting(&plan, &t, 64, 7, 0);
        let b = simulate_counting(&plan, &t, 64, 7, 0);
        assert_eq!(a, b);
        assert_ne!(a, simulate_counting(&plan, &t, 64, 8, 0));
    }
}
