use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::hadamard::{fwht, sylvester_entry, MAX_EXPONENT};
use crate::domain::ImageSet;
use crate::error::{Error, Result};
use crate::seed::stream;
use crate::single_pixel::mean_and_se;

/// Images `alpha_i^p = alpha + eps H[p][i]` over `M = 2^m` pixels, with the
/// hidden row `p` (0-based; row 0 is the all-ones row).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HadamardInstance {
    pub exponent: u32,
    pub row: usize,
    pub alpha: f64,
    pub eps: f64,
}

impl HadamardInstance {
    pub fn new(exponent: u32, row: usize, alpha: f64, eps: f64) -> Result<Self> {
        if exponent > MAX_EXPONENT {
            return Err(Error::Resource(format!(
                "{} pixels exceed the limit 2^{MAX_EXPONENT}",
                1u64 << exponent.min(63)
            )));
        }
        if row >= 1 << exponent {
            return Err(Error::domain(format!("row {row} out of range for M = {}", 1 << exponent)));
        }
        if !(alpha.is_finite() && eps.is_finite()) || alpha - eps.abs() < 0.0 || alpha + eps.abs() > 1.0 {
            return Err(Error::domain(format!(
                "need 0 <= alpha - |eps| and alpha + |eps| <= 1, got alpha = {alpha}, eps = {eps}"
            )));
        }
        Ok(Self { exponent, row, alpha, eps })
    }

    /// Same images with a different hidden row.
    pub fn with_row(self, row: usize) -> Result<Self> {
        Self::new(self.exponent, row, self.alpha, self.eps)
    }

    pub fn pixels(&self) -> usize {
        1 << self.exponent
    }

    /// Transparency of pixel `i` under row `q`.
    pub fn transparency(&self, q: usize, i: usize) -> f64 {
        self.alpha + self.eps * sylvester_entry(q, i)
    }

    /// Every row as an image, for the multi-pixel bound.
    pub fn image_set(&self) -> Result<ImageSet> {
        let m = self.pixels();
        let images = (0..m)
            .map(|q| (0..m).map(|i| Complex64::new(self.transparency(q, i), 0.0)).collect())
            .collect();
        ImageSet::new(images)
    }

    /// Probability that a single collective photon survives, `alpha^2 + eps^2`.
    pub fn survival(&self) -> f64 {
        self.alpha * self.alpha + self.eps * self.eps
    }

    fn require_hidden_row(&self) -> Result<()> {
        if self.row == 0 {
            return Err(Error::precondition("the hidden row must differ from the all-ones row"));
        }
        Ok(())
    }
}

/// One collective photon: uniform superposition over pixels, then `H/sqrt(M)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CollectiveState {
    /// Probability of not being absorbed.
    pub survival: f64,
    /// Normalised mode amplitudes after `H/sqrt(M)`, given survival.
    pub amplitudes: Vec<f64>,
}

pub fn collective_state(inst: &HadamardInstance) -> Result<CollectiveState> {
    inst.require_hidden_row()?;
    let m = inst.pixels();
    let scale = (m as f64).sqrt();
    let mut amps: Vec<f64> = (0..m).map(|i| inst.transparency(inst.row, i) / scale).collect();
    let survival: f64 = amps.iter().map(|a| a * a).sum();
    fwht(&mut amps);
    let norm = survival.sqrt() * scale;
    if norm > 0.0 {
        for a in &mut amps {
            *a /= norm;
        }
    }
    Ok(CollectiveState { survival, amplitudes: amps })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollectiveShot {
    pub survived: bool,
    pub mode: Option<usize>,
    pub absorbed: u64,
}

/// Samples collective shots from a precomputed state.
#[derive(Debug, Clone)]
pub struct CollectiveSampler {
    survival: f64,
    cumulative: Vec<f64>,
}

impl CollectiveSampler {
    pub fn new(state: &CollectiveState) -> Self {
        let mut acc = 0.0;
        let cumulative = state
            .amplitudes
            .iter()
            .map(|a| {
                acc += a * a;
                acc
            })
            .collect();
        Self { survival: state.survival, cumulative }
    }

    pub fn shot<R: Rng + ?Sized>(&self, rng: &mut R) -> CollectiveShot {
        let u: f64 = rng.gen();
        if u >= self.survival {
            return CollectiveShot { survived: false, mode: None, absorbed: 1 };
        }
        let total = *self.cumulative.last().unwrap_or(&1.0);
        let v = u / self.survival * total;
        let idx = self.cumulative.partition_point(|&c| c <= v);
        CollectiveShot {
            survived: true,
            mode: Some(idx.min(self.cumulative.len() - 1)),
            absorbed: 0,
        }
    }
}

pub fn collective_run(inst: &HadamardInstance, seed: u64) -> Result<CollectiveShot> {
    let sampler = CollectiveSampler::new(&collective_state(inst)?);
    Ok(sampler.shot(&mut stream(seed, &[])))
}

/// Surviving runs needed so that the hidden row goes unseen with probability
/// at most `target_pe`: `ceil(ln pe / ln(1 - eps^2/(alpha^2+eps^2)))`.
pub fn collective_runs(inst: &HadamardInstance, target_pe: f64) -> Result<u64> {
    inst.require_hidden_row()?;
    if !(target_pe > 0.0 && target_pe < 1.0) {
        return Err(Error::domain(format!("target error must lie in (0, 1), got {target_pe}")));
    }
    if inst.eps == 0.0 {
        return Err(Error::precondition("eps = 0 leaves the hidden row undetectable"));
    }
    let conditional = inst.eps * inst.eps / inst.survival();
    let runs = (target_pe.ln() / (1.0 - conditional).ln()).ceil().max(1.0);
    if runs / inst.survival() > MAX_COLLECTIVE_PHOTONS as f64 {
        return Err(Error::Resource(format!(
            "about {:.0} photons needed, above the limit {MAX_COLLECTIVE_PHOTONS}",
            runs / inst.survival()
        )));
    }
    Ok(runs as u64)
}

/// Most photons a single collective identification may expect to send.
pub const MAX_COLLECTIVE_PHOTONS: u64 = 1_000_000_000;

/// `(1 - eps^2/(alpha^2+eps^2))^runs`, the chance that `runs` surviving
/// photons never show the hidden row.
pub fn collective_miss_probability(inst: &HadamardInstance, runs: u64) -> f64 {
    let conditional = inst.eps * inst.eps / inst.survival();
    (1.0 - conditional).powf(runs as f64)
}

/// Mean photons absorbed while waiting for `runs` survivors.
pub fn collective_expected_absorbed(inst: &HadamardInstance, runs: u64) -> f64 {
    runs as f64 * (1.0 - inst.survival()) / inst.survival()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollectiveOutcome {
    pub guess: usize,
    /// Surviving (post-selected) runs.
    pub runs: u64,
    /// Photons sent, absorbed ones included.
    pub photons: u64,
    pub absorbed: u64,
    /// Surviving photons that landed outside the all-ones mode.
    pub detections: u64,
}

/// Fallback guess when no photon left the all-ones mode.
pub const DEFAULT_GUESS: usize = 1;

fn identify_with<R: Rng + ?Sized>(sampler: &CollectiveSampler, runs: u64, rng: &mut R) -> CollectiveOutcome {
    let mut guess = None;
    let (mut survivors, mut photons, mut absorbed, mut detections) = (0, 0, 0, 0);
    while survivors < runs {
        let shot = sampler.shot(rng);
        photons += 1;
        absorbed += shot.absorbed;
        if let Some(mode) = shot.mode {
            survivors += 1;
            if mode != 0 {
                detections += 1;
                guess.get_or_insert(mode);
            }
        }
    }
    CollectiveOutcome {
        guess: guess.unwrap_or(DEFAULT_GUESS),
        runs,
        photons,
        absorbed,
        detections,
    }
}

/// Sends photons until `collective_runs` of them survive; the first one seen
/// outside the all-ones mode names the row.
pub fn collective_identify(inst: &HadamardInstance, target_pe: f64, seed: u64) -> Result<CollectiveOutcome> {
    let runs = collective_runs(inst, target_pe)?;
    let sampler = CollectiveSampler::new(&collective_state(inst)?);
    Ok(identify_with(&sampler, runs, &mut stream(seed, &[])))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndividualOutcome {
    pub guess: usize,
    pub absorbed: u64,
}

fn check_photons(inst: &HadamardInstance, total: u64) -> Result<u64> {
    let m = inst.pixels() as u64;
    if total % m != 0 {
        return Err(Error::domain(format!("{m} pixels do not divide {total} photons")));
    }
    Ok(total / m)
}

/// Row scores `S_q = sum_i H[q][i] n_i` from per-pixel transmitted counts,
/// with `N alpha^2` removed from the all-ones row.
pub fn row_scores(inst: &HadamardInstance, transmitted: &[u64], sent: u64) -> Vec<f64> {
    let mut s: Vec<f64> = transmitted.iter().map(|&n| n as f64).collect();
    fwht(&mut s);
    s[0] -= sent as f64 * inst.alpha * inst.alpha;
    s
}

fn argmax_lowest(s: &[f64]) -> usize {
    let mut best = 0;
    for (q, &v) in s.iter().enumerate() {
        if v > s[best] {
            best = q;
        }
    }
    best
}

fn individual_with<R: Rng + ?Sized>(inst: &HadamardInstance, per_pixel: u64, rng: &mut R) -> IndividualOutcome {
    let m = inst.pixels();
    let mut counts = Vec::with_capacity(m);
    for i in 0..m {
        let t = inst.transparency(inst.row, i);
        let n = Binomial::new(per_pixel, (t * t).clamp(0.0, 1.0))
            .expect("probability clamped to [0, 1]")
            .sample(rng);
        counts.push(n);
    }
    let sent = per_pixel * m as u64;
    IndividualOutcome {
        guess: argmax_lowest(&row_scores(inst, &counts, sent)),
        absorbed: sent - counts.iter().sum::<u64>(),
    }
}

/// Sends `total / M` photons through every pixel and picks the row with the
/// largest score (ties to the lowest row).
pub fn individual_identify(inst: &HadamardInstance, total: u64, seed: u64) -> Result<IndividualOutcome> {
    let per_pixel = check_photons(inst, total)?;
    Ok(individual_with(inst, per_pixel, &mut stream(seed, &[])))
}

/// Hidden row for trial `t`: cycles through the rows other than the all-ones row.
pub fn row_for_trial(pixels: usize, t: u64) -> usize {
    1 + (t % (pixels as u64 - 1).max(1)) as usize
}

/// Error rate and absorption over a batch of identifications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentificationSummary {
    pub trials: u64,
    pub errors: u64,
    pub error_rate: f64,
    pub error_se: f64,
    pub mean_absorbed: f64,
    pub absorbed_se: f64,
}

impl IdentificationSummary {
    fn from_results(results: &[(bool, u64)]) -> Self {
        let trials = results.len() as u64;
        let errors = results.iter().filter(|r| r.0).count() as u64;
        let nf = trials.max(1) as f64;
        let rate = errors as f64 / nf;
        let absorbed: Vec<f64> = results.iter().map(|r| r.1 as f64).collect();
        let (mean, se) = mean_and_se(&absorbed);
        Self {
            trials,
            errors,
            error_rate: rate,
            error_se: (rate * (1.0 - rate) / nf).sqrt(),
            mean_absorbed: mean,
            absorbed_se: se,
        }
    }
}

/// Repeated collective identification; the hidden row of trial `t` is
/// [`row_for_trial`] and its stream is `(master, sweep, t)`.
pub fn simulate_collective(
    inst: &HadamardInstance,
    target_pe: f64,
    trials: u64,
    master_seed: u64,
    sweep_index: u64,
) -> Result<IdentificationSummary> {
    let m = inst.pixels();
    let runs = collective_runs(&inst.with_row(1)?, target_pe)?;
    let results = (0..trials)
        .into_par_iter()
        .map(|t| {
            let row = row_for_trial(m, t);
            let sampler = CollectiveSampler::new(&collective_state(&inst.with_row(row)?)?);
            let out = identify_with(&sampler, runs, &mut stream(master_seed, &[sweep_index, t]));
            Ok((out.guess != row, out.absorbed))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(IdentificationSummary::from_results(&results))
}

/// Repeated individual identification with `total` photons per trial; rows
/// and streams as in [`simulate_collective`].
pub fn simulate_individual(
    inst: &HadamardInstance,
    total: u64,
    trials: u64,
    master_seed: u64,
    sweep_index: u64,
) -> Result<IdentificationSummary> {
    let per_pixel = check_photons(inst, total)?;
    let m = inst.pixels();
    let results = (0..trials)
        .into_par_iter()
        .map(|t| {
            let row = row_for_trial(m, t);
            let out = individual_with(&inst.with_row(row)?, per_pixel, &mut stream(master_seed, &[sweep_index, t]));
            Ok((out.guess != row, out.absorbed))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(IdentificationSummary::from_results(&results))
}

/// Smallest photon budget found for the individual classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndividualCalibration {
    pub photons: u64,
    pub summary: IdentificationSummary,
}

/// Bisects over multiples of `M` for the smallest budget whose empirical
/// error over `trials` seeded trials is at most `target_pe`. Every budget is
/// scored on the same streams, so the search sees a smooth error curve.
pub fn calibrate_individual(
    inst: &HadamardInstance,
    target_pe: f64,
    trials: u64,
    master_seed: u64,
) -> Result<IndividualCalibration> {
    if !(target_pe > 0.0 && target_pe < 1.0) || trials == 0 {
        return Err(Error::domain("calibration needs target error in (0, 1) and trials > 0"));
    }
    if inst.eps == 0.0 {
        return Err(Error::precondition("eps = 0 leaves the hidden row undetectable"));
    }
    let m = inst.pixels() as u64;
    let score = |k: u64| simulate_individual(inst, k * m, trials, master_seed, 0);
    // Start from the Gaussian estimate N ~ beta^2 / (2 eps^2) and bracket.
    let beta2 = 1.0 - inst.alpha * inst.alpha;
    let guess = ((beta2.max(1e-3) / (2.0 * inst.eps * inst.eps)) / m as f64).ceil().max(1.0) as u64;
    let (mut lo, mut hi) = (0u64, guess);
    let mut best = score(hi)?;
    while best.error_rate > target_pe {
        lo = hi;
        hi = hi.checked_mul(2).filter(|&h| h * m <= 1 << 40).ok_or_else(|| {
            Error::Resource("individual calibration exceeded 2^40 photons".into())
        })?;
        best = score(hi)?;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        let s = score(mid)?;
        if s.error_rate <= target_pe {
            hi = mid;
            best = s;
        } else {
            lo = mid;
        }
    }
    Ok(IndividualCalibration { photons: hi * m, summary: best })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::multi_pixel_bound;

    #[test]
    fn post_selected_state_has_two_modes() {
        for &(m, p, a, e) in &[(3u32, 5usize, 0.6, 0.01), (5, 17, 0.3, 0.2), (1, 1, 0.5, 0.5)] {
            let inst = HadamardInstance::new(m, p, a, e).unwrap();
            let st = collective_state(&inst).unwrap();
            let r = (a * a + e * e).sqrt();
            assert!((st.survival - r * r).abs() < 1e-12);
            for (i, &amp) in st.amplitudes.iter().enumerate() {
                let want = if i == 0 { a / r } else if i == p { e / r } else { 0.0 };
                assert!((amp - want).abs() < 1e-12, "mode {i}");
            }
            let norm: f64 = st.amplitudes.iter().map(|x| x * x).sum();
            assert!((norm - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn top_row_is_rejected() {
        let inst = HadamardInstance::new(3, 0, 0.6, 0.01).unwrap();
        assert!(matches!(collective_run(&inst, 1), Err(Error::Precondition(_))));
        assert!(HadamardInstance::new(3, 8, 0.6, 0.01).is_err());
        assert!(HadamardInstance::new(3, 1, 0.95, 0.1).is_err());
        assert!(matches!(HadamardInstance::new(15, 1, 0.5, 0.1), Err(Error::Resource(_))));
    }

    #[test]
    fn no_contrast_stays_in_top_mode() {
        let inst = HadamardInstance::new(4, 3, 0.7, 0.0).unwrap();
        for seed in 0..200 {
            let shot = collective_run(&inst, seed).unwrap();
            assert!(shot.mode.map_or(true, |m| m == 0));
            assert_eq!(shot.absorbed, u64::from(!shot.survived));
        }
    }

    #[test]
    fn run_budget() {
        let inst = HadamardInstance::new(3, 1, 0.6, 0.01).unwrap();
        let runs = collective_runs(&inst, 0.1).unwrap();
        let q: f64 = 1e-4 / 0.3601;
        assert_eq!(runs, (0.1f64.ln() / (1.0 - q).ln()).ceil() as u64);
        assert!((8280..8300).contains(&runs));
        assert!(collective_miss_probability(&inst, runs) <= 0.1);
        let halved = collective_runs(&HadamardInstance::new(3, 1, 0.6, 0.005).unwrap(), 0.1).unwrap();
        assert!((halved as f64 / runs as f64 / 4.0 - 1.0).abs() < 0.02);
    }

    #[test]
    fn detected_rows_are_always_right() {
        let inst = HadamardInstance::new(4, 9, 0.6, 0.05).unwrap();
        for seed in 0..20 {
            let out = collective_identify(&inst, 0.01, seed).unwrap();
            if out.detections > 0 {
                assert_eq!(out.guess, 9);
            }
            assert_eq!(out.photons, out.runs + out.absorbed);
        }
    }

    #[test]
    fn collective_absorbs_more_than_the_bound() {
        let inst = HadamardInstance::new(3, 1, 0.6, 0.01).unwrap();
        let s = simulate_collective(&inst, 0.1, 400, 3, 0).unwrap();
        let runs = collective_runs(&inst, 0.1).unwrap();
        let expected = collective_expected_absorbed(&inst, runs);
        assert!((expected - runs as f64 * 0.6399 / 0.3601).abs() < 1e-6);
        assert!((s.mean_absorbed - expected).abs() < 4.0 * s.absorbed_se);
        let bound = multi_pixel_bound(&inst.image_set().unwrap(), 1, 2, 0.1).unwrap().value();
        assert!(s.mean_absorbed > bound);
    }

    #[test]
    fn individual_expected_scores() {
        // M = 2, hidden row 1, N = 2000: E[S_1] = 2 N alpha eps = 240, E[S_0] = N eps^2 = 20.
        let inst = HadamardInstance::new(1, 1, 0.6, 0.1).unwrap();
        let n = 1000.0;
        let expected: Vec<f64> = (0..2).map(|i| n * inst.transparency(1, i).powi(2)).collect();
        let mut s = expected.clone();
        fwht(&mut s);
        s[0] -= 2000.0 * 0.36;
        assert!((s[1] - 240.0).abs() < 1e-9);
        assert!((s[0] - 20.0).abs() < 1e-9);
        let out = individual_identify(&inst, 2000, 4).unwrap();
        assert_eq!(out.guess, 1);
    }

    #[test]
    fn individual_needs_whole_rounds() {
        let inst = HadamardInstance::new(3, 1, 0.6, 0.1).unwrap();
        assert!(matches!(individual_identify(&inst, 100, 0), Err(Error::Domain(_))));
    }

    #[test]
    fn individual_score_spread() {
        // Std of S_q over seeds is close to alpha beta sqrt(N).
        let inst = HadamardInstance::new(2, 3, 0.6, 0.01).unwrap();
        let total = 10_000u64;
        let per = total / 4;
        let scores: Vec<f64> = (0..4000u64)
            .map(|seed| {
                let mut rng = stream(seed, &[]);
                let counts: Vec<u64> = (0..4)
                    .map(|i| Binomial::new(per, inst.transparency(3, i).powi(2)).unwrap().sample(&mut rng))
                    .collect();
                row_scores(&inst, &counts, total)[2]
            })
            .collect();
        let (mean, se) = mean_and_se(&scores);
        let sd = se * (scores.len() as f64).sqrt();
        let want = 0.6 * 0.8 * (total as f64).sqrt();
        assert!((sd / want - 1.0).abs() < 0.1, "sd {sd} vs {want}");
        assert!(mean.abs() < 5.0 * se);
    }

    #[test]
    fn calibration_hits_target() {
        let inst = HadamardInstance::new(2, 1, 0.6, 0.05).unwrap();
        let cal = calibrate_individual(&inst, 0.1, 500, 8).unwrap();
        assert!(cal.summary.error_rate <= 0.1);
        assert_eq!(cal.photons % 4, 0);
        let fewer = simulate_individual(&inst, cal.photons - 4, 500, 8, 0).unwrap();
        assert!(fewer.error_rate > 0.1);
    }

    #[test]
    fn simulations_are_reproducible() {
        let inst = HadamardInstance::new(3, 1, 0.6, 0.05).unwrap();
        let a = simulate_collective(&inst, 0.1, 50, 9, 2).unwrap();
        assert_eq!(a, simulate_collective(&inst, 0.1, 50, 9, 2).unwrap());
        let b = simulate_individual(&inst, 800, 50, 9, 2).unwrap();
        assert_eq!(b, simulate_individual(&inst, 800, 50, 9, 2).unwrap());
    }
}
