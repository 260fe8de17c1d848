use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::stream;

/// Most object passages a single run may take.
pub const MAX_PASSAGES: u64 = 10_000_000;

/// Phase the marked pixel imprints per passage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum OraclePhase {
    /// Phase `pi`: one passage per oracle call.
    Pi,
    /// Phase `eps`: `round(pi / eps)` passages per oracle call.
    Eps(f64),
}

impl OraclePhase {
    pub fn passages_per_call(&self) -> Result<u64> {
        match *self {
            OraclePhase::Pi => Ok(1),
            OraclePhase::Eps(e) if e.is_finite() && e > 0.0 && e <= PI => Ok((PI / e).round().max(1.0) as u64),
            OraclePhase::Eps(e) => Err(Error::domain(format!("phase must lie in (0, pi], got {e}"))),
        }
    }

    pub fn angle(&self) -> f64 {
        match *self {
            OraclePhase::Pi => PI,
            OraclePhase::Eps(e) => e,
        }
    }
}

/// Search over `modes` pixels for the single marked one (0-based).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroverInstance {
    pub modes: usize,
    pub marked: usize,
    pub beta2: f64,
    pub phase: OraclePhase,
}

impl GroverInstance {
    pub fn new(modes: usize, marked: usize, beta2: f64, phase: OraclePhase) -> Result<Self> {
        if !modes.is_power_of_two() || modes < 2 {
            return Err(Error::domain(format!("mode count must be a power of two >= 2, got {modes}")));
        }
        if modes > 1 << 24 {
            return Err(Error::Resource(format!("{modes} modes exceed the state-vector limit 2^24")));
        }
        if marked >= modes {
            return Err(Error::domain(format!("marked pixel {marked} out of range")));
        }
        if !(0.0..1.0).contains(&beta2) {
            return Err(Error::domain(format!("beta^2 must lie in [0, 1), got {beta2}")));
        }
        phase.passages_per_call()?;
        Ok(Self { modes, marked, beta2, phase })
    }

    /// `round((pi/4) sqrt(M))`.
    pub fn auto_iterations(&self) -> u64 {
        (PI / 4.0 * (self.modes as f64).sqrt()).round() as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroverOutcome {
    pub iterations: u64,
    pub passages_per_call: u64,
    pub passages: u64,
    /// Probability of surviving and finding the marked pixel.
    pub success_prob: f64,
    /// `(1 - beta^2)^passages`.
    pub survival_prob: f64,
    /// Success probability of the same circuit without absorption.
    pub ideal_success: f64,
    /// `exp(-beta^2 passages)`.
    pub survival_approx: f64,
}

/// `psi -> 2 <s|psi> |s> - psi`.
fn diffuse(psi: &mut [Complex64]) {
    let mean = psi.iter().sum::<Complex64>() / psi.len() as f64;
    for a in psi.iter_mut() {
        *a = 2.0 * mean - *a;
    }
}

/// Evolves the unnormalised photon amplitude; `damping` is the per-passage
/// amplitude factor. Returns the marked-pixel probability.
fn evolve(inst: &GroverInstance, iterations: u64, passes: u64, damping: f64) -> f64 {
    let m = inst.modes;
    let mut psi = vec![Complex64::new(1.0 / (m as f64).sqrt(), 0.0); m];
    let kick = Complex64::from_polar(1.0, inst.phase.angle());
    for _ in 0..iterations {
        // Each passage rotates the marked amplitude and damps every amplitude
        // by the same factor; the common factor is applied once per call.
        let mut scale = 1.0;
        for _ in 0..passes {
            psi[inst.marked] *= kick;
            scale *= damping;
        }
        if scale != 1.0 {
            for a in psi.iter_mut() {
                *a *= scale;
            }
        }
        diffuse(&mut psi);
    }
    psi[inst.marked].norm_sqr()
}

/// Grover search with uniform amplitude damping `sqrt(1 - beta^2)` on every
/// passage of the photon through the object. `iterations = None` picks
/// [`GroverInstance::auto_iterations`].
pub fn grover_damped(inst: &GroverInstance, iterations: Option<u64>) -> Result<GroverOutcome> {
    let t = iterations.unwrap_or_else(|| inst.auto_iterations());
    let n = inst.phase.passages_per_call()?;
    let passages = t
        .checked_mul(n)
        .filter(|&p| p <= MAX_PASSAGES)
        .ok_or_else(|| Error::Resource(format!("{t} iterations x {n} passages exceed {MAX_PASSAGES}")))?;
    let survival_prob = (1.0 - inst.beta2).powf(passages as f64);
    let ideal_success = evolve(inst, t, n, 1.0);
    let success_prob = evolve(inst, t, n, (1.0 - inst.beta2).sqrt());
    Ok(GroverOutcome {
        iterations: t,
        passages_per_call: n,
        passages,
        success_prob,
        survival_prob,
        ideal_success,
        survival_approx: (-inst.beta2 * passages as f64).exp(),
    })
}

/// One measured run: `(survived, found the marked pixel)`.
pub fn grover_shot<R: Rng + ?Sized>(outcome: &GroverOutcome, rng: &mut R) -> (bool, bool) {
    let u: f64 = rng.gen();
    if u >= outcome.survival_prob {
        return (false, false);
    }
    (true, rng.gen::<f64>() < outcome.ideal_success)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroverSummary {
    pub trials: u64,
    pub successes: u64,
    pub success_rate: f64,
    pub success_se: f64,
    pub survivals: u64,
    pub survival_rate: f64,
    pub survival_se: f64,
}

/// Seeded shots; trial `t` uses stream `(master, sweep, t)`.
pub fn simulate_grover(outcome: &GroverOutcome, trials: u64, master_seed: u64, sweep_index: u64) -> GroverSummary {
    let shots: Vec<(bool, bool)> = (0..trials)
        .into_par_iter()
        .map(|t| grover_shot(outcome, &mut stream(master_seed, &[sweep_index, t])))
        .collect();
    let nf = trials.max(1) as f64;
    let successes = shots.iter().filter(|s| s.1).count() as u64;
    let survivals = shots.iter().filter(|s| s.0).count() as u64;
    let rate = |k: u64| {
        let p = k as f64 / nf;
        (p, (p * (1.0 - p) / nf).sqrt())
    };
    let (success_rate, success_se) = rate(successes);
    let (survival_rate, survival_se) = rate(survivals);
    GroverSummary {
        trials,
        successes,
        success_rate,
        success_se,
        survivals,
        survival_rate,
        survival_se,
    }
}
