//! Two-object tasks, multi-pixel image sets, and the closed-form absorption
//! bounds evaluated on them.
//!
//! All lower bounds report only their leading term. The additive `O(1)` and
//! the `O(eps^4)` remainder have no fixed constants, so callers comparing a
//! simulation against a bound allow an explicit slack (see [`Slack`]).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const AMPLITUDE_TOL: f64 = 1e-12;

/// One pixel's transmission amplitude `alpha` together with the absorption
/// amplitude `beta`, `|alpha|^2 + |beta|^2 = 1`.
///
/// `beta` is real and non-negative unless a phase is attached explicitly with
/// [`Transparency::with_beta_phase`]; the phase is unobservable once the object
/// is traced out.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transparency {
    alpha: Complex64,
    beta: Complex64,
}

impl Transparency {
    pub fn new(alpha: Complex64) -> Result<Self> {
        let norm = alpha.norm();
        if !(norm.is_finite() && norm <= 1.0 + AMPLITUDE_TOL) {
            return Err(Error::domain(format!("|alpha| = {norm} exceeds 1")));
        }
        let beta_mag = (1.0 - alpha.norm_sqr()).max(0.0).sqrt();
        Ok(Self {
            alpha,
            beta: Complex64::new(beta_mag, 0.0),
        })
    }

    pub fn real(alpha: f64) -> Result<Self> {
        Self::new(Complex64::new(alpha, 0.0))
    }

    pub fn with_beta_phase(self, phi: f64) -> Self {
        Self {
            alpha: self.alpha,
            beta: Complex64::from_polar(self.beta_mag(), phi),
        }
    }

    pub fn alpha(&self) -> Complex64 {
        self.alpha
    }

    pub fn beta(&self) -> Complex64 {
        self.beta
    }

    pub fn beta_mag(&self) -> f64 {
        self.beta.norm()
    }

    /// Probability that a single photon is absorbed.
    pub fn absorption_prob(&self) -> f64 {
        self.beta.norm_sqr()
    }
}

/// Discrimination between two single-pixel objects with amplitudes
/// `alpha1 = alpha - eps` and `alpha2 = alpha + eps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoObjectTask {
    pub alpha1: Complex64,
    pub alpha2: Complex64,
    pub alpha_mean: Complex64,
    pub epsilon: Complex64,
    /// `sqrt(1 - |alpha_mean|^2)`.
    pub beta_mean: f64,
    /// The regime where the single-pixel bound holds, see [`make_task`].
    pub closeness_ok: bool,
}

impl TwoObjectTask {
    pub fn transparency(&self, which: usize) -> Transparency {
        let a = if which == 0 { self.alpha1 } else { self.alpha2 };
        Transparency::new(a).expect("validated in make_task")
    }

    pub fn eps_abs(&self) -> f64 {
        self.epsilon.norm()
    }

    /// `beta^4 / (2 |eps|^2)`, the scale shared by every single-pixel bound.
    pub fn bound_scale(&self) -> f64 {
        self.beta_mean.powi(4) / (2.0 * self.epsilon.norm_sqr())
    }
}

/// Builds a task from the two amplitudes.
///
/// `closeness_ok` is the exact solvability condition of the phase alignment,
/// `|eps|^2 + 2|alpha||eps| < beta^2`, a slightly stronger form of
/// `|eps| < beta^2 / (2|alpha|)`.
pub fn make_task(alpha1: Complex64, alpha2: Complex64) -> Result<TwoObjectTask> {
    Transparency::new(alpha1)?;
    Transparency::new(alpha2)?;
    let alpha_mean = (alpha1 + alpha2) / 2.0;
    let epsilon = (alpha2 - alpha1) / 2.0;
    let beta2 = (1.0 - alpha_mean.norm_sqr()).max(0.0);
    let beta_mean = beta2.sqrt();
    let closeness_ok = is_close(alpha_mean.norm(), epsilon.norm(), beta2);
    Ok(TwoObjectTask {
        alpha1,
        alpha2,
        alpha_mean,
        epsilon,
        beta_mean,
        closeness_ok,
    })
}

/// `|eps|^2 + 2|alpha||eps| < beta^2`: the phase-alignment equation has a
/// solution for every phase of `eps`. This implies `|eps| < beta^2/(2|alpha|)`.
/// Equality up to rounding counts as not close.
fn is_close(alpha_abs: f64, eps_abs: f64, beta2: f64) -> bool {
    eps_abs * (eps_abs + 2.0 * alpha_abs) < beta2 * (1.0 - 1e-12)
}

pub fn make_real_task(alpha1: f64, alpha2: f64) -> Result<TwoObjectTask> {
    make_task(Complex64::new(alpha1, 0.0), Complex64::new(alpha2, 0.0))
}

/// The relative absorption phase that makes the single-photon overlap real,
/// together with the resulting overlap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlignedOverlap {
    pub phi: f64,
    pub factor: f64,
    /// The full complex value `conj(alpha1) alpha2 + e^{i phi} |beta1| |beta2|`.
    pub value: Complex64,
}

/// Chooses `phi` in `[-pi/2, pi/2]` so that
/// `conj(alpha1) alpha2 + e^{i phi} |beta1||beta2|` is real; of the two
/// solutions of the sine equation this is the one with the larger overlap.
pub fn aligned_overlap_factor(task: &TwoObjectTask) -> Result<AlignedOverlap> {
    if !task.closeness_ok {
        return Err(Error::precondition(
            "phase alignment needs a task satisfying the closeness condition",
        ));
    }
    let cross = task.alpha1.conj() * task.alpha2;
    let b1 = task.transparency(0).beta_mag();
    let b2 = task.transparency(1).beta_mag();
    let s = b1 * b2;
    let phi = if s == 0.0 {
        if cross.im != 0.0 {
            return Err(Error::precondition("no absorption amplitude to cancel the phase"));
        }
        0.0
    } else {
        let sin_phi = -cross.im / s;
        if sin_phi.abs() > 1.0 {
            return Err(Error::precondition(format!(
                "phase alignment unsolvable: sin(phi) = {sin_phi}"
            )));
        }
        sin_phi.asin()
    };
    let value = cross + Complex64::from_polar(s, phi);
    Ok(AlignedOverlap {
        phi,
        factor: value.re,
        value,
    })
}

/// Minimal error probability for two pure states of overlap `f`.
pub fn helstrom_error(f: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&f) {
        return Err(Error::domain(format!("overlap must lie in [0, 1], got {f}")));
    }
    Ok(0.5 * (1.0 - (1.0 - f * f).sqrt()))
}

/// Overlap implied by a Helstrom error, `f = 2 sqrt(P_E (1 - P_E))`.
pub fn overlap_from_error(pe: f64) -> f64 {
    2.0 * (pe * (1.0 - pe)).sqrt()
}

/// A bound that may be infinite (identical objects cannot be told apart).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BoundValue {
    Finite(f64),
    Infinite,
}

impl BoundValue {
    pub fn value(self) -> f64 {
        match self {
            BoundValue::Finite(v) => v,
            BoundValue::Infinite => f64::INFINITY,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, BoundValue::Infinite)
    }
}

/// Allowance used whenever a simulated absorption is compared to a
/// leading-order bound: a fixed number of photons plus a relative fraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Slack {
    pub photons: f64,
    pub relative: f64,
}

impl Default for Slack {
    fn default() -> Self {
        Self {
            photons: 1.0,
            relative: 0.01,
        }
    }
}

impl Slack {
    pub fn amount(&self, bound: f64) -> f64 {
        self.photons + self.relative * bound
    }

    /// `observed + slack >= bound`.
    pub fn admits(&self, observed: f64, bound: f64) -> bool {
        observed + self.amount(bound) >= bound
    }
}

fn check_pe(pe: f64) -> Result<()> {
    if !(0.0..=0.5).contains(&pe) {
        return Err(Error::domain(format!("error probability must lie in [0, 1/2], got {pe}")));
    }
    Ok(())
}

fn leading_bound(beta: f64, eps_abs: f64, pe: f64) -> BoundValue {
    if eps_abs == 0.0 {
        return BoundValue::Infinite;
    }
    BoundValue::Finite(beta.powi(4) * (1.0 - overlap_from_error(pe)) / (2.0 * eps_abs * eps_abs))
}

/// Leading term of the single-pixel lower bound on the mean absorbed photons,
/// `beta^4 (1 - 2 sqrt(P_E(1-P_E))) / (2 |eps|^2)`.
pub fn single_pixel_bound(task: &TwoObjectTask, pe: f64) -> Result<BoundValue> {
    check_pe(pe)?;
    if task.eps_abs() == 0.0 {
        return Ok(BoundValue::Infinite);
    }
    if !task.closeness_ok {
        return Err(Error::precondition("single-pixel bound needs |eps| < beta^2/(2|alpha|)"));
    }
    Ok(leading_bound(task.beta_mean, task.eps_abs(), pe))
}

/// `L` images over `M` pixels; `images[p][i]` is the amplitude of pixel `i`
/// under image `p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageSet {
    num_pixels: usize,
    images: Vec<Vec<Complex64>>,
}

impl ImageSet {
    pub fn new(images: Vec<Vec<Complex64>>) -> Result<Self> {
        let num_pixels = images.first().map_or(0, Vec::len);
        if num_pixels == 0 {
            return Err(Error::domain("an image set needs at least one image and one pixel"));
        }
        for img in &images {
            if img.len() != num_pixels {
                return Err(Error::domain("all images must cover the same pixels"));
            }
            for &a in img {
                Transparency::new(a)?;
            }
        }
        Ok(Self { num_pixels, images })
    }

    pub fn num_pixels(&self) -> usize {
        self.num_pixels
    }

    pub fn num_images(&self) -> usize {
        self.images.len()
    }

    pub fn alpha(&self, p: usize, i: usize) -> Complex64 {
        self.images[p][i]
    }

    /// `eps_i^{p,q} = (alpha_i^p - alpha_i^q) / 2`.
    pub fn pixel_epsilon(&self, p: usize, q: usize, i: usize) -> Complex64 {
        (self.images[p][i] - self.images[q][i]) / 2.0
    }

    /// `max_i |eps_i^{p,q}|`.
    pub fn epsilon(&self, p: usize, q: usize) -> f64 {
        (0..self.num_pixels)
            .map(|i| self.pixel_epsilon(p, q, i).norm())
            .fold(0.0, f64::max)
    }

    /// Arithmetic mean of `|beta_i^p|` over every pixel and image.
    pub fn beta(&self) -> f64 {
        let total: f64 = self
            .images
            .iter()
            .flatten()
            .map(|a| (1.0 - a.norm_sqr()).max(0.0).sqrt())
            .sum();
        total / (self.num_pixels * self.images.len()) as f64
    }

    fn pair_is_close(&self, p: usize, q: usize) -> bool {
        (0..self.num_pixels).all(|i| {
            let mean = (self.images[p][i] + self.images[q][i]) / 2.0;
            let eps = self.pixel_epsilon(p, q, i).norm();
            eps == 0.0 || is_close(mean.norm(), eps, 1.0 - mean.norm_sqr())
        })
    }
}

/// Leading term of the bound for telling image `p` from image `q`.
pub fn multi_pixel_bound(images: &ImageSet, p: usize, q: usize, pe: f64) -> Result<BoundValue> {
    check_pe(pe)?;
    let l = images.num_images();
    if p >= l || q >= l {
        return Err(Error::domain(format!("image index out of range (L = {l})")));
    }
    let eps = images.epsilon(p, q);
    if eps == 0.0 {
        return Ok(BoundValue::Infinite);
    }
    if !images.pair_is_close(p, q) {
        return Err(Error::precondition("per-pixel closeness fails for this image pair"));
    }
    Ok(leading_bound(images.beta(), eps, pe))
}

/// Bound for identifying one image among all, using the largest pairwise
/// contrast; `pe` is the largest pairwise confusion probability.
pub fn all_pairs_bound(images: &ImageSet, pe: f64) -> Result<BoundValue> {
    check_pe(pe)?;
    let l = images.num_images();
    let mut eps: f64 = 0.0;
    for p in 0..l {
        for q in p + 1..l {
            if !images.pair_is_close(p, q) {
                return Err(Error::precondition(format!(
                    "per-pixel closeness fails for images {p} and {q}"
                )));
            }
            eps = eps.max(images.epsilon(p, q));
        }
    }
    Ok(leading_bound(images.beta(), eps, pe))
}

/// Bound for repeating an absorption-free protocol until it succeeds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AfmRepeatBound {
    /// `|beta1 beta2| / |1 - conj(alpha1) alpha2|`.
    pub eta: f64,
    /// `eta / (1 - eta)`, a lower bound on the absorption of one of the objects.
    pub nbar_lower: BoundValue,
}

pub fn afm_repeat_bound(task: &TwoObjectTask) -> Result<AfmRepeatBound> {
    if task.alpha1 == task.alpha2 {
        return Err(Error::precondition("absorption-free repetition needs alpha1 != alpha2"));
    }
    let denom = (Complex64::new(1.0, 0.0) - task.alpha1.conj() * task.alpha2).norm();
    if denom == 0.0 {
        return Err(Error::precondition("1 - conj(alpha1) alpha2 vanishes"));
    }
    let b1 = task.transparency(0).beta_mag();
    let b2 = task.transparency(1).beta_mag();
    let eta = b1 * b2 / denom;
    let nbar_lower = if eta >= 1.0 {
        BoundValue::Infinite
    } else {
        BoundValue::Finite(eta / (1.0 - eta))
    };
    Ok(AfmRepeatBound { eta, nbar_lower })
}

/// Mean number of absorbed photons when a protocol absorbing with probability
/// `p_abs` per attempt is repeated until an attempt absorbs nothing.
pub fn repeat_until_clean_mean(p_abs: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&p_abs) {
        return Err(Error::domain(format!("absorption probability must lie in [0, 1), got {p_abs}")));
    }
    Ok(p_abs / (1.0 - p_abs))
}
