//! Exact joint evolution of ancilla, probe photons and the object's
//! absorption record.
//!
//! A basis vector is `|k>_A |l>_P |n_1 .. n_j>_O`: ancilla level `k`, `l`
//! photons in the probe mode, and `n_s` photons absorbed at interaction step
//! `s`. States are stored densely: for every absorption record there is one
//! block of `(S+1)(N_max+1)` amplitudes indexed by `(k, l)`. Records are
//! encoded in base `N_max + 1`, most recent step in the least significant
//! digit, so appending a step is `record * (N_max + 1) + n`.
//!
//! Interaction steps expand `l` probe photons as
//! `sum_m sqrt(C(l,m)) alpha^m beta^(l-m) |m>_P |l-m>_O`; unitary steps act on
//! each record block independently. Both are norm preserving, and neither
//! ever raises the photon number above the cutoff, so the truncation is exact.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::domain::{aligned_overlap_factor, Transparency, TwoObjectTask};
use crate::error::{Error, Result};

pub const MAX_PHOTONS: usize = 4;
pub const MAX_ANCILLA: usize = 4;
pub const MAX_STAGES: usize = 6;

const UNITARY_TOL: f64 = 1e-10;

/// Ancilla and photon cutoffs shared by a state and the unitaries acting on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dims {
    /// Highest ancilla level `S`; the ancilla has `S + 1` levels.
    pub ancilla_max: usize,
    /// Highest photon number `N_max` in the probe mode.
    pub photon_max: usize,
}

impl Dims {
    pub fn new(ancilla_max: usize, photon_max: usize) -> Result<Self> {
        if ancilla_max > MAX_ANCILLA {
            return Err(Error::Resource(format!(
                "ancilla cutoff {ancilla_max} exceeds {MAX_ANCILLA}"
            )));
        }
        if photon_max > MAX_PHOTONS {
            return Err(Error::Resource(format!(
                "photon cutoff {photon_max} exceeds {MAX_PHOTONS}"
            )));
        }
        Ok(Self {
            ancilla_max,
            photon_max,
        })
    }

    /// Dimension of the ancilla-photon space.
    pub fn block(&self) -> usize {
        (self.ancilla_max + 1) * (self.photon_max + 1)
    }

    fn radix(&self) -> usize {
        self.photon_max + 1
    }

    fn ap_index(&self, k: usize, l: usize) -> usize {
        k * self.radix() + l
    }
}

/// A basis label `(k, l, n_1..n_j)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasisLabel {
    pub ancilla: usize,
    pub photons: usize,
    pub record: Vec<usize>,
}

/// Pure state of ancilla, probe and object after `stage` interaction steps.
#[derive(Debug, Clone, PartialEq)]
pub struct JointState {
    dims: Dims,
    stage: usize,
    amps: Vec<Complex64>,
}

impl JointState {
    /// Embeds a normalized ancilla-photon vector with an empty absorption record.
    pub fn from_ap(dims: Dims, ap: &[Complex64]) -> Result<Self> {
        if ap.len() != dims.block() {
            return Err(Error::Validation(format!(
                "initial state has {} amplitudes, expected {}",
                ap.len(),
                dims.block()
            )));
        }
        let norm: f64 = ap.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::Validation(format!("initial state has norm^2 {norm}")));
        }
        Ok(Self {
            dims,
            stage: 0,
            amps: ap.to_vec(),
        })
    }

    /// `|k>_A |l>_P` with nothing absorbed.
    pub fn basis(dims: Dims, ancilla: usize, photons: usize) -> Result<Self> {
        if ancilla > dims.ancilla_max || photons > dims.photon_max {
            return Err(Error::domain("basis state outside the cutoffs"));
        }
        let mut ap = vec![Complex64::new(0.0, 0.0); dims.block()];
        ap[dims.ap_index(ancilla, photons)] = Complex64::new(1.0, 0.0);
        Self::from_ap(dims, &ap)
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    /// Number of completed interaction steps.
    pub fn stage(&self) -> usize {
        self.stage
    }

    pub fn num_records(&self) -> usize {
        self.amps.len() / self.dims.block()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    fn decode_record(&self, mut r: usize) -> Vec<usize> {
        let mut rec = vec![0; self.stage];
        for slot in rec.iter_mut().rev() {
            *slot = r % self.dims.radix();
            r /= self.dims.radix();
        }
        rec
    }

    fn encode_record(&self, record: &[usize]) -> Option<usize> {
        if record.len() != self.stage || record.iter().any(|&n| n > self.dims.photon_max) {
            return None;
        }
        Some(record.iter().fold(0, |acc, &n| acc * self.dims.radix() + n))
    }

    pub fn amplitude(&self, label: &BasisLabel) -> Complex64 {
        if label.ancilla > self.dims.ancilla_max || label.photons > self.dims.photon_max {
            return Complex64::new(0.0, 0.0);
        }
        match self.encode_record(&label.record) {
            Some(r) => self.amps[r * self.dims.block() + self.dims.ap_index(label.ancilla, label.photons)],
            None => Complex64::new(0.0, 0.0),
        }
    }

    /// Every nonzero amplitude with its label.
    pub fn terms(&self) -> impl Iterator<Item = (BasisLabel, Complex64)> + '_ {
        let block = self.dims.block();
        let radix = self.dims.radix();
        self.amps
            .iter()
            .enumerate()
            .filter(|(_, a)| a.norm_sqr() > 0.0)
            .map(move |(idx, &a)| {
                let (r, ap) = (idx / block, idx % block);
                (
                    BasisLabel {
                        ancilla: ap / radix,
                        photons: ap % radix,
                        record: self.decode_record(r),
                    },
                    a,
                )
            })
    }

    /// Mean number of photons in the probe mode, `sum |C|^2 l`.
    pub fn mean_photons(&self) -> f64 {
        let radix = self.dims.radix();
        self.amps
            .iter()
            .enumerate()
            .map(|(idx, a)| a.norm_sqr() * ((idx % self.dims.block()) % radix) as f64)
            .sum()
    }

    /// Expected total number of photons deposited in the object so far.
    pub fn mean_absorbed(&self) -> f64 {
        let block = self.dims.block();
        (0..self.num_records())
            .map(|r| {
                let weight: f64 = self.amps[r * block..(r + 1) * block]
                    .iter()
                    .map(|a| a.norm_sqr())
                    .sum();
                if weight == 0.0 {
                    0.0
                } else {
                    weight * self.decode_record(r).iter().sum::<usize>() as f64
                }
            })
            .sum()
    }
}

/// Square matrix on the ancilla-photon space, checked unitary on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Unitary {
    dim: usize,
    /// Row-major entries.
    entries: Vec<Complex64>,
}

impl Unitary {
    pub fn new(dim: usize, entries: Vec<Complex64>) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::Validation(format!(
                "matrix has {} entries, expected {}",
                entries.len(),
                dim * dim
            )));
        }
        let u = Self { dim, entries };
        let dev = u.unitarity_defect();
        if !(dev <= UNITARY_TOL) {
            return Err(Error::Validation(format!(
                "matrix is not unitary: max |U^dag U - I| = {dev:.3e}"
            )));
        }
        Ok(u)
    }

    pub fn identity(dim: usize) -> Self {
        let mut entries = vec![Complex64::new(0.0, 0.0); dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = Complex64::new(1.0, 0.0);
        }
        Self { dim, entries }
    }

    /// Haar-like random unitary: Gram-Schmidt on a complex Gaussian matrix.
    pub fn random<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        loop {
            let mut cols: Vec<Vec<Complex64>> = (0..dim)
                .map(|_| {
                    (0..dim)
                        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
                        .collect()
                })
                .collect();
            if orthonormalize(&mut cols) {
                let mut entries = vec![Complex64::new(0.0, 0.0); dim * dim];
                for (c, col) in cols.iter().enumerate() {
                    for (r, &v) in col.iter().enumerate() {
                        entries[r * dim + c] = v;
                    }
                }
                return Self { dim, entries };
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.dim + col]
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    fn unitarity_defect(&self) -> f64 {
        let d = self.dim;
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                let mut s = Complex64::new(0.0, 0.0);
                for r in 0..d {
                    s += self.entry(r, i).conj() * self.entry(r, j);
                }
                if i == j {
                    s -= 1.0;
                }
                worst = worst.max(s.norm());
            }
        }
        worst
    }

    fn apply(&self, v: &[Complex64], out: &mut [Complex64]) {
        for (r, o) in out.iter_mut().enumerate() {
            let row = &self.entries[r * self.dim..(r + 1) * self.dim];
            *o = row.iter().zip(v).map(|(a, b)| a * b).sum();
        }
    }
}

/// Modified Gram-Schmidt in place; false if the columns were (numerically) dependent.
fn orthonormalize(cols: &mut [Vec<Complex64>]) -> bool {
    for i in 0..cols.len() {
        for j in 0..i {
            let (done, rest) = cols.split_at_mut(i);
            let proj: Complex64 = done[j].iter().zip(&rest[0]).map(|(a, b)| a.conj() * b).sum();
            for (x, &q) in rest[0].iter_mut().zip(&done[j]) {
                *x -= proj * q;
            }
        }
        let norm = cols[i].iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-8 {
            return false;
        }
        for x in &mut cols[i] {
            *x /= norm;
        }
    }
    true
}

/// Sends the probe photons through the object once.
pub fn interaction_step(state: &JointState, obj: &Transparency) -> JointState {
    let dims = state.dims;
    let block = dims.block();
    let radix = dims.radix();
    let coeffs = expansion_coefficients(dims.photon_max, obj.alpha(), obj.beta());
    let mut out = vec![Complex64::new(0.0, 0.0); state.amps.len() * radix];
    for r in 0..state.num_records() {
        for k in 0..=dims.ancilla_max {
            for l in 0..=dims.photon_max {
                let c = state.amps[r * block + dims.ap_index(k, l)];
                if c.norm_sqr() == 0.0 {
                    continue;
                }
                for m in 0..=l {
                    let new_r = r * radix + (l - m);
                    out[new_r * block + dims.ap_index(k, m)] += c * coeffs[l][m];
                }
            }
        }
    }
    JointState {
        dims,
        stage: state.stage + 1,
        amps: out,
    }
}

/// `coeffs[l][m] = sqrt(C(l, m)) alpha^m beta^(l-m)`.
fn expansion_coefficients(n_max: usize, alpha: Complex64, beta: Complex64) -> Vec<Vec<Complex64>> {
    (0..=n_max)
        .map(|l| {
            (0..=l)
                .map(|m| {
                    let binom = (0..m).fold(1.0, |acc, i| acc * (l - i) as f64 / (i + 1) as f64);
                    alpha.powu(m as u32) * beta.powu((l - m) as u32) * binom.sqrt()
                })
                .collect()
        })
        .collect()
}

/// Applies `U ⊗ I_O`: the same unitary on every absorption-record block.
pub fn unitary_step(state: &JointState, u: &Unitary) -> Result<JointState> {
    let block = state.dims.block();
    if u.dim() != block {
        return Err(Error::Validation(format!(
            "unitary has dimension {}, state blocks have {}",
            u.dim(),
            block
        )));
    }
    let mut out = vec![Complex64::new(0.0, 0.0); state.amps.len()];
    for (src, dst) in state.amps.chunks(block).zip(out.chunks_mut(block)) {
        u.apply(src, dst);
    }
    Ok(JointState {
        dims: state.dims,
        stage: state.stage,
        amps: out,
    })
}

/// `|<s1|s2>|`, summed term by term over shared basis labels.
pub fn branch_overlap(s1: &JointState, s2: &JointState) -> Result<f64> {
    if s1.stage != s2.stage {
        return Err(Error::precondition(format!(
            "branches at different stages ({} vs {})",
            s1.stage, s2.stage
        )));
    }
    if s1.dims != s2.dims {
        return Err(Error::precondition("branches use different cutoffs"));
    }
    let inner: Complex64 = s1.amps.iter().zip(&s2.amps).map(|(a, b)| a.conj() * b).sum();
    Ok(inner.norm())
}

/// Initial state plus `K - 1` rounds of (interaction, unitary).
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolScript {
    pub dims: Dims,
    /// Total stages `K`; there are `K - 1` rounds.
    pub stages: usize,
    pub seed: u64,
    pub initial: Vec<Complex64>,
    pub rounds: Vec<Unitary>,
}

impl ProtocolScript {
    pub fn new(dims: Dims, stages: usize, seed: u64, initial: Vec<Complex64>, rounds: Vec<Unitary>) -> Result<Self> {
        if stages == 0 {
            return Err(Error::domain("a protocol has at least one stage"));
        }
        if stages > MAX_STAGES {
            return Err(Error::Resource(format!("{stages} stages exceeds {MAX_STAGES}")));
        }
        if rounds.len() != stages - 1 {
            return Err(Error::Validation(format!(
                "{} stages need {} rounds, got {}",
                stages,
                stages - 1,
                rounds.len()
            )));
        }
        if let Some(u) = rounds.iter().find(|u| u.dim() != dims.block()) {
            return Err(Error::Validation(format!(
                "round unitary has dimension {}, expected {}",
                u.dim(),
                dims.block()
            )));
        }
        JointState::from_ap(dims, &initial)?;
        Ok(Self {
            dims,
            stages,
            seed,
            initial,
            rounds,
        })
    }

    /// Random normalized initial state and Haar-like rounds, all from `seed`.
    pub fn random(dims: Dims, stages: usize, seed: u64) -> Result<Self> {
        let mut rng = crate::seed::stream(seed, &[0]);
        let initial = random_state(dims.block(), &mut rng);
        let rounds = (1..stages)
            .map(|j| Unitary::random(dims.block(), &mut crate::seed::stream(seed, &[1, j as u64])))
            .collect();
        Self::new(dims, stages, seed, initial, rounds)
    }
}

pub(crate) fn random_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<Complex64> {
    let mut v: Vec<Complex64> = (0..dim)
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    let norm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    for a in &mut v {
        *a /= norm;
    }
    v
}

/// Overlaps and photon bookkeeping recorded while both branches evolve.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlapTrace {
    /// `f_1 .. f_K`, overlaps immediately before each interaction step and at the end.
    pub f: Vec<f64>,
    /// `nbar[i][j]`: mean photons sent through object `i` at step `j`.
    pub nbar: [Vec<f64>; 2],
    /// `N^i`, total photons sent through object `i`.
    pub total_photons: [f64; 2],
    /// Expected photons absorbed by object `i`, read off the final record.
    pub mean_absorbed: [f64; 2],
    /// Largest `|norm^2 - 1|` seen along either branch.
    pub norm_drift: f64,
}

impl OverlapTrace {
    pub fn final_overlap(&self) -> f64 {
        *self.f.last().expect("a trace has at least one stage")
    }
}

/// Branch transparencies used by the engine: object 1 with real `beta`,
/// object 2 with the absorption phase that makes the single-photon overlap
/// real (when the task admits one).
pub fn branch_objects(task: &TwoObjectTask) -> [Transparency; 2] {
    let phi = aligned_overlap_factor(task).map(|a| a.phi).unwrap_or(0.0);
    [task.transparency(0), task.transparency(1).with_beta_phase(phi)]
}

/// Evolves both hypotheses through the script in lockstep.
pub fn run_scripted_protocol(script: &ProtocolScript, task: &TwoObjectTask) -> Result<OverlapTrace> {
    let objects = branch_objects(task);
    let start = JointState::from_ap(script.dims, &script.initial)?;
    let mut branches = [start.clone(), start];
    let mut f = Vec::with_capacity(script.stages);
    let mut nbar = [Vec::new(), Vec::new()];
    let mut drift: f64 = 0.0;
    for u in &script.rounds {
        f.push(branch_overlap(&branches[0], &branches[1])?.min(1.0));
        for (i, b) in branches.iter_mut().enumerate() {
            nbar[i].push(b.mean_photons());
            let after = interaction_step(b, &objects[i]);
            *b = unitary_step(&after, u)?;
            drift = drift.max((b.norm_sqr() - 1.0).abs());
        }
    }
    f.push(branch_overlap(&branches[0], &branches[1])?.min(1.0));
    let total_photons = [nbar[0].iter().sum(), nbar[1].iter().sum()];
    let mean_absorbed = [branches[0].mean_absorbed(), branches[1].mean_absorbed()];
    Ok(OverlapTrace {
        f,
        nbar,
        total_photons,
        mean_absorbed,
        norm_drift: drift,
    })
}
