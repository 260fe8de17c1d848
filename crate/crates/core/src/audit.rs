//! Checks a simulated overlap trace against the step-by-step overlap
//! inequality, its summed form, and the single-pixel absorption bound.

use serde::{Deserialize, Serialize};

use crate::domain::{aligned_overlap_factor, helstrom_error, single_pixel_bound, Slack, TwoObjectTask};
use crate::error::Result;
use crate::fock::OverlapTrace;

/// Rounding allowance on the overlap inequalities.
pub const OVERLAP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    /// `f_{j+1} >= f_j - (1 - factor)(n_j^1 + n_j^2)/2`.
    StepOverlap,
    /// `f_K >= 1 - (1 - factor)(N^1 + N^2)/2`.
    TotalOverlap,
    /// Mean absorption (plus slack) reaches the single-pixel bound at the Helstrom error of `f_K`.
    AbsorptionBound,
}

impl CheckKind {
    pub fn name(self) -> &'static str {
        match self {
            CheckKind::StepOverlap => "step_overlap",
            CheckKind::TotalOverlap => "total_overlap",
            CheckKind::AbsorptionBound => "absorption_bound",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditCheck {
    pub kind: CheckKind,
    /// Interaction step for per-step checks.
    pub step: Option<usize>,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs - rhs`; the check passes when this is non-negative up to tolerance.
    pub margin: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub factor: f64,
    pub checks: Vec<AuditCheck>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &AuditCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }

    /// Smallest margin among checks of one kind.
    pub fn min_margin(&self, kind: CheckKind) -> Option<f64> {
        self.checks
            .iter()
            .filter(|c| c.kind == kind)
            .map(|c| c.margin)
            .reduce(f64::min)
    }

    /// Value of the absorption bound that was compared against.
    pub fn bound(&self) -> Option<f64> {
        self.checks
            .iter()
            .find(|c| c.kind == CheckKind::AbsorptionBound)
            .map(|c| c.rhs)
    }
}

fn check(kind: CheckKind, step: Option<usize>, lhs: f64, rhs: f64, tol: f64) -> AuditCheck {
    let margin = lhs - rhs;
    AuditCheck {
        kind,
        step,
        lhs,
        rhs,
        margin,
        passed: margin >= -tol,
    }
}

/// Audits a trace using the phase-aligned per-photon overlap. Check failures
/// are reported in the result; only a task outside the closeness regime is an
/// error.
pub fn audit_trace(trace: &OverlapTrace, task: &TwoObjectTask, slack: Slack) -> Result<AuditReport> {
    let factor = aligned_overlap_factor(task)?.factor;
    let loss = 1.0 - factor;
    let mut checks = Vec::with_capacity(trace.f.len() + 1);
    for j in 0..trace.f.len().saturating_sub(1) {
        let rhs = trace.f[j] - loss * (trace.nbar[0][j] + trace.nbar[1][j]) / 2.0;
        checks.push(check(CheckKind::StepOverlap, Some(j + 1), trace.f[j + 1], rhs, OVERLAP_TOL));
    }

    let f_k = trace.final_overlap();
    let total_rhs = 1.0 - loss * (trace.total_photons[0] + trace.total_photons[1]) / 2.0;
    checks.push(check(CheckKind::TotalOverlap, None, f_k, total_rhs, OVERLAP_TOL));

    let pe = helstrom_error(f_k.clamp(0.0, 1.0))?;
    let bound = single_pixel_bound(task, pe)?.value();
    let absorbed = (trace.mean_absorbed[0] + trace.mean_absorbed[1]) / 2.0;
    checks.push(check(
        CheckKind::AbsorptionBound,
        None,
        absorbed + slack.amount(bound),
        bound,
        0.0,
    ));
    Ok(AuditReport { factor, checks })
}
