//! Named checks over weights, symbols and operators, plus scaling sweeps.

mod bspec;
mod checks;
mod suite;
mod sweep;

use serde::{Deserialize, Serialize};

pub use bspec::BSpec;
pub use checks::{
    check_ids, lookup, run_check, CheckDef, CheckInput, Scope, IDENTITY_TOL, INEQUALITY_TOL,
    PARA_NEC_MAX_DEPTH, REGISTRY,
};
pub use suite::{
    default_bspecs, default_corpus, run_suite, write_csv, SuiteOptions, SuiteOutput, SuiteSummary,
};
pub use sweep::{sweep_power_scaling, write_sweep_csv, SweepPoint, SweepResult, SweepTarget};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckKind {
    ExactIdentity,
    ExactInequality,
    MeasuredConstant,
}

impl CheckKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CheckKind::ExactIdentity => "exact-identity",
            CheckKind::ExactInequality => "exact-inequality",
            CheckKind::MeasuredConstant => "measured-constant",
        }
    }

    pub fn is_exact(self) -> bool {
        !matches!(self, CheckKind::MeasuredConstant)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check_id: String,
    pub depth: u32,
    pub family: String,
    pub params: String,
    pub seed: Option<u64>,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs / rhs`; `0` when both vanish and `inf` when only `rhs` does.
    pub ratio: f64,
    pub pass: bool,
    pub kind: CheckKind,
    pub tol: f64,
    pub tol_abs: f64,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub note: String,
}

pub fn ratio(lhs: f64, rhs: f64) -> f64 {
    if rhs != 0.0 {
        lhs / rhs
    } else if lhs == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

pub fn passes(kind: CheckKind, lhs: f64, rhs: f64, tol: f64, tol_abs: f64) -> bool {
    if !lhs.is_finite() || !rhs.is_finite() {
        return kind == CheckKind::MeasuredConstant;
    }
    match kind {
        CheckKind::ExactIdentity => (lhs - rhs).abs() <= tol * lhs.abs().max(rhs.abs()) + tol_abs,
        CheckKind::ExactInequality => lhs <= rhs * (1.0 + tol) + tol_abs,
        CheckKind::MeasuredConstant => true,
    }
}

impl CheckReport {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        check_id: &str,
        depth: u32,
        family: String,
        params: String,
        seed: Option<u64>,
        lhs: f64,
        rhs: f64,
        kind: CheckKind,
        tol: f64,
        tol_abs: f64,
        note: String,
    ) -> Self {
        CheckReport {
            check_id: check_id.to_string(),
            depth,
            family,
            params,
            seed,
            lhs,
            rhs,
            ratio: ratio(lhs, rhs),
            pass: passes(kind, lhs, rhs, tol, tol_abs),
            kind,
            tol,
            tol_abs,
            note,
        }
    }
}
