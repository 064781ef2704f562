//! Verification engine.
//!
//! Exact checks are inequalities that hold cube by cube on the grid, so any
//! violation beyond floating-point tolerance is a defect. Empirical checks
//! compare measured norms against theorem right-hand sides with fitted
//! constants; they report ratios and fail only on non-finite output.

mod corpus;
mod empirical;
mod exact;
mod suite;

pub use corpus::{
    continuum_probes, power_weight, probes, two_value_weight, weight_for_a2, Symbol, SymbolCorpus,
    WeightCorpus,
};
pub use empirical::{
    check_converse_bilinear, check_converse_linear, check_crw_quantitative, check_double_hilbert_commutator,
    check_fractional, check_john_nirenberg, check_main_linear, check_multilinear, check_perez_rh,
    check_rect_reverse, fit_exponent, CrwConfig, MultilinearConfig,
};
pub use exact::{
    check_ap_algebra, check_bmo_rect_equivalence, check_bmo_vs_script, check_fractional_identity,
    check_lemma_bmo_to_ap, check_lemma_product, check_prop21, EXACT_TOL,
};
pub use suite::{run_suite, SuiteConfig, SuiteKind, SuiteReport, SuiteSize};

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Exact,
    Empirical,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub check_id: String,
    pub classification: Classification,
    pub instances_run: usize,
    /// For empirical checks this counts exceedances of the fitted bound;
    /// they are reported but do not fail the check.
    pub violations: usize,
    /// Largest `lhs / rhs` seen (for equalities, the largest relative gap).
    pub max_ratio: f64,
    pub argmax: String,
    /// Instances where either side came out NaN or infinite.
    pub nonfinite: usize,
    pub passed: bool,
    /// The right-hand side is a measured quantity evaluated at the instance
    /// it bounds, so a pass only confirms the harness is consistent.
    pub harness_sanity: bool,
    pub metrics: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

impl CheckOutcome {
    pub fn summary_line(&self) -> String {
        format!(
            "{:<34} {:<9} {:>6} inst {:>4} viol  max_ratio={:<12.6e} {}",
            self.check_id,
            match self.classification {
                Classification::Exact => "exact",
                Classification::Empirical => "empirical",
            },
            self.instances_run,
            self.violations,
            self.max_ratio,
            if self.passed { "PASS" } else { "FAIL" }
        )
    }
}

/// Accumulates one check's instances.
pub(crate) struct Tracker {
    id: String,
    class: Classification,
    tol: f64,
    instances: usize,
    violations: usize,
    nonfinite: usize,
    max_ratio: f64,
    argmax: String,
    first_violation: Option<String>,
    harness_sanity: bool,
    metrics: BTreeMap<String, f64>,
    notes: Vec<String>,
}

impl Tracker {
    pub fn new(id: &str, class: Classification, tol: f64) -> Self {
        Tracker {
            id: id.to_string(),
            class,
            tol,
            instances: 0,
            violations: 0,
            nonfinite: 0,
            max_ratio: 0.0,
            argmax: String::new(),
            first_violation: None,
            harness_sanity: false,
            metrics: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    pub fn sanity(mut self) -> Self {
        self.harness_sanity = true;
        self
    }

    fn observe(&mut self, ratio: f64, violated: bool, desc: &dyn Fn() -> String) {
        self.instances += 1;
        if !ratio.is_finite() {
            self.nonfinite += 1;
        }
        if ratio > self.max_ratio || (ratio.is_nan() && !self.max_ratio.is_nan()) || self.instances == 1 {
            self.max_ratio = ratio;
            self.argmax = desc();
        }
        if violated {
            self.violations += 1;
            if self.first_violation.is_none() {
                self.first_violation = Some(desc());
            }
        }
    }

    /// `lhs ≤ rhs` up to the relative tolerance.
    pub fn bound(&mut self, lhs: f64, rhs: f64, desc: impl Fn() -> String) {
        let ratio = if lhs == 0.0 && rhs >= 0.0 { 0.0 } else { lhs / rhs };
        let ok = lhs.is_finite() && rhs.is_finite() && lhs <= rhs + self.tol * rhs.abs().max(lhs.abs());
        self.observe(ratio, !ok, &desc);
    }

    /// `a = b` up to the relative tolerance; the ratio recorded is the gap.
    pub fn equal(&mut self, a: f64, b: f64, desc: impl Fn() -> String) {
        let scale = a.abs().max(b.abs());
        let gap = if scale == 0.0 { 0.0 } else { (a - b).abs() / scale };
        let ok = a.is_finite() && b.is_finite() && gap <= self.tol;
        self.observe(gap, !ok, &desc);
    }

    /// An observed ratio with no pass threshold beyond finiteness.
    pub fn ratio(&mut self, r: f64, desc: impl Fn() -> String) {
        self.observe(r, !r.is_finite(), &desc);
    }

    /// Errors count as instances and as violations.
    pub fn error(&mut self, e: &crate::LabError, desc: impl Fn() -> String) {
        let d = format!("{}: {e}", desc());
        self.observe(f64::NAN, true, &|| d.clone());
    }

    pub fn peek_max(&self) -> f64 {
        self.max_ratio
    }

    pub fn metric(&mut self, k: &str, v: f64) {
        self.metrics.insert(k.to_string(), v);
    }

    pub fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    pub fn finish(mut self) -> CheckOutcome {
        if let Some(v) = self.first_violation.take() {
            self.notes.push(format!("first violation: {v}"));
        }
        let passed = match self.class {
            Classification::Exact => self.violations == 0,
            Classification::Empirical => self.nonfinite == 0,
        };
        CheckOutcome {
            check_id: self.id,
            classification: self.class,
            instances_run: self.instances,
            violations: self.violations,
            max_ratio: self.max_ratio,
            argmax: self.argmax,
            nonfinite: self.nonfinite,
            passed,
            harness_sanity: self.harness_sanity,
            metrics: self.metrics,
            notes: self.notes,
        }
    }
}
