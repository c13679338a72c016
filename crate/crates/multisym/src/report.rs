//! Verification report records.
//!
//! Checks produce one [`CheckResult`] each; the CLI serializes the whole
//! [`VerificationReport`] with stable field order so identical runs are
//! byte-identical (timestamps live in their own field and are excluded from
//! that comparison).

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CheckStatus {
    #[serde(rename = "pass")]
    Pass,
    #[serde(rename = "fail")]
    Fail,
    /// A negative control that failed as expected.
    #[serde(rename = "expected-fail: passed")]
    ExpectedFailPassed,
    /// A negative control that did not fail.
    #[serde(rename = "expected-fail: failed")]
    ExpectedFailFailed,
}

impl CheckStatus {
    /// Whether this outcome counts as success for the process exit code.
    pub fn is_success(self) -> bool {
        matches!(self, CheckStatus::Pass | CheckStatus::ExpectedFailPassed)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    /// What the check verifies, in words (stable across runs).
    pub reference: String,
    pub status: CheckStatus,
    pub measured_value: f64,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub order_estimate: Option<f64>,
}

impl CheckResult {
    pub fn measured(
        name: impl Into<String>,
        reference: impl Into<String>,
        measured_value: f64,
        tolerance: f64,
    ) -> Self {
        CheckResult {
            name: name.into(),
            reference: reference.into(),
            status: if measured_value <= tolerance {
                CheckStatus::Pass
            } else {
                CheckStatus::Fail
            },
            measured_value,
            tolerance,
            order_estimate: None,
        }
    }

    pub fn with_order(mut self, order: f64) -> Self {
        self.order_estimate = Some(order);
        self
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerificationReport {
    pub scenario: String,
    pub seed: u64,
    pub results: Vec<CheckResult>,
    /// Excluded from determinism comparisons.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generated_at: Option<String>,
}

impl VerificationReport {
    pub fn all_passed(&self) -> bool {
        self.results.iter().all(|r| r.status.is_success())
    }
}
