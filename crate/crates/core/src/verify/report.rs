use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

/// How `observed` is judged against `target`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// `observed − 3·stderr ≤ target` (`stderr` is zero for exact checks).
    AtMost,
    /// `observed ≥ target`.
    AtLeast,
}

/// Where a report's numbers come from.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportParameters {
    pub n: usize,
    pub times: Vec<f64>,
    pub potential: String,
    /// Phase points or Monte Carlo samples behind the observation.
    pub samples: usize,
    pub seed: u64,
}

/// The outcome of one property check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub property: String,
    pub parameters: ReportParameters,
    pub observed: f64,
    pub target: f64,
    pub comparison: Comparison,
    pub stderr: Option<f64>,
    pub passed: bool,
    pub note: Option<String>,
}

impl PropertyReport {
    pub fn new(
        property: &str,
        parameters: ReportParameters,
        observed: f64,
        target: f64,
        comparison: Comparison,
    ) -> Self {
        Self::stochastic(property, parameters, observed, None, target, comparison)
    }

    pub fn stochastic(
        property: &str,
        parameters: ReportParameters,
        observed: f64,
        stderr: Option<f64>,
        target: f64,
        comparison: Comparison,
    ) -> Self {
        Self {
            property: property.to_string(),
            parameters,
            observed,
            target,
            comparison,
            stderr,
            passed: judge(observed, stderr, target, comparison),
            note: None,
        }
    }

    /// A check that could not be carried out.
    pub fn failure(property: &str, parameters: ReportParameters, error: &crate::Error) -> Self {
        Self {
            property: property.to_string(),
            parameters,
            observed: f64::NAN,
            target: f64::NAN,
            comparison: Comparison::AtMost,
            stderr: None,
            passed: false,
            note: Some(error.to_string()),
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

/// The pass rule; NaN observations never pass.
pub fn judge(observed: f64, stderr: Option<f64>, target: f64, comparison: Comparison) -> bool {
    match comparison {
        Comparison::AtMost => observed - 3.0 * stderr.unwrap_or(0.0) <= target,
        Comparison::AtLeast => observed >= target,
    }
}
