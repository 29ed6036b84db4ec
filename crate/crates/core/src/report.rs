//! Pass/fail records shared by reports and the command line.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Measured error, when the check is a tolerance.
    pub value: Option<f64>,
    pub tolerance: Option<f64>,
}

impl Check {
    pub fn within(name: &str, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            passed: value <= tolerance,
            value: Some(value),
            tolerance: Some(tolerance),
        }
    }

    pub fn holds(name: &str, passed: bool) -> Self {
        Self {
            name: name.to_string(),
            passed,
            value: None,
            tolerance: None,
        }
    }
}

impl std::fmt::Display for Check {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let status = if self.passed { "ok" } else { "FAILED" };
        match (self.value, self.tolerance) {
            (Some(v), Some(t)) => write!(f, "{}: {status} ({v:.3e} <= {t:.1e})", self.name),
            _ => write!(f, "{}: {status}", self.name),
        }
    }
}
