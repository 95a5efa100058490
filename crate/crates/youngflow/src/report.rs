use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::config::{Check, ExperimentConfig};

/// Bumped whenever a field of [`Report`] changes meaning or disappears.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub check: Check,
    pub passed: bool,
    /// Worst observed discrepancy, where the check measures one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_discrepancy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    /// Check-specific numbers (the underlying report structures).
    #[serde(default)]
    pub detail: serde_json::Value,
    /// Set when the computation behind the check failed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl CheckOutcome {
    pub fn new(check: Check, passed: bool) -> Self {
        Self { check, passed, max_discrepancy: None, tolerance: None, detail: serde_json::Value::Null, error: None }
    }

    pub fn measured(mut self, discrepancy: f64, tolerance: f64) -> Self {
        self.max_discrepancy = Some(discrepancy);
        self.tolerance = Some(tolerance);
        self
    }

    pub fn with_detail<T: Serialize>(mut self, detail: &T) -> Self {
        self.detail = serde_json::to_value(detail).expect("plain data");
        self
    }

    pub fn failed(check: Check, error: impl ToString) -> Self {
        Self { error: Some(error.to_string()), ..Self::new(check, false) }
    }
}

/// Wall-clock data. The only part of a report that differs between two runs
/// of the same config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Timing {
    pub generated_at_unix_s: u64,
    pub total_ms: f64,
    pub checks_ms: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub tool: String,
    pub config: ExperimentConfig,
    pub passed: bool,
    pub checks: Vec<CheckOutcome>,
    /// Files written next to the report.
    pub outputs: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    pub timing: Timing,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("plain data");
        s.push('\n');
        s
    }

    /// The report without `timing`, for comparing runs.
    pub fn comparable(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("plain data");
        v.as_object_mut().expect("a report is an object").remove("timing");
        v
    }

    pub fn outcome(&self, check: Check) -> Option<&CheckOutcome> {
        self.checks.iter().find(|c| c.check == check)
    }
}
