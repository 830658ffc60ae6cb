//! Structured run summary written as `report.json`.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::Value;

use crate::config::ScenarioConfig;

/// A reported quantity, with a standard error when it is statistical.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metric {
    pub value: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    /// Passes when `value ≤ tolerance`.
    AtMost,
    /// Passes when `value ≥ tolerance`.
    AtLeast,
}

/// One named invariant check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Audit {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub bound: Bound,
    pub tolerance: f64,
}

impl Audit {
    pub fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            passed: value <= tolerance,
            value,
            bound: Bound::AtMost,
            tolerance,
        }
    }

    pub fn at_least(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            passed: value >= tolerance,
            value,
            bound: Bound::AtLeast,
            tolerance,
        }
    }
}

/// A default that was filled in, either from the config schema or derived
/// from the machine during the run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolvedDefault {
    pub key: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<Value>,
    pub derived: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub scenario: String,
    pub config: ScenarioConfig,
    pub resolved_defaults: Vec<ResolvedDefault>,
    pub metrics: BTreeMap<String, Metric>,
    pub audits: Vec<Audit>,
    pub notes: Vec<String>,
    pub artifacts: Vec<String>,
    pub wall_time_s: f64,
}

impl RunReport {
    pub fn new(config: &ScenarioConfig, schema_defaults: &[String]) -> Self {
        Self {
            scenario: config.scenario.name().to_string(),
            config: config.clone(),
            resolved_defaults: schema_defaults
                .iter()
                .map(|k| ResolvedDefault {
                    key: k.clone(),
                    value: None,
                    derived: false,
                })
                .collect(),
            metrics: BTreeMap::new(),
            audits: Vec::new(),
            notes: Vec::new(),
            artifacts: Vec::new(),
            wall_time_s: 0.0,
        }
    }

    pub fn metric(&mut self, name: impl Into<String>, value: impl Into<Value>) {
        self.metrics.insert(
            name.into(),
            Metric {
                value: value.into(),
                error: None,
            },
        );
    }

    pub fn estimate(&mut self, name: impl Into<String>, value: f64, error: f64) {
        self.metrics.insert(
            name.into(),
            Metric {
                value: value.into(),
                error: Some(error),
            },
        );
    }

    pub fn audit(&mut self, audit: Audit) {
        if !audit.passed {
            log::error!(
                "audit {} failed: {:e} vs {:?} {:e}",
                audit.name,
                audit.value,
                audit.bound,
                audit.tolerance
            );
        }
        self.audits.push(audit);
    }

    pub fn derived(&mut self, key: impl Into<String>, value: impl Into<Value>) {
        self.resolved_defaults.push(ResolvedDefault {
            key: key.into(),
            value: Some(value.into()),
            derived: true,
        });
    }

    pub fn note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }

    pub fn all_passed(&self) -> bool {
        self.audits.iter().all(|a| a.passed)
    }

    pub fn failed(&self) -> impl Iterator<Item = &Audit> {
        self.audits.iter().filter(|a| !a.passed)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Numeric value of a metric, if present.
    pub fn number(&self, name: &str) -> Option<f64> {
        self.metrics.get(name).and_then(|m| m.value.as_f64())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nan_values_fail_both_bounds() {
        assert!(!Audit::at_most("x", f64::NAN, 1.0).passed);
        assert!(!Audit::at_least("x", f64::NAN, 1.0).passed);
        assert!(Audit::at_least("x", f64::INFINITY, 0.0).passed);
    }
}
