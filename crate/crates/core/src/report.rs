//! Structured pass/fail records shared by the certificate, solver and audit
//! layers.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    /// value ≤ tolerance
    AtMost,
    /// value > tolerance
    Above,
    /// boolean verdict carried in `passed`
    Verdict,
    /// precondition not met, check not evaluated
    Skipped,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckEntry {
    pub name: String,
    pub kind: CheckKind,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl CheckEntry {
    pub fn at_most(name: &str, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            kind: CheckKind::AtMost,
            value,
            tolerance,
            passed: value <= tolerance,
            note: None,
        }
    }

    pub fn above(name: &str, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            kind: CheckKind::Above,
            value,
            tolerance: threshold,
            passed: value > threshold,
            note: None,
        }
    }

    pub fn verdict(name: &str, passed: bool, note: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: CheckKind::Verdict,
            value: if passed { 1.0 } else { 0.0 },
            tolerance: 0.0,
            passed,
            note: Some(note.into()),
        }
    }

    pub fn skipped(name: &str, reason: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: CheckKind::Skipped,
            value: f64::NAN,
            tolerance: 0.0,
            passed: true,
            note: Some(reason.into()),
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub label: String,
    pub entries: Vec<CheckEntry>,
}

impl CertificateReport {
    pub fn new(label: impl Into<String>) -> Self {
        Self { label: label.into(), entries: Vec::new() }
    }

    pub fn push(&mut self, e: CheckEntry) {
        self.entries.push(e);
    }

    pub fn get(&self, name: &str) -> Option<&CheckEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.passed)
    }

    pub fn failures(&self) -> Vec<&CheckEntry> {
        self.entries.iter().filter(|e| !e.passed).collect()
    }
}

/// |residual| over the largest absolute term of the identity.
pub fn relative(residual: f64, terms: &[f64]) -> f64 {
    let scale = terms.iter().fold(0.0f64, |m, t| m.max(t.abs()));
    if scale > 0.0 {
        residual.abs() / scale
    } else {
        residual.abs()
    }
}
