//! Structured pass/fail records for identity checks.
//!
//! Reports serialize to a line-oriented format (one JSON object per check)
//! so downstream tooling can stream them; serialization is deterministic for
//! identical inputs.

use serde::{Deserialize, Serialize};

/// One identity check: what was tested, at which tolerance, and what error
/// was observed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub tolerance: f64,
    pub observed: f64,
    pub pass: bool,
}

impl CheckRecord {
    /// Standard comparison record: passes when the observed error stays
    /// within tolerance.
    pub fn within(name: impl Into<String>, tolerance: f64, observed: f64) -> Self {
        CheckRecord {
            name: name.into(),
            tolerance,
            observed,
            pass: observed <= tolerance,
        }
    }

    /// Boolean assertion record; `observed` is 0 on success and 1 otherwise.
    pub fn assertion(name: impl Into<String>, ok: bool) -> Self {
        CheckRecord {
            name: name.into(),
            tolerance: 0.0,
            observed: if ok { 0.0 } else { 1.0 },
            pass: ok,
        }
    }
}

/// A batch of check records.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub checks: Vec<CheckRecord>,
}

impl VerificationReport {
    pub fn new() -> Self {
        VerificationReport::default()
    }

    pub fn push(&mut self, record: CheckRecord) {
        self.checks.push(record);
    }

    pub fn extend(&mut self, other: VerificationReport) {
        self.checks.extend(other.checks);
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn len(&self) -> usize {
        self.checks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.checks.is_empty()
    }

    /// Largest observed error across records.
    pub fn max_observed(&self) -> f64 {
        self.checks.iter().fold(0.0, |acc, c| acc.max(c.observed))
    }

    /// One JSON object per line, in record order.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for check in &self.checks {
            out.push_str(&serde_json::to_string(check).expect("records serialize"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> serde_json::Result<Self> {
        let mut report = VerificationReport::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            report.push(serde_json::from_str(line)?);
        }
        Ok(report)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jsonl_round_trip() {
        let mut report = VerificationReport::new();
        report.push(CheckRecord::within("a", 1e-8, 3.2e-9));
        report.push(CheckRecord::within("b", 1e-8, 4.0e-7));
        report.push(CheckRecord::assertion("c", true));
        assert!(!report.all_pass());
        assert_eq!(report.max_observed(), 4.0e-7);
        let text = report.to_jsonl();
        assert_eq!(text.lines().count(), 3);
        let parsed = VerificationReport::from_jsonl(&text).unwrap();
        assert_eq!(parsed, report);
    }
}
