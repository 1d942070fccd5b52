//! Pass/fail reports shared by the validation and verification suites.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckEntry {
    pub check: String,
    pub status: Status,
    /// First counterexample found, or a summary of what was covered.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Report {
    pub entries: Vec<CheckEntry>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn pass(&mut self, check: impl Into<String>, note: Option<String>) {
        self.entries.push(CheckEntry {
            check: check.into(),
            status: Status::Pass,
            witness: note,
        });
    }

    pub fn fail(&mut self, check: impl Into<String>, witness: impl Into<String>) {
        self.entries.push(CheckEntry {
            check: check.into(),
            status: Status::Fail,
            witness: Some(witness.into()),
        });
    }

    /// `Ok` carries an optional coverage note, `Err` the witness.
    pub fn record(&mut self, check: impl Into<String>, outcome: Result<Option<String>, String>) {
        match outcome {
            Ok(note) => self.pass(check, note),
            Err(w) => self.fail(check, w),
        }
    }

    pub fn extend(&mut self, other: Report) {
        self.entries.extend(other.entries);
    }

    pub fn all_passed(&self) -> bool {
        self.entries.iter().all(|e| e.status == Status::Pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckEntry> {
        self.entries.iter().filter(|e| e.status == Status::Fail)
    }

    pub fn status_of(&self, check: &str) -> Option<Status> {
        self.entries.iter().find(|e| e.check == check).map(|e| e.status)
    }
}
