//! The `.psml` specification language.
//!
//! ```text
//! perspecml 1
//! project "Loan approval"
//!
//! [model]
//! M5 essential {
//!   by: DS, DE
//!   spec: "F1 >= 0.8 on the holdout set"
//!   status: refined
//! }
//! M1 important experimental
//! M14 n/a because "no personal data reaches the model"
//! ```
//!
//! [`parse_spec`] is total: it recovers at the next entry after an error and
//! reports every error it finds. [`serialize_spec`] produces the canonical
//! form, and [`to_json`]/[`from_json`] the canonical JSON projection.

mod json;
mod lexer;
mod parser;
mod write;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::catalog::{ConcernId, RoleCode, UnknownId};
use crate::diagnostics::Span;

pub use json::{from_json, to_json};
pub use parser::parse_spec;
pub use write::{escape_string, serialize_spec};

pub const FORMAT_VERSION: u32 = 1;

/// Ordered: `Desirable < Important < Essential`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Relevance {
    Desirable,
    Important,
    Essential,
}

impl Relevance {
    pub const ALL: [Relevance; 3] = [
        Relevance::Desirable,
        Relevance::Important,
        Relevance::Essential,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Relevance::Desirable => "desirable",
            Relevance::Important => "important",
            Relevance::Essential => "essential",
        }
    }
}

impl fmt::Display for Relevance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Relevance {
    type Err = UnknownId;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| UnknownId(s.to_owned()))
    }
}

#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    #[default]
    Draft,
    Refined,
    Approved,
}

impl Status {
    pub const ALL: [Status; 3] = [Status::Draft, Status::Refined, Status::Approved];

    pub fn as_str(self) -> &'static str {
        match self {
            Status::Draft => "draft",
            Status::Refined => "refined",
            Status::Approved => "approved",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Status {
    type Err = UnknownId;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| UnknownId(s.to_owned()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Disposition {
    Applicable {
        relevance: Relevance,
        spec_text: String,
        by: BTreeSet<RoleCode>,
        status: Status,
        experimental_override: Option<bool>,
    },
    NotApplicable {
        reason: Option<String>,
    },
}

impl Disposition {
    pub fn applicable(relevance: Relevance, spec_text: impl Into<String>) -> Self {
        Disposition::Applicable {
            relevance,
            spec_text: spec_text.into(),
            by: BTreeSet::new(),
            status: Status::Draft,
            experimental_override: None,
        }
    }

    pub fn not_applicable(reason: Option<&str>) -> Self {
        Disposition::NotApplicable {
            reason: reason.map(str::to_owned),
        }
    }

    pub fn is_applicable(&self) -> bool {
        matches!(self, Disposition::Applicable { .. })
    }

    pub fn relevance(&self) -> Option<Relevance> {
        match self {
            Disposition::Applicable { relevance, .. } => Some(*relevance),
            Disposition::NotApplicable { .. } => None,
        }
    }

    pub fn spec_text(&self) -> Option<&str> {
        match self {
            Disposition::Applicable { spec_text, .. } => Some(spec_text),
            Disposition::NotApplicable { .. } => None,
        }
    }

    pub fn kind_str(&self) -> &'static str {
        match self {
            Disposition::Applicable { .. } => "applicable",
            Disposition::NotApplicable { .. } => "not_applicable",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConcernEntry {
    pub concern: ConcernId,
    pub disposition: Disposition,
    /// Where the entry was read from; `None` for constructed entries.
    pub span: Option<Span>,
}

impl ConcernEntry {
    pub fn new(concern: ConcernId, disposition: Disposition) -> Self {
        Self {
            concern,
            disposition,
            span: None,
        }
    }

    pub fn is_applicable(&self) -> bool {
        self.disposition.is_applicable()
    }

    pub fn relevance(&self) -> Option<Relevance> {
        self.disposition.relevance()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpecDocument {
    pub format_version: u32,
    pub project_name: String,
    /// Source order; at most one entry per concern.
    pub entries: Vec<ConcernEntry>,
}

impl SpecDocument {
    pub fn new(project_name: impl Into<String>) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            project_name: project_name.into(),
            entries: Vec::new(),
        }
    }

    pub fn entry(&self, id: ConcernId) -> Option<&ConcernEntry> {
        self.entries.iter().find(|e| e.concern == id)
    }

    pub fn is_addressed(&self, id: ConcernId) -> bool {
        self.entry(id).is_some()
    }

    pub fn is_applicable(&self, id: ConcernId) -> bool {
        self.entry(id).is_some_and(ConcernEntry::is_applicable)
    }

    /// Inserts `entry`, replacing any entry for the same concern in place.
    pub fn upsert(&mut self, entry: ConcernEntry) {
        match self.entries.iter_mut().find(|e| e.concern == entry.concern) {
            Some(slot) => *slot = entry,
            None => self.entries.push(entry),
        }
    }

    pub fn remove(&mut self, id: ConcernId) -> Option<ConcernEntry> {
        let pos = self.entries.iter().position(|e| e.concern == id)?;
        Some(self.entries.remove(pos))
    }

    /// Entries in flow order with spans stripped: the form two documents are
    /// compared in when source layout does not matter.
    pub fn normalized(&self) -> SpecDocument {
        let mut entries: Vec<ConcernEntry> = self
            .entries
            .iter()
            .map(|e| ConcernEntry {
                span: None,
                ..e.clone()
            })
            .collect();
        entries.sort_by_key(|e| e.concern);
        SpecDocument {
            format_version: self.format_version,
            project_name: self.project_name.clone(),
            entries,
        }
    }

    /// Span- and order-insensitive equality.
    pub fn same_content(&self, other: &SpecDocument) -> bool {
        self.normalized() == other.normalized()
    }
}
