//! Semantic checks, coverage, prioritization and diffing of specification
//! documents.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use serde::Serialize;

use crate::catalog::{Catalog, ConcernId, PerspectiveId, RelationKind};
use crate::diagnostics::{sort_findings, Code, Finding};
use crate::specformat::{ConcernEntry, Disposition, Relevance, SpecDocument, Status};

pub fn check(c: &Catalog, d: &SpecDocument) -> Vec<Finding> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for e in &d.entries {
        let span = |f: Finding| match e.span {
            Some(s) => f.with_span(s),
            None => f,
        };
        if !c.contains(e.concern) {
            out.push(span(Finding::new(
                Code::E001,
                format!("{} is not a concern of this catalog", e.concern),
            )));
            continue;
        }
        if !seen.insert(e.concern) {
            out.push(span(
                Finding::new(Code::E003, format!("duplicate entry for {}", e.concern))
                    .with_concern(e.concern),
            ));
            continue;
        }
        if let Disposition::Applicable {
            spec_text, status, ..
        } = &e.disposition
        {
            if spec_text.trim().is_empty() {
                out.push(span(
                    Finding::new(
                        Code::W101,
                        format!("{} is applicable but has no specification text", e.concern),
                    )
                    .with_concern(e.concern),
                ));
            }
            if *status == Status::Approved && is_experimental(c, e) {
                out.push(span(
                    Finding::new(
                        Code::I201,
                        format!(
                            "{} is experimental yet approved; keep its specification open to revision",
                            e.concern
                        ),
                    )
                    .with_concern(e.concern),
                ));
            }
        }
    }

    let entry = |id: ConcernId| d.entry(id);
    let applicable = |id: ConcernId| entry(id).is_some_and(ConcernEntry::is_applicable);
    for r in c.relationships() {
        let rationale = if r.rationale.is_empty() {
            String::new()
        } else {
            format!(": {}", r.rationale)
        };
        let arrow = if r.kind.is_directed() { "->" } else { "<->" };
        for (x, y) in [(r.from, r.to), (r.to, r.from)] {
            if applicable(x) && entry(y).is_none() {
                out.push(
                    Finding::new(
                        Code::W102,
                        format!(
                            "{x} is applicable but related concern {y} is unaddressed ({} {} {arrow} {}{rationale})",
                            r.kind, r.from, r.to
                        ),
                    )
                    .with_concern(x),
                );
            }
        }
        match r.kind {
            RelationKind::DependsOn => {
                let unexplained = matches!(
                    entry(r.to).map(|e| &e.disposition),
                    Some(Disposition::NotApplicable { reason: None })
                );
                if unexplained && applicable(r.from) {
                    out.push(
                        Finding::new(
                            Code::W103,
                            format!(
                                "{} is marked n/a without a reason, but applicable {} depends on it",
                                r.to, r.from
                            ),
                        )
                        .with_concern(r.to),
                    );
                }
            }
            RelationKind::TradeOff => {
                let essential =
                    |id| entry(id).and_then(ConcernEntry::relevance) == Some(Relevance::Essential);
                if essential(r.from) && essential(r.to) {
                    out.push(
                        Finding::new(
                            Code::W104,
                            format!(
                                "{} and {} trade off against each other and are both essential; balance them explicitly",
                                r.from, r.to
                            ),
                        )
                        .with_concern(r.from),
                    );
                }
            }
            RelationKind::Influences => {}
        }
    }
    sort_findings(&mut out);
    out
}

fn is_experimental(c: &Catalog, e: &ConcernEntry) -> bool {
    match &e.disposition {
        Disposition::Applicable {
            experimental_override: Some(v),
            ..
        } => *v,
        _ => c.is_experimental(e.concern),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PerspectiveCoverage {
    pub perspective: PerspectiveId,
    /// Applicable plus n/a.
    pub addressed: usize,
    pub applicable: usize,
    pub total: usize,
    pub unaddressed: Vec<ConcernId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CoverageReport {
    pub perspectives: Vec<PerspectiveCoverage>,
    pub addressed: usize,
    pub applicable: usize,
    pub total: usize,
}

impl CoverageReport {
    pub fn perspective(&self, p: PerspectiveId) -> &PerspectiveCoverage {
        self.perspectives
            .iter()
            .find(|x| x.perspective == p)
            .expect("every perspective is reported")
    }

    pub fn is_complete(&self) -> bool {
        self.addressed == self.total
    }
}

impl fmt::Display for CoverageReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.perspectives {
            writeln!(
                f,
                "{:<15} {:>2}/{:<2} addressed, {:>2} applicable",
                p.perspective, p.addressed, p.total, p.applicable
            )?;
        }
        write!(f, "addressed {}/{}", self.addressed, self.total)
    }
}

pub fn coverage(c: &Catalog, d: &SpecDocument) -> CoverageReport {
    let by_id: BTreeMap<ConcernId, &ConcernEntry> =
        d.entries.iter().map(|e| (e.concern, e)).collect();
    let perspectives: Vec<PerspectiveCoverage> = PerspectiveId::ALL
        .into_iter()
        .map(|p| {
            let mut pc = PerspectiveCoverage {
                perspective: p,
                addressed: 0,
                applicable: 0,
                total: 0,
                unaddressed: Vec::new(),
            };
            let ids: BTreeSet<ConcernId> = c.concerns_in(p).map(|x| x.id).collect();
            for id in ids {
                pc.total += 1;
                match by_id.get(&id) {
                    Some(e) => {
                        pc.addressed += 1;
                        pc.applicable += usize::from(e.is_applicable());
                    }
                    None => pc.unaddressed.push(id),
                }
            }
            pc
        })
        .collect();
    CoverageReport {
        addressed: perspectives.iter().map(|p| p.addressed).sum(),
        applicable: perspectives.iter().map(|p| p.applicable).sum(),
        total: perspectives.iter().map(|p| p.total).sum(),
        perspectives,
    }
}

/// Applicable entries, most relevant first, ties in flow order.
pub fn prioritize<'d>(c: &Catalog, d: &'d SpecDocument) -> Vec<&'d ConcernEntry> {
    let mut out: Vec<&ConcernEntry> = d.entries.iter().filter(|e| e.is_applicable()).collect();
    out.sort_by_key(|e| {
        (
            std::cmp::Reverse(e.relevance()),
            c.flow_position(e.concern).unwrap_or(usize::MAX),
            e.concern,
        )
    });
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChangeKind {
    Added,
    Removed,
    /// Applicable became n/a or the reverse.
    DispositionChanged,
    RelevanceChanged { from: Relevance, to: Relevance },
    TextChanged,
    /// Stakeholders, status or experimental flag changed; text and relevance did not.
    MetadataChanged,
    Unchanged,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConcernChange {
    pub concern: ConcernId,
    #[serde(flatten)]
    pub kind: ChangeKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DiffReport {
    pub changes: Vec<ConcernChange>,
}

impl DiffReport {
    pub fn changed(&self) -> impl Iterator<Item = &ConcernChange> {
        self.changes.iter().filter(|c| c.kind != ChangeKind::Unchanged)
    }
}

impl fmt::Display for DiffReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in self.changed() {
            let kind = match &c.kind {
                ChangeKind::Added => "added".to_owned(),
                ChangeKind::Removed => "removed".to_owned(),
                ChangeKind::DispositionChanged => "disposition changed".to_owned(),
                ChangeKind::RelevanceChanged { from, to } => {
                    format!("relevance {from} -> {to}")
                }
                ChangeKind::TextChanged => "text changed".to_owned(),
                ChangeKind::MetadataChanged => "metadata changed".to_owned(),
                ChangeKind::Unchanged => unreachable!(),
            };
            writeln!(f, "{} {kind}", c.concern)?;
        }
        Ok(())
    }
}

/// Classifies every concern present in either document, in id order.
pub fn diff(old: &SpecDocument, new: &SpecDocument) -> DiffReport {
    let ids: BTreeSet<ConcernId> = old
        .entries
        .iter()
        .chain(&new.entries)
        .map(|e| e.concern)
        .collect();
    let changes = ids
        .into_iter()
        .map(|id| {
            let kind = match (old.entry(id), new.entry(id)) {
                (None, Some(_)) => ChangeKind::Added,
                (Some(_), None) => ChangeKind::Removed,
                (Some(a), Some(b)) => classify(&a.disposition, &b.disposition),
                (None, None) => unreachable!("id drawn from one of the documents"),
            };
            ConcernChange { concern: id, kind }
        })
        .collect();
    DiffReport { changes }
}

fn classify(a: &Disposition, b: &Disposition) -> ChangeKind {
    match (a, b) {
        (Disposition::NotApplicable { reason: x }, Disposition::NotApplicable { reason: y }) => {
            if x == y {
                ChangeKind::Unchanged
            } else {
                ChangeKind::TextChanged
            }
        }
        (
            Disposition::Applicable {
                relevance: r1,
                spec_text: t1,
                by: b1,
                status: s1,
                experimental_override: x1,
            },
            Disposition::Applicable {
                relevance: r2,
                spec_text: t2,
                by: b2,
                status: s2,
                experimental_override: x2,
            },
        ) => {
            if r1 != r2 {
                ChangeKind::RelevanceChanged { from: *r1, to: *r2 }
            } else if t1 != t2 {
                ChangeKind::TextChanged
            } else if b1 != b2 || s1 != s2 || x1 != x2 {
                ChangeKind::MetadataChanged
            } else {
                ChangeKind::Unchanged
            }
        }
        _ => ChangeKind::DispositionChanged,
    }
}
