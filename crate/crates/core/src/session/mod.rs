//! Guided elicitation: a resumable walk over the catalog's concerns in flow
//! order that builds a [`SpecDocument`].
//!
//! Every state change is an [`Event`]. Live operations validate and produce an
//! event, and [`Session::apply`] folds it in, so replaying a log reproduces
//! the live state exactly. Callers that persist can write the event between
//! the two steps.

mod decision;
mod log;

use std::collections::BTreeSet;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::analysis::check;
use crate::catalog::{
    Catalog, Concern, ConcernId, Direction, Perspective, Provenance, RelationKind, RoleCode,
};
use crate::diagnostics::{Code, Finding};
use crate::specformat::{self, ConcernEntry, SpecDocument};

pub use decision::{Decision, DecisionPayload};
pub use log::{log_file_name, read_log, replay, LogWriter, LOG_EXTENSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VisitStatus {
    Pending,
    Decided,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub seq: u64,
    pub at: DateTime<Utc>,
    #[serde(flatten)]
    pub body: EventBody,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum EventBody {
    SessionStarted {
        session_id: String,
        project: String,
        catalog_version: u32,
        /// Canonical `.psml` text of the seed document.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<String>,
    },
    DecisionSubmitted {
        concern: ConcernId,
        decision: DecisionPayload,
    },
    Revisited {
        concern: ConcernId,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Session {
    id: String,
    catalog_version: u32,
    order: Vec<ConcernId>,
    visited: Vec<VisitStatus>,
    /// Index into `order`; `None` once the walk is complete.
    cursor: Option<usize>,
    pass: u8,
    /// Where the walk continues after a revisit; outer `None` when not revisiting.
    resume: Option<Option<usize>>,
    document: SpecDocument,
    log: Vec<Event>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TaskSummary {
    pub id: String,
    pub name: String,
    pub suggested_roles: BTreeSet<RoleCode>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RelatedPrompt {
    pub concern: ConcernId,
    pub name: String,
    pub kind: RelationKind,
    pub direction: Direction,
    pub rationale: String,
    pub provenance: Provenance,
    pub addressed: bool,
    pub status: VisitStatus,
}

#[derive(Debug, Clone, Serialize)]
pub struct Prompt {
    pub concern: Concern,
    pub perspective: Perspective,
    pub task: Option<TaskSummary>,
    pub related: Vec<RelatedPrompt>,
    pub experimental: bool,
    pub pass: u8,
    /// 1-based position in flow order.
    pub position: usize,
    pub total: usize,
    pub revisiting: bool,
    /// Entry already recorded for this concern, shown when revisiting.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub current: Option<serde_json::Value>,
}

/// Snapshot for display and the HTTP API.
#[derive(Debug, Clone, Serialize)]
pub struct SessionState {
    pub id: String,
    pub project: String,
    pub pass: u8,
    pub done: bool,
    pub cursor: Option<ConcernId>,
    pub revisiting: bool,
    pub visited: Vec<(ConcernId, VisitStatus)>,
    pub events: usize,
}

fn ses(code: Code, message: impl Into<String>) -> Finding {
    Finding::new(code, message)
}

impl Session {
    pub fn start(
        c: &Catalog,
        project: &str,
        seed: Option<&SpecDocument>,
    ) -> Result<Session, Finding> {
        Self::start_with_id(c, &uuid::Uuid::new_v4().to_string(), project, seed)
    }

    pub fn start_with_id(
        c: &Catalog,
        id: &str,
        project: &str,
        seed: Option<&SpecDocument>,
    ) -> Result<Session, Finding> {
        let seed = match seed {
            Some(d) => {
                let errors: Vec<String> = check(c, d)
                    .into_iter()
                    .filter(Finding::is_error)
                    .map(|f| f.to_string())
                    .collect();
                if !errors.is_empty() {
                    return Err(ses(
                        Code::SesSeed,
                        format!("seed document is invalid: {}", errors.join("; ")),
                    ));
                }
                Some(specformat::serialize_spec(d))
            }
            None => None,
        };
        let event = Event {
            seq: 1,
            at: Utc::now(),
            body: EventBody::SessionStarted {
                session_id: id.to_owned(),
                project: project.to_owned(),
                catalog_version: c.version(),
                seed,
            },
        };
        Self::from_started(c, event)
    }

    fn from_started(c: &Catalog, event: Event) -> Result<Session, Finding> {
        let EventBody::SessionStarted {
            session_id,
            project,
            catalog_version,
            seed,
        } = &event.body
        else {
            return Err(ses(Code::SesLog, "log does not begin with session_started"));
        };
        if *catalog_version != c.version() {
            return Err(ses(
                Code::SesLog,
                format!(
                    "session was started against catalog version {catalog_version}, loaded catalog is version {}",
                    c.version()
                ),
            ));
        }
        let order = c.flow_order();
        let mut document = SpecDocument::new(project.clone());
        let mut visited = vec![VisitStatus::Pending; order.len()];
        if let Some(text) = seed {
            let seeded = specformat::parse_spec(text, c).map_err(|f| {
                ses(
                    Code::SesSeed,
                    format!(
                        "seed document is invalid: {}",
                        f.iter().map(|f| f.to_string()).collect::<Vec<_>>().join("; ")
                    ),
                )
            })?;
            document.entries = seeded.normalized().entries;
            for e in &document.entries {
                if let Some(i) = order.iter().position(|id| *id == e.concern) {
                    visited[i] = VisitStatus::Decided;
                }
            }
        }
        let mut s = Session {
            id: session_id.clone(),
            catalog_version: *catalog_version,
            order,
            visited,
            cursor: None,
            pass: 1,
            resume: None,
            document,
            log: vec![event],
        };
        s.cursor = s.next_from(0);
        Ok(s)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn project(&self) -> &str {
        &self.document.project_name
    }

    pub fn catalog_version(&self) -> u32 {
        self.catalog_version
    }

    pub fn pass(&self) -> u8 {
        self.pass
    }

    pub fn is_done(&self) -> bool {
        self.cursor.is_none()
    }

    pub fn is_revisiting(&self) -> bool {
        self.resume.is_some()
    }

    pub fn cursor(&self) -> Option<ConcernId> {
        self.cursor.map(|i| self.order[i])
    }

    pub fn log(&self) -> &[Event] {
        &self.log
    }

    pub fn status(&self, id: ConcernId) -> Option<VisitStatus> {
        self.index(id).map(|i| self.visited[i])
    }

    pub fn visited(&self) -> impl Iterator<Item = (ConcernId, VisitStatus)> + '_ {
        self.order.iter().copied().zip(self.visited.iter().copied())
    }

    pub fn count(&self, status: VisitStatus) -> usize {
        self.visited.iter().filter(|s| **s == status).count()
    }

    /// The document built so far; valid at every step.
    pub fn export(&self) -> SpecDocument {
        self.document.clone()
    }

    pub fn document(&self) -> &SpecDocument {
        &self.document
    }

    pub fn state(&self) -> SessionState {
        SessionState {
            id: self.id.clone(),
            project: self.project().to_owned(),
            pass: self.pass,
            done: self.is_done(),
            cursor: self.cursor(),
            revisiting: self.is_revisiting(),
            visited: self.visited().collect(),
            events: self.log.len(),
        }
    }

    fn index(&self, id: ConcernId) -> Option<usize> {
        self.order.iter().position(|x| *x == id)
    }

    fn eligible(&self, i: usize) -> bool {
        match self.pass {
            1 => self.visited[i] == VisitStatus::Pending,
            _ => self.visited[i] != VisitStatus::Decided,
        }
    }

    /// First concern at or after `start` that the current pass still has to
    /// visit, moving to pass 2 when pass 1 runs out. Mutates `pass`.
    fn next_from(&mut self, start: usize) -> Option<usize> {
        if let Some(i) = (start..self.order.len()).find(|&i| self.eligible(i)) {
            return Some(i);
        }
        if self.pass == 1 {
            self.pass = 2;
            return (0..self.order.len()).find(|&i| self.eligible(i));
        }
        None
    }

    pub fn next_prompt(&self, c: &Catalog) -> Option<Prompt> {
        let i = self.cursor?;
        let id = self.order[i];
        let concern = c.concern(id)?.clone();
        let perspective = c.perspective(id.perspective())?.clone();
        let task = c.owning_task(id).map(|t| TaskSummary {
            id: t.id.clone(),
            name: t.name.clone(),
            suggested_roles: t.suggested_roles.clone(),
        });
        let related = c
            .related_concerns(id)
            .map(|rs| {
                rs.into_iter()
                    .map(|r| RelatedPrompt {
                        concern: r.concern.id,
                        name: r.concern.name.clone(),
                        kind: r.relationship.kind,
                        direction: r.direction,
                        rationale: r.relationship.rationale.clone(),
                        provenance: r.relationship.provenance,
                        addressed: self.document.is_addressed(r.concern.id),
                        status: self.status(r.concern.id).unwrap_or(VisitStatus::Pending),
                    })
                    .collect()
            })
            .unwrap_or_default();
        let current = self
            .document
            .entry(id)
            .map(|e| serde_json::to_value(DecisionPayload::from(&Decision::from_entry(e))).unwrap());
        Some(Prompt {
            experimental: concern.experimental,
            concern,
            perspective,
            task,
            related,
            pass: self.pass,
            position: i + 1,
            total: self.order.len(),
            revisiting: self.is_revisiting(),
            current,
        })
    }

    fn next_event(&self, body: EventBody) -> Event {
        Event {
            seq: self.log.len() as u64 + 1,
            at: Utc::now(),
            body,
        }
    }

    /// Validates a decision for `concern` without changing the session.
    pub fn plan_decision(&self, concern: ConcernId, decision: &Decision) -> Result<Event, Finding> {
        let Some(i) = self.cursor else {
            return Err(ses(
                Code::SesOrder,
                format!("session is complete; revisit a concern before deciding {concern}"),
            ));
        };
        if self.order[i] != concern {
            return Err(ses(
                Code::SesOrder,
                format!(
                    "decision for {concern} is out of order; the current concern is {}",
                    self.order[i]
                ),
            )
            .with_concern(concern));
        }
        Ok(self.next_event(EventBody::DecisionSubmitted {
            concern,
            decision: DecisionPayload::from(decision),
        }))
    }

    /// Validates a revisit of `raw` without changing the session.
    pub fn plan_revisit(&self, raw: &str) -> Result<Event, Finding> {
        let concern = raw
            .parse::<ConcernId>()
            .ok()
            .filter(|id| self.index(*id).is_some())
            .ok_or_else(|| ses(Code::SesRevisit, format!("cannot revisit unknown concern {raw:?}")))?;
        if self.status(concern) == Some(VisitStatus::Pending) {
            return Err(ses(
                Code::SesRevisit,
                format!("cannot revisit {concern}: it has not been decided or skipped yet"),
            )
            .with_concern(concern));
        }
        Ok(self.next_event(EventBody::Revisited { concern }))
    }

    pub fn submit(&mut self, concern: ConcernId, decision: Decision) -> Result<&Event, Finding> {
        let ev = self.plan_decision(concern, &decision)?;
        self.apply(ev)?;
        Ok(self.log.last().unwrap())
    }

    pub fn revisit(&mut self, raw: &str) -> Result<&Event, Finding> {
        let ev = self.plan_revisit(raw)?;
        self.apply(ev)?;
        Ok(self.log.last().unwrap())
    }

    /// Folds `ev` into the session. Used by live operations and by replay.
    pub fn apply(&mut self, ev: Event) -> Result<(), Finding> {
        if ev.seq != self.log.len() as u64 + 1 {
            return Err(ses(
                Code::SesLog,
                format!("event {} out of sequence; expected {}", ev.seq, self.log.len() + 1),
            ));
        }
        match &ev.body {
            EventBody::SessionStarted { .. } => {
                return Err(ses(Code::SesLog, "session_started may only appear first"));
            }
            EventBody::DecisionSubmitted { concern, decision } => {
                let decision = Decision::try_from(decision.clone())?;
                let concern = *concern;
                let i = match self.cursor {
                    Some(i) if self.order[i] == concern => i,
                    _ => return Err(self.plan_decision(concern, &decision).unwrap_err()),
                };
                match decision.into_disposition() {
                    Some(d) => {
                        self.document.upsert(ConcernEntry::new(concern, d));
                        self.visited[i] = VisitStatus::Decided;
                    }
                    // Skipping a revisited concern keeps its earlier entry.
                    None if self.visited[i] == VisitStatus::Decided => {}
                    None => self.visited[i] = VisitStatus::Skipped,
                }
                self.cursor = match self.resume.take() {
                    None => self.next_from(i + 1),
                    Some(None) => None,
                    Some(Some(j)) if j == i => self.next_from(i + 1),
                    Some(Some(j)) => self.next_from(j),
                };
            }
            EventBody::Revisited { concern } => {
                self.plan_revisit(&concern.to_string())?;
                let i = self.index(*concern).unwrap();
                if self.resume.is_none() {
                    self.resume = Some(self.cursor);
                }
                self.cursor = Some(i);
            }
        }
        self.log.push(ev);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specformat::{Disposition, Relevance};

    fn cat() -> &'static Catalog {
        Catalog::builtin()
    }

    fn id(s: &str) -> ConcernId {
        s.parse().unwrap()
    }

    fn ess(text: &str) -> Decision {
        Decision::applicable(Relevance::Essential, text)
    }

    #[test]
    fn fresh_session_starts_at_o1() {
        let s = Session::start(cat(), "p", None).unwrap();
        assert_eq!(s.cursor(), Some(id("O1")));
        assert_eq!(s.count(VisitStatus::Pending), 59);
        assert_eq!(s.log().len(), 1);
        let p = s.next_prompt(cat()).unwrap();
        assert_eq!(p.concern.id, id("O1"));
        assert_eq!(p.position, 1);
        assert!(s.export().entries.is_empty());
    }

    #[test]
    fn seeded_objectives_start_at_u1() {
        let mut seed = SpecDocument::new("p");
        for c in cat().concerns_in(crate::catalog::PerspectiveId::Objectives) {
            seed.upsert(ConcernEntry::new(c.id, Disposition::not_applicable(Some("x"))));
        }
        let s = Session::start(cat(), "p", Some(&seed)).unwrap();
        assert_eq!(s.cursor(), Some(id("U1")));
        assert_eq!(s.count(VisitStatus::Decided), 10);
    }

    #[test]
    fn bad_seed() {
        let mut seed = SpecDocument::new("p");
        seed.entries.push(ConcernEntry::new(id("O1"), Disposition::not_applicable(None)));
        seed.entries.push(ConcernEntry::new(id("O1"), Disposition::not_applicable(None)));
        assert_eq!(Session::start(cat(), "p", Some(&seed)).unwrap_err().code, Code::SesSeed);
    }

    #[test]
    fn order_discipline_and_errors() {
        let mut s = Session::start(cat(), "p", None).unwrap();
        assert_eq!(s.submit(id("M3"), ess("x")).unwrap_err().code, Code::SesOrder);
        s.submit(id("O1"), ess("x")).unwrap();
        assert_eq!(s.cursor(), Some(id("O2")));
        assert_eq!(s.revisit("Z9").unwrap_err().code, Code::SesRevisit);
        assert_eq!(s.revisit("M3").unwrap_err().code, Code::SesRevisit);
        assert_eq!(s.log().len(), 2);
    }

    #[test]
    fn skip_all_then_second_pass() {
        let mut s = Session::start(cat(), "p", None).unwrap();
        let order = cat().flow_order();
        for &c in &order {
            assert_eq!(s.pass(), 1);
            s.submit(c, Decision::Skip).unwrap();
        }
        assert_eq!(s.pass(), 2);
        assert_eq!(s.cursor(), Some(id("O1")));
        assert_eq!(s.count(VisitStatus::Skipped), 59);
        for &c in &order {
            assert_eq!(s.cursor(), Some(c));
            s.submit(c, Decision::Skip).unwrap();
        }
        assert!(s.is_done());
        assert!(s.next_prompt(cat()).is_none());
    }

    #[test]
    fn revisit_overwrites_and_resumes() {
        let mut s = Session::start(cat(), "p", None).unwrap();
        s.submit(id("O1"), ess("first")).unwrap();
        s.submit(id("O2"), Decision::Skip).unwrap();
        s.revisit("O1").unwrap();
        assert_eq!(s.next_prompt(cat()).unwrap().concern.id, id("O1"));
        assert!(s.next_prompt(cat()).unwrap().current.is_some());
        s.submit(id("O1"), Decision::applicable(Relevance::Important, "second"))
            .unwrap();
        assert_eq!(s.cursor(), Some(id("O3")));
        assert_eq!(s.export().entries.len(), 1);
        assert_eq!(
            s.export().entries[0].relevance(),
            Some(Relevance::Important)
        );
        // Skipping a revisited decided concern keeps its entry.
        s.revisit("O1").unwrap();
        s.submit(id("O1"), Decision::Skip).unwrap();
        assert_eq!(s.status(id("O1")), Some(VisitStatus::Decided));
        assert_eq!(s.export().entries.len(), 1);
        // Revisiting a skipped concern.
        s.revisit("O2").unwrap();
        s.submit(id("O2"), Decision::NotApplicable { reason: None }).unwrap();
        assert_eq!(s.cursor(), Some(id("O3")));
    }

    #[test]
    fn prompt_for_m11_lists_m1_status() {
        let mut s = Session::start(cat(), "p", None).unwrap();
        while s.cursor() != Some(id("M1")) {
            let c = s.cursor().unwrap();
            s.submit(c, Decision::Skip).unwrap();
        }
        s.submit(id("M1"), ess("cnn")).unwrap();
        while s.cursor() != Some(id("M11")) {
            let c = s.cursor().unwrap();
            s.submit(c, Decision::Skip).unwrap();
        }
        let p = s.next_prompt(cat()).unwrap();
        let m1 = p.related.iter().find(|r| r.concern == id("M1")).unwrap();
        assert!(m1.addressed);
        assert_eq!(m1.kind, RelationKind::DependsOn);
        let m5 = p.related.iter().find(|r| r.concern == id("M5")).unwrap();
        assert!(!m5.addressed);
        assert_eq!(m5.status, VisitStatus::Skipped);
    }

    #[test]
    fn replay_reproduces_state() {
        let mut s = Session::start(cat(), "p", None).unwrap();
        s.submit(id("O1"), ess("a")).unwrap();
        s.submit(id("O2"), Decision::Skip).unwrap();
        s.revisit("O1").unwrap();
        s.submit(id("O1"), Decision::NotApplicable { reason: Some("r".into()) })
            .unwrap();
        let r = replay(cat(), s.log()).unwrap();
        assert_eq!(r, s);
    }

    #[test]
    fn fully_decided_session_covers_everything() {
        let mut s = Session::start(cat(), "p", None).unwrap();
        while let Some(c) = s.cursor() {
            s.submit(c, Decision::NotApplicable { reason: None }).unwrap();
        }
        let cov = crate::analysis::coverage(cat(), &s.export());
        assert_eq!(cov.addressed, 59);
        let again = Session::start(cat(), "p", Some(&s.export())).unwrap();
        assert!(again.is_done());
        assert!(again.export().same_content(&s.export()));
    }
}
