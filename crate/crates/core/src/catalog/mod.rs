//! The method as data: perspectives, stakeholder roles, tasks, concerns and
//! the relationships between concerns.
//!
//! A [`Catalog`] is immutable once built. The bundled default lives in
//! `data/catalog.json` and is embedded in the binary; [`load_catalog`]
//! merges an optional overlay on top of it and re-validates the result.

mod overlay;
mod validate;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagnostics::{Code, Finding};

pub use validate::validate_catalog;

/// The bundled catalog file, byte-for-byte.
pub const DEFAULT_CATALOG_JSON: &str = include_str!("../../data/catalog.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PerspectiveId {
    Objectives,
    Ux,
    Infrastructure,
    Model,
    Data,
}

impl PerspectiveId {
    /// Canonical analysis order.
    pub const ALL: [PerspectiveId; 5] = [
        PerspectiveId::Objectives,
        PerspectiveId::Ux,
        PerspectiveId::Infrastructure,
        PerspectiveId::Model,
        PerspectiveId::Data,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PerspectiveId::Objectives => "objectives",
            PerspectiveId::Ux => "ux",
            PerspectiveId::Infrastructure => "infrastructure",
            PerspectiveId::Model => "model",
            PerspectiveId::Data => "data",
        }
    }

    pub fn prefix(self) -> char {
        match self {
            PerspectiveId::Objectives => 'O',
            PerspectiveId::Ux => 'U',
            PerspectiveId::Infrastructure => 'I',
            PerspectiveId::Model => 'M',
            PerspectiveId::Data => 'D',
        }
    }

    pub fn from_prefix(c: char) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.prefix() == c)
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// Number of concerns the method defines for this perspective.
    pub fn expected_concerns(self) -> u32 {
        match self {
            PerspectiveId::Objectives => 10,
            PerspectiveId::Ux => 9,
            PerspectiveId::Infrastructure => 10,
            PerspectiveId::Model => 14,
            PerspectiveId::Data => 16,
        }
    }

    /// Number of tasks the method defines for this perspective.
    pub fn expected_tasks(self) -> usize {
        match self {
            PerspectiveId::Objectives => 4,
            PerspectiveId::Ux => 5,
            PerspectiveId::Infrastructure => 8,
            PerspectiveId::Model => 5,
            PerspectiveId::Data => 6,
        }
    }
}

impl fmt::Display for PerspectiveId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PerspectiveId {
    type Err = UnknownId;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| UnknownId(s.to_owned()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown identifier {0:?}")]
pub struct UnknownId(pub String);

/// A concern identifier such as `M11`.
///
/// Ordering is perspective canonical order, then number; this is the flow
/// order of the method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ConcernId {
    perspective: PerspectiveId,
    number: u32,
}

impl ConcernId {
    pub fn new(perspective: PerspectiveId, number: u32) -> Self {
        assert!(number > 0, "concern numbers start at 1");
        Self { perspective, number }
    }

    pub fn perspective(self) -> PerspectiveId {
        self.perspective
    }

    pub fn number(self) -> u32 {
        self.number
    }
}

impl fmt::Display for ConcernId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.perspective.prefix(), self.number)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConcernIdError {
    #[error("empty concern id")]
    Empty,
    #[error("concern id {0:?} must start with one of O, U, I, M, D")]
    Prefix(String),
    #[error("concern id {0:?} must be a prefix letter followed by a positive number")]
    Number(String),
}

impl FromStr for ConcernId {
    type Err = ConcernIdError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut chars = s.chars();
        let first = chars.next().ok_or(ConcernIdError::Empty)?;
        let perspective =
            PerspectiveId::from_prefix(first).ok_or_else(|| ConcernIdError::Prefix(s.to_owned()))?;
        let digits = chars.as_str();
        let canonical = !digits.is_empty()
            && digits.bytes().all(|b| b.is_ascii_digit())
            && !digits.starts_with('0');
        if !canonical {
            return Err(ConcernIdError::Number(s.to_owned()));
        }
        let number = digits
            .parse()
            .map_err(|_| ConcernIdError::Number(s.to_owned()))?;
        Ok(Self { perspective, number })
    }
}

impl Serialize for ConcernId {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ConcernId {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RoleCode {
    BO,
    DE,
    DG,
    SE,
    DS,
    RE,
}

impl RoleCode {
    pub const ALL: [RoleCode; 6] = [
        RoleCode::BO,
        RoleCode::DE,
        RoleCode::DG,
        RoleCode::SE,
        RoleCode::DS,
        RoleCode::RE,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RoleCode::BO => "BO",
            RoleCode::DE => "DE",
            RoleCode::DG => "DG",
            RoleCode::SE => "SE",
            RoleCode::DS => "DS",
            RoleCode::RE => "RE",
        }
    }
}

impl fmt::Display for RoleCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RoleCode {
    type Err = UnknownId;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| UnknownId(s.to_owned()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Perspective {
    pub id: PerspectiveId,
    pub display_name: String,
    /// `#rrggbb`
    pub color: String,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StakeholderRole {
    pub code: RoleCode,
    pub display_name: String,
    pub description: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    PaperCited,
    Extension,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Task {
    pub id: String,
    pub perspective: PerspectiveId,
    pub name: String,
    pub description: String,
    pub suggested_roles: BTreeSet<RoleCode>,
    pub concern_ids: Vec<ConcernId>,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Concern {
    pub id: ConcernId,
    pub name: String,
    pub prompt: String,
    pub description: String,
    pub experimental: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelationKind {
    Influences,
    DependsOn,
    TradeOff,
}

impl RelationKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RelationKind::Influences => "influences",
            RelationKind::DependsOn => "depends_on",
            RelationKind::TradeOff => "trade_off",
        }
    }

    pub fn is_directed(self) -> bool {
        self != RelationKind::TradeOff
    }
}

impl fmt::Display for RelationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RelationKind {
    type Err = UnknownId;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [
            RelationKind::Influences,
            RelationKind::DependsOn,
            RelationKind::TradeOff,
        ]
        .into_iter()
        .find(|k| k.as_str() == s)
        .ok_or_else(|| UnknownId(s.to_owned()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Relationship {
    pub from: ConcernId,
    pub to: ConcernId,
    pub kind: RelationKind,
    pub rationale: String,
    pub provenance: Provenance,
}

impl Relationship {
    /// Builds a relationship, putting trade-off endpoints in canonical order.
    pub fn new(
        from: ConcernId,
        to: ConcernId,
        kind: RelationKind,
        rationale: impl Into<String>,
        provenance: Provenance,
    ) -> Self {
        let mut r = Self {
            from,
            to,
            kind,
            rationale: rationale.into(),
            provenance,
        };
        r.canonicalize();
        r
    }

    fn canonicalize(&mut self) {
        if self.kind == RelationKind::TradeOff && self.to < self.from {
            std::mem::swap(&mut self.from, &mut self.to);
        }
    }

    /// The `(from, to, kind)` identity of the edge.
    pub fn key(&self) -> (ConcernId, ConcernId, RelationKind) {
        (self.from, self.to, self.kind)
    }

    pub fn touches(&self, id: ConcernId) -> bool {
        self.from == id || self.to == id
    }

    /// The endpoint opposite `id`, if `id` is an endpoint.
    pub fn other(&self, id: ConcernId) -> Option<ConcernId> {
        if self.from == id {
            Some(self.to)
        } else if self.to == id {
            Some(self.from)
        } else {
            None
        }
    }
}

/// How a related edge is seen from the queried concern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Outgoing,
    Incoming,
    Undirected,
}

#[derive(Debug, Clone, Copy)]
pub struct Related<'c> {
    pub relationship: &'c Relationship,
    pub direction: Direction,
    pub concern: &'c Concern,
}

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("{code} at {line}:{column}: {message}", code = Code::CatParse)]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("catalog rejected with {} finding(s); first: {}", .0.len(), .0.first().map(|f| f.to_string()).unwrap_or_default())]
    Rejected(Vec<Finding>),
    #[error("{code}: no concern {0:?} in the catalog", code = Code::CatUnknown)]
    Unknown(String),
}

impl CatalogError {
    /// The finding code that best summarizes the error.
    pub fn code(&self) -> Code {
        match self {
            CatalogError::Parse { .. } => Code::CatParse,
            CatalogError::Rejected(findings) => {
                findings.first().map(|f| f.code).unwrap_or(Code::CatParse)
            }
            CatalogError::Unknown(_) => Code::CatUnknown,
        }
    }

    pub fn findings(&self) -> &[Finding] {
        match self {
            CatalogError::Rejected(findings) => findings,
            _ => &[],
        }
    }

    pub(crate) fn from_json(err: serde_json::Error) -> Self {
        CatalogError::Parse {
            line: err.line(),
            column: err.column(),
            message: err.to_string(),
        }
    }
}

/// Unvalidated, freely editable catalog contents.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CatalogParts {
    pub version: u32,
    pub perspectives: Vec<Perspective>,
    pub roles: Vec<StakeholderRole>,
    pub tasks: Vec<Task>,
    pub concerns: Vec<Concern>,
    pub relationships: Vec<Relationship>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Catalog {
    parts: CatalogParts,
}

impl Serialize for Catalog {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.parts.serialize(serializer)
    }
}

impl Catalog {
    /// The bundled default catalog, parsed once and shared.
    pub fn builtin() -> &'static Catalog {
        static BUILTIN: OnceLock<Catalog> = OnceLock::new();
        BUILTIN.get_or_init(|| {
            Catalog::from_json(DEFAULT_CATALOG_JSON).expect("bundled catalog is well-formed")
        })
    }

    /// Parses a complete catalog file and validates it.
    pub fn from_json(text: &str) -> Result<Catalog, CatalogError> {
        let parts: CatalogParts = serde_json::from_str(text).map_err(CatalogError::from_json)?;
        let catalog = Catalog::from_parts(parts);
        let findings = validate_catalog(&catalog);
        if findings.is_empty() {
            Ok(catalog)
        } else {
            Err(CatalogError::Rejected(findings))
        }
    }

    /// Wraps parts without validating them. Trade-off endpoints are put in
    /// canonical order.
    pub fn from_parts(mut parts: CatalogParts) -> Catalog {
        for r in &mut parts.relationships {
            r.canonicalize();
        }
        Catalog { parts }
    }

    pub fn into_parts(self) -> CatalogParts {
        self.parts
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.parts).expect("catalog serializes");
        s.push('\n');
        s
    }

    pub fn version(&self) -> u32 {
        self.parts.version
    }

    pub fn perspectives(&self) -> &[Perspective] {
        &self.parts.perspectives
    }

    pub fn roles(&self) -> &[StakeholderRole] {
        &self.parts.roles
    }

    pub fn tasks(&self) -> &[Task] {
        &self.parts.tasks
    }

    pub fn concerns(&self) -> &[Concern] {
        &self.parts.concerns
    }

    pub fn relationships(&self) -> &[Relationship] {
        &self.parts.relationships
    }

    pub fn perspective(&self, id: PerspectiveId) -> Option<&Perspective> {
        self.parts.perspectives.iter().find(|p| p.id == id)
    }

    pub fn role(&self, code: RoleCode) -> Option<&StakeholderRole> {
        self.parts.roles.iter().find(|r| r.code == code)
    }

    pub fn task(&self, id: &str) -> Option<&Task> {
        self.parts.tasks.iter().find(|t| t.id == id)
    }

    pub fn concern(&self, id: ConcernId) -> Option<&Concern> {
        self.parts.concerns.iter().find(|c| c.id == id)
    }

    pub fn contains(&self, id: ConcernId) -> bool {
        self.concern(id).is_some()
    }

    /// Resolves a textual concern id; malformed and absent ids are both
    /// reported as unknown.
    pub fn lookup(&self, raw: &str) -> Result<&Concern, CatalogError> {
        raw.parse::<ConcernId>()
            .ok()
            .and_then(|id| self.concern(id))
            .ok_or_else(|| CatalogError::Unknown(raw.to_owned()))
    }

    /// Tasks that list `id`, in catalog order.
    pub fn tasks_for(&self, id: ConcernId) -> impl Iterator<Item = &Task> {
        self.parts
            .tasks
            .iter()
            .filter(move |t| t.concern_ids.contains(&id))
    }

    /// The first task listing `id`; this is where the concern is drawn and
    /// templated.
    pub fn owning_task(&self, id: ConcernId) -> Option<&Task> {
        self.tasks_for(id).next()
    }

    pub fn tasks_in(&self, perspective: PerspectiveId) -> impl Iterator<Item = &Task> {
        self.parts
            .tasks
            .iter()
            .filter(move |t| t.perspective == perspective)
    }

    pub fn concerns_in(&self, perspective: PerspectiveId) -> impl Iterator<Item = &Concern> {
        self.parts
            .concerns
            .iter()
            .filter(move |c| c.id.perspective() == perspective)
    }

    /// Every relationship touching `id`, paired with the concern at the far
    /// end, ordered by kind and then far-endpoint id.
    pub fn related_concerns(&self, id: ConcernId) -> Result<Vec<Related<'_>>, CatalogError> {
        if !self.contains(id) {
            return Err(CatalogError::Unknown(id.to_string()));
        }
        let mut out: Vec<Related<'_>> = self
            .parts
            .relationships
            .iter()
            .filter_map(|r| {
                let far = r.other(id)?;
                let direction = match (r.kind.is_directed(), r.from == id) {
                    (false, _) => Direction::Undirected,
                    (true, true) => Direction::Outgoing,
                    (true, false) => Direction::Incoming,
                };
                Some(Related {
                    relationship: r,
                    direction,
                    concern: self.concern(far)?,
                })
            })
            .collect();
        out.sort_by(|a, b| {
            a.relationship
                .kind
                .cmp(&b.relationship.kind)
                .then_with(|| a.concern.id.cmp(&b.concern.id))
                .then_with(|| a.direction.cmp(&b.direction))
        });
        Ok(out)
    }

    /// Concern ids in the order the logical flow visits them.
    pub fn flow_order(&self) -> Vec<ConcernId> {
        let mut ids: Vec<ConcernId> = self.parts.concerns.iter().map(|c| c.id).collect();
        ids.sort();
        ids.dedup();
        ids
    }

    /// Position of `id` in [`Catalog::flow_order`].
    pub fn flow_position(&self, id: ConcernId) -> Option<usize> {
        self.flow_order().iter().position(|&c| c == id)
    }

    /// Experimental flag for a concern, `false` when absent.
    pub fn is_experimental(&self, id: ConcernId) -> bool {
        self.concern(id).is_some_and(|c| c.experimental)
    }
}

/// Loads the bundled catalog, merging `overlay` (catalog-overlay JSON) on top.
pub fn load_catalog(overlay: Option<&str>) -> Result<Catalog, CatalogError> {
    let base = Catalog::builtin().clone();
    match overlay {
        None => Ok(base),
        Some(text) => overlay::apply(base, text),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn id(s: &str) -> ConcernId {
        s.parse().unwrap()
    }

    #[test]
    fn concern_id_parsing() {
        assert_eq!(id("M11").perspective(), PerspectiveId::Model);
        assert_eq!(id("M11").number(), 11);
        assert_eq!(id("O1").to_string(), "O1");
        for bad in ["", "Z9", "m1", "M", "M0", "M01", "M-1", "M1x", "O 1"] {
            assert!(bad.parse::<ConcernId>().is_err(), "{bad:?} should not parse");
        }
    }

    #[test]
    fn ids_order_by_flow() {
        let mut v = [id("D1"), id("M11"), id("M2"), id("O10"), id("U1"), id("O2")];
        v.sort();
        let s: Vec<String> = v.iter().map(ToString::to_string).collect();
        assert_eq!(s, ["O2", "O10", "U1", "M2", "M11", "D1"]);
    }

    #[test]
    fn trade_off_endpoints_are_canonical() {
        let r = Relationship::new(
            id("M11"),
            id("M5"),
            RelationKind::TradeOff,
            "",
            Provenance::Extension,
        );
        assert_eq!((r.from, r.to), (id("M5"), id("M11")));
        let d = Relationship::new(
            id("M11"),
            id("M1"),
            RelationKind::DependsOn,
            "",
            Provenance::Extension,
        );
        assert_eq!((d.from, d.to), (id("M11"), id("M1")));
    }

    #[test]
    fn builtin_serializes_to_the_shipped_bytes() {
        assert_eq!(Catalog::builtin().to_json(), DEFAULT_CATALOG_JSON);
        assert!(!DEFAULT_CATALOG_JSON.contains('\r'));
    }

    #[test]
    fn lookup_reports_unknown() {
        let c = Catalog::builtin();
        assert!(matches!(c.lookup("Z9"), Err(CatalogError::Unknown(_))));
        assert!(matches!(c.lookup("M99"), Err(CatalogError::Unknown(_))));
        assert_eq!(c.lookup("M5").unwrap().name, "Performance metrics");
        let err = c.related_concerns(id("M99")).unwrap_err();
        assert_eq!(err.code(), Code::CatUnknown);
    }

    #[test]
    fn related_concerns_of_m11() {
        let c = Catalog::builtin();
        let rel = c.related_concerns(id("M11")).unwrap();
        let got: Vec<(RelationKind, Direction, String)> = rel
            .iter()
            .map(|r| (r.relationship.kind, r.direction, r.concern.id.to_string()))
            .collect();
        assert_eq!(
            got,
            vec![
                (RelationKind::DependsOn, Direction::Outgoing, "M1".to_owned()),
                (RelationKind::TradeOff, Direction::Undirected, "M5".to_owned()),
            ]
        );
        let m1 = c.related_concerns(id("M1")).unwrap();
        let got: Vec<(RelationKind, Direction, String)> = m1
            .iter()
            .map(|r| (r.relationship.kind, r.direction, r.concern.id.to_string()))
            .collect();
        assert_eq!(
            got,
            vec![
                (RelationKind::Influences, Direction::Incoming, "O3".to_owned()),
                (RelationKind::DependsOn, Direction::Incoming, "M11".to_owned()),
            ]
        );
    }

    #[test]
    fn flow_order_endpoints() {
        let order = Catalog::builtin().flow_order();
        assert_eq!(order.len(), 59);
        assert_eq!(order[0].to_string(), "O1");
        assert_eq!(order[58].to_string(), "D16");
    }
}
