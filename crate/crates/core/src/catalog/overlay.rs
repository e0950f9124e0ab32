//! Catalog-overlay merge.
//!
//! An overlay has the catalog file's shape with every top-level array
//! optional. Relationships are additive; perspectives, roles, tasks and
//! concern prompts are replaced by id. A concern entry that carries a
//! `name` is a new declaration rather than an override.

use std::collections::HashSet;

use serde::Deserialize;

use super::{
    validate_catalog, Catalog, CatalogError, Concern, ConcernId, PerspectiveId, Provenance,
    RelationKind, Relationship, RoleCode,
};
use crate::diagnostics::{Code, Finding};

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct OverlayFile {
    version: Option<u32>,
    perspectives: Option<Vec<PerspectivePatch>>,
    roles: Option<Vec<RolePatch>>,
    tasks: Option<Vec<TaskPatch>>,
    concerns: Option<Vec<ConcernPatch>>,
    relationships: Option<Vec<RelationshipPatch>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PerspectivePatch {
    id: String,
    display_name: Option<String>,
    color: Option<String>,
    description: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RolePatch {
    code: String,
    display_name: Option<String>,
    description: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TaskPatch {
    id: String,
    perspective: Option<String>,
    name: Option<String>,
    description: Option<String>,
    suggested_roles: Option<Vec<String>>,
    concern_ids: Option<Vec<String>>,
    #[allow(dead_code)]
    provenance: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConcernPatch {
    id: String,
    name: Option<String>,
    prompt: Option<String>,
    description: Option<String>,
    experimental: Option<bool>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RelationshipPatch {
    from: String,
    to: String,
    kind: String,
    #[serde(default)]
    rationale: String,
    #[allow(dead_code)]
    provenance: Option<String>,
}

pub(super) fn apply(base: Catalog, text: &str) -> Result<Catalog, CatalogError> {
    let overlay: OverlayFile = serde_json::from_str(text).map_err(CatalogError::from_json)?;
    let mut parts = base.into_parts();
    let mut findings = Vec::new();

    if let Some(v) = overlay.version {
        parts.version = v;
    }

    for patch in overlay.perspectives.unwrap_or_default() {
        let Some(p) = patch
            .id
            .parse::<PerspectiveId>()
            .ok()
            .and_then(|id| parts.perspectives.iter_mut().find(|p| p.id == id))
        else {
            findings.push(Finding::new(
                Code::CatRef,
                format!("overlay refers to unknown perspective {:?}", patch.id),
            ));
            continue;
        };
        if let Some(v) = patch.display_name {
            p.display_name = v;
        }
        if let Some(v) = patch.color {
            p.color = v;
        }
        if let Some(v) = patch.description {
            p.description = v;
        }
    }

    for patch in overlay.roles.unwrap_or_default() {
        let Some(r) = patch
            .code
            .parse::<RoleCode>()
            .ok()
            .and_then(|code| parts.roles.iter_mut().find(|r| r.code == code))
        else {
            findings.push(Finding::new(
                Code::CatRef,
                format!("overlay refers to unknown role {:?}", patch.code),
            ));
            continue;
        };
        if let Some(v) = patch.display_name {
            r.display_name = v;
        }
        if let Some(v) = patch.description {
            r.description = v;
        }
    }

    // Concerns before tasks so a task patch may list a newly declared concern.
    for patch in overlay.concerns.unwrap_or_default() {
        let Ok(id) = patch.id.parse::<ConcernId>() else {
            findings.push(Finding::new(
                Code::CatRef,
                format!("overlay concern id {:?} is malformed", patch.id),
            ));
            continue;
        };
        let existing = parts.concerns.iter_mut().find(|c| c.id == id);
        match (patch.name, existing) {
            (Some(_), Some(_)) => findings.push(
                Finding::new(
                    Code::CatDup,
                    format!("overlay declares concern {id}, which already exists"),
                )
                .with_concern(id),
            ),
            (Some(name), None) => {
                let description = patch.description.unwrap_or_default();
                let prompt = patch
                    .prompt
                    .unwrap_or_else(|| format!("What/How: {description}?"));
                parts.concerns.push(Concern {
                    id,
                    name,
                    prompt,
                    description,
                    experimental: patch.experimental.unwrap_or(false),
                });
            }
            (None, Some(c)) => {
                if let Some(v) = patch.prompt {
                    c.prompt = v;
                }
                if let Some(v) = patch.description {
                    c.description = v;
                }
                if let Some(v) = patch.experimental {
                    c.experimental = v;
                }
            }
            (None, None) => findings.push(
                Finding::new(
                    Code::CatRef,
                    format!("overlay overrides unknown concern {id}"),
                )
                .with_concern(id),
            ),
        }
    }

    for patch in overlay.tasks.unwrap_or_default() {
        let Some(task) = parts.tasks.iter_mut().find(|t| t.id == patch.id) else {
            findings.push(Finding::new(
                Code::CatRef,
                format!("overlay remaps unknown task {:?}", patch.id),
            ));
            continue;
        };
        task.provenance = Provenance::Extension;
        if let Some(p) = patch.perspective {
            match p.parse() {
                Ok(p) => task.perspective = p,
                Err(_) => findings.push(Finding::new(
                    Code::CatRef,
                    format!("task {} refers to unknown perspective {p:?}", task.id),
                )),
            }
        }
        if let Some(v) = patch.name {
            task.name = v;
        }
        if let Some(v) = patch.description {
            task.description = v;
        }
        if let Some(roles) = patch.suggested_roles {
            let mut set = std::collections::BTreeSet::new();
            for raw in roles {
                match raw.parse::<RoleCode>() {
                    Ok(code) => {
                        set.insert(code);
                    }
                    Err(_) => findings.push(Finding::new(
                        Code::CatRef,
                        format!("task {} suggests unknown role {raw:?}", task.id),
                    )),
                }
            }
            task.suggested_roles = set;
        }
        if let Some(ids) = patch.concern_ids {
            let mut list = Vec::new();
            for raw in ids {
                match raw.parse::<ConcernId>() {
                    Ok(id) => list.push(id),
                    Err(_) => findings.push(Finding::new(
                        Code::CatRef,
                        format!("task {} refers to malformed concern id {raw:?}", task.id),
                    )),
                }
            }
            task.concern_ids = list;
        }
    }

    let known: HashSet<ConcernId> = parts.concerns.iter().map(|c| c.id).collect();
    let mut keys: HashSet<_> = parts.relationships.iter().map(Relationship::key).collect();
    for patch in overlay.relationships.unwrap_or_default() {
        let endpoint = |raw: &str, findings: &mut Vec<Finding>| match raw.parse::<ConcernId>() {
            Ok(id) if known.contains(&id) => Some(id),
            _ => {
                findings.push(Finding::new(
                    Code::CatRef,
                    format!("overlay relationship refers to unknown concern {raw:?}"),
                ));
                None
            }
        };
        let from = endpoint(&patch.from, &mut findings);
        let to = endpoint(&patch.to, &mut findings);
        let kind = match patch.kind.parse::<RelationKind>() {
            Ok(k) => Some(k),
            Err(_) => {
                findings.push(Finding::new(
                    Code::CatRef,
                    format!("overlay relationship has unknown kind {:?}", patch.kind),
                ));
                None
            }
        };
        let (Some(from), Some(to), Some(kind)) = (from, to, kind) else {
            continue;
        };
        let r = Relationship::new(from, to, kind, patch.rationale, Provenance::Extension);
        if !keys.insert(r.key()) {
            findings.push(
                Finding::new(
                    Code::CatDup,
                    format!("overlay relationship {} {} {} already exists", r.from, r.kind, r.to),
                )
                .with_concern(r.from),
            );
            continue;
        }
        parts.relationships.push(r);
    }

    if !findings.is_empty() {
        return Err(CatalogError::Rejected(findings));
    }
    let merged = Catalog::from_parts(parts);
    let findings = validate_catalog(&merged);
    if findings.is_empty() {
        Ok(merged)
    } else {
        Err(CatalogError::Rejected(findings))
    }
}
