use std::collections::{BTreeMap, BTreeSet, HashSet};

use super::{Catalog, ConcernId, PerspectiveId, RoleCode};
use crate::diagnostics::{sort_findings, Code, Finding};

/// Returns every integrity violation in `c`; empty iff the catalog is
/// well-formed.
pub fn validate_catalog(c: &Catalog) -> Vec<Finding> {
    let mut out = Vec::new();
    check_perspectives(c, &mut out);
    check_roles(c, &mut out);
    check_concerns(c, &mut out);
    check_tasks(c, &mut out);
    check_relationships(c, &mut out);
    sort_findings(&mut out);
    out
}

fn check_perspectives(c: &Catalog, out: &mut Vec<Finding>) {
    let mut seen = BTreeSet::new();
    let mut colors: BTreeMap<String, PerspectiveId> = BTreeMap::new();
    for p in c.perspectives() {
        if !seen.insert(p.id) {
            out.push(Finding::new(
                Code::CatDup,
                format!("perspective {} declared more than once", p.id),
            ));
        }
        if !is_hex_color(&p.color) {
            out.push(Finding::new(
                Code::CatColor,
                format!("perspective {} color {:?} is not #rrggbb", p.id, p.color),
            ));
        }
        let key = p.color.to_ascii_lowercase();
        match colors.get(&key) {
            Some(other) if *other != p.id => out.push(Finding::new(
                Code::CatColor,
                format!("perspectives {other} and {} share color {key}", p.id),
            )),
            _ => {
                colors.insert(key, p.id);
            }
        }
    }
    for p in PerspectiveId::ALL {
        if !seen.contains(&p) {
            out.push(Finding::new(Code::CatCount, format!("perspective {p} is missing")));
        }
    }
}

fn is_hex_color(s: &str) -> bool {
    s.len() == 7 && s.starts_with('#') && s[1..].bytes().all(|b| b.is_ascii_hexdigit())
}

fn check_roles(c: &Catalog, out: &mut Vec<Finding>) {
    let mut seen = BTreeSet::new();
    for r in c.roles() {
        if !seen.insert(r.code) {
            out.push(Finding::new(
                Code::CatDup,
                format!("role {} declared more than once", r.code),
            ));
        }
    }
    for code in RoleCode::ALL {
        if !seen.contains(&code) {
            out.push(Finding::new(Code::CatCount, format!("role {code} is missing")));
        }
    }
}

fn check_concerns(c: &Catalog, out: &mut Vec<Finding>) {
    let mut seen = HashSet::new();
    let mut per_perspective: BTreeMap<PerspectiveId, u32> = BTreeMap::new();
    for concern in c.concerns() {
        let id = concern.id;
        if !seen.insert(id) {
            out.push(
                Finding::new(Code::CatDup, format!("concern {id} declared more than once"))
                    .with_concern(id),
            );
            continue;
        }
        *per_perspective.entry(id.perspective()).or_default() += 1;
        let max = id.perspective().expected_concerns();
        if id.number() > max {
            out.push(
                Finding::new(
                    Code::CatRange,
                    format!(
                        "concern {id} is outside the range {p}1-{p}{max}",
                        p = id.perspective().prefix()
                    ),
                )
                .with_concern(id),
            );
        }
        if c.owning_task(id).is_none() {
            out.push(
                Finding::new(Code::CatOrphan, format!("concern {id} is not part of any task"))
                    .with_concern(id),
            );
        }
    }
    for p in PerspectiveId::ALL {
        let found = per_perspective.get(&p).copied().unwrap_or(0);
        let expected = p.expected_concerns();
        if found != expected {
            out.push(Finding::new(
                Code::CatCount,
                format!("perspective {p} expects {expected} concerns, found {found}"),
            ));
        }
    }
}

fn check_tasks(c: &Catalog, out: &mut Vec<Finding>) {
    let mut seen = HashSet::new();
    let mut per_perspective: BTreeMap<PerspectiveId, usize> = BTreeMap::new();
    for t in c.tasks() {
        if t.id.trim().is_empty() {
            out.push(Finding::new(Code::CatRef, "task with an empty id"));
        }
        if !seen.insert(t.id.as_str()) {
            out.push(Finding::new(
                Code::CatDup,
                format!("task {} declared more than once", t.id),
            ));
            continue;
        }
        *per_perspective.entry(t.perspective).or_default() += 1;
        if t.suggested_roles.is_empty() {
            out.push(Finding::new(
                Code::CatRoles,
                format!("task {} suggests no stakeholder role", t.id),
            ));
        }
        if t.concern_ids.is_empty() {
            out.push(Finding::new(
                Code::CatEmptyTask,
                format!("task {} groups no concerns", t.id),
            ));
        }
        let mut listed: HashSet<ConcernId> = HashSet::new();
        for &cid in &t.concern_ids {
            if !listed.insert(cid) {
                out.push(
                    Finding::new(Code::CatDup, format!("task {} lists {cid} twice", t.id))
                        .with_concern(cid),
                );
            }
            if !c.contains(cid) {
                out.push(
                    Finding::new(
                        Code::CatRef,
                        format!("task {} refers to unknown concern {cid}", t.id),
                    )
                    .with_concern(cid),
                );
            }
            if cid.perspective() != t.perspective {
                out.push(
                    Finding::new(
                        Code::CatPerspective,
                        format!(
                            "task {} ({}) lists {cid}, which belongs to perspective {}",
                            t.id,
                            t.perspective,
                            cid.perspective()
                        ),
                    )
                    .with_concern(cid),
                );
            }
        }
    }
    for p in PerspectiveId::ALL {
        let found = per_perspective.get(&p).copied().unwrap_or(0);
        let expected = p.expected_tasks();
        if found != expected {
            out.push(Finding::new(
                Code::CatCount,
                format!("perspective {p} expects {expected} tasks, found {found}"),
            ));
        }
    }
}

fn check_relationships(c: &Catalog, out: &mut Vec<Finding>) {
    let mut seen = HashSet::new();
    for r in c.relationships() {
        if r.from == r.to {
            out.push(
                Finding::new(
                    Code::CatSelf,
                    format!("relationship {} {} {} links a concern to itself", r.from, r.kind, r.to),
                )
                .with_concern(r.from),
            );
        }
        for end in [r.from, r.to] {
            if !c.contains(end) {
                out.push(
                    Finding::new(
                        Code::CatRef,
                        format!(
                            "relationship {} {} {} refers to unknown concern {end}",
                            r.from, r.kind, r.to
                        ),
                    )
                    .with_concern(end),
                );
            }
        }
        if !seen.insert(r.key()) {
            out.push(
                Finding::new(
                    Code::CatDup,
                    format!("relationship {} {} {} declared more than once", r.from, r.kind, r.to),
                )
                .with_concern(r.from),
            );
        }
    }
}
