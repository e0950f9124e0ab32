//! DOT diagram and Markdown template generators.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::catalog::{Catalog, ConcernId, PerspectiveId, RelationKind, Task};
use crate::diagnostics::{Code, Finding};
use crate::specformat::{ConcernEntry, Disposition, SpecDocument};

#[derive(Debug, Clone)]
pub struct DiagramOptions<'a> {
    pub include_relationships: bool,
    pub overlay: Option<&'a SpecDocument>,
    /// Replaces perspective fill colors.
    pub palette: BTreeMap<PerspectiveId, String>,
}

impl Default for DiagramOptions<'_> {
    fn default() -> Self {
        Self {
            include_relationships: true,
            overlay: None,
            palette: BTreeMap::new(),
        }
    }
}

/// Every entry of `doc` must name a concern of `c`.
fn check_overlay(c: &Catalog, doc: &SpecDocument) -> Result<(), Vec<Finding>> {
    let bad: Vec<Finding> = doc
        .entries
        .iter()
        .filter(|e| !c.contains(e.concern))
        .map(|e| {
            Finding::new(
                Code::RenOverlay,
                format!("overlay entry {} is not a concern of this catalog", e.concern),
            )
        })
        .collect();
    if bad.is_empty() {
        Ok(())
    } else {
        Err(bad)
    }
}

fn dot_quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for ch in s.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Escapes record-label metacharacters; the result still needs `dot_quote`.
fn record_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        if matches!(ch, '{' | '}' | '|' | '<' | '>') {
            out.push('\\');
        }
        out.push(ch);
    }
    out
}

fn roles_of(task: &Task) -> String {
    task.suggested_roles
        .iter()
        .map(|r| r.as_str())
        .collect::<Vec<_>>()
        .join(" ")
}

fn annotation(entry: Option<&ConcernEntry>) -> String {
    match entry.map(|e| &e.disposition) {
        Some(Disposition::Applicable { relevance, .. }) => format!(" ({relevance})"),
        Some(Disposition::NotApplicable { .. }) => " [n/a]".to_owned(),
        None => String::new(),
    }
}

/// Concerns drawn inside `task`'s node: those it owns.
fn owned<'c>(c: &'c Catalog, task: &'c Task) -> impl Iterator<Item = ConcernId> + 'c {
    task.concern_ids
        .iter()
        .copied()
        .filter(move |&id| c.owning_task(id).is_some_and(|t| t.id == task.id))
}

pub fn render_diagram(c: &Catalog, opts: &DiagramOptions<'_>) -> Result<String, Vec<Finding>> {
    if let Some(doc) = opts.overlay {
        check_overlay(c, doc)?;
    }
    let color = |p: PerspectiveId| -> String {
        opts.palette
            .get(&p)
            .cloned()
            .or_else(|| c.perspective(p).map(|x| x.color.clone()))
            .unwrap_or_else(|| "#ffffff".to_owned())
    };

    let mut out = String::new();
    out.push_str("// perspecml concern diagram\n// legend:\n");
    for p in PerspectiveId::ALL {
        let name = c.perspective(p).map_or(p.as_str(), |x| x.display_name.as_str());
        let _ = writeln!(out, "//   {:<15} {}  {name}", p.as_str(), color(p));
    }
    out.push_str("//   edges: influences solid, depends_on bold, trade_off dashed undirected\n");
    out.push_str("digraph perspecml {\n");
    out.push_str("  graph [rankdir=LR, fontname=\"Helvetica\", compound=true];\n");
    out.push_str(
        "  node [shape=record, style=filled, fillcolor=\"#ffffff\", fontname=\"Helvetica\", fontsize=10];\n",
    );
    out.push_str("  edge [fontname=\"Helvetica\", fontsize=9];\n");

    for p in PerspectiveId::ALL {
        let title = c.perspective(p).map_or(p.as_str(), |x| x.display_name.as_str());
        let _ = write!(
            out,
            "\n  subgraph cluster_{} {{\n    label={};\n    style=\"rounded,filled\";\n    fillcolor={};\n",
            p.as_str(),
            dot_quote(title),
            dot_quote(&color(p))
        );
        for task in c.tasks_in(p) {
            let mut ports = Vec::new();
            for id in owned(c, task) {
                let name = c.concern(id).map_or("", |x| x.name.as_str());
                let entry = opts.overlay.and_then(|d| d.entry(id));
                ports.push(format!(
                    "<{id}> {id} {}{}",
                    record_escape(name),
                    record_escape(&annotation(entry))
                ));
            }
            let label = format!(
                "{{{{{}|{}}}|{{{}}}}}",
                record_escape(&roles_of(task)),
                record_escape(&task.name),
                ports.join("|")
            );
            let _ = writeln!(out, "    {} [label={}];", dot_quote(&task.id), dot_quote(&label));
        }
        out.push_str("  }\n");
    }

    if opts.include_relationships {
        let mut rels: Vec<_> = c.relationships().iter().collect();
        rels.sort_by_key(|r| r.key());
        if !rels.is_empty() {
            out.push('\n');
        }
        for r in rels {
            let (Some(a), Some(b)) = (c.owning_task(r.from), c.owning_task(r.to)) else {
                continue;
            };
            let style = match r.kind {
                RelationKind::Influences => "",
                RelationKind::DependsOn => ", style=bold",
                RelationKind::TradeOff => ", style=dashed, dir=none",
            };
            let _ = writeln!(
                out,
                "  {}:{} -> {}:{} [label={}{style}];",
                dot_quote(&a.id),
                r.from,
                dot_quote(&b.id),
                r.to,
                dot_quote(r.kind.as_str())
            );
        }
    }
    out.push_str("}\n");
    Ok(out)
}

fn md_cell(s: &str) -> String {
    s.replace('\\', "\\\\")
        .replace('|', "\\|")
        .replace("\r\n", "<br>")
        .replace('\n', "<br>")
}

/// Specification template: one section per perspective, one table per task,
/// one row per concern. With a document the rows carry its entries.
pub fn render_template(c: &Catalog, doc: Option<&SpecDocument>) -> Result<String, Vec<Finding>> {
    if let Some(d) = doc {
        check_overlay(c, d)?;
    }
    let mut out = String::new();
    match doc {
        Some(d) => {
            let _ = writeln!(out, "# {}: ML specification\n", md_cell(&d.project_name));
        }
        None => out.push_str("# ML specification template\n\n"),
    }
    out.push_str("Rows marked E are experimental concerns; treat their specifications as provisional.\n");

    for p in PerspectiveId::ALL {
        let Some(persp) = c.perspective(p) else { continue };
        let _ = write!(out, "\n## {}\n\n{}\n", persp.display_name, persp.description);
        for task in c.tasks_in(p) {
            let _ = write!(
                out,
                "\n### {} {}\n\n{}\n\nSuggested stakeholders: {}\n\n",
                task.id,
                task.name,
                task.description,
                task.suggested_roles
                    .iter()
                    .map(|r| r.as_str())
                    .collect::<Vec<_>>()
                    .join(", ")
            );
            out.push_str("| Id | Question | E | Relevance | Specification | Stakeholders |\n");
            out.push_str("|----|----------|---|-----------|---------------|--------------|\n");
            for id in owned(c, task) {
                let Some(concern) = c.concern(id) else { continue };
                let entry = doc.and_then(|d| d.entry(id));
                let mut experimental = concern.experimental;
                let (relevance, text, by) = match entry.map(|e| &e.disposition) {
                    Some(Disposition::Applicable {
                        relevance,
                        spec_text,
                        by,
                        experimental_override,
                        ..
                    }) => {
                        experimental = experimental_override.unwrap_or(experimental);
                        let by: Vec<&str> = by.iter().map(|r| r.as_str()).collect();
                        (relevance.as_str().to_owned(), spec_text.clone(), by.join(", "))
                    }
                    Some(Disposition::NotApplicable { reason }) => (
                        "n/a".to_owned(),
                        reason.as_deref().map_or("n/a".to_owned(), |r| format!("n/a: {r}")),
                        String::new(),
                    ),
                    None => (String::new(), String::new(), String::new()),
                };
                let _ = writeln!(
                    out,
                    "| {id} | {} | {} | {relevance} | {} | {by} |",
                    md_cell(&concern.prompt),
                    if experimental { "E" } else { "" },
                    md_cell(&text),
                );
            }
        }
    }
    Ok(out)
}
