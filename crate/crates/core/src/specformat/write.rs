use std::fmt::Write as _;

use super::{ConcernEntry, Disposition, SpecDocument, Status};
use crate::catalog::PerspectiveId;

/// Quotes `s` as a single-line `.psml` string literal.
pub fn escape_string(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Canonical `.psml` text: every perspective block in flow order, entries
/// sorted by concern id, LF line endings.
pub fn serialize_spec(doc: &SpecDocument) -> String {
    let mut out = format!(
        "perspecml {}\nproject {}\n",
        doc.format_version,
        escape_string(&doc.project_name)
    );
    let mut entries: Vec<&ConcernEntry> = doc.entries.iter().collect();
    entries.sort_by_key(|e| e.concern);
    for p in PerspectiveId::ALL {
        let _ = write!(out, "\n[{p}]\n");
        for e in entries.iter().filter(|e| e.concern.perspective() == p) {
            write_entry(&mut out, e);
        }
    }
    out
}

fn write_entry(out: &mut String, e: &ConcernEntry) {
    let _ = write!(out, "{} ", e.concern);
    match &e.disposition {
        Disposition::NotApplicable { reason: None } => out.push_str("n/a\n"),
        Disposition::NotApplicable { reason: Some(r) } => {
            let _ = writeln!(out, "n/a because {}", escape_string(r));
        }
        Disposition::Applicable {
            relevance,
            spec_text,
            by,
            status,
            experimental_override,
        } => {
            out.push_str(relevance.as_str());
            if *experimental_override == Some(true) {
                out.push_str(" experimental");
            }
            let mut attrs = Vec::new();
            if !by.is_empty() {
                let codes: Vec<&str> = by.iter().map(|r| r.as_str()).collect();
                attrs.push(format!("by: {}", codes.join(", ")));
            }
            if !spec_text.is_empty() {
                attrs.push(format!("spec: {}", escape_string(spec_text)));
            }
            if *status != Status::Draft {
                attrs.push(format!("status: {status}"));
            }
            if *experimental_override == Some(false) {
                attrs.push("experimental: false".to_owned());
            }
            if attrs.is_empty() {
                out.push('\n');
            } else {
                out.push_str(" {\n");
                for a in attrs {
                    let _ = writeln!(out, "  {a}");
                }
                out.push_str("}\n");
            }
        }
    }
}
