use std::collections::{BTreeSet, HashSet};

use serde::Serialize;
use serde_json::{Map, Value};

use super::{ConcernEntry, Disposition, Relevance, SpecDocument, Status, FORMAT_VERSION};
use crate::catalog::{Catalog, ConcernId, RoleCode};
use crate::diagnostics::{Code, Finding};

#[derive(Serialize)]
struct DocOut<'a> {
    format_version: u32,
    project: &'a str,
    entries: Vec<EntryOut<'a>>,
}

#[derive(Serialize)]
struct EntryOut<'a> {
    concern: ConcernId,
    disposition: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    relevance: Option<Relevance>,
    #[serde(skip_serializing_if = "Option::is_none")]
    spec: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    by: Option<Vec<RoleCode>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    status: Option<Status>,
    #[serde(skip_serializing_if = "Option::is_none")]
    reason: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    experimental: Option<bool>,
}

/// Canonical JSON projection: entries sorted by concern id, defaults omitted.
pub fn to_json(doc: &SpecDocument) -> String {
    let mut entries: Vec<&ConcernEntry> = doc.entries.iter().collect();
    entries.sort_by_key(|e| e.concern);
    let out = DocOut {
        format_version: doc.format_version,
        project: &doc.project_name,
        entries: entries
            .into_iter()
            .map(|e| {
                let mut o = EntryOut {
                    concern: e.concern,
                    disposition: e.disposition.kind_str(),
                    relevance: None,
                    spec: None,
                    by: None,
                    status: None,
                    reason: None,
                    experimental: None,
                };
                match &e.disposition {
                    Disposition::Applicable {
                        relevance,
                        spec_text,
                        by,
                        status,
                        experimental_override,
                    } => {
                        o.relevance = Some(*relevance);
                        o.spec = (!spec_text.is_empty()).then_some(spec_text.as_str());
                        o.by = (!by.is_empty()).then(|| by.iter().copied().collect());
                        o.status = (*status != Status::Draft).then_some(*status);
                        o.experimental = *experimental_override;
                    }
                    Disposition::NotApplicable { reason } => o.reason = reason.as_deref(),
                }
                o
            })
            .collect(),
    };
    let mut s = serde_json::to_string_pretty(&out).expect("document serializes");
    s.push('\n');
    s
}

/// Reads the JSON projection. Shape errors are `E005` findings whose message
/// starts with a JSON pointer to the offending value.
pub fn from_json(text: &str, catalog: &Catalog) -> Result<SpecDocument, Vec<Finding>> {
    let root: Value = serde_json::from_str(text).map_err(|e| {
        vec![Finding::new(Code::E005, format!("invalid JSON: {e}"))
            .at(e.line() as u32, e.column() as u32)]
    })?;
    let mut r = Reader {
        findings: Vec::new(),
    };
    let doc = r.document(&root, catalog);
    match doc {
        Some(d) if r.findings.is_empty() => Ok(d),
        _ => Err(r.findings),
    }
}

struct Reader {
    findings: Vec<Finding>,
}

impl Reader {
    fn fail<T>(&mut self, path: &str, message: impl std::fmt::Display) -> Option<T> {
        self.findings
            .push(Finding::new(Code::E005, format!("{path}: {message}")));
        None
    }

    fn object<'v>(&mut self, v: &'v Value, path: &str, allowed: &[&str]) -> Option<&'v Map<String, Value>> {
        let Some(obj) = v.as_object() else {
            return self.fail(path, "expected an object");
        };
        for key in obj.keys() {
            if !allowed.contains(&key.as_str()) {
                self.fail::<()>(&format!("{path}/{key}"), "unknown field");
            }
        }
        Some(obj)
    }

    fn string<'v>(&mut self, obj: &'v Map<String, Value>, path: &str, key: &str) -> Option<&'v str> {
        match obj.get(key) {
            Some(Value::String(s)) => Some(s),
            Some(_) => self.fail(&format!("{path}/{key}"), "expected a string"),
            None => self.fail(path, format_args!("missing field {key:?}")),
        }
    }

    fn opt_string<'v>(&mut self, obj: &'v Map<String, Value>, path: &str, key: &str) -> Option<Option<&'v str>> {
        match obj.get(key) {
            None | Some(Value::Null) => Some(None),
            Some(Value::String(s)) => Some(Some(s)),
            Some(_) => self.fail(&format!("{path}/{key}"), "expected a string"),
        }
    }

    fn document(&mut self, root: &Value, catalog: &Catalog) -> Option<SpecDocument> {
        let obj = self.object(root, "", &["format_version", "project", "entries"])?;
        let version = match obj.get("format_version") {
            Some(v) if v.as_u64() == Some(FORMAT_VERSION as u64) => FORMAT_VERSION,
            Some(v) => {
                return self.fail(
                    "/format_version",
                    format_args!("unsupported format version {v}; expected {FORMAT_VERSION}"),
                )
            }
            None => return self.fail("", "missing field \"format_version\""),
        };
        let project = self.string(obj, "", "project")?.to_owned();
        let entries = match obj.get("entries") {
            Some(Value::Array(a)) => a,
            Some(_) => return self.fail("/entries", "expected an array"),
            None => return self.fail("", "missing field \"entries\""),
        };
        let mut doc = SpecDocument {
            format_version: version,
            project_name: project,
            entries: Vec::new(),
        };
        let mut seen = HashSet::new();
        for (i, v) in entries.iter().enumerate() {
            let path = format!("/entries/{i}");
            if let Some(e) = self.entry(v, &path, catalog) {
                if !seen.insert(e.concern) {
                    self.findings.push(
                        Finding::new(
                            Code::E003,
                            format!("{path}/concern: duplicate entry for {}", e.concern),
                        )
                        .with_concern(e.concern),
                    );
                    continue;
                }
                doc.entries.push(e);
            }
        }
        Some(doc)
    }

    fn entry(&mut self, v: &Value, path: &str, catalog: &Catalog) -> Option<ConcernEntry> {
        let obj = self.object(
            v,
            path,
            &[
                "concern",
                "disposition",
                "relevance",
                "spec",
                "by",
                "status",
                "reason",
                "experimental",
            ],
        )?;
        let raw = self.string(obj, path, "concern")?;
        let concern = match raw.parse::<ConcernId>() {
            Ok(id) if catalog.contains(id) => id,
            _ => {
                self.findings.push(Finding::new(
                    Code::E001,
                    format!("{path}/concern: unknown concern id {raw:?}"),
                ));
                return None;
            }
        };
        let disposition = match self.string(obj, path, "disposition")? {
            "applicable" => {
                let relevance = match self.string(obj, path, "relevance")?.parse() {
                    Ok(r) => r,
                    Err(e) => {
                        return self.fail(
                            &format!("{path}/relevance"),
                            format_args!("unknown relevance {e}"),
                        )
                    }
                };
                let spec_text = self.opt_string(obj, path, "spec")?.unwrap_or("").to_owned();
                let status = match self.opt_string(obj, path, "status")? {
                    None => Status::Draft,
                    Some(s) => match s.parse() {
                        Ok(s) => s,
                        Err(_) => {
                            return self.fail(&format!("{path}/status"), format_args!("unknown status {s:?}"))
                        }
                    },
                };
                let mut by = BTreeSet::new();
                match obj.get("by") {
                    None | Some(Value::Null) => {}
                    Some(Value::Array(codes)) => {
                        for (j, c) in codes.iter().enumerate() {
                            match c.as_str().map(str::parse::<RoleCode>) {
                                Some(Ok(code)) => {
                                    by.insert(code);
                                }
                                _ => {
                                    return self.fail(
                                        &format!("{path}/by/{j}"),
                                        format_args!("unknown role code {c}"),
                                    )
                                }
                            }
                        }
                    }
                    Some(_) => return self.fail(&format!("{path}/by"), "expected an array"),
                }
                let experimental_override = match obj.get("experimental") {
                    None | Some(Value::Null) => None,
                    Some(Value::Bool(b)) => Some(*b),
                    Some(_) => return self.fail(&format!("{path}/experimental"), "expected a boolean"),
                };
                if obj.contains_key("reason") {
                    return self.fail(&format!("{path}/reason"), "only not_applicable entries carry a reason");
                }
                Disposition::Applicable {
                    relevance,
                    spec_text,
                    by,
                    status,
                    experimental_override,
                }
            }
            "not_applicable" => {
                for key in ["relevance", "spec", "by", "status", "experimental"] {
                    if obj.contains_key(key) {
                        return self.fail(
                            &format!("{path}/{key}"),
                            "not_applicable entries carry only a reason",
                        );
                    }
                }
                Disposition::NotApplicable {
                    reason: self.opt_string(obj, path, "reason")?.map(str::to_owned),
                }
            }
            other => {
                return self.fail(
                    &format!("{path}/disposition"),
                    format_args!("expected \"applicable\" or \"not_applicable\", found {other:?}"),
                )
            }
        };
        Some(ConcernEntry::new(concern, disposition))
    }
}
