use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::catalog::RoleCode;
use crate::diagnostics::{Code, Finding};
use crate::specformat::{ConcernEntry, Disposition, Relevance, Status};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Decision {
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
    Skip,
}

impl Decision {
    pub fn applicable(relevance: Relevance, spec_text: impl Into<String>) -> Self {
        Decision::Applicable {
            relevance,
            spec_text: spec_text.into(),
            by: BTreeSet::new(),
            status: Status::Draft,
            experimental_override: None,
        }
    }

    pub fn from_entry(e: &ConcernEntry) -> Self {
        match &e.disposition {
            Disposition::Applicable {
                relevance,
                spec_text,
                by,
                status,
                experimental_override,
            } => Decision::Applicable {
                relevance: *relevance,
                spec_text: spec_text.clone(),
                by: by.clone(),
                status: *status,
                experimental_override: *experimental_override,
            },
            Disposition::NotApplicable { reason } => Decision::NotApplicable {
                reason: reason.clone(),
            },
        }
    }

    /// `None` for a skip.
    pub fn into_disposition(self) -> Option<Disposition> {
        match self {
            Decision::Applicable {
                relevance,
                spec_text,
                by,
                status,
                experimental_override,
            } => Some(Disposition::Applicable {
                relevance,
                spec_text,
                by,
                status,
                experimental_override,
            }),
            Decision::NotApplicable { reason } => Some(Disposition::NotApplicable { reason }),
            Decision::Skip => None,
        }
    }
}

/// Wire form of a [`Decision`], as sent by clients and stored in logs.
/// Values are kept as strings so that bad ones become findings rather than
/// deserialization failures.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecisionPayload {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relevance: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub by: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub status: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experimental: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl From<&Decision> for DecisionPayload {
    fn from(d: &Decision) -> Self {
        match d {
            Decision::Applicable {
                relevance,
                spec_text,
                by,
                status,
                experimental_override,
            } => DecisionPayload {
                kind: "applicable".into(),
                relevance: Some(relevance.as_str().into()),
                spec: (!spec_text.is_empty()).then(|| spec_text.clone()),
                by: (!by.is_empty()).then(|| by.iter().map(|r| r.as_str().to_owned()).collect()),
                status: (*status != Status::Draft).then(|| status.as_str().to_owned()),
                experimental: *experimental_override,
                reason: None,
            },
            Decision::NotApplicable { reason } => DecisionPayload {
                kind: "not_applicable".into(),
                reason: reason.clone(),
                ..Default::default()
            },
            Decision::Skip => DecisionPayload {
                kind: "skip".into(),
                ..Default::default()
            },
        }
    }
}

fn invalid(message: impl Into<String>) -> Finding {
    Finding::new(Code::SesDecision, message)
}

impl TryFrom<DecisionPayload> for Decision {
    type Error = Finding;

    fn try_from(p: DecisionPayload) -> Result<Self, Finding> {
        let only = |allowed: &[&str]| -> Result<(), Finding> {
            let present = [
                ("relevance", p.relevance.is_some()),
                ("spec", p.spec.is_some()),
                ("by", p.by.is_some()),
                ("status", p.status.is_some()),
                ("experimental", p.experimental.is_some()),
                ("reason", p.reason.is_some()),
            ];
            match present
                .iter()
                .find(|(k, set)| *set && !allowed.contains(k))
            {
                Some((k, _)) => Err(invalid(format!("a {} decision does not take {k:?}", p.kind))),
                None => Ok(()),
            }
        };
        match p.kind.as_str() {
            "applicable" => {
                only(&["relevance", "spec", "by", "status", "experimental"])?;
                let relevance = match &p.relevance {
                    None => return Err(invalid("an applicable decision requires a relevance")),
                    Some(r) => r.parse::<Relevance>().map_err(|_| {
                        invalid(format!(
                            "unknown relevance {r:?}; expected desirable, important or essential"
                        ))
                    })?,
                };
                let mut by = BTreeSet::new();
                for code in p.by.iter().flatten() {
                    by.insert(code.parse::<RoleCode>().map_err(|_| {
                        invalid(format!("unknown role code {code:?}"))
                    })?);
                }
                let status = match &p.status {
                    None => Status::Draft,
                    Some(s) => s
                        .parse()
                        .map_err(|_| invalid(format!("unknown status {s:?}")))?,
                };
                Ok(Decision::Applicable {
                    relevance,
                    spec_text: p.spec.unwrap_or_default(),
                    by,
                    status,
                    experimental_override: p.experimental,
                })
            }
            "not_applicable" => {
                only(&["reason"])?;
                Ok(Decision::NotApplicable { reason: p.reason })
            }
            "skip" => {
                only(&[])?;
                Ok(Decision::Skip)
            }
            other => Err(invalid(format!(
                "unknown decision kind {other:?}; expected applicable, not_applicable or skip"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn applicable_requires_relevance() {
        let p = DecisionPayload {
            kind: "applicable".into(),
            spec: Some("x".into()),
            ..Default::default()
        };
        assert_eq!(Decision::try_from(p).unwrap_err().code, Code::SesDecision);
    }

    #[test]
    fn payload_round_trip() {
        let mut d = Decision::applicable(Relevance::Important, "text");
        if let Decision::Applicable { by, status, .. } = &mut d {
            by.insert(RoleCode::DS);
            *status = Status::Approved;
        }
        for d in [
            d,
            Decision::NotApplicable { reason: None },
            Decision::NotApplicable {
                reason: Some("why".into()),
            },
            Decision::Skip,
        ] {
            let p = DecisionPayload::from(&d);
            let json = serde_json::to_string(&p).unwrap();
            let back: DecisionPayload = serde_json::from_str(&json).unwrap();
            assert_eq!(Decision::try_from(back).unwrap(), d);
        }
    }

    #[test]
    fn stray_fields_are_rejected() {
        let p = DecisionPayload {
            kind: "skip".into(),
            reason: Some("x".into()),
            ..Default::default()
        };
        assert!(Decision::try_from(p).is_err());
        let p = DecisionPayload {
            kind: "maybe".into(),
            ..Default::default()
        };
        assert!(Decision::try_from(p).is_err());
    }
}
