use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use perspecml_core::{Code, Finding};
use serde::Serialize;

/// Error body: `{"code", "message"}` plus findings when there are several.
#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: String,
    pub message: String,
    pub findings: Vec<Finding>,
}

#[derive(Serialize)]
struct Body<'a> {
    code: &'a str,
    message: &'a str,
    #[serde(skip_serializing_if = "<[Finding]>::is_empty")]
    findings: &'a [Finding],
}

impl ApiError {
    pub fn new(status: StatusCode, code: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            status,
            code: code.into(),
            message: message.into(),
            findings: Vec::new(),
        }
    }

    pub fn not_found(what: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", what)
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }

    pub fn internal(message: impl std::fmt::Display) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message.to_string())
    }

    /// Several findings at once, e.g. parse errors of an uploaded document.
    pub fn findings(status: StatusCode, findings: Vec<Finding>) -> Self {
        let first = findings.first();
        let mut e = Self::new(
            status,
            first.map_or("invalid", |f| f.code.as_str()),
            first.map_or_else(String::new, |f| f.to_string()),
        );
        e.findings = findings;
        e
    }
}

impl From<Finding> for ApiError {
    fn from(f: Finding) -> Self {
        let status = match f.code {
            Code::SesOrder | Code::SesRevisit => StatusCode::CONFLICT,
            Code::SesLog => StatusCode::INTERNAL_SERVER_ERROR,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        Self::new(status, f.code.as_str(), f.message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = Body {
            code: &self.code,
            message: &self.message,
            findings: &self.findings,
        };
        (self.status, Json(body)).into_response()
    }
}
