use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use perspecml_core::analysis::{check, coverage, CoverageReport};
use perspecml_core::render::{render_diagram, render_template, DiagramOptions};
use perspecml_core::session::{Decision, DecisionPayload, Prompt, SessionState};
use perspecml_core::specformat::{parse_spec, serialize_spec, SpecDocument};
use perspecml_core::{Code, ConcernId, Finding};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::ApiError;
use crate::state::{AppState, CreateError, LiveSession};

type Shared = State<Arc<AppState>>;
type ApiResult<T> = Result<T, ApiError>;

pub fn routes() -> Router<Arc<AppState>> {
    Router::new()
        .route("/catalog", get(get_catalog))
        .route("/documents", get(list_documents).post(upload_document))
        .route("/documents/check", post(check_document))
        .route("/documents/{id}", get(get_document))
        .route("/documents/{id}/render/{kind}", get(render_document))
        .route("/sessions", get(list_sessions).post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/prompt", get(get_prompt))
        .route("/sessions/{id}/decision", post(post_decision))
        .route("/sessions/{id}/revisit", post(post_revisit))
        .route("/sessions/{id}/export", get(export_session))
        .route("/sessions/{id}/render/{kind}", get(render_session))
}

fn text(content_type: &'static str, body: String) -> Response {
    ([(header::CONTENT_TYPE, content_type)], body).into_response()
}

fn json_body<T: for<'de> Deserialize<'de>>(bytes: &[u8], code: &str) -> ApiResult<T> {
    serde_json::from_slice(bytes).map_err(|e| {
        ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            code,
            format!("invalid request body: {e}"),
        )
    })
}

fn utf8(bytes: &Bytes) -> ApiResult<String> {
    String::from_utf8(bytes.to_vec()).map_err(|_| ApiError::bad_request("body is not UTF-8"))
}

async fn get_catalog(State(state): Shared) -> Response {
    text("application/json", state.catalog.to_json())
}

fn render(state: &AppState, kind: &str, doc: Option<&SpecDocument>) -> ApiResult<Response> {
    let out = match kind {
        "diagram" => render_diagram(
            &state.catalog,
            &DiagramOptions {
                overlay: doc,
                ..Default::default()
            },
        )
        .map(|s| text("text/vnd.graphviz; charset=utf-8", s)),
        "template" => {
            render_template(&state.catalog, doc).map(|s| text("text/markdown; charset=utf-8", s))
        }
        other => {
            return Err(ApiError::bad_request(format!(
                "unknown render kind {other:?}; expected diagram or template"
            )))
        }
    };
    out.map_err(|f| ApiError::findings(StatusCode::UNPROCESSABLE_ENTITY, f))
}

#[derive(Serialize)]
struct DocumentSummary {
    id: String,
    project: String,
    coverage: CoverageReport,
}

fn summary(state: &AppState, d: &crate::state::StoredDocument) -> DocumentSummary {
    DocumentSummary {
        id: d.id.clone(),
        project: d.document.project_name.clone(),
        coverage: coverage(&state.catalog, &d.document),
    }
}

async fn list_documents(State(state): Shared) -> Json<Vec<DocumentSummary>> {
    Json(state.documents().iter().map(|d| summary(&state, d)).collect())
}

async fn upload_document(State(state): Shared, body: Bytes) -> ApiResult<Response> {
    let source = utf8(&body)?;
    let document = parse_spec(&source, &state.catalog)
        .map_err(|f| ApiError::findings(StatusCode::UNPROCESSABLE_ENTITY, f))?;
    let findings = check(&state.catalog, &document);
    let stored = state
        .store_document(source, document)
        .map_err(ApiError::internal)?;
    let body = json!({
        "id": stored.id,
        "project": stored.document.project_name,
        "findings": findings,
        "coverage": coverage(&state.catalog, &stored.document),
    });
    Ok((StatusCode::CREATED, Json(body)).into_response())
}

async fn check_document(State(state): Shared, body: Bytes) -> ApiResult<Json<Value>> {
    let source = utf8(&body)?;
    Ok(Json(match parse_spec(&source, &state.catalog) {
        Ok(doc) => json!({
            "findings": check(&state.catalog, &doc),
            "coverage": coverage(&state.catalog, &doc),
        }),
        Err(findings) => json!({ "findings": findings, "coverage": null }),
    }))
}

async fn get_document(State(state): Shared, Path(id): Path<String>) -> ApiResult<Response> {
    let d = state
        .document(&id)
        .ok_or_else(|| ApiError::not_found(format!("no document {id}")))?;
    Ok(text("text/plain; charset=utf-8", d.text))
}

async fn render_document(
    State(state): Shared,
    Path((id, kind)): Path<(String, String)>,
) -> ApiResult<Response> {
    let d = state
        .document(&id)
        .ok_or_else(|| ApiError::not_found(format!("no document {id}")))?;
    render(&state, &kind, Some(&d.document))
}

#[derive(Serialize)]
struct SessionView {
    session: SessionState,
    prompt: Option<Prompt>,
    coverage: CoverageReport,
}

fn view(state: &AppState, live: &LiveSession) -> SessionView {
    SessionView {
        session: live.session.state(),
        prompt: live.session.next_prompt(&state.catalog),
        coverage: coverage(&state.catalog, live.session.document()),
    }
}

async fn lookup(state: &AppState, id: &str) -> ApiResult<Arc<tokio::sync::Mutex<LiveSession>>> {
    state
        .session(id)
        .ok_or_else(|| ApiError::not_found(format!("no session {id}")))
}

async fn list_sessions(State(state): Shared) -> Json<Vec<String>> {
    Json(state.session_ids())
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct CreateSession {
    #[serde(default)]
    project: Option<String>,
    /// `.psml` text.
    #[serde(default)]
    seed: Option<String>,
}

async fn create_session(State(state): Shared, body: Bytes) -> ApiResult<Response> {
    let req: CreateSession = if body.iter().all(u8::is_ascii_whitespace) {
        CreateSession::default()
    } else {
        json_body(&body, Code::SesSeed.as_str())?
    };
    let seed = match &req.seed {
        Some(text) => Some(parse_spec(text, &state.catalog).map_err(|f| {
            let mut e = ApiError::findings(StatusCode::UNPROCESSABLE_ENTITY, f);
            e.code = Code::SesSeed.as_str().to_owned();
            e
        })?),
        None => None,
    };
    let project = req
        .project
        .or_else(|| seed.as_ref().map(|d| d.project_name.clone()))
        .unwrap_or_else(|| "untitled".to_owned());
    let live = match state.create_session(&project, seed.as_ref()) {
        Ok(live) => live,
        Err(CreateError::Rejected(f)) => return Err(f.into()),
        Err(CreateError::Io(e)) => return Err(ApiError::internal(e)),
    };
    let guard = live.lock().await;
    Ok((StatusCode::CREATED, Json(view(&state, &guard))).into_response())
}

async fn get_session(State(state): Shared, Path(id): Path<String>) -> ApiResult<Json<SessionView>> {
    let live = lookup(&state, &id).await?;
    let guard = live.lock().await;
    Ok(Json(view(&state, &guard)))
}

async fn get_prompt(State(state): Shared, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let live = lookup(&state, &id).await?;
    let guard = live.lock().await;
    let prompt = guard.session.next_prompt(&state.catalog);
    Ok(Json(json!({ "done": prompt.is_none(), "prompt": prompt })))
}

fn concern_field(body: &mut Value, code: Code) -> ApiResult<String> {
    let invalid = |m: &str| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, code.as_str(), m);
    let obj = body
        .as_object_mut()
        .ok_or_else(|| invalid("request body must be a JSON object"))?;
    match obj.remove("concern") {
        Some(Value::String(s)) => Ok(s),
        _ => Err(invalid("missing string field \"concern\"")),
    }
}

/// Validates, persists the event, then applies it: the client only sees
/// success once the decision is on disk.
async fn post_decision(
    State(state): Shared,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Json<Value>> {
    let live = lookup(&state, &id).await?;
    let mut body: Value = json_body(&body, Code::SesDecision.as_str())?;
    let raw = concern_field(&mut body, Code::SesDecision)?;
    let concern: ConcernId = raw.parse().map_err(|_| {
        ApiError::from(Finding::new(Code::SesDecision, format!("malformed concern id {raw:?}")))
    })?;
    let payload: DecisionPayload = serde_json::from_value(body).map_err(|e| {
        ApiError::from(Finding::new(Code::SesDecision, format!("invalid decision: {e}")))
    })?;
    let decision = Decision::try_from(payload)?;

    let mut guard = live.lock().await;
    let LiveSession { session, log } = &mut *guard;
    let event = session.plan_decision(concern, &decision)?;
    log.append(&event).map_err(ApiError::internal)?;
    session.apply(event)?;

    let next = session.next_prompt(&state.catalog);
    Ok(Json(json!({
        "done": next.is_none(),
        "next": next,
        "coverage": coverage(&state.catalog, session.document()),
        "session": session.state(),
    })))
}

async fn post_revisit(
    State(state): Shared,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Json<SessionView>> {
    let live = lookup(&state, &id).await?;
    let mut body: Value = json_body(&body, Code::SesRevisit.as_str())?;
    let concern = concern_field(&mut body, Code::SesRevisit)?;
    let mut guard = live.lock().await;
    let LiveSession { session, log } = &mut *guard;
    let event = session.plan_revisit(&concern)?;
    log.append(&event).map_err(ApiError::internal)?;
    session.apply(event)?;
    Ok(Json(view(&state, &guard)))
}

async fn export_session(State(state): Shared, Path(id): Path<String>) -> ApiResult<Response> {
    let live = lookup(&state, &id).await?;
    let guard = live.lock().await;
    Ok(text(
        "text/plain; charset=utf-8",
        serialize_spec(guard.session.document()),
    ))
}

async fn render_session(
    State(state): Shared,
    Path((id, kind)): Path<(String, String)>,
) -> ApiResult<Response> {
    let live = lookup(&state, &id).await?;
    let doc = live.lock().await.session.export();
    render(&state, &kind, Some(&doc))
}
