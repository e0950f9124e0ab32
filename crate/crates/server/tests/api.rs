use std::sync::Arc;

use axum::body::Body;
use axum::http::{header, Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use perspecml_core::Catalog;
use perspecml_server::{router, AppState};
use serde_json::{json, Value};
use tower::ServiceExt;

struct Reply {
    status: StatusCode,
    content_type: String,
    body: String,
}

impl Reply {
    fn json(&self) -> Value {
        serde_json::from_str(&self.body).unwrap_or_else(|e| panic!("{e}: {}", self.body))
    }
}

fn app(dir: &std::path::Path) -> Router {
    let state = AppState::load(Catalog::builtin().clone(), dir).unwrap();
    router(Arc::new(state), None)
}

async fn call(app: &Router, method: Method, uri: &str, body: Option<String>) -> Reply {
    let mut req = Request::builder().method(method).uri(uri);
    if body.is_some() {
        req = req.header(header::CONTENT_TYPE, "application/json");
    }
    let req = req.body(body.map_or_else(Body::empty, Body::from)).unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    let content_type = res
        .headers()
        .get(header::CONTENT_TYPE)
        .map(|v| v.to_str().unwrap().to_owned())
        .unwrap_or_default();
    let bytes = res.into_body().collect().await.unwrap().to_bytes();
    Reply {
        status,
        content_type,
        body: String::from_utf8(bytes.to_vec()).unwrap(),
    }
}

async fn get(app: &Router, uri: &str) -> Reply {
    call(app, Method::GET, uri, None).await
}

async fn post(app: &Router, uri: &str, body: Value) -> Reply {
    call(app, Method::POST, uri, Some(body.to_string())).await
}

async fn new_session(app: &Router) -> String {
    let r = post(app, "/api/sessions", json!({ "project": "Churn" })).await;
    assert_eq!(r.status, StatusCode::CREATED, "{}", r.body);
    r.json()["session"]["id"].as_str().unwrap().to_owned()
}

#[tokio::test]
async fn catalog_and_placeholder() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let r = get(&app, "/api/catalog").await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(r.json()["concerns"].as_array().unwrap().len(), 59);
    let r = get(&app, "/").await;
    assert_eq!(r.status, StatusCode::OK);
    assert!(r.content_type.starts_with("text/html"));
}

#[tokio::test]
async fn serves_assets_directory() {
    let dir = tempfile::tempdir().unwrap();
    let assets = tempfile::tempdir().unwrap();
    std::fs::write(assets.path().join("index.html"), "<p>board</p>").unwrap();
    std::fs::write(assets.path().join("app.js"), "console.log(1)").unwrap();
    let state = AppState::load(Catalog::builtin().clone(), dir.path()).unwrap();
    let app = router(Arc::new(state), Some(assets.path().to_owned()));
    assert_eq!(get(&app, "/").await.body, "<p>board</p>");
    assert_eq!(get(&app, "/app.js").await.body, "console.log(1)");
    assert_eq!(get(&app, "/board/route").await.body, "<p>board</p>");
    assert_eq!(get(&app, "/api/catalog").await.status, StatusCode::OK);
}

#[tokio::test]
async fn session_flow_and_order_conflict() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let id = new_session(&app).await;

    let r = get(&app, &format!("/api/sessions/{id}/prompt")).await;
    assert_eq!(r.json()["prompt"]["concern"]["id"], "O1");

    let r = post(
        &app,
        &format!("/api/sessions/{id}/decision"),
        json!({ "concern": "O1", "kind": "applicable", "relevance": "essential", "spec": "Retail stores" }),
    )
    .await;
    assert_eq!(r.status, StatusCode::OK, "{}", r.body);
    assert_eq!(r.json()["next"]["concern"]["id"], "O2");

    let r = post(
        &app,
        &format!("/api/sessions/{id}/decision"),
        json!({ "concern": "O5", "kind": "skip" }),
    )
    .await;
    assert_eq!(r.status, StatusCode::CONFLICT);
    assert_eq!(r.json()["code"], "E-SES-ORDER");

    let r = post(
        &app,
        &format!("/api/sessions/{id}/decision"),
        json!({ "concern": "O2", "kind": "not_applicable", "reason": "internal tool" }),
    )
    .await;
    assert_eq!(r.status, StatusCode::OK, "{}", r.body);
    assert_eq!(r.json()["coverage"]["addressed"], 2);

    let r = get(&app, &format!("/api/sessions/{id}/export")).await;
    assert!(r.content_type.starts_with("text/plain"));
    assert!(r.body.contains("O1 essential"), "{}", r.body);
    assert!(r.body.contains("O2 n/a because \"internal tool\""), "{}", r.body);

    let r = get(&app, &format!("/api/sessions/{id}/render/diagram")).await;
    assert_eq!(r.status, StatusCode::OK);
    assert!(r.content_type.starts_with("text/vnd.graphviz"));
    assert!(r.body.contains("(essential)"));
    let r = get(&app, &format!("/api/sessions/{id}/render/template")).await;
    assert!(r.content_type.starts_with("text/markdown"));
    assert!(r.body.starts_with("# Churn: ML specification"));
    let r = get(&app, &format!("/api/sessions/{id}/render/pdf")).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);

    let r = post(&app, &format!("/api/sessions/{id}/revisit"), json!({ "concern": "O1" })).await;
    assert_eq!(r.status, StatusCode::OK, "{}", r.body);
    assert_eq!(r.json()["prompt"]["concern"]["id"], "O1");
    assert_eq!(r.json()["prompt"]["revisiting"], true);

    let r = post(&app, &format!("/api/sessions/{id}/revisit"), json!({ "concern": "O9" })).await;
    assert_eq!(r.status, StatusCode::CONFLICT);

    let before = get(&app, &format!("/api/sessions/{id}")).await.json();
    let restarted = self::app(dir.path());
    let after = get(&restarted, &format!("/api/sessions/{id}")).await.json();
    assert_eq!(before, after);
    assert_eq!(get(&restarted, "/api/sessions").await.json(), json!([id]));
}

#[tokio::test]
async fn malformed_requests() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let id = new_session(&app).await;
    let uri = format!("/api/sessions/{id}/decision");

    let r = post(&app, &uri, json!({ "concern": "Q1", "kind": "skip" })).await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(r.json()["code"], "E-SES-DEC");

    let r = post(&app, &uri, json!({ "concern": "O1", "kind": "applicable", "relevance": "urgent" })).await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(r.json()["code"], "E-SES-DEC");

    let r = post(&app, &uri, json!({ "concern": "O1", "kind": "skip", "colour": 1 })).await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);

    let r = call(&app, Method::POST, &uri, Some("{not json".into())).await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);

    assert_eq!(get(&app, "/api/sessions/nope").await.status, StatusCode::NOT_FOUND);

    let r = post(&app, "/api/sessions", json!({ "seed": "perspecml 1\nproject \"x\"\n[objectives]\nO1 maybe\n" })).await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(r.json()["code"], "E-SES-SEED");
    assert!(!r.json()["findings"].as_array().unwrap().is_empty());

    // Nothing rejected above may have reached the log.
    let r = get(&app, &format!("/api/sessions/{id}")).await.json();
    assert_eq!(r["session"]["events"], 1);
}

#[tokio::test]
async fn seeded_session_starts_after_seeded_concerns() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let seed = "perspecml 1\nproject \"Seeded\"\n[objectives]\nO1 important { spec: \"ctx\" }\n";
    let r = post(&app, "/api/sessions", json!({ "seed": seed })).await;
    assert_eq!(r.status, StatusCode::CREATED, "{}", r.body);
    let v = r.json();
    assert_eq!(v["session"]["project"], "Seeded");
    assert_eq!(v["coverage"]["addressed"], 1);
}

#[tokio::test]
async fn documents_upload_check_and_render() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let text = "perspecml 1\nproject \"Docs\"\n[model]\nM1 essential { spec: \"F1 >= 0.8\" status: approved }\n";

    let r = call(&app, Method::POST, "/api/documents/check", Some(text.into())).await;
    let v = r.json();
    assert_eq!(v["coverage"]["addressed"], 1);
    assert!(v["findings"].as_array().unwrap().iter().any(|f| f["code"] == "I201"));

    let r = call(&app, Method::POST, "/api/documents/check", Some("perspecml 1\nproject \"x\"\n[model]\nM99 essential\n".into())).await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(r.json()["findings"][0]["code"], "E001");
    assert_eq!(r.json()["coverage"], Value::Null);

    let r = call(&app, Method::POST, "/api/documents", Some(text.into())).await;
    assert_eq!(r.status, StatusCode::CREATED, "{}", r.body);
    let doc_id = r.json()["id"].as_str().unwrap().to_owned();

    let r = call(&app, Method::POST, "/api/documents", Some("garbage".into())).await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);

    assert_eq!(get(&app, &format!("/api/documents/{doc_id}")).await.body, text);
    let r = get(&app, &format!("/api/documents/{doc_id}/render/template")).await;
    assert!(r.body.starts_with("# Docs: ML specification"));

    let restarted = self::app(dir.path());
    let list = get(&restarted, "/api/documents").await.json();
    assert_eq!(list[0]["id"], doc_id.as_str());
    assert_eq!(list[0]["project"], "Docs");
}
