use std::path::PathBuf;
use std::time::Duration;

use axum::body::Body;
use axum::http::{header, Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;
use vizrec_service::{router, AppState, Config};

fn fixture(name: &str) -> Vec<u8> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name);
    std::fs::read(path).unwrap()
}

fn app() -> Router {
    router(AppState::new(&Config::default()))
}

async fn send(app: &Router, req: Request<Body>) -> (StatusCode, Vec<u8>) {
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    let bytes = res.into_body().collect().await.unwrap().to_bytes();
    (status, bytes.to_vec())
}

async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req
            .header(header::CONTENT_TYPE, "application/json")
            .body(Body::from(b.to_string())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let (status, bytes) = send(app, req).await;
    let value = if bytes.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&bytes).unwrap()
    };
    (status, value)
}

fn multipart(name: &str, bytes: &[u8]) -> Request<Body> {
    let boundary = "XyZboundary";
    let mut body = format!(
        "--{boundary}\r\nContent-Disposition: form-data; name=\"file\"; filename=\"{name}\"\r\nContent-Type: text/csv\r\n\r\n"
    )
    .into_bytes();
    body.extend_from_slice(bytes);
    body.extend_from_slice(format!("\r\n--{boundary}--\r\n").as_bytes());
    Request::builder()
        .method(Method::POST)
        .uri("/sessions")
        .header(header::CONTENT_TYPE, format!("multipart/form-data; boundary={boundary}"))
        .body(Body::from(body))
        .unwrap()
}

async fn upload(app: &Router, name: &str) -> Value {
    let (status, bytes) = send(app, multipart(name, &fixture(name))).await;
    assert_eq!(status, StatusCode::CREATED, "{}", String::from_utf8_lossy(&bytes));
    serde_json::from_slice(&bytes).unwrap()
}

fn assert_error(body: &Value, code: &str) {
    assert_eq!(body["code"], code, "{body}");
    assert!(body["message"].is_string());
    assert!(body["context"].is_object());
}

#[tokio::test]
async fn upload_creates_a_fresh_session() {
    let app = app();
    let snap = upload(&app, "weather.csv").await;
    assert_eq!(snap["version"], 1);
    assert_eq!(snap["available_channels"], json!(["x", "y"]));
    assert_eq!(snap["main_spec"], Value::Null);
    assert_eq!(snap["channel_map"], json!({}));
    assert_eq!(snap["dataset"]["row_count"], 2922);
    assert_eq!(snap["dataset"]["variables"][0]["effective_type"], "temporal");
    // One question per variable, two for the date.
    assert_eq!(snap["recommendations"]["groups"].as_array().unwrap().len(), 8);
    let id = snap["id"].as_str().unwrap();
    let (status, again) = call(&app, Method::GET, &format!("/sessions/{id}"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(again, snap);
}

#[tokio::test]
async fn raw_body_upload() {
    let app = app();
    let req = Request::builder()
        .method(Method::POST)
        .uri("/sessions")
        .header(header::CONTENT_TYPE, "text/csv")
        .body(Body::from("a,b\n1.5,x\n2.5\n"))
        .unwrap();
    let (status, bytes) = send(&app, req).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    let body: Value = serde_json::from_slice(&bytes).unwrap();
    assert_error(&body, "invalid_dataset");
    assert_eq!(body["context"], json!({"row": 2, "expected": 2, "found": 1}));
    let req = Request::builder()
        .method(Method::POST)
        .uri("/sessions?name=tiny.csv&delimiter=%3B")
        .body(Body::from("a;b\n1.5;x\n2.5;y\n"))
        .unwrap();
    let (status, bytes) = send(&app, req).await;
    assert_eq!(status, StatusCode::CREATED);
    let snap: Value = serde_json::from_slice(&bytes).unwrap();
    assert_eq!(snap["dataset"]["variables"][1]["name"], "b");
}

#[tokio::test]
async fn oversized_uploads_are_rejected() {
    let config = Config {
        upload_limit: 64,
        ..Config::default()
    };
    let app = router(AppState::new(&config));
    let big = fixture("iris.csv");
    let (status, bytes) = send(&app, multipart("iris.csv", &big)).await;
    assert_eq!(status, StatusCode::PAYLOAD_TOO_LARGE);
    assert_error(&serde_json::from_slice(&bytes).unwrap(), "payload_too_large");
    let req = Request::builder()
        .method(Method::POST)
        .uri("/sessions")
        .body(Body::from(big))
        .unwrap();
    let (status, bytes) = send(&app, req).await;
    assert_eq!(status, StatusCode::PAYLOAD_TOO_LARGE);
    assert_error(&serde_json::from_slice(&bytes).unwrap(), "payload_too_large");
}

#[tokio::test]
async fn unknown_and_expired_sessions() {
    let app = app();
    let (status, body) = call(&app, Method::GET, "/sessions/nope", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_error(&body, "session_not_found");

    let state = AppState::with_ttl(&Config::default(), Duration::from_millis(20));
    let app = router(state);
    let snap = upload(&app, "iris.csv").await;
    let uri = format!("/sessions/{}", snap["id"].as_str().unwrap());
    tokio::time::sleep(Duration::from_millis(10)).await;
    assert_eq!(call(&app, Method::GET, &uri, None).await.0, StatusCode::OK);
    tokio::time::sleep(Duration::from_millis(15)).await;
    // Sliding: the previous read restarted the clock.
    assert_eq!(call(&app, Method::GET, &uri, None).await.0, StatusCode::OK);
    tokio::time::sleep(Duration::from_millis(40)).await;
    let (status, body) = call(&app, Method::GET, &uri, None).await;
    assert_eq!(status, StatusCode::GONE);
    assert_error(&body, "session_expired");
    assert_eq!(call(&app, Method::GET, &uri, None).await.0, StatusCode::GONE);
}

#[tokio::test]
async fn mapping_edits_follow_gating() {
    let app = app();
    let snap = upload(&app, "weather.csv").await;
    let uri = format!("/sessions/{}/mapping", snap["id"].as_str().unwrap());

    let color = json!({"op": "assign", "channel": "color", "field": {"field": "LOCATION"}});
    let (status, body) = call(&app, Method::PATCH, &uri, Some(color.clone())).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_error(&body, "channel_unavailable");

    let x = json!({"op": "assign", "channel": "x", "field": {"field": "TEMP_MAX"}});
    let (status, snap) = call(&app, Method::PATCH, &uri, Some(x)).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(snap["version"], 2);
    assert_eq!(snap["available_channels"].as_array().unwrap().len(), 7);
    assert_eq!(snap["recommendations"]["groups"].as_array().unwrap().len(), 9);
    assert_eq!(snap["main_spec"]["mark"], "area");
    assert_eq!(snap["main_spec"]["data"], json!({"url": "weather.csv"}));

    let (_, snap) = call(&app, Method::PATCH, &uri, Some(color)).await;
    assert_eq!(snap["channel_map"]["color"], json!({"field": "LOCATION"}));
    let (_, snap) = call(&app, Method::PATCH, &uri, Some(json!({"op": "clear", "channel": "x"}))).await;
    assert_eq!(snap["channel_map"], json!({}), "clearing both axes clears everything");

    let set = json!({"op": "set", "map": {"x": {"field": "WIND"}, "y": {"field": "TEMP_MIN"}, "size": {"field": "PRECIPITATION"}}});
    let (status, snap) = call(&app, Method::PATCH, &uri, Some(set)).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(snap["main_spec"]["mark"], "point");
    assert_eq!(snap["recommendations"]["groups"], json!([]));
    assert_eq!(
        snap["recommendations"]["notice"],
        "selection too large for question recommendations"
    );

    let orphan = json!({"op": "set", "map": {"color": {"field": "WIND"}}});
    let (status, body) = call(&app, Method::PATCH, &uri, Some(orphan)).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_error(&body, "bad_request");

    let batch = json!([
        {"op": "clear", "channel": "size"},
        {"op": "assign", "channel": "shape", "field": {"field": "WIND"}}
    ]);
    let (status, body) = call(&app, Method::PATCH, &uri, Some(batch)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_error(&body, "incompatible_channel");
    let (_, snap) = call(&app, Method::GET, &uri.replace("/mapping", ""), None).await;
    assert!(snap["channel_map"]["size"].is_object(), "failed batches change nothing");
}

#[tokio::test]
async fn type_overrides_and_filters() {
    let app = app();
    let snap = upload(&app, "weather.csv").await;
    let base = format!("/sessions/{}", snap["id"].as_str().unwrap());

    let map = json!({"op": "set", "map": {"x": {"field": "DATE"}, "y": {"field": "TEMP_MAX"}}});
    let (_, snap) = call(&app, Method::PATCH, &format!("{base}/mapping"), Some(map)).await;
    assert_eq!(snap["main_spec"]["encoding"]["x"]["timeUnit"], "year");
    assert_eq!(snap["main_spec"]["encoding"]["y"]["aggregate"], "mean");

    let filters = json!([{"variable": "DATE", "year_equals": 2013}]);
    let (status, snap) = call(&app, Method::PUT, &format!("{base}/filters"), Some(filters)).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(
        snap["main_spec"]["transform"],
        json!([{"filter": {"field": "DATE", "timeUnit": "year", "equal": 2013}}])
    );
    let candidate = &snap["recommendations"]["groups"][0]["candidates"][0];
    assert_eq!(candidate["transform"], snap["main_spec"]["transform"]);

    let bad = json!([{"variable": "LOCATION", "year_equals": 2013}]);
    let (status, body) = call(&app, Method::PUT, &format!("{base}/filters"), Some(bad)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_error(&body, "invalid_filter");

    let (status, snap) =
        call(&app, Method::PUT, &format!("{base}/types/TEMP_MAX"), Some(json!({"type": "nominal"}))).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(snap["dataset"]["variables"][3]["effective_type"], "nominal");
    assert_eq!(snap["dataset"]["variables"][3]["inferred_type"], "quantitative");
    assert_eq!(snap["channel_map"]["y"], json!({"field": "TEMP_MAX"}));
    assert_eq!(snap["main_spec"]["mark"], "rect");

    let (status, body) =
        call(&app, Method::PUT, &format!("{base}/types/NOPE"), Some(json!({"type": "ordinal"}))).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_error(&body, "unknown_variable");
    let (status, body) =
        call(&app, Method::PUT, &format!("{base}/types/WIND"), Some(json!({"type": "fuzzy"}))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_error(&body, "invalid_type");
}

#[tokio::test]
async fn spec_embeds_rows() {
    let app = app();
    let snap = upload(&app, "iris.csv").await;
    let base = format!("/sessions/{}", snap["id"].as_str().unwrap());
    let req = Request::builder().uri(format!("{base}/spec")).body(Body::empty()).unwrap();
    let (status, bytes) = send(&app, req).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_error(&serde_json::from_slice(&bytes).unwrap(), "empty_mapping");

    let map = json!({"op": "assign", "channel": "x", "field": {"field": "species"}});
    call(&app, Method::PATCH, &format!("{base}/mapping"), Some(map)).await;
    let req = Request::builder().uri(format!("{base}/spec")).body(Body::empty()).unwrap();
    let (status, bytes) = send(&app, req).await;
    assert_eq!(status, StatusCode::OK);
    let text = String::from_utf8(bytes).unwrap();
    assert!(!text.contains('\n'), "compact output");
    let doc: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(doc["data"]["values"].as_array().unwrap().len(), 150);
    assert_eq!(doc["mark"], "bar");
    assert_eq!(doc["encoding"]["y"], json!({"type": "quantitative", "aggregate": "count"}));
}

#[tokio::test]
async fn bookmarks_round_trip() {
    let app = app();
    let snap = upload(&app, "weather.csv").await;
    let base = format!("/sessions/{}", snap["id"].as_str().unwrap());
    let group = &snap["recommendations"]["groups"][2];
    let doc = group["candidates"][0].clone();
    let question: String = group["question"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["text"].as_str().or(s["var"].as_str()).unwrap())
        .collect();

    let body = json!({"spec": doc, "question": question});
    let (status, created) = call(&app, Method::POST, &format!("{base}/bookmarks"), Some(body)).await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(created["id"], "b1");
    assert_eq!(created["spec"].to_string(), doc.to_string());

    let (_, list) = call(&app, Method::GET, &format!("{base}/bookmarks"), None).await;
    assert_eq!(list["bookmarks"][0]["spec"].to_string(), doc.to_string());
    let (_, snap) = call(&app, Method::GET, &base, None).await;
    assert_eq!(snap["recommendations"]["groups"][2]["bookmarks"], json!(["b1"]));
    assert!(snap["recommendations"]["groups"][1].get("bookmarks").is_none());

    let bad = json!({"spec": {"mark": "pie", "encoding": {}}});
    let (status, body) = call(&app, Method::POST, &format!("{base}/bookmarks"), Some(bad)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_error(&body, "invalid_spec");

    let uri = format!("{base}/bookmarks/b1");
    assert_eq!(call(&app, Method::DELETE, &uri, None).await.0, StatusCode::NO_CONTENT);
    let (status, body) = call(&app, Method::DELETE, &uri, None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_error(&body, "bookmark_not_found");
    let (_, list) = call(&app, Method::GET, &format!("{base}/bookmarks"), None).await;
    assert_eq!(list["bookmarks"], json!([]));
}

#[tokio::test]
async fn malformed_bodies() {
    let app = app();
    let snap = upload(&app, "iris.csv").await;
    let uri = format!("/sessions/{}/mapping", snap["id"].as_str().unwrap());
    let req = Request::builder()
        .method(Method::PATCH)
        .uri(&uri)
        .body(Body::from("{not json"))
        .unwrap();
    let (status, bytes) = send(&app, req).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_error(&serde_json::from_slice(&bytes).unwrap(), "bad_request");
    let (status, _) = call(&app, Method::PATCH, &uri, Some(json!({"op": "paint"}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}
