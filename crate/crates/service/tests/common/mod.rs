#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::body::Body;
use axum::http::{HeaderMap, Method, Request, StatusCode};
use axum::Router;
use geobim_core::ExecMode;
use geobim_service::api::{router, AppState, SessionCreated};
use geobim_service::config::FileConfig;
use http_body_util::BodyExt;
use tower::ServiceExt;

pub struct Reply {
    pub status: StatusCode,
    pub headers: HeaderMap,
    pub body: Vec<u8>,
    pub elapsed: Duration,
}

impl Reply {
    pub fn json(&self) -> serde_json::Value {
        serde_json::from_slice(&self.body).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&self.body)))
    }

    pub fn text(&self) -> String {
        String::from_utf8_lossy(&self.body).into_owned()
    }

    pub fn header(&self, name: &str) -> Option<&str> {
        self.headers.get(name).and_then(|v| v.to_str().ok())
    }
}

pub fn app_with(config: FileConfig) -> Router {
    router(AppState::new(config, ExecMode::default()))
}

pub fn app() -> Router {
    app_with(FileConfig::default())
}

pub async fn send(app: &Router, req: Request<Body>) -> Reply {
    let start = Instant::now();
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    let headers = res.headers().clone();
    let body = res.into_body().collect().await.unwrap().to_bytes().to_vec();
    Reply { status, headers, body, elapsed: start.elapsed() }
}

pub async fn call(app: &Router, method: Method, uri: &str, body: impl Into<Body>) -> Reply {
    let req = Request::builder().method(method).uri(uri).header("content-type", "application/json").body(body.into()).unwrap();
    send(app, req).await
}

pub async fn get(app: &Router, uri: &str) -> Reply {
    call(app, Method::GET, uri, Body::empty()).await
}

pub async fn post_json(app: &Router, uri: &str, body: serde_json::Value) -> Reply {
    call(app, Method::POST, uri, body.to_string()).await
}

pub async fn upload_raw(app: &Router, name: &str, bytes: Vec<u8>) -> Reply {
    let req = Request::builder()
        .method(Method::POST)
        .uri(format!("/models?name={name}"))
        .header("content-type", "application/octet-stream")
        .body(Body::from(bytes))
        .unwrap();
    send(app, req).await
}

pub async fn upload_multipart(app: &Router, files: &[(&str, Vec<u8>)]) -> Reply {
    let boundary = "geobim-test-boundary";
    let mut body = Vec::new();
    for (name, bytes) in files {
        body.extend(format!("--{boundary}\r\nContent-Disposition: form-data; name=\"file\"; filename=\"{name}\"\r\nContent-Type: application/octet-stream\r\n\r\n").bytes());
        body.extend(bytes);
        body.extend(b"\r\n");
    }
    body.extend(format!("--{boundary}--\r\n").bytes());
    let req = Request::builder()
        .method(Method::POST)
        .uri("/models")
        .header("content-type", format!("multipart/form-data; boundary={boundary}"))
        .body(Body::from(body))
        .unwrap();
    send(app, req).await
}

/// Uploads one file and returns the session id.
pub async fn session(app: &Router, name: &str, src: String) -> SessionCreated {
    let r = upload_raw(app, name, src.into_bytes()).await;
    assert_eq!(r.status, StatusCode::CREATED, "{}", r.text());
    serde_json::from_slice(&r.body).unwrap()
}

/// Follows 202 poll tokens until the job has finished.
pub async fn settle(app: &Router, mut r: Reply) -> Reply {
    while r.status == StatusCode::ACCEPTED {
        let poll = r.json()["poll"].as_str().unwrap().to_string();
        tokio::time::sleep(Duration::from_millis(20)).await;
        r = get(app, &poll).await;
    }
    r
}

pub fn write_fixture(dir: &Path, name: &str, src: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, src).unwrap();
    p
}

pub fn geobim(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_geobim")).args(args).output().unwrap()
}

pub fn state() -> Arc<AppState> {
    AppState::new(FileConfig::default(), ExecMode::default())
}
