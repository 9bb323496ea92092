use std::collections::BTreeMap;
use std::future::Future;
use std::io;
use std::sync::{Arc, Mutex};

use axum::body::{to_bytes, Body};
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use serde::Serialize;
use tokio::net::TcpListener;
use tower_http::cors::CorsLayer;

use super::store::{ReportStore, StoreError, VersionQuery};
use crate::analyzer::{analyze_package, AnalyzeOptions};
use crate::corpus::CorpusStats;
use crate::package::ExtensionPackage;
use crate::report::serialize_report;
use crate::SCANNER_VERSION;

pub const DEFAULT_UPLOAD_LIMIT: usize = 50 * 1024 * 1024;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub upload_limit: usize,
    pub analyze: AnalyzeOptions,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self { upload_limit: DEFAULT_UPLOAD_LIMIT, analyze: AnalyzeOptions::default() }
    }
}

#[derive(Clone)]
struct AppState {
    store: Arc<ReportStore>,
    config: Arc<ServiceConfig>,
    /// Failure code -> count, for uploads that could not be scanned.
    failures: Arc<Mutex<BTreeMap<String, usize>>>,
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    code: &'a str,
    message: String,
}

fn json(status: StatusCode, body: String) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
}

fn error(status: StatusCode, code: &str, message: impl ToString) -> Response {
    let body = ErrorBody { code, message: message.to_string() };
    json(status, serde_json::to_string_pretty(&body).expect("error body serializes"))
}

fn store_error(e: StoreError) -> Response {
    let status = match e {
        StoreError::NotFound(_) => StatusCode::NOT_FOUND,
        StoreError::MissingId(_) => StatusCode::UNPROCESSABLE_ENTITY,
        StoreError::StorageFailure(_) => StatusCode::SERVICE_UNAVAILABLE,
    };
    error(status, e.code(), e)
}

pub fn router(store: Arc<ReportStore>, config: ServiceConfig) -> Router {
    let state = AppState { store, config: Arc::new(config), failures: Arc::default() };
    Router::new()
        .route("/healthz", get(healthz))
        .route("/api/v1/reports/{id}", get(list_versions))
        .route("/api/v1/reports/{id}/latest", get(latest))
        .route("/api/v1/reports/{id}/{version}", get(exact))
        .route("/api/v1/scan", post(scan))
        .route("/api/v1/stats", get(stats))
        .fallback(|| async { error(StatusCode::NOT_FOUND, "NotFound", "no such endpoint") })
        .layer(CorsLayer::permissive())
        .with_state(state)
}

/// Serves `app` on `listener` until `shutdown` resolves.
pub async fn serve(
    listener: TcpListener,
    app: Router,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> io::Result<()> {
    axum::serve(listener, app).with_graceful_shutdown(shutdown).await
}

async fn healthz() -> Response {
    let body = serde_json::json!({ "status": "ok", "scanner_version": SCANNER_VERSION });
    json(StatusCode::OK, serde_json::to_string_pretty(&body).unwrap())
}

async fn fetch_document(state: AppState, id: String, query: VersionQuery) -> Response {
    let store = state.store.clone();
    match tokio::task::spawn_blocking(move || store.get_document(&id, &query)).await {
        Ok(Ok(doc)) => json(StatusCode::OK, doc),
        Ok(Err(e)) => store_error(e),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, "Internal", e),
    }
}

async fn latest(State(state): State<AppState>, Path(id): Path<String>) -> Response {
    fetch_document(state, id, VersionQuery::Latest).await
}

async fn exact(State(state): State<AppState>, Path((id, version)): Path<(String, String)>) -> Response {
    fetch_document(state, id, VersionQuery::Exact(version)).await
}

async fn list_versions(State(state): State<AppState>, Path(id): Path<String>) -> Response {
    let versions = state.store.versions(&id);
    if versions.is_empty() {
        return error(StatusCode::NOT_FOUND, "NotFound", format!("no report for {id}"));
    }
    json(StatusCode::OK, serde_json::to_string_pretty(&versions).unwrap())
}

enum ScanOutcome {
    Report(String),
    Rejected(&'static str, String),
    Storage(StoreError),
}

fn scan_blocking(state: &AppState, bytes: &[u8]) -> ScanOutcome {
    let pkg = match ExtensionPackage::from_bytes(bytes) {
        Ok(pkg) => pkg,
        Err(e) => return ScanOutcome::Rejected(e.code(), e.to_string()),
    };
    let report = match analyze_package(&pkg, &state.config.analyze) {
        Ok(r) => r,
        Err(e) => return ScanOutcome::Rejected(e.code(), e.to_string()),
    };
    if report.extension_id.is_some() && !report.version.is_empty() {
        if let Err(e) = state.store.put_report(&report) {
            return ScanOutcome::Storage(e);
        }
    }
    ScanOutcome::Report(serialize_report(&report))
}

async fn scan(State(state): State<AppState>, body: Body) -> Response {
    let limit = state.config.upload_limit;
    let bytes = match to_bytes(body, limit).await {
        Ok(b) => b,
        Err(_) => {
            return error(
                StatusCode::PAYLOAD_TOO_LARGE,
                "PayloadTooLarge",
                format!("upload exceeds {limit} bytes"),
            )
        }
    };
    let worker = state.clone();
    let outcome = match tokio::task::spawn_blocking(move || scan_blocking(&worker, &bytes)).await {
        Ok(o) => o,
        Err(e) => return error(StatusCode::INTERNAL_SERVER_ERROR, "Internal", e),
    };
    match outcome {
        ScanOutcome::Report(doc) => json(StatusCode::OK, doc),
        ScanOutcome::Rejected(code, message) => {
            *state.failures.lock().unwrap().entry(code.to_owned()).or_default() += 1;
            error(StatusCode::UNPROCESSABLE_ENTITY, code, message)
        }
        ScanOutcome::Storage(e) => store_error(e),
    }
}

async fn stats(State(state): State<AppState>) -> Response {
    let store = state.store.clone();
    let reports = match tokio::task::spawn_blocking(move || store.latest_reports()).await {
        Ok(Ok(r)) => r,
        Ok(Err(e)) => return store_error(e),
        Err(e) => return error(StatusCode::INTERNAL_SERVER_ERROR, "Internal", e),
    };
    let mut stats = CorpusStats::from_reports(&reports);
    for (code, n) in state.failures.lock().unwrap().iter() {
        stats.failed += n;
        *stats.failure_reasons.entry(code.clone()).or_default() += n;
    }
    json(StatusCode::OK, serde_json::to_string_pretty(&stats).unwrap())
}
