mod common;

use std::sync::Arc;

use extcheck::report::deserialize_report;
use extcheck::service::{router, serve, FaultPoint, ReportStore, ServiceConfig};
use reqwest::{Client, StatusCode};
use serde_json::Value;

struct Server {
    base: String,
    store: Arc<ReportStore>,
    stop: Option<tokio::sync::oneshot::Sender<()>>,
    handle: tokio::task::JoinHandle<std::io::Result<()>>,
    _dir: tempfile::TempDir,
}

impl Server {
    async fn start(config: ServiceConfig) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let store = Arc::new(ReportStore::open(dir.path()).unwrap());
        let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
        let base = format!("http://{}", listener.local_addr().unwrap());
        let (stop, stopped) = tokio::sync::oneshot::channel::<()>();
        let handle = tokio::spawn(serve(listener, router(store.clone(), config), async {
            let _ = stopped.await;
        }));
        Server { base, store, stop: Some(stop), handle, _dir: dir }
    }

    async fn post(&self, body: Vec<u8>) -> (StatusCode, String) {
        let r = Client::new()
            .post(format!("{}/api/v1/scan", self.base))
            .header("content-type", "application/octet-stream")
            .body(body)
            .send()
            .await
            .unwrap();
        (r.status(), r.text().await.unwrap())
    }

    async fn get(&self, path: &str) -> (StatusCode, String, String) {
        let r = Client::new().get(format!("{}{path}", self.base)).send().await.unwrap();
        let ctype = r.headers().get("content-type").map(|v| v.to_str().unwrap().to_owned()).unwrap_or_default();
        (r.status(), ctype, r.text().await.unwrap())
    }

    async fn stop(mut self) {
        let _ = self.stop.take().unwrap().send(());
        self.handle.await.unwrap().unwrap();
    }
}

fn keyed_package(version: &str, perms: &[&str]) -> Vec<u8> {
    let list: Vec<String> = perms.iter().map(|p| format!("\"{p}\"")).collect();
    let manifest = format!(
        r#"{{"name":"K","version":"{version}","manifest_version":2,"key":"AAECAwQFBgc=","permissions":[{}],"background":{{"scripts":["bg.js"]}}}}"#,
        list.join(",")
    );
    common::zip_bytes(&[("manifest.json", manifest.as_bytes()), ("bg.js", b"chrome.tabs.query({});")], true)
}

#[tokio::test]
async fn round_trip_and_not_found() {
    let s = Server::start(ServiceConfig::default()).await;
    let latest = format!("/api/v1/reports/{}/latest", common::FIXTURE_KEY_ID);
    let (status, ctype, body) = s.get(&latest).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(ctype, "application/json");
    let err: Value = serde_json::from_str(&body).unwrap();
    assert_eq!(err["code"], "NotFound");
    assert!(err["message"].is_string());

    let (status, posted) = s.post(common::fixture_crx()).await;
    assert_eq!(status, StatusCode::OK);
    let (status, _, got) = s.get(&latest).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(got, posted);
    let report = deserialize_report(&got).unwrap();
    assert_eq!(report.extra_count(), 1);

    let (status, _, exact) = s.get(&format!("/api/v1/reports/{}/1.0.3", common::FIXTURE_KEY_ID)).await;
    assert_eq!((status, exact), (StatusCode::OK, posted));
    let (_, _, versions) = s.get(&format!("/api/v1/reports/{}", common::FIXTURE_KEY_ID)).await;
    assert_eq!(serde_json::from_str::<Vec<String>>(&versions).unwrap(), ["1.0.3"]);
    s.stop().await;
}

#[tokio::test]
async fn latest_follows_version_order() {
    let s = Server::start(ServiceConfig::default()).await;
    let mut id = String::new();
    for v in ["1.10", "1.2", "1.9.9"] {
        let (status, body) = s.post(keyed_package(v, &["tabs"])).await;
        assert_eq!(status, StatusCode::OK);
        id = serde_json::from_str::<Value>(&body).unwrap()["extension_id"].as_str().unwrap().to_owned();
    }
    let (_, _, latest) = s.get(&format!("/api/v1/reports/{id}/latest")).await;
    assert_eq!(serde_json::from_str::<Value>(&latest).unwrap()["version"], "1.10");
    let (_, _, versions) = s.get(&format!("/api/v1/reports/{id}")).await;
    assert_eq!(serde_json::from_str::<Vec<String>>(&versions).unwrap(), ["1.2", "1.9.9", "1.10"]);
    assert_eq!(s.store.versions(&id).len(), 3);
    s.stop().await;
}

#[tokio::test]
async fn rejects_bad_uploads() {
    let s = Server::start(ServiceConfig { upload_limit: 4096, ..ServiceConfig::default() }).await;
    let (status, body) = s.post(b"this is not a package".to_vec()).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(serde_json::from_str::<Value>(&body).unwrap()["code"], "UnknownContainer");

    let no_manifest = common::zip_bytes(&[("bg.js", b"1")], false);
    let (status, body) = s.post(no_manifest).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(serde_json::from_str::<Value>(&body).unwrap()["code"], "MissingManifest");

    let (status, body) = s.post(vec![0u8; 10_000]).await;
    assert_eq!(status, StatusCode::PAYLOAD_TOO_LARGE);
    assert_eq!(serde_json::from_str::<Value>(&body).unwrap()["code"], "PayloadTooLarge");

    let (_, _, stats) = s.get("/api/v1/stats").await;
    let stats: Value = serde_json::from_str(&stats).unwrap();
    assert_eq!(stats["failed"], 2);
    assert_eq!(stats["failure_reasons"]["MissingManifest"], 1);
    s.stop().await;
}

#[tokio::test]
async fn unkeyed_packages_are_scanned_not_stored() {
    let s = Server::start(ServiceConfig::default()).await;
    let (status, body) = s.post(common::fixture_payload()).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(serde_json::from_str::<Value>(&body).unwrap()["extension_id"], Value::Null);
    assert!(s.store.ids().is_empty());
    s.stop().await;
}

#[tokio::test]
async fn storage_failure_is_503() {
    let s = Server::start(ServiceConfig::default()).await;
    s.store.inject_fault(Some(FaultPoint::PartialWrite));
    let (status, body) = s.post(common::fixture_crx()).await;
    assert_eq!(status, StatusCode::SERVICE_UNAVAILABLE);
    assert_eq!(serde_json::from_str::<Value>(&body).unwrap()["code"], "StorageFailure");
    let (status, _, _) = s.get(&format!("/api/v1/reports/{}/latest", common::FIXTURE_KEY_ID)).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    s.stop().await;
}

#[tokio::test]
async fn health_stats_and_unknown_routes() {
    let s = Server::start(ServiceConfig::default()).await;
    let (status, _, body) = s.get("/healthz").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(serde_json::from_str::<Value>(&body).unwrap()["scanner_version"], extcheck::SCANNER_VERSION);

    s.post(common::fixture_crx()).await;
    s.post(keyed_package("2.0", &["tabs", "cookies", "history"])).await;
    let (_, _, stats) = s.get("/api/v1/stats").await;
    let stats: Value = serde_json::from_str(&stats).unwrap();
    assert_eq!(stats["scanned"], 2);
    assert_eq!(stats["histogram"], serde_json::json!({"1": 1, "2": 1}));

    let (status, _, body) = s.get("/api/v2/nothing").await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(serde_json::from_str::<Value>(&body).unwrap()["code"], "NotFound");
    s.stop().await;
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_uploads_read_their_writes() {
    let s = Arc::new(Server::start(ServiceConfig::default()).await);
    let mut tasks = Vec::new();
    for i in 0..12 {
        let s = s.clone();
        tasks.push(tokio::spawn(async move {
            let (status, body) = s.post(keyed_package(&format!("3.{i}"), &["tabs"])).await;
            assert_eq!(status, StatusCode::OK);
            let r: Value = serde_json::from_str(&body).unwrap();
            let id = r["extension_id"].as_str().unwrap().to_owned();
            let (status, _, got) = s.get(&format!("/api/v1/reports/{id}/3.{i}")).await;
            assert_eq!((status, got), (StatusCode::OK, body));
            id
        }));
    }
    let mut id = String::new();
    for t in tasks {
        id = t.await.unwrap();
    }
    let (_, _, latest) = s.get(&format!("/api/v1/reports/{id}/latest")).await;
    assert_eq!(serde_json::from_str::<Value>(&latest).unwrap()["version"], "3.11");
    let s = Arc::try_unwrap(s).ok().unwrap();
    s.stop().await;
}
