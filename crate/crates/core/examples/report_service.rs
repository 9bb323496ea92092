//! Starts the report service on an ephemeral port, uploads a package, and
//! reads the stored report back.
//!
//! ```bash
//! cargo run -p extcheck --example report_service
//! ```

use std::io::{Cursor, Write};
use std::sync::Arc;

use extcheck::service::{router, serve, ReportStore, ServiceConfig};
use zip::write::SimpleFileOptions;

fn package() -> zip::result::ZipResult<Vec<u8>> {
    // the "key" field gives an unsigned package a stable id
    let manifest = r#"{"name":"Uploaded","version":"0.3","manifest_version":2,
        "key":"TUlJQmlqQU5CZ2txaGtpRzl3MEJBUUVGQUFPQ0FROEFNSUlCQ2dLQ0FRRUE=",
        "permissions":["tabs","bookmarks"],"background":{"scripts":["bg.js"]}}"#;
    let mut w = zip::ZipWriter::new(Cursor::new(Vec::new()));
    w.start_file("manifest.json", SimpleFileOptions::default())?;
    w.write_all(manifest.as_bytes())?;
    w.start_file("bg.js", SimpleFileOptions::default())?;
    w.write_all(b"chrome.tabs.create({url: 'about:blank'});\n")?;
    Ok(w.finish()?.into_inner())
}

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let tmp = tempfile::tempdir()?;
    let store = Arc::new(ReportStore::open(tmp.path())?);
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await?;
    let base = format!("http://{}", listener.local_addr()?);
    let (stop, stopped) = tokio::sync::oneshot::channel::<()>();
    let server = tokio::spawn(serve(listener, router(store, ServiceConfig::default()), async {
        let _ = stopped.await;
    }));

    let client = reqwest::Client::new();
    let posted = client
        .post(format!("{base}/api/v1/scan"))
        .header("content-type", "application/octet-stream")
        .body(package()?)
        .send()
        .await?;
    println!("POST /api/v1/scan -> {}", posted.status());
    let posted = posted.text().await?;
    let report: serde_json::Value = serde_json::from_str(&posted)?;
    let id = report["extension_id"].as_str().unwrap_or_default().to_owned();
    println!("id {id}, extra {}, severity {}", report["overprivilege"]["extra_count"], report["severity"]["level"]);

    let latest = client.get(format!("{base}/api/v1/reports/{id}/latest")).send().await?;
    println!("GET latest -> {}, identical to upload response: {}", latest.status(), latest.text().await? == posted);
    let versions = client.get(format!("{base}/api/v1/reports/{id}")).send().await?.text().await?;
    println!("versions: {}", versions.split_whitespace().collect::<String>());
    let stats = client.get(format!("{base}/api/v1/stats")).send().await?.text().await?;
    println!("stats: {}", stats.split_whitespace().collect::<String>());

    let _ = stop.send(());
    server.await??;
    Ok(())
}
