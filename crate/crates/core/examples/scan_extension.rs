//! Scans an unpacked extension and prints its report.
//!
//! With a path argument the given package (CRX, ZIP or directory) is scanned;
//! without one a small over-privileged extension is written to a temp dir.
//!
//! ```bash
//! cargo run -p extcheck --example scan_extension [-- path/to/extension]
//! ```

use std::fs;
use std::path::PathBuf;

use extcheck::report::serialize_report;
use extcheck::{analyze_package, open_package, AnalyzeOptions, ScanMode};

const MANIFEST: &str = r#"{
  "name": "Tab Counter",
  "version": "1.4",
  "manifest_version": 2,
  "permissions": ["tabs", "cookies", "history", "notifications", "https://*.example.com/*"],
  "background": { "scripts": ["background.js"] },
  "browser_action": { "default_popup": "popup.html" }
}"#;

const BACKGROUND: &str = r#"
// chrome.cookies.getAll is not called anywhere, only mentioned here
chrome.tabs.query({}, function (tabs) {
  chrome.browserAction.setBadgeText({ text: String(tabs.length) });
});
"#;

const POPUP: &str = r#"<html><body>
<script src="http://cdn.example.com/jquery.js"></script>
<script>chrome.history.search({ text: "" }, render);</script>
</body></html>"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let _tmp;
    let path = match std::env::args_os().nth(1) {
        Some(p) => PathBuf::from(p),
        None => {
            _tmp = tempfile::tempdir()?;
            let dir = _tmp.path().to_owned();
            fs::write(dir.join("manifest.json"), MANIFEST)?;
            fs::write(dir.join("background.js"), BACKGROUND)?;
            fs::write(dir.join("popup.html"), POPUP)?;
            dir
        }
    };

    let pkg = open_package(&path)?;
    for mode in [ScanMode::Full, ScanMode::PaperCompat] {
        let report = analyze_package(&pkg, &AnalyzeOptions { mode, ..AnalyzeOptions::default() })?;
        let extra: Vec<_> = report.overprivilege.extra.iter().map(|p| p.name()).collect();
        println!("{mode:?}: extra {} {:?}, severity {}", report.extra_count(), extra, report.severity.level.as_str());
    }

    let report = analyze_package(&pkg, &AnalyzeOptions::default())?;
    println!("{}", serialize_report(&report));
    Ok(())
}
