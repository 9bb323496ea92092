//! Fixture builders and independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{Cursor, Read, Write};
use std::path::Path;

use sha2::{Digest, Sha256};
use zip::write::SimpleFileOptions;

pub fn zip_bytes(files: &[(&str, &[u8])], deflate: bool) -> Vec<u8> {
    let method = if deflate { zip::CompressionMethod::Deflated } else { zip::CompressionMethod::Stored };
    let options = SimpleFileOptions::default().compression_method(method);
    let mut w = zip::ZipWriter::new(Cursor::new(Vec::new()));
    for (name, data) in files {
        w.start_file(*name, options).unwrap();
        w.write_all(data).unwrap();
    }
    w.finish().unwrap().into_inner()
}

/// Every file of an archive, extracted with the `zip` crate.
pub fn unzip_oracle(bytes: &[u8]) -> BTreeMap<String, Vec<u8>> {
    let mut archive = zip::ZipArchive::new(Cursor::new(bytes)).unwrap();
    let mut out = BTreeMap::new();
    for i in 0..archive.len() {
        let mut f = archive.by_index(i).unwrap();
        if f.is_dir() {
            continue;
        }
        let mut data = Vec::new();
        f.read_to_end(&mut data).unwrap();
        out.insert(f.name().to_owned(), data);
    }
    out
}

pub fn crx2(key: &[u8], sig: &[u8], payload: &[u8]) -> Vec<u8> {
    let mut out = b"Cr24".to_vec();
    for n in [2u32, key.len() as u32, sig.len() as u32] {
        out.extend_from_slice(&n.to_le_bytes());
    }
    out.extend_from_slice(key);
    out.extend_from_slice(sig);
    out.extend_from_slice(payload);
    out
}

pub fn crx3(header: &[u8], payload: &[u8]) -> Vec<u8> {
    let mut out = b"Cr24".to_vec();
    out.extend_from_slice(&3u32.to_le_bytes());
    out.extend_from_slice(&(header.len() as u32).to_le_bytes());
    out.extend_from_slice(header);
    out.extend_from_slice(payload);
    out
}

/// Extension id computed directly: hex of the first 16 digest bytes with
/// each hex digit shifted into a..p.
pub fn oracle_id(key: &[u8]) -> String {
    let digest = Sha256::digest(key);
    let mut hex = String::new();
    for b in &digest[..16] {
        hex.push_str(&format!("{b:02x}"));
    }
    hex.chars()
        .map(|c| (b'a' + c.to_digit(16).unwrap() as u8) as char)
        .collect()
}

/// 294-byte stand-in public key; its id was computed with Python's hashlib.
pub fn fixture_key() -> Vec<u8> {
    (0..294u32).map(|i| ((i * 31 + 7) % 256) as u8).collect()
}

pub const FIXTURE_KEY_ID: &str = "ablcladdjikejakcikdkjambhihdcjne";

pub const FIXTURE_MANIFEST: &str = r#"{
  "name": "Fixture",
  "version": "1.0.3",
  "manifest_version": 2,
  "permissions": ["tabs", "cookies", "storage", "notifications"],
  "background": {"scripts": ["bg.js"]}
}"#;

pub const FIXTURE_BG: &str = "chrome.tabs.query({}, function (t) {\n  chrome.storage.local.set({n: t.length});\n});\n";

/// The CRX2 fixture used across tests: extra = {cookies}.
pub fn fixture_crx() -> Vec<u8> {
    let payload = fixture_payload();
    crx2(&fixture_key(), &[0x5a; 256], &payload)
}

pub fn fixture_payload() -> Vec<u8> {
    zip_bytes(&[("manifest.json", FIXTURE_MANIFEST.as_bytes()), ("bg.js", FIXTURE_BG.as_bytes())], true)
}

pub fn write_tree(dir: &Path, files: &[(&str, &str)]) {
    for (name, text) in files {
        let path = dir.join(name);
        fs::create_dir_all(path.parent().unwrap()).unwrap();
        fs::write(path, text).unwrap();
    }
}

/// Manifest with the given permissions and one background script.
pub fn manifest(perms: &[&str], extra: &str) -> String {
    let list: Vec<String> = perms.iter().map(|p| format!("\"{p}\"")).collect();
    format!(
        r#"{{"name":"T","version":"1.0","manifest_version":2,"permissions":[{}],"background":{{"scripts":["bg.js"]}}{extra}}}"#,
        list.join(",")
    )
}

/// Extension whose only `chrome.cookies` call sits in its popup script.
pub fn popup_only_cookies(dir: &Path) {
    write_tree(
        dir,
        &[
            (
                "manifest.json",
                &manifest(&["cookies", "tabs"], r#","browser_action":{"default_popup":"popup.html"}"#),
            ),
            ("bg.js", "chrome.tabs.onUpdated.addListener(function () {});\n"),
            ("popup.html", "<html><body><script src=\"popup.js\"></script></body></html>\n"),
            ("popup.js", "chrome.cookies.getAll({}, show);\n"),
        ],
    );
}

/// Histogram from the published table of extra permissions.
pub fn published_histogram() -> BTreeMap<usize, usize> {
    [
        (1, 3237),
        (2, 923),
        (3, 250),
        (4, 92),
        (5, 52),
        (6, 19),
        (7, 5),
        (8, 6),
        (9, 9),
        (10, 0),
        (11, 0),
        (12, 1),
        (13, 2),
        (14, 3),
        (15, 1),
        (16, 2),
    ]
    .into_iter()
    .collect()
}

/// A genuine call appended to every adversarial file.
pub const ADVERSARIAL_CONTROL: &str = "chrome.alarms.create(\"tick\", {});";

/// Files that mention privileged APIs only inside comments, strings and
/// template text. Each ends with [`ADVERSARIAL_CONTROL`] on its last line.
pub fn adversarial_suite() -> Vec<(String, String)> {
    let bodies: [&str; 25] = [
        "// chrome.cookies.getAll({}, f);",
        "/*\n chrome.history.search({text: ''});\n chrome.tabs.query({});\n*/",
        "var a = \"chrome.cookies.get\";",
        "var b = 'chrome.bookmarks.getTree()';",
        "var c = `chrome.downloads.download({url: u})`;",
        "var d = `${\"chrome.history.deleteAll\"}`;",
        "var e = \"a \\\" chrome.tabs.query \\\" b\";",
        "var f = \"/*\"; // chrome.cookies.remove */",
        "var g = total / count; // chrome.management.getAll /",
        "var h = \"\\u0063hrome.cookies\"; // chrome.proxy.settings",
        "var i = `${ `chrome.cookies.getAll` }`;",
        "var j = \"chrome.\\\ncookies.get\";",
        "var k = {\"chrome.webRequest.onBeforeRequest\": 1};",
        "var l = \"\\\\\"; // chrome.history.addUrl",
        "/** @see chrome.proxy.settings.set */",
        "var m = `\\` chrome.history.search \\``;",
        "var n = 'chrome.' + 'cookies';",
        "// chrome.topSites.get\r\nvar o = 1;",
        "var p = /ab+c/i; // chrome.cookies.set",
        "var q = total / count / 2; /* chrome.downloads.download */",
        "var r = \"http://example.com/\"; // chrome.bookmarks.getTree",
        "/* /* chrome.management.getAll */",
        "// navigator.geolocation.getCurrentPosition(f)\n/* webkitNotifications.createNotification() */",
        "var s = `line one\nchrome.idle.queryState(60)\n${x} chrome.tts.speak`;",
        "var t = '\\'chrome.debugger.attach\\''; /* chrome.pageCapture.saveAsMHTML */",
    ];
    bodies
        .iter()
        .enumerate()
        .map(|(i, body)| (format!("adv{i:02}.js"), format!("{body}\n{ADVERSARIAL_CONTROL}\n")))
        .collect()
}

pub fn set(items: &[&str]) -> BTreeSet<String> {
    items.iter().map(|s| s.to_string()).collect()
}
