//! Generator for synthetic extension corpora with planted ground truth.
//!
//! Each generated extension declares a known set of used permissions (called
//! from privileged scripts), a known set of unused ones (mentioned only in
//! comments, strings, templates and content scripts), and optionally an
//! unused `notifications`. The returned [`PlantedLedger`] is computed from the
//! generator's own choices, never from the analyzer, so it serves as an
//! independent oracle for corpus statistics under the default options.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{CorpusStats, Histogram};

/// Permissions with a detectable API namespace, paired with a call that
/// exercises it. `notifications` is deliberately absent.
pub const PLANTABLE: &[(&str, &str)] = &[
    ("alarms", "chrome.alarms.create('tick', { periodInMinutes: 1 });"),
    ("bookmarks", "chrome.bookmarks.getTree(function (tree) { log(tree); });"),
    ("browsingData", "chrome.browsingData.removeCache({}, done);"),
    ("contentSettings", "chrome.contentSettings.javascript.get({ primaryUrl: u }, log);"),
    ("contextMenus", "chrome.contextMenus.create({ title: 'Go', contexts: ['page'] });"),
    ("cookies", "chrome.cookies.getAll({ domain: d }, function (c) { log(c); });"),
    ("debugger", "chrome.debugger.attach({ tabId: t }, '1.0', done);"),
    ("downloads", "chrome.downloads.download({ url: u });"),
    ("fontSettings", "chrome.fontSettings.getFontList(log);"),
    ("geolocation", "navigator.geolocation.getCurrentPosition(function (p) { log(p); });"),
    ("history", "chrome.history.search({ text: '' }, log);"),
    ("idle", "chrome.idle.queryState(60, log);"),
    ("management", "chrome.management.getAll(log);"),
    ("pageCapture", "chrome.pageCapture.saveAsMHTML({ tabId: t }, log);"),
    ("privacy", "chrome.privacy.network.networkPredictionEnabled.get({}, log);"),
    ("proxy", "chrome.proxy.settings.get({}, log);"),
    ("storage", "chrome.storage.local.get(null, log);"),
    ("tabs", "chrome.tabs.query({ active: true }, log);"),
    ("topSites", "chrome.topSites.get(log);"),
    ("tts", "chrome.tts.speak('hello');"),
    ("webNavigation", "chrome.webNavigation.onCompleted.addListener(log);"),
    ("webRequest", "chrome.webRequest.onBeforeRequest.addListener(log, { urls: ['<all_urls>'] });"),
];

fn api_path(permission: &str) -> String {
    if permission == "geolocation" {
        "navigator.geolocation".to_owned()
    } else {
        format!("chrome.{permission}")
    }
}

fn call_for(permission: &str) -> &'static str {
    PLANTABLE
        .iter()
        .find(|(p, _)| *p == permission)
        .map(|(_, c)| *c)
        .expect("plantable permission")
}

/// Ground truth for one generated extension.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlantedExtension {
    pub dir: String,
    pub declared: BTreeSet<String>,
    pub used: BTreeSet<String>,
    pub extra: BTreeSet<String>,
    pub unused_notifications: bool,
    pub manifest_version: u32,
    pub http_script: bool,
}

impl PlantedExtension {
    pub fn expected_extra_count(&self) -> usize {
        self.extra.len()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PlantedLedger {
    pub extensions: Vec<PlantedExtension>,
}

impl PlantedLedger {
    pub fn expected_histogram(&self) -> Histogram {
        let mut h = Histogram::new();
        for e in self.extensions.iter().filter(|e| !e.extra.is_empty()) {
            *h.entry(e.extra.len()).or_default() += 1;
        }
        h
    }

    /// Statistics the corpus runner must report under default options.
    pub fn expected_stats(&self) -> CorpusStats {
        CorpusStats {
            scanned: self.extensions.len(),
            failed: 0,
            failure_reasons: Default::default(),
            csp_enforced: self.extensions.iter().filter(|e| e.manifest_version == 2).count(),
            histogram: self.expected_histogram(),
            http_script_extensions: self.extensions.iter().filter(|e| e.http_script).count(),
            exempt_only_skipped: self
                .extensions
                .iter()
                .filter(|e| e.extra.is_empty() && e.unused_notifications)
                .count(),
        }
    }
}

fn json_list<'a>(items: impl IntoIterator<Item = &'a String>) -> String {
    let quoted: Vec<String> = items.into_iter().map(|s| format!("\"{s}\"")).collect();
    format!("[{}]", quoted.join(", "))
}

fn decoys(extra: &BTreeSet<String>) -> String {
    let mut s = String::new();
    for (i, p) in extra.iter().enumerate() {
        let path = api_path(p);
        match i % 4 {
            0 => {
                let _ = writeln!(s, "// {path}.get() is not needed here");
            }
            1 => {
                let _ = writeln!(s, "/* legacy:\n   {path}.query({{}});\n*/");
            }
            2 => {
                let _ = writeln!(s, "var label = \"{path}\"; var other = '{path}.x';");
            }
            _ => {
                let _ = writeln!(s, "var tpl = `docs for {path} at ${{base}}/api`;");
            }
        }
    }
    s
}

/// Writes `count` unpacked extensions under `root` (one directory each) and
/// returns the planted ground truth. Extension `i` has `i % 17` extra
/// permissions, so 60 extensions cover every count from 0 to 16.
pub fn generate_planted_corpus(root: &Path, count: usize, seed: u64) -> io::Result<PlantedLedger> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ledger = PlantedLedger::default();
    for i in 0..count {
        let extra_n = i % 17;
        let used_n = rng.gen_range(0..=4usize);
        let mut pool: Vec<&str> = PLANTABLE.iter().map(|(p, _)| *p).collect();
        pool.shuffle(&mut rng);
        let used: BTreeSet<String> = pool[..used_n].iter().map(|s| s.to_string()).collect();
        let extra: BTreeSet<String> = pool[used_n..used_n + extra_n].iter().map(|s| s.to_string()).collect();
        let unused_notifications = i % 3 == 0;
        let manifest_version = if i % 2 == 0 { 2 } else { 1 };
        let has_popup = i % 5 < 2;
        let background_page = i % 4 == 1;
        let http_script = i % 7 == 0;

        let mut declared: BTreeSet<String> = used.union(&extra).cloned().collect();
        if unused_notifications {
            declared.insert("notifications".into());
        }

        let dir = format!("ext{i:03}");
        let ext_root = root.join(&dir);
        fs::create_dir_all(&ext_root)?;

        // used permissions: split between background and popup when there is one
        let (mut bg_calls, mut popup_calls) = (String::new(), String::new());
        for (j, p) in used.iter().enumerate() {
            let target = if has_popup && j % 2 == 1 { &mut popup_calls } else { &mut bg_calls };
            let _ = writeln!(target, "{}", call_for(p));
        }
        let bg_js = format!(
            "'use strict';\nfunction log(x) {{ console.log(x); }}\n{}{}",
            decoys(&extra),
            bg_calls
        );
        fs::write(ext_root.join("bg.js"), bg_js)?;
        let content_js: String = extra.iter().map(|p| format!("{}\n", call_for(p))).collect();
        fs::write(ext_root.join("content.js"), content_js)?;

        let mut manifest = String::from("{\n");
        let _ = writeln!(manifest, "  \"name\": \"Planted {i}\",");
        let _ = writeln!(manifest, "  \"version\": \"1.{i}\",");
        if manifest_version == 2 {
            manifest.push_str("  \"manifest_version\": 2,\n");
        }
        let mut perms: Vec<String> = declared.iter().cloned().collect();
        if i % 2 == 1 {
            perms.push("http://*.example.com/*".into());
        }
        let _ = writeln!(manifest, "  \"permissions\": {},", json_list(&perms));
        if background_page {
            manifest.push_str("  \"background\": { \"page\": \"bg.html\" },\n");
            fs::write(
                ext_root.join("bg.html"),
                "<!doctype html>\n<html><body>\n<script src=\"bg.js\"></script>\n</body></html>\n",
            )?;
        } else {
            manifest.push_str("  \"background\": { \"scripts\": [\"bg.js\"] },\n");
        }
        let remote = if http_script {
            "<script src=\"http://cdn.example.com/lib.js\"></script>\n"
        } else {
            ""
        };
        if has_popup {
            manifest.push_str("  \"browser_action\": { \"default_popup\": \"popup.html\" },\n");
            fs::write(
                ext_root.join("popup.html"),
                format!("<html><head>\n{remote}<script src=\"popup.js\"></script>\n</head></html>\n"),
            )?;
            fs::write(ext_root.join("popup.js"), format!("function log(x) {{}}\n{popup_calls}"))?;
        } else if http_script {
            fs::write(ext_root.join("about.html"), format!("<html>\n{remote}</html>\n"))?;
        }
        manifest.push_str("  \"content_scripts\": [{ \"matches\": [\"*://*/*\"], \"js\": [\"content.js\"] }]\n}\n");
        fs::write(ext_root.join("manifest.json"), manifest)?;

        ledger.extensions.push(PlantedExtension {
            dir,
            declared,
            used,
            extra,
            unused_notifications,
            manifest_version,
            http_script,
        });
    }
    Ok(ledger)
}
