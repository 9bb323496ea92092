//! `manifest.json` model: declared permissions, privileged pages and scripts,
//! content scripts, and CSP classification.

mod pattern;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

pub use self::pattern::{
    glob_match, match_url, parse_match_pattern, HostPattern, MatchPattern, PatternError, Scheme, ALL_URLS,
};

/// Default policy applied to manifest version 2 extensions that declare none.
pub const DEFAULT_V2_CSP: &str = "script-src 'self'; object-src 'self'";

/// API permission names recognized without the `unknown` flag.
pub const KNOWN_API_PERMISSIONS: &[&str] = &[
    "activeTab",
    "alarms",
    "background",
    "bookmarks",
    "browsingData",
    "clipboardRead",
    "clipboardWrite",
    "contentSettings",
    "contextMenus",
    "cookies",
    "debugger",
    "declarativeContent",
    "declarativeNetRequest",
    "desktopCapture",
    "downloads",
    "experimental",
    "fileBrowserHandler",
    "fontSettings",
    "geolocation",
    "history",
    "identity",
    "idle",
    "management",
    "nativeMessaging",
    "notifications",
    "pageCapture",
    "privacy",
    "proxy",
    "scripting",
    "sessions",
    "storage",
    "system.cpu",
    "system.memory",
    "system.storage",
    "tabCapture",
    "tabs",
    "topSites",
    "tts",
    "ttsEngine",
    "unlimitedStorage",
    "webNavigation",
    "webRequest",
    "webRequestBlocking",
];

const KNOWN_TOP_LEVEL_KEYS: &[&str] = &[
    "app",
    "author",
    "background",
    "background_page",
    "browser_action",
    "chrome_url_overrides",
    "commands",
    "content_scripts",
    "content_security_policy",
    "default_locale",
    "description",
    "devtools_page",
    "homepage_url",
    "icons",
    "incognito",
    "key",
    "manifest_version",
    "minimum_chrome_version",
    "name",
    "offline_enabled",
    "omnibox",
    "optional_permissions",
    "options_page",
    "options_ui",
    "page_action",
    "permissions",
    "plugins",
    "short_name",
    "update_url",
    "version",
    "web_accessible_resources",
];

/// A declared API permission. Names are kept verbatim.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ApiPermission(String);

impl ApiPermission {
    pub fn new(name: impl Into<String>) -> Self {
        Self(name.into())
    }

    pub fn name(&self) -> &str {
        &self.0
    }

    pub fn is_known(&self) -> bool {
        KNOWN_API_PERMISSIONS.contains(&self.0.as_str())
    }
}

impl fmt::Display for ApiPermission {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ApiPermission {
    fn from(s: &str) -> Self {
        Self::new(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContentScript {
    pub js: Vec<String>,
    pub matches: Vec<MatchPattern>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WebAccessible {
    #[default]
    None,
    Paths(Vec<String>),
}

/// Classification of one `permissions` entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PermissionEntry {
    Api(ApiPermission),
    Host(MatchPattern),
    /// Looked like a pattern (`://`) but failed the grammar.
    Unknown(String),
}

pub fn classify_permission(entry: &str) -> PermissionEntry {
    match parse_match_pattern(entry) {
        Ok(p) => PermissionEntry::Host(p),
        Err(PatternError::NotAPattern(_)) => PermissionEntry::Api(ApiPermission::new(entry)),
        Err(_) => PermissionEntry::Unknown(entry.to_owned()),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Manifest {
    pub name: String,
    pub version: String,
    pub manifest_version: u32,
    pub api_permissions: BTreeSet<ApiPermission>,
    pub host_patterns: BTreeSet<MatchPattern>,
    /// `permissions` entries that contain `://` but are not valid patterns.
    pub unknown_permissions: BTreeSet<String>,
    pub optional_api_permissions: BTreeSet<ApiPermission>,
    pub optional_host_patterns: BTreeSet<MatchPattern>,
    pub background_scripts: Vec<String>,
    pub background_page: Option<String>,
    pub action_popup: Option<String>,
    pub options_page: Option<String>,
    pub content_scripts: Vec<ContentScript>,
    pub csp_text: Option<String>,
    pub web_accessible: WebAccessible,
    pub unknown_keys: usize,
    /// Non-fatal oddities found while parsing.
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ManifestError {
    #[error("manifest is not valid JSON: {0}")]
    NotJson(String),
    #[error("manifest is missing required field `{0}`")]
    MissingRequiredField(&'static str),
    #[error("manifest field `{0}` has the wrong type")]
    InvalidField(&'static str),
    #[error("permissions entry #{0} is not a string")]
    PermissionEntryNotText(usize),
    #[error("unsupported manifest_version {0}")]
    UnsupportedManifestVersion(i64),
}

impl ManifestError {
    pub fn code(&self) -> &'static str {
        match self {
            ManifestError::NotJson(_) => "NotJson",
            ManifestError::MissingRequiredField(_) => "MissingRequiredField",
            ManifestError::InvalidField(_) => "InvalidField",
            ManifestError::PermissionEntryNotText(_) => "PermissionEntryNotText",
            ManifestError::UnsupportedManifestVersion(_) => "UnsupportedManifestVersion",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CspStatus {
    pub enforced: bool,
    pub effective_policy: String,
}

/// Content-Security-Policy status: enforced exactly for manifest version 2.
pub fn classify_csp(m: &Manifest) -> CspStatus {
    if m.manifest_version == 2 {
        CspStatus {
            enforced: true,
            effective_policy: m.csp_text.clone().unwrap_or_else(|| DEFAULT_V2_CSP.to_owned()),
        }
    } else {
        CspStatus { enforced: false, effective_policy: String::new() }
    }
}

fn opt_str(obj: &Map<String, Value>, key: &'static str) -> Result<Option<String>, ManifestError> {
    match obj.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(s)) => Ok(Some(s.clone())),
        Some(_) => Err(ManifestError::InvalidField(key)),
    }
}

fn str_list(value: Option<&Value>, key: &'static str) -> Result<Vec<String>, ManifestError> {
    match value {
        None | Some(Value::Null) => Ok(Vec::new()),
        Some(Value::Array(items)) => items
            .iter()
            .map(|v| v.as_str().map(str::to_owned).ok_or(ManifestError::InvalidField(key)))
            .collect(),
        Some(Value::String(s)) => Ok(vec![s.clone()]),
        Some(_) => Err(ManifestError::InvalidField(key)),
    }
}

fn parse_json_lenient(text: &str) -> Result<Value, ManifestError> {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    match serde_json::from_str(text) {
        Ok(v) => Ok(v),
        Err(first) => {
            // Chrome tolerates comments in manifest.json
            let sanitized = crate::analyzer::sanitize_source(text);
            if sanitized.comment_spans.is_empty() {
                return Err(ManifestError::NotJson(first.to_string()));
            }
            let mut bytes = text.as_bytes().to_vec();
            for span in &sanitized.comment_spans {
                for b in &mut bytes[span.clone()] {
                    if *b != b'\n' {
                        *b = b' ';
                    }
                }
            }
            let stripped = String::from_utf8_lossy(&bytes);
            serde_json::from_str(&stripped).map_err(|_| ManifestError::NotJson(first.to_string()))
        }
    }
}

type PermissionSplit = (BTreeSet<ApiPermission>, BTreeSet<MatchPattern>, BTreeSet<String>);

fn split_permissions(value: Option<&Value>, key: &'static str) -> Result<PermissionSplit, ManifestError> {
    let mut api = BTreeSet::new();
    let mut hosts = BTreeSet::new();
    let mut unknown = BTreeSet::new();
    let items = match value {
        None | Some(Value::Null) => return Ok((api, hosts, unknown)),
        Some(Value::Array(items)) => items,
        Some(_) => return Err(ManifestError::InvalidField(key)),
    };
    for (i, item) in items.iter().enumerate() {
        let Some(text) = item.as_str() else {
            return Err(ManifestError::PermissionEntryNotText(i));
        };
        match classify_permission(text) {
            PermissionEntry::Api(p) => {
                api.insert(p);
            }
            PermissionEntry::Host(p) => {
                hosts.insert(p);
            }
            PermissionEntry::Unknown(s) => {
                unknown.insert(s);
            }
        }
    }
    Ok((api, hosts, unknown))
}

/// Parses `manifest.json` text.
pub fn parse_manifest(text: &str) -> Result<Manifest, ManifestError> {
    let root = parse_json_lenient(text)?;
    let Value::Object(obj) = root else {
        return Err(ManifestError::NotJson("top level is not an object".into()));
    };

    let name = opt_str(&obj, "name")?.ok_or(ManifestError::MissingRequiredField("name"))?;
    let version = opt_str(&obj, "version")?.ok_or(ManifestError::MissingRequiredField("version"))?;
    let manifest_version = match obj.get("manifest_version") {
        None | Some(Value::Null) => 1,
        Some(v) => match v.as_i64() {
            Some(n @ (1 | 2)) => n as u32,
            Some(n) => return Err(ManifestError::UnsupportedManifestVersion(n)),
            None => return Err(ManifestError::InvalidField("manifest_version")),
        },
    };

    let mut m = Manifest { name, version, manifest_version, ..Default::default() };

    let (api, hosts, unknown) = split_permissions(obj.get("permissions"), "permissions")?;
    m.api_permissions = api;
    m.host_patterns = hosts;
    m.unknown_permissions = unknown;
    for u in &m.unknown_permissions {
        m.warnings.push(format!("unrecognized permission entry {u:?}"));
    }
    let (api, hosts, unknown) = split_permissions(obj.get("optional_permissions"), "optional_permissions")?;
    m.optional_api_permissions = api;
    m.optional_host_patterns = hosts;
    for u in unknown {
        m.warnings.push(format!("unrecognized optional permission entry {u:?}"));
    }

    match obj.get("background") {
        None | Some(Value::Null) => {}
        Some(Value::Object(bg)) => {
            m.background_scripts = str_list(bg.get("scripts"), "background.scripts")?;
            m.background_page = opt_str(bg, "page")?;
        }
        Some(_) => return Err(ManifestError::InvalidField("background")),
    }
    if m.background_page.is_none() {
        m.background_page = opt_str(&obj, "background_page")?;
    }

    for action in ["browser_action", "page_action"] {
        if m.action_popup.is_some() {
            break;
        }
        if let Some(Value::Object(a)) = obj.get(action) {
            // `popup` is the pre-v2 spelling
            m.action_popup = match a.get("default_popup").or_else(|| a.get("popup")) {
                Some(Value::String(s)) => Some(s.clone()),
                Some(Value::Object(p)) => p.get("path").and_then(Value::as_str).map(str::to_owned),
                _ => None,
            };
        }
    }

    m.options_page = opt_str(&obj, "options_page")?;
    if m.options_page.is_none() {
        if let Some(Value::Object(ui)) = obj.get("options_ui") {
            m.options_page = opt_str(ui, "page")?;
        }
    }

    match obj.get("content_scripts") {
        None | Some(Value::Null) => {}
        Some(Value::Array(items)) => {
            for item in items {
                let Value::Object(cs) = item else {
                    return Err(ManifestError::InvalidField("content_scripts"));
                };
                let js = str_list(cs.get("js"), "content_scripts.js")?;
                let mut matches = Vec::new();
                for text in str_list(cs.get("matches"), "content_scripts.matches")? {
                    match parse_match_pattern(&text) {
                        Ok(p) => matches.push(p),
                        Err(e) => m.warnings.push(format!("content script: {e}")),
                    }
                }
                m.content_scripts.push(ContentScript { js, matches });
            }
        }
        Some(_) => return Err(ManifestError::InvalidField("content_scripts")),
    }

    m.csp_text = match obj.get("content_security_policy") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => Some(s.clone()),
        Some(Value::Object(o)) => o.get("extension_pages").and_then(Value::as_str).map(str::to_owned),
        Some(_) => return Err(ManifestError::InvalidField("content_security_policy")),
    };

    m.web_accessible = match obj.get("web_accessible_resources") {
        None | Some(Value::Null) => WebAccessible::None,
        Some(Value::Array(items)) => WebAccessible::Paths(
            items
                .iter()
                .filter_map(|v| v.as_str().map(str::to_owned))
                .collect(),
        ),
        Some(_) => return Err(ManifestError::InvalidField("web_accessible_resources")),
    };

    m.unknown_keys = obj
        .keys()
        .filter(|k| !KNOWN_TOP_LEVEL_KEYS.contains(&k.as_str()))
        .count();
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn api(names: &[&str]) -> BTreeSet<ApiPermission> {
        names.iter().map(|n| ApiPermission::from(*n)).collect()
    }

    #[test]
    fn minimal_v2() {
        let m = parse_manifest(r#"{"manifest_version":2,"name":"x","version":"1.0"}"#).unwrap();
        assert_eq!(m.manifest_version, 2);
        assert!(m.api_permissions.is_empty() && m.host_patterns.is_empty());
        let csp = classify_csp(&m);
        assert!(csp.enforced);
        assert_eq!(csp.effective_policy, DEFAULT_V2_CSP);
    }

    #[test]
    fn permissions_partition() {
        let m = parse_manifest(r#"{"name":"x","version":"1","permissions":["tabs","http://*/*","notifications"]}"#)
            .unwrap();
        assert_eq!(m.manifest_version, 1);
        assert_eq!(m.api_permissions, api(&["tabs", "notifications"]));
        assert_eq!(
            m.host_patterns.iter().map(ToString::to_string).collect::<Vec<_>>(),
            vec!["http://*/*"]
        );
        assert!(!classify_csp(&m).enforced);
        assert_eq!(classify_csp(&m).effective_policy, "");
    }

    #[test]
    fn missing_fields() {
        assert_eq!(parse_manifest(r#"{"name":"x"}"#), Err(ManifestError::MissingRequiredField("version")));
        assert_eq!(parse_manifest(r#"{"version":"1"}"#), Err(ManifestError::MissingRequiredField("name")));
        assert!(matches!(parse_manifest("{nope"), Err(ManifestError::NotJson(_))));
        assert!(matches!(parse_manifest("[]"), Err(ManifestError::NotJson(_))));
    }

    #[test]
    fn non_text_permission() {
        assert_eq!(
            parse_manifest(r#"{"name":"x","version":"1","permissions":["tabs",{"fileSystem":["write"]}]}"#),
            Err(ManifestError::PermissionEntryNotText(1))
        );
    }

    #[test]
    fn explicit_csp_passthrough() {
        let m = parse_manifest(
            r#"{"name":"x","version":"1","manifest_version":2,"content_security_policy":"script-src 'self'"}"#,
        )
        .unwrap();
        assert_eq!(classify_csp(&m).effective_policy, "script-src 'self'");
    }

    #[test]
    fn unknown_tokens_and_bad_patterns() {
        let m = parse_manifest(
            r#"{"name":"x","version":"1","permissions":["fancyNewApi","http://bad*host/","<all_urls>"],"whatever":1}"#,
        )
        .unwrap();
        assert_eq!(m.api_permissions, api(&["fancyNewApi"]));
        assert!(!ApiPermission::from("fancyNewApi").is_known());
        assert!(m.unknown_permissions.contains("http://bad*host/"));
        assert!(m.host_patterns.contains(&MatchPattern::AllUrls));
        assert_eq!(m.unknown_keys, 1);
    }

    #[test]
    fn scripts_and_pages() {
        let m = parse_manifest(
            r#"{
              "name": "x", "version": "1", "manifest_version": 2,
              // comments are tolerated
              "background": {"scripts": ["a.js", "b.js"]},
              "browser_action": {"default_popup": "popup.html"},
              "options_ui": {"page": "opts.html"},
              "optional_permissions": ["cookies"],
              "content_scripts": [{"matches": ["*://*/*"], "js": ["c.js"]}],
              "web_accessible_resources": ["img/x.png"]
            }"#,
        )
        .unwrap();
        assert_eq!(m.background_scripts, vec!["a.js", "b.js"]);
        assert_eq!(m.action_popup.as_deref(), Some("popup.html"));
        assert_eq!(m.options_page.as_deref(), Some("opts.html"));
        assert_eq!(m.optional_api_permissions, api(&["cookies"]));
        assert!(m.api_permissions.is_empty());
        assert_eq!(m.content_scripts[0].js, vec!["c.js"]);
        assert_eq!(m.web_accessible, WebAccessible::Paths(vec!["img/x.png".into()]));
    }

    #[test]
    fn v1_background_page() {
        let m = parse_manifest(r#"{"name":"x","version":"1","background_page":"bg.html"}"#).unwrap();
        assert_eq!(m.background_page.as_deref(), Some("bg.html"));
    }

    #[test]
    fn bad_manifest_version() {
        assert_eq!(
            parse_manifest(r#"{"name":"x","version":"1","manifest_version":3}"#),
            Err(ManifestError::UnsupportedManifestVersion(3))
        );
    }

    #[test]
    fn bom_is_stripped() {
        assert!(parse_manifest("\u{feff}{\"name\":\"x\",\"version\":\"1\"}").is_ok());
    }
}
