use std::collections::BTreeMap;
use std::path::Path;

use crate::manifest::ApiPermission;

const DEFAULT_MAP: &str = include_str!("../../data/api_permission_map.v1.json");

/// Maps API namespace paths (`chrome.cookies`) to the permission they require.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiPermissionMap {
    entries: BTreeMap<String, ApiPermission>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MapError {
    #[error("permission map is not a JSON object of strings: {0}")]
    NotJson(String),
    #[error("permission map key {0:?} is not a dotted identifier path")]
    BadKey(String),
    #[error("permission map key {0:?} is a prefix of {1:?}")]
    PrefixConflict(String, String),
    #[error("cannot read permission map: {0}")]
    Io(String),
}

impl MapError {
    pub fn code(&self) -> &'static str {
        match self {
            MapError::NotJson(_) => "NotJson",
            MapError::BadKey(_) => "BadKey",
            MapError::PrefixConflict(..) => "PrefixConflict",
            MapError::Io(_) => "Io",
        }
    }
}

fn valid_key(key: &str) -> bool {
    !key.is_empty()
        && key.split('.').all(|seg| {
            !seg.is_empty()
                && !seg.starts_with(|c: char| c.is_ascii_digit())
                && seg.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '$')
        })
}

fn is_segment_prefix(short: &str, long: &str) -> bool {
    long.len() > short.len() && long.starts_with(short) && long.as_bytes()[short.len()] == b'.'
}

impl ApiPermissionMap {
    pub fn new<I, K, V>(entries: I) -> Result<Self, MapError>
    where
        I: IntoIterator<Item = (K, V)>,
        K: Into<String>,
        V: Into<String>,
    {
        let entries: BTreeMap<String, ApiPermission> = entries
            .into_iter()
            .map(|(k, v)| (k.into(), ApiPermission::new(v)))
            .collect();
        if let Some(bad) = entries.keys().find(|k| !valid_key(k)) {
            return Err(MapError::BadKey(bad.clone()));
        }
        // in sorted order a segment prefix sorts immediately before some key
        // that extends it, but not necessarily adjacent, so check all pairs
        for a in entries.keys() {
            if let Some(b) = entries.keys().find(|b| is_segment_prefix(a, b)) {
                return Err(MapError::PrefixConflict(a.clone(), b.clone()));
            }
        }
        Ok(Self { entries })
    }

    pub fn from_json(text: &str) -> Result<Self, MapError> {
        let raw: BTreeMap<String, String> =
            serde_json::from_str(text).map_err(|e| MapError::NotJson(e.to_string()))?;
        Self::new(raw)
    }

    pub fn load(path: &Path) -> Result<Self, MapError> {
        let text = std::fs::read_to_string(path).map_err(|e| MapError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn entries(&self) -> &BTreeMap<String, ApiPermission> {
        &self.entries
    }

    /// Longest key that is a segment-wise prefix of `segments`.
    pub fn lookup(&self, segments: &[&str]) -> Option<(String, &ApiPermission)> {
        (1..=segments.len()).rev().find_map(|n| {
            let key = segments[..n].join(".");
            self.entries.get(&key).map(|p| (key, p))
        })
    }
}

impl Default for ApiPermissionMap {
    fn default() -> Self {
        Self::from_json(DEFAULT_MAP).expect("bundled permission map is valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_map_loads() {
        let m = ApiPermissionMap::default();
        assert_eq!(m.entries()["chrome.cookies"].name(), "cookies");
        assert_eq!(m.entries()["webkitNotifications"].name(), "notifications");
    }

    #[test]
    fn prefix_conflict_rejected() {
        let err = ApiPermissionMap::new([("chrome.tabs", "tabs"), ("chrome.tabs.query", "x")]).unwrap_err();
        assert!(matches!(err, MapError::PrefixConflict(..)));
        // string prefix that is not a segment prefix is fine
        assert!(ApiPermissionMap::new([("chrome.tts", "tts"), ("chrome.ttsEngine", "ttsEngine")]).is_ok());
    }

    #[test]
    fn bad_keys() {
        assert!(matches!(ApiPermissionMap::new([("chrome..x", "x")]), Err(MapError::BadKey(_))));
        assert!(matches!(ApiPermissionMap::from_json("[1]"), Err(MapError::NotJson(_))));
    }

    #[test]
    fn lookup_longest() {
        let m = ApiPermissionMap::default();
        let (key, p) = m.lookup(&["chrome", "cookies", "getAll"]).unwrap();
        assert_eq!((key.as_str(), p.name()), ("chrome.cookies", "cookies"));
        assert!(m.lookup(&["chrome", "runtime"]).is_none());
    }
}
