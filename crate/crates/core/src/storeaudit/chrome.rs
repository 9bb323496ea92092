use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use super::{AuditError, AuditFinding, AuditReason, StoreKind};
use crate::package::{is_valid_id, ExtensionId};

/// `location` value for store installs; anything higher is external.
pub const LOCATION_INTERNAL: i64 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChromeManifestSummary {
    pub name: String,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChromeStoreEntry {
    pub id: ExtensionId,
    pub path: String,
    pub location: i64,
    pub state: i64,
    pub from_webstore: bool,
    pub manifest: ChromeManifestSummary,
}

impl ChromeStoreEntry {
    /// The record stored under `extensions.settings.<id>`.
    pub fn settings_value(&self) -> Value {
        json!({
            "path": self.path,
            "location": self.location,
            "state": self.state,
            "from_webstore": self.from_webstore,
            "manifest": { "name": self.manifest.name, "version": self.manifest.version },
        })
    }
}

fn parse_prefs(text: &str) -> Result<Map<String, Value>, AuditError> {
    match serde_json::from_str::<Value>(text) {
        Ok(Value::Object(map)) => Ok(map),
        Ok(_) => Err(AuditError::NotJson("top level is not an object".into())),
        Err(e) => Err(AuditError::NotJson(e.to_string())),
    }
}

fn settings(root: &Map<String, Value>) -> Result<Option<&Map<String, Value>>, AuditError> {
    match root.get("extensions") {
        None => Ok(None),
        Some(Value::Object(ext)) => match ext.get("settings") {
            None => Ok(None),
            Some(Value::Object(s)) => Ok(Some(s)),
            Some(_) => Err(AuditError::SchemaMismatch("extensions.settings is not an object".into())),
        },
        Some(_) => Err(AuditError::SchemaMismatch("extensions is not an object".into())),
    }
}

fn settings_mut(root: &mut Map<String, Value>) -> Result<&mut Map<String, Value>, AuditError> {
    let ext = root.entry("extensions").or_insert_with(|| Value::Object(Map::new()));
    let Value::Object(ext) = ext else {
        return Err(AuditError::SchemaMismatch("extensions is not an object".into()));
    };
    let settings = ext.entry("settings").or_insert_with(|| Value::Object(Map::new()));
    match settings {
        Value::Object(s) => Ok(s),
        _ => Err(AuditError::SchemaMismatch("extensions.settings is not an object".into())),
    }
}

/// Adds `e` under `extensions.settings.<id>`. Re-injecting an identical entry
/// returns the input unchanged.
pub fn inject_chrome_entry(prefs_text: &str, e: &ChromeStoreEntry) -> Result<String, AuditError> {
    let mut root = parse_prefs(prefs_text)?;
    let value = e.settings_value();
    let settings = settings_mut(&mut root)?;
    match settings.get(e.id.as_str()) {
        Some(existing) if *existing == value => return Ok(prefs_text.to_owned()),
        Some(_) => return Err(AuditError::DuplicateEntry(e.id.to_string())),
        None => {}
    }
    settings.insert(e.id.to_string(), value);
    Ok(Value::Object(root).to_string())
}

/// Removes the entry for `id`, dropping `settings`/`extensions` if they end up
/// empty. Missing ids are not an error.
pub fn remove_chrome_entry(prefs_text: &str, id: &str) -> Result<String, AuditError> {
    let mut root = parse_prefs(prefs_text)?;
    if settings(&root)?.is_none_or(|s| !s.contains_key(id)) {
        return Ok(prefs_text.to_owned());
    }
    let settings = settings_mut(&mut root)?;
    settings.shift_remove(id);
    let settings_empty = settings.is_empty();
    if settings_empty {
        if let Some(Value::Object(ext)) = root.get_mut("extensions") {
            ext.shift_remove("settings");
            if ext.is_empty() {
                root.shift_remove("extensions");
            }
        }
    }
    Ok(Value::Object(root).to_string())
}

fn sort_keys(v: &Value) -> Value {
    match v {
        Value::Object(m) => {
            let mut keys: Vec<&String> = m.keys().collect();
            keys.sort();
            Value::Object(keys.into_iter().map(|k| (k.clone(), sort_keys(&m[k]))).collect())
        }
        Value::Array(a) => Value::Array(a.iter().map(sort_keys).collect()),
        other => other.clone(),
    }
}

/// Compact, key-sorted form with empty `extensions.settings` and
/// `extensions` objects pruned. Used to compare documents.
pub fn canonicalize_prefs(prefs_text: &str) -> Result<String, AuditError> {
    let mut root = parse_prefs(prefs_text)?;
    if let Some(Value::Object(ext)) = root.get_mut("extensions") {
        if ext.get("settings").is_some_and(|s| s.as_object().is_some_and(Map::is_empty)) {
            ext.shift_remove("settings");
        }
        if ext.is_empty() {
            root.shift_remove("extensions");
        }
    }
    Ok(sort_keys(&Value::Object(root)).to_string())
}

pub fn chrome_ids(prefs_text: &str) -> Result<BTreeSet<String>, AuditError> {
    let root = parse_prefs(prefs_text)?;
    Ok(settings(&root)?.map(|s| s.keys().cloned().collect()).unwrap_or_default())
}

/// Flags entries outside `baseline`, entries with external `location`, and
/// entries not marked `from_webstore`. Sorted by id, then reason.
pub fn audit_chrome_prefs(
    prefs_text: &str,
    baseline: Option<&BTreeSet<String>>,
) -> Result<Vec<AuditFinding>, AuditError> {
    let root = parse_prefs(prefs_text)?;
    let mut findings = Vec::new();
    let Some(settings) = settings(&root)? else {
        return Ok(findings);
    };
    for (id, entry) in settings {
        let mut flag = |reason, details: String| {
            findings.push(AuditFinding { entry_id: id.clone(), store: StoreKind::Chrome, reason, details });
        };
        if let Some(baseline) = baseline {
            if !baseline.contains(id) {
                flag(AuditReason::NotInBaseline, format!("id {id} not among {} baseline ids", baseline.len()));
            }
        }
        if !is_valid_id(id) {
            flag(AuditReason::InconsistentState, format!("id {id:?} is not 32 characters in a-p"));
        }
        let Value::Object(fields) = entry else {
            flag(AuditReason::InconsistentState, format!("settings entry is {entry}, not an object"));
            continue;
        };
        match fields.get("location").and_then(Value::as_i64) {
            Some(loc) if loc > LOCATION_INTERNAL => {
                flag(AuditReason::SideloadLocation, format!("location={loc}"));
            }
            Some(_) => {}
            None => flag(
                AuditReason::InconsistentState,
                format!("location={}", fields.get("location").unwrap_or(&Value::Null)),
            ),
        }
        match fields.get("from_webstore") {
            Some(Value::Bool(true)) => {}
            Some(other) => flag(AuditReason::WebstoreFlagFalse, format!("from_webstore={other}")),
            None => flag(AuditReason::WebstoreFlagFalse, "from_webstore=absent".into()),
        }
        if let Some(state) = fields.get("state") {
            if !matches!(state.as_i64(), Some(0 | 1)) {
                flag(AuditReason::InconsistentState, format!("state={state}"));
            }
        }
    }
    findings.sort();
    Ok(findings)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::package::derive_extension_id;

    fn entry(seed: &[u8], location: i64, from_webstore: bool) -> ChromeStoreEntry {
        ChromeStoreEntry {
            id: derive_extension_id(seed).unwrap(),
            path: "1.0_0".into(),
            location,
            state: 1,
            from_webstore,
            manifest: ChromeManifestSummary { name: "X".into(), version: "1.0".into() },
        }
    }

    #[test]
    fn inject_into_empty() {
        let e = entry(b"a", 1, true);
        let out = inject_chrome_entry("{}", &e).unwrap();
        assert_eq!(chrome_ids(&out).unwrap(), BTreeSet::from([e.id.to_string()]));
    }

    #[test]
    fn idempotent_and_duplicate() {
        let e = entry(b"a", 1, true);
        let once = inject_chrome_entry("{}", &e).unwrap();
        assert_eq!(inject_chrome_entry(&once, &e).unwrap(), once);
        let mut moved = e.clone();
        moved.path = "elsewhere".into();
        assert!(matches!(inject_chrome_entry(&once, &moved), Err(AuditError::DuplicateEntry(_))));
    }

    #[test]
    fn unrelated_content_preserved() {
        let prefs = r#"{"browser":{"window":1},"extensions":{"ui":{"x":true},"settings":{}},"zeta":[1,2]}"#;
        let e = entry(b"a", 1, true);
        let out = inject_chrome_entry(prefs, &e).unwrap();
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["browser"]["window"], 1);
        assert_eq!(v["extensions"]["ui"]["x"], true);
        let keys: Vec<_> = v.as_object().unwrap().keys().collect();
        assert_eq!(keys, vec!["browser", "extensions", "zeta"]);
    }

    #[test]
    fn not_json() {
        assert!(matches!(inject_chrome_entry("nope", &entry(b"a", 1, true)), Err(AuditError::NotJson(_))));
        assert!(matches!(audit_chrome_prefs("[]", None), Err(AuditError::NotJson(_))));
    }

    #[test]
    fn inject_then_audit() {
        let clean = inject_chrome_entry("{}", &entry(b"base", 1, true)).unwrap();
        let baseline = chrome_ids(&clean).unwrap();
        assert_eq!(audit_chrome_prefs(&clean, Some(&baseline)).unwrap(), vec![]);
        let e = entry(b"evil", 1, true);
        let dirty = inject_chrome_entry(&clean, &e).unwrap();
        let f = audit_chrome_prefs(&dirty, Some(&baseline)).unwrap();
        assert_eq!(f.len(), 1);
        assert_eq!((f[0].entry_id.as_str(), f[0].reason), (e.id.as_str(), AuditReason::NotInBaseline));
    }

    #[test]
    fn sideload_in_baseline() {
        let prefs = inject_chrome_entry("{}", &entry(b"s", 2, true)).unwrap();
        let baseline = chrome_ids(&prefs).unwrap();
        let f = audit_chrome_prefs(&prefs, Some(&baseline)).unwrap();
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].reason, AuditReason::SideloadLocation);
        assert!(f[0].details.contains("location=2"));
    }

    #[test]
    fn webstore_flag() {
        let prefs = inject_chrome_entry("{}", &entry(b"w", 1, false)).unwrap();
        let f = audit_chrome_prefs(&prefs, None).unwrap();
        assert_eq!(f[0].reason, AuditReason::WebstoreFlagFalse);
    }

    #[test]
    fn remove_restores_original() {
        for original in ["{}", r#"{"a":1,"extensions":{"settings":{}}}"#, r#"{"extensions":{"alerts":{}}}"#] {
            let e = entry(b"tmp", 1, true);
            let injected = inject_chrome_entry(original, &e).unwrap();
            let restored = remove_chrome_entry(&injected, e.id.as_str()).unwrap();
            assert_eq!(canonicalize_prefs(&restored).unwrap(), canonicalize_prefs(original).unwrap());
        }
    }
}
