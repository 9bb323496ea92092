use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering as AtomicOrdering};
use std::sync::{Arc, Mutex, RwLock};

use crate::package::is_valid_id;
use crate::report::{serialize_report, ExtensionReport};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StoreError {
    #[error("report has no {0}")]
    MissingId(&'static str),
    #[error("no report for {0}")]
    NotFound(String),
    #[error("storage failure: {0}")]
    StorageFailure(String),
}

impl StoreError {
    pub fn code(&self) -> &'static str {
        match self {
            StoreError::MissingId(_) => "MissingId",
            StoreError::NotFound(_) => "NotFound",
            StoreError::StorageFailure(_) => "StorageFailure",
        }
    }
}

fn storage(context: impl std::fmt::Display, e: impl std::fmt::Display) -> StoreError {
    StoreError::StorageFailure(format!("{context}: {e}"))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VersionQuery {
    Latest,
    Exact(String),
}

/// Where a simulated crash interrupts `put_report`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaultPoint {
    /// Half the document reaches the temp file, then the write fails.
    PartialWrite,
    /// The temp file is complete but the rename never happens.
    BeforeRename,
}

/// Dot-separated segments; numeric segments compare numerically, missing
/// segments count as `0`, anything else compares as text. Versions that tie
/// under those rules fall back to plain string order so the result is total.
pub fn compare_versions(a: &str, b: &str) -> Ordering {
    let sa: Vec<&str> = a.split('.').collect();
    let sb: Vec<&str> = b.split('.').collect();
    for i in 0..sa.len().max(sb.len()) {
        let x = sa.get(i).copied().unwrap_or("0");
        let y = sb.get(i).copied().unwrap_or("0");
        let ord = match (numeric(x), numeric(y)) {
            (Some(x), Some(y)) => x.len().cmp(&y.len()).then_with(|| x.cmp(y)),
            _ => x.cmp(y),
        };
        if ord != Ordering::Equal {
            return ord;
        }
    }
    a.cmp(b)
}

/// Digits with leading zeros stripped, so length then text orders numerically.
fn numeric(seg: &str) -> Option<&str> {
    if seg.is_empty() || !seg.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let trimmed = seg.trim_start_matches('0');
    Some(if trimmed.is_empty() { "0" } else { trimmed })
}

fn version_file_name(version: &str) -> String {
    let plain = !version.is_empty()
        && !version.starts_with(['.', '_'])
        && version.bytes().all(|b| b.is_ascii_alphanumeric() || matches!(b, b'.' | b'-' | b'_'));
    if plain {
        format!("{version}.json")
    } else {
        let hex: String = version.bytes().map(|b| format!("{b:02x}")).collect();
        format!("_{hex}.json")
    }
}

fn version_from_file_name(name: &str) -> Option<String> {
    let stem = name.strip_suffix(".json")?;
    if stem.starts_with('.') || stem.is_empty() {
        return None;
    }
    let Some(hex) = stem.strip_prefix('_') else {
        return Some(stem.to_owned());
    };
    if hex.len() % 2 != 0 {
        return None;
    }
    let bytes = (0..hex.len())
        .step_by(2)
        .map(|i| u8::from_str_radix(&hex[i..i + 2], 16).ok())
        .collect::<Option<Vec<u8>>>()?;
    String::from_utf8(bytes).ok()
}

#[derive(Debug, Default)]
struct Index {
    versions: BTreeMap<String, BTreeSet<String>>,
    latest: BTreeMap<String, String>,
}

impl Index {
    fn insert(&mut self, id: &str, version: &str) {
        self.versions.entry(id.to_owned()).or_default().insert(version.to_owned());
        let newer = self
            .latest
            .get(id)
            .is_none_or(|cur| compare_versions(version, cur) == Ordering::Greater);
        if newer {
            self.latest.insert(id.to_owned(), version.to_owned());
        }
    }
}

/// Directory of canonical report documents, `<root>/<id>/<version>.json`,
/// with an in-memory index rebuilt from the directory on open.
#[derive(Debug)]
pub struct ReportStore {
    root: PathBuf,
    index: RwLock<Index>,
    writers: Mutex<HashMap<String, Arc<Mutex<()>>>>,
    fault: Mutex<Option<FaultPoint>>,
    temp_counter: AtomicU64,
}

impl ReportStore {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(|e| storage(root.display(), e))?;
        let store = Self {
            root,
            index: RwLock::new(Index::default()),
            writers: Mutex::new(HashMap::new()),
            fault: Mutex::new(None),
            temp_counter: AtomicU64::new(0),
        };
        store.rebuild_index()?;
        Ok(store)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Rescans the directory. Leftover temp files and foreign names are ignored.
    pub fn rebuild_index(&self) -> Result<(), StoreError> {
        let mut index = Index::default();
        let dirs = fs::read_dir(&self.root).map_err(|e| storage(self.root.display(), e))?;
        for dir in dirs {
            let dir = dir.map_err(|e| storage(self.root.display(), e))?;
            let id = dir.file_name().to_string_lossy().into_owned();
            if !is_valid_id(&id) || !dir.path().is_dir() {
                continue;
            }
            let files = fs::read_dir(dir.path()).map_err(|e| storage(dir.path().display(), e))?;
            for file in files {
                let file = file.map_err(|e| storage(dir.path().display(), e))?;
                if let Some(version) = version_from_file_name(&file.file_name().to_string_lossy()) {
                    index.insert(&id, &version);
                }
            }
        }
        *self.index.write().unwrap() = index;
        Ok(())
    }

    /// Arms a one-shot simulated crash for the next write.
    pub fn inject_fault(&self, point: Option<FaultPoint>) {
        *self.fault.lock().unwrap() = point;
    }

    fn doc_path(&self, id: &str, version: &str) -> PathBuf {
        self.root.join(id).join(version_file_name(version))
    }

    fn writer_lock(&self, id: &str) -> Arc<Mutex<()>> {
        self.writers.lock().unwrap().entry(id.to_owned()).or_default().clone()
    }

    /// Writes the canonical document via temp file and rename. Re-putting an
    /// identical document leaves the store untouched.
    pub fn put_report(&self, r: &ExtensionReport) -> Result<(), StoreError> {
        let id = r.extension_id.as_ref().ok_or(StoreError::MissingId("extension_id"))?;
        if r.version.is_empty() {
            return Err(StoreError::MissingId("version"));
        }
        let (id, version) = (id.as_str(), r.version.as_str());
        let doc = serialize_report(r);
        let lock = self.writer_lock(id);
        let _guard = lock.lock().unwrap();

        let dir = self.root.join(id);
        let target = self.doc_path(id, version);
        if fs::read(&target).is_ok_and(|existing| existing == doc.as_bytes()) {
            self.index.write().unwrap().insert(id, version);
            return Ok(());
        }
        fs::create_dir_all(&dir).map_err(|e| storage(dir.display(), e))?;
        let n = self.temp_counter.fetch_add(1, AtomicOrdering::Relaxed);
        let temp = dir.join(format!(".put-{}-{n}.tmp", std::process::id()));
        let fault = self.fault.lock().unwrap().take();
        let result = write_temp(&temp, doc.as_bytes(), fault).and_then(|()| {
            if fault == Some(FaultPoint::BeforeRename) {
                return Err(storage(temp.display(), "simulated crash before rename"));
            }
            fs::rename(&temp, &target).map_err(|e| storage(target.display(), e))
        });
        if let Err(e) = result {
            // A real crash would leave the temp file behind; only clean up
            // for genuine errors.
            if fault.is_none() {
                let _ = fs::remove_file(&temp);
            }
            return Err(e);
        }
        self.index.write().unwrap().insert(id, version);
        Ok(())
    }

    /// The stored canonical document, byte for byte.
    pub fn get_document(&self, id: &str, query: &VersionQuery) -> Result<String, StoreError> {
        let version = match query {
            VersionQuery::Latest => self.index.read().unwrap().latest.get(id).cloned(),
            VersionQuery::Exact(v) => {
                let index = self.index.read().unwrap();
                index.versions.get(id).filter(|vs| vs.contains(v)).map(|_| v.clone())
            }
        };
        let not_found = || {
            StoreError::NotFound(match query {
                VersionQuery::Latest => id.to_owned(),
                VersionQuery::Exact(v) => format!("{id} version {v}"),
            })
        };
        let version = version.ok_or_else(not_found)?;
        let path = self.doc_path(id, &version);
        fs::read_to_string(&path).map_err(|e| storage(path.display(), e))
    }

    pub fn get_report(&self, id: &str, query: &VersionQuery) -> Result<ExtensionReport, StoreError> {
        let doc = self.get_document(id, query)?;
        serde_json::from_str(&doc).map_err(|e| storage(format!("stored report for {id}"), e))
    }

    /// Known versions for `id`, oldest first.
    pub fn versions(&self, id: &str) -> Vec<String> {
        let index = self.index.read().unwrap();
        let mut versions: Vec<String> = index.versions.get(id).into_iter().flatten().cloned().collect();
        versions.sort_by(|a, b| compare_versions(a, b));
        versions
    }

    pub fn ids(&self) -> Vec<String> {
        self.index.read().unwrap().latest.keys().cloned().collect()
    }

    /// Latest report of every stored extension, in id order.
    pub fn latest_reports(&self) -> Result<Vec<ExtensionReport>, StoreError> {
        self.ids().iter().map(|id| self.get_report(id, &VersionQuery::Latest)).collect()
    }
}

fn write_temp(temp: &Path, doc: &[u8], fault: Option<FaultPoint>) -> Result<(), StoreError> {
    let mut file = fs::File::create(temp).map_err(|e| storage(temp.display(), e))?;
    if fault == Some(FaultPoint::PartialWrite) {
        let _ = file.write_all(&doc[..doc.len() / 2]);
        return Err(storage(temp.display(), "simulated crash during write"));
    }
    file.write_all(doc).map_err(|e| storage(temp.display(), e))?;
    file.sync_all().map_err(|e| storage(temp.display(), e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::tests::sample;

    fn with_version(v: &str) -> ExtensionReport {
        let mut r = sample();
        r.version = v.into();
        r
    }

    #[test]
    fn version_order() {
        let cases = [
            ("1.0", "1.2", Ordering::Less),
            ("1.10", "1.9", Ordering::Greater),
            ("2", "1.99.99", Ordering::Greater),
            ("1.0.1", "1.0", Ordering::Greater),
            ("1.0a", "1.0b", Ordering::Less),
            ("010", "9", Ordering::Greater),
        ];
        for (a, b, want) in cases {
            assert_eq!(compare_versions(a, b), want, "{a} vs {b}");
        }
        assert_ne!(compare_versions("1.0", "1"), Ordering::Equal);
    }

    #[test]
    fn file_names_round_trip() {
        for v in ["1.0", "1.0-beta_2", "../../etc", "_x", ".hidden", "weird/ver sion", "ü"] {
            let name = version_file_name(v);
            assert!(!name.contains('/') && !name.starts_with('.'));
            assert_eq!(version_from_file_name(&name).as_deref(), Some(v));
        }
    }

    #[test]
    fn put_get_latest() {
        let dir = tempfile::tempdir().unwrap();
        let store = ReportStore::open(dir.path()).unwrap();
        let (a, b) = (with_version("1.0"), with_version("1.2"));
        let id = a.extension_id.clone().unwrap();
        store.put_report(&a).unwrap();
        store.put_report(&b).unwrap();
        assert_eq!(store.get_report(id.as_str(), &VersionQuery::Latest).unwrap(), b);
        assert_eq!(store.get_report(id.as_str(), &VersionQuery::Exact("1.0".into())).unwrap(), a);
        assert_eq!(store.versions(id.as_str()), vec!["1.0", "1.2"]);
        assert!(matches!(
            store.get_report("aaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaa", &VersionQuery::Latest),
            Err(StoreError::NotFound(_))
        ));

        let reopened = ReportStore::open(dir.path()).unwrap();
        assert_eq!(reopened.get_report(id.as_str(), &VersionQuery::Latest).unwrap(), b);
    }

    #[test]
    fn missing_id() {
        let dir = tempfile::tempdir().unwrap();
        let store = ReportStore::open(dir.path()).unwrap();
        let mut r = sample();
        r.extension_id = None;
        assert_eq!(store.put_report(&r), Err(StoreError::MissingId("extension_id")));
    }

    #[test]
    fn faults_never_expose_partial_documents() {
        for point in [FaultPoint::PartialWrite, FaultPoint::BeforeRename] {
            let dir = tempfile::tempdir().unwrap();
            let store = ReportStore::open(dir.path()).unwrap();
            let old = with_version("1.0");
            let id = old.extension_id.clone().unwrap();
            store.put_report(&old).unwrap();
            let mut new = with_version("1.0");
            new.name = "changed".into();
            store.inject_fault(Some(point));
            assert!(matches!(store.put_report(&new), Err(StoreError::StorageFailure(_))));
            assert_eq!(store.get_report(id.as_str(), &VersionQuery::Latest).unwrap(), old);
            let reopened = ReportStore::open(dir.path()).unwrap();
            assert_eq!(reopened.versions(id.as_str()), vec!["1.0"]);
            assert_eq!(reopened.get_report(id.as_str(), &VersionQuery::Latest).unwrap(), old);
        }
    }
}
