//! Extension containers: CRX2, CRX3, ZIP and unpacked directories, all read
//! into one normalized in-memory file map.

mod crx;
mod id;
mod zip;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use base64::Engine;
use serde::{Deserialize, Serialize};

pub use self::crx::{detect_container, parse_crx_header, CrxHeader, CRX_MAGIC, ZIP_MAGIC};
pub use self::id::{derive_extension_id, is_valid_id, ExtensionId, InvalidId, ID_LEN};
pub use self::zip::{read_archive, ZipEntry};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PackageError {
    #[error("unknown container format")]
    UnknownContainer,
    #[error("CRX header is truncated")]
    TruncatedHeader,
    #[error("unsupported CRX version {0}")]
    BadVersion(u32),
    #[error("public key is empty")]
    EmptyKey,
    #[error("malformed zip: {0}")]
    MalformedZip(String),
    #[error("package has no manifest.json at its root")]
    MissingManifest,
    #[error("i/o error: {0}")]
    Io(String),
}

impl PackageError {
    /// Stable short name used in statistics and error documents.
    pub fn code(&self) -> &'static str {
        match self {
            PackageError::UnknownContainer => "UnknownContainer",
            PackageError::TruncatedHeader => "TruncatedHeader",
            PackageError::BadVersion(_) => "BadVersion",
            PackageError::EmptyKey => "EmptyKey",
            PackageError::MalformedZip(_) => "MalformedZip",
            PackageError::MissingManifest => "MissingManifest",
            PackageError::Io(_) => "Io",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ContainerKind {
    Crx2,
    Crx3,
    Zip,
    Directory,
}

/// An opened extension. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtensionPackage {
    id: Option<ExtensionId>,
    files: BTreeMap<String, Vec<u8>>,
    kind: ContainerKind,
    warnings: Vec<String>,
}

impl ExtensionPackage {
    pub fn id(&self) -> Option<&ExtensionId> {
        self.id.as_ref()
    }

    pub fn kind(&self) -> ContainerKind {
        self.kind
    }

    pub fn files(&self) -> &BTreeMap<String, Vec<u8>> {
        &self.files
    }

    pub fn file(&self, path: &str) -> Option<&[u8]> {
        self.files.get(path).map(Vec::as_slice)
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn manifest_bytes(&self) -> &[u8] {
        // presence is checked at construction
        self.files.get(MANIFEST_FILE).map(Vec::as_slice).unwrap_or_default()
    }

    /// Builds a package from an already-extracted file map.
    pub fn from_files<I, P>(kind: ContainerKind, files: I) -> Result<Self, PackageError>
    where
        I: IntoIterator<Item = (P, Vec<u8>)>,
        P: AsRef<str>,
    {
        let mut pkg = ExtensionPackage {
            id: None,
            files: BTreeMap::new(),
            kind,
            warnings: Vec::new(),
        };
        for (raw, data) in files {
            let raw = raw.as_ref();
            let Some(path) = normalize_path(raw) else {
                pkg.warnings.push(format!("skipped entry with empty path: {raw:?}"));
                continue;
            };
            if path != raw {
                pkg.warnings.push(format!("normalized path {raw:?} to {path:?}"));
            }
            if pkg.files.insert(path.clone(), data).is_some() {
                pkg.warnings.push(format!("duplicate entry {path:?}: last one wins"));
            }
        }
        if !pkg.files.contains_key(MANIFEST_FILE) {
            return Err(PackageError::MissingManifest);
        }
        pkg.id = id_from_manifest_key(pkg.manifest_bytes());
        Ok(pkg)
    }

    /// Parses a packed container (CRX or ZIP) held in memory.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, PackageError> {
        match detect_container(bytes, false)? {
            kind @ (ContainerKind::Crx2 | ContainerKind::Crx3) => {
                let header = parse_crx_header(bytes)?;
                let payload = &bytes[header.zip_offset..];
                if !payload.starts_with(ZIP_MAGIC) {
                    return Err(PackageError::MalformedZip(
                        "CRX payload does not start with a zip local header".into(),
                    ));
                }
                let entries = read_archive(payload)?;
                let mut pkg = Self::from_files(kind, entries.into_iter().map(|e| (e.name, e.data)))?;
                if kind == ContainerKind::Crx2 {
                    pkg.id = Some(derive_extension_id(&header.public_key)?);
                }
                Ok(pkg)
            }
            ContainerKind::Zip => {
                let entries = read_archive(bytes)?;
                Self::from_files(ContainerKind::Zip, entries.into_iter().map(|e| (e.name, e.data)))
            }
            ContainerKind::Directory => unreachable!("from_bytes never reports a directory"),
        }
    }

    fn from_directory(root: &Path) -> Result<Self, PackageError> {
        let mut files = Vec::new();
        for entry in walkdir::WalkDir::new(root).sort_by_file_name() {
            let entry = entry.map_err(|e| PackageError::Io(e.to_string()))?;
            if !entry.file_type().is_file() {
                continue;
            }
            let rel = entry
                .path()
                .strip_prefix(root)
                .map_err(|e| PackageError::Io(e.to_string()))?;
            let rel = rel.to_string_lossy().replace('\\', "/");
            let data = fs::read(entry.path()).map_err(|e| PackageError::Io(e.to_string()))?;
            files.push((rel, data));
        }
        Self::from_files(ContainerKind::Directory, files)
    }
}

/// Opens the extension at `path`: a directory, `.crx` or `.zip` file.
pub fn open_package(path: impl AsRef<Path>) -> Result<ExtensionPackage, PackageError> {
    let path = path.as_ref();
    let meta = fs::metadata(path).map_err(|e| PackageError::Io(format!("{}: {e}", path.display())))?;
    if meta.is_dir() {
        return ExtensionPackage::from_directory(path);
    }
    let bytes = fs::read(path).map_err(|e| PackageError::Io(format!("{}: {e}", path.display())))?;
    ExtensionPackage::from_bytes(&bytes)
}

/// Normalizes an archive path: forward slashes, no `.`/`..` segments, no
/// leading slash. `..` never climbs above the root. Returns `None` for paths
/// that normalize to nothing (including directory entries).
pub fn normalize_path(raw: &str) -> Option<String> {
    let mut parts: Vec<&str> = Vec::new();
    for seg in raw.split(['/', '\\']) {
        match seg {
            "" | "." => {}
            ".." => {
                parts.pop();
            }
            s => parts.push(s),
        }
    }
    if parts.is_empty() || raw.ends_with('/') {
        None
    } else {
        Some(parts.join("/"))
    }
}

/// Resolves `reference` (as written in an HTML page or manifest) against the
/// directory of `base`. Query strings and fragments are dropped.
pub fn resolve_relative(base: &str, reference: &str) -> Option<String> {
    let reference = reference.split(['?', '#']).next().unwrap_or_default();
    if reference.starts_with('/') {
        return normalize_path(reference);
    }
    let dir = base.rsplit_once('/').map(|(d, _)| d).unwrap_or("");
    normalize_path(&format!("{dir}/{reference}"))
}

/// True when `path` passes the normalization invariants.
pub fn is_normalized(path: &str) -> bool {
    !path.is_empty()
        && !path.starts_with('/')
        && !path.contains('\\')
        && path.split('/').all(|s| !s.is_empty() && s != "." && s != "..")
}

fn id_from_manifest_key(manifest: &[u8]) -> Option<ExtensionId> {
    let value: serde_json::Value = serde_json::from_slice(strip_bom(manifest)).ok()?;
    let key = value.get("key")?.as_str()?;
    let der = base64::engine::general_purpose::STANDARD
        .decode(key.split_whitespace().collect::<String>())
        .ok()?;
    derive_extension_id(&der).ok()
}

pub(crate) fn strip_bom(bytes: &[u8]) -> &[u8] {
    bytes.strip_prefix(b"\xef\xbb\xbf").unwrap_or(bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization() {
        assert_eq!(normalize_path("evil/../manifest.json").as_deref(), Some("manifest.json"));
        assert_eq!(normalize_path("/a//b/./c.js").as_deref(), Some("a/b/c.js"));
        assert_eq!(normalize_path("../../x.js").as_deref(), Some("x.js"));
        assert_eq!(normalize_path("a\\b.js").as_deref(), Some("a/b.js"));
        assert_eq!(normalize_path("dir/"), None);
        assert_eq!(normalize_path(".."), None);
    }

    #[test]
    fn relative_resolution() {
        assert_eq!(resolve_relative("pages/popup.html", "p.js").as_deref(), Some("pages/p.js"));
        assert_eq!(resolve_relative("pages/popup.html", "../lib/x.js?v=2").as_deref(), Some("lib/x.js"));
        assert_eq!(resolve_relative("pages/popup.html", "/root.js").as_deref(), Some("root.js"));
        assert_eq!(resolve_relative("bg.html", "a.js#frag").as_deref(), Some("a.js"));
    }

    #[test]
    fn missing_manifest_rejected() {
        let err = ExtensionPackage::from_files(ContainerKind::Zip, [("a.js", vec![])]).unwrap_err();
        assert_eq!(err, PackageError::MissingManifest);
    }

    #[test]
    fn duplicates_last_wins_with_warning() {
        let pkg = ExtensionPackage::from_files(
            ContainerKind::Zip,
            [("manifest.json", b"1".to_vec()), ("./manifest.json", b"2".to_vec())],
        )
        .unwrap();
        assert_eq!(pkg.manifest_bytes(), b"2");
        assert!(pkg.warnings().iter().any(|w| w.contains("duplicate")));
    }

    #[test]
    fn manifest_key_supplies_id() {
        let key = base64::engine::general_purpose::STANDARD.encode([0u8]);
        let manifest = format!(r#"{{"name":"x","version":"1","key":"{key}"}}"#);
        let pkg = ExtensionPackage::from_files(ContainerKind::Directory, [("manifest.json", manifest.into_bytes())]).unwrap();
        assert_eq!(pkg.id(), Some(&derive_extension_id(&[0]).unwrap()));
    }

    #[test]
    fn unknown_bytes() {
        assert_eq!(ExtensionPackage::from_bytes(&[0; 32]), Err(PackageError::UnknownContainer));
    }
}
