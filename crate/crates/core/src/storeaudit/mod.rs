//! Silent-install reproduction against profile fixtures, and the auditor
//! that detects such injected entries.
//!
//! Chrome keeps installed extensions under `extensions.settings.<id>` in the
//! JSON `Preferences` file; Firefox (fixture schema) keeps an `addon` table in
//! `extensions.sqlite`. The injectors write records the way an installer would
//! without going through the browser, and the auditors flag records that are
//! not in a known baseline or carry sideload provenance.
//!
//! Writers refuse paths that look like a live browser profile unless forced.

mod chrome;
mod firefox;
mod guard;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use self::chrome::{
    audit_chrome_prefs, canonicalize_prefs, chrome_ids, inject_chrome_entry, remove_chrome_entry, ChromeManifestSummary,
    ChromeStoreEntry,
};
pub use self::firefox::{
    audit_firefox_db, create_firefox_fixture, firefox_ids, inject_firefox_entry, FirefoxStoreEntry, ADDON_SCHEMA,
};
pub use self::guard::{check_writable, looks_like_live_profile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StoreKind {
    Chrome,
    Firefox,
}

impl fmt::Display for StoreKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StoreKind::Chrome => "chrome",
            StoreKind::Firefox => "firefox",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuditReason {
    NotInBaseline,
    SideloadLocation,
    WebstoreFlagFalse,
    InconsistentState,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AuditFinding {
    pub entry_id: String,
    pub store: StoreKind,
    pub reason: AuditReason,
    /// Always cites the offending field value.
    pub details: String,
}

#[derive(Debug, thiserror::Error)]
pub enum AuditError {
    #[error("preferences are not valid JSON: {0}")]
    NotJson(String),
    #[error("not an SQLite database: {0}")]
    NotSqlite(String),
    #[error("store schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("entry {0} already present with different content")]
    DuplicateEntry(String),
    #[error("invalid entry: {0}")]
    InvalidEntry(String),
    #[error("refusing to write inside what looks like a live browser profile: {0} (use --force on a copy)")]
    LiveProfile(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("sqlite error: {0}")]
    Sqlite(String),
}

impl AuditError {
    pub fn code(&self) -> &'static str {
        match self {
            AuditError::NotJson(_) => "NotJson",
            AuditError::NotSqlite(_) => "NotSqlite",
            AuditError::SchemaMismatch(_) => "SchemaMismatch",
            AuditError::DuplicateEntry(_) => "DuplicateEntry",
            AuditError::InvalidEntry(_) => "InvalidEntry",
            AuditError::LiveProfile(_) => "LiveProfile",
            AuditError::Io(_) => "Io",
            AuditError::Sqlite(_) => "Sqlite",
        }
    }
}

impl From<rusqlite::Error> for AuditError {
    fn from(e: rusqlite::Error) -> Self {
        AuditError::Sqlite(e.to_string())
    }
}
