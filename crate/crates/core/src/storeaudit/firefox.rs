use std::collections::BTreeSet;
use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};

use rusqlite::{params, Connection, OpenFlags, OptionalExtension, TransactionBehavior};
use serde::{Deserialize, Serialize};

use super::{AuditError, AuditFinding, AuditReason, StoreKind};

/// Fixture schema for the `addon` table.
pub const ADDON_SCHEMA: &str =
    "CREATE TABLE addon (id TEXT PRIMARY KEY, location TEXT, version TEXT, active INTEGER, descriptor TEXT)";

const ADDON_COLUMNS: [&str; 5] = ["id", "location", "version", "active", "descriptor"];
const SQLITE_HEADER: &[u8; 16] = b"SQLite format 3\0";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FirefoxStoreEntry {
    pub id: String,
    pub location: String,
    pub version: String,
    pub active: bool,
    pub descriptor: String,
}

fn check_header(db_path: &Path) -> Result<(), AuditError> {
    let mut file = File::open(db_path).map_err(|e| AuditError::Io(format!("{}: {e}", db_path.display())))?;
    let mut header = [0u8; 16];
    match file.read_exact(&mut header) {
        Ok(()) if &header == SQLITE_HEADER => Ok(()),
        _ => Err(AuditError::NotSqlite(db_path.display().to_string())),
    }
}

fn check_schema(conn: &Connection) -> Result<(), AuditError> {
    let mut stmt = conn.prepare("SELECT name FROM pragma_table_info('addon')")?;
    let columns: Vec<String> = stmt.query_map([], |r| r.get(0))?.collect::<Result<_, _>>()?;
    if columns.is_empty() {
        return Err(AuditError::SchemaMismatch("no addon table".into()));
    }
    for want in ADDON_COLUMNS {
        if !columns.iter().any(|c| c == want) {
            return Err(AuditError::SchemaMismatch(format!("addon table lacks column {want}")));
        }
    }
    Ok(())
}

fn open(db_path: &Path, write: bool) -> Result<Connection, AuditError> {
    check_header(db_path)?;
    let flags = if write {
        OpenFlags::SQLITE_OPEN_READ_WRITE
    } else {
        OpenFlags::SQLITE_OPEN_READ_ONLY
    };
    let conn = Connection::open_with_flags(db_path, flags | OpenFlags::SQLITE_OPEN_NO_MUTEX)?;
    check_schema(&conn)?;
    Ok(conn)
}

/// Creates a new database at `db_path` holding an empty `addon` table.
pub fn create_firefox_fixture(db_path: &Path) -> Result<(), AuditError> {
    if db_path.exists() {
        return Err(AuditError::Io(format!("{} already exists", db_path.display())));
    }
    let conn = Connection::open(db_path)?;
    conn.execute_batch(ADDON_SCHEMA)?;
    Ok(())
}

/// Inserts one `addon` row. Existing rows are untouched.
pub fn inject_firefox_entry(db_path: &Path, e: &FirefoxStoreEntry) -> Result<(), AuditError> {
    if e.id.is_empty() {
        return Err(AuditError::InvalidEntry("empty addon id".into()));
    }
    let mut conn = open(db_path, true)?;
    let tx = conn.transaction_with_behavior(TransactionBehavior::Immediate)?;
    let exists = tx
        .query_row("SELECT 1 FROM addon WHERE id = ?1", params![e.id], |_| Ok(()))
        .optional()?
        .is_some();
    if exists {
        return Err(AuditError::DuplicateEntry(e.id.clone()));
    }
    tx.execute(
        "INSERT INTO addon (id, location, version, active, descriptor) VALUES (?1, ?2, ?3, ?4, ?5)",
        params![e.id, e.location, e.version, e.active as i64, e.descriptor],
    )?;
    tx.commit()?;
    Ok(())
}

pub fn firefox_ids(db_path: &Path) -> Result<BTreeSet<String>, AuditError> {
    let conn = open(db_path, false)?;
    let mut stmt = conn.prepare("SELECT id FROM addon")?;
    let ids = stmt.query_map([], |r| r.get::<_, String>(0))?.collect::<Result<_, _>>()?;
    Ok(ids)
}

fn resolve_descriptor(db_path: &Path, descriptor: &str) -> PathBuf {
    let p = Path::new(descriptor);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        db_path.parent().unwrap_or(Path::new(".")).join(p)
    }
}

/// Flags rows outside `baseline` and active rows whose descriptor does not
/// exist. Relative descriptors resolve against the database's directory.
pub fn audit_firefox_db(db_path: &Path, baseline: Option<&BTreeSet<String>>) -> Result<Vec<AuditFinding>, AuditError> {
    let conn = open(db_path, false)?;
    let mut stmt = conn.prepare("SELECT id, active, descriptor FROM addon ORDER BY id")?;
    let rows = stmt.query_map([], |r| {
        Ok((r.get::<_, String>(0)?, r.get::<_, Option<i64>>(1)?, r.get::<_, Option<String>>(2)?))
    })?;
    let mut findings = Vec::new();
    for row in rows {
        let (id, active, descriptor) = row?;
        if let Some(baseline) = baseline {
            if !baseline.contains(&id) {
                findings.push(AuditFinding {
                    entry_id: id.clone(),
                    store: StoreKind::Firefox,
                    reason: AuditReason::NotInBaseline,
                    details: format!("id {id} not among {} baseline ids", baseline.len()),
                });
            }
        }
        if active == Some(1) {
            let dangling = match &descriptor {
                Some(d) if !d.is_empty() => !resolve_descriptor(db_path, d).exists(),
                _ => true,
            };
            if dangling {
                findings.push(AuditFinding {
                    entry_id: id,
                    store: StoreKind::Firefox,
                    reason: AuditReason::InconsistentState,
                    details: format!("active=1 but descriptor {:?} does not exist", descriptor.unwrap_or_default()),
                });
            }
        }
    }
    findings.sort();
    Ok(findings)
}
