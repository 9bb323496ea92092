//! Report persistence and the REST API in front of it.
//!
//! Endpoints (all responses `application/json`):
//!
//! | method | path | result |
//! |---|---|---|
//! | GET | `/api/v1/reports/{id}/latest` | newest stored report |
//! | GET | `/api/v1/reports/{id}/{version}` | that version's report |
//! | GET | `/api/v1/reports/{id}` | array of known versions, oldest first |
//! | POST | `/api/v1/scan` | scans the uploaded package, stores it when the id is known |
//! | GET | `/api/v1/stats` | aggregate statistics over the latest reports |
//! | GET | `/healthz` | `{"status": "ok", "scanner_version": ...}` |
//!
//! Errors are `{"code": ..., "message": ...}` with 404 for unknown reports,
//! 413 for oversize uploads, 422 for packages that cannot be scanned and 503
//! when the store cannot be written.

mod http;
mod store;

pub use self::http::{router, serve, ServiceConfig, DEFAULT_UPLOAD_LIMIT};
pub use self::store::{compare_versions, FaultPoint, ReportStore, StoreError, VersionQuery};
