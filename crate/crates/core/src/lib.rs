//! Static analysis of browser extensions.
//!
//! The crate reads extension containers ([`package`]), models their
//! manifests ([`manifest`]), infers which declared API permissions the
//! privileged code actually exercises and which scripts are loaded over plain
//! HTTP ([`analyzer`]), scores and serializes the result ([`report`]),
//! aggregates whole directories of extensions ([`corpus`]), audits browser
//! install stores for injected entries ([`storeaudit`]) and serves reports over
//! HTTP ([`service`]).
//!
//! Runnable walkthroughs live in `examples/`:
//!
//! ```bash
//! cargo run -p extcheck --example scan_extension
//! ```

pub mod analyzer;
pub mod cli;
pub mod corpus;
pub mod manifest;
pub mod package;
pub mod report;
pub mod service;
pub mod storeaudit;

pub use analyzer::{analyze_package, AnalyzeOptions, ScanMode};
pub use package::{open_package, ContainerKind, ExtensionId, ExtensionPackage, PackageError};
pub use report::{ExtensionReport, Severity, SeverityLevel};

/// Version string embedded in every report.
pub const SCANNER_VERSION: &str = concat!("extcheck/", env!("CARGO_PKG_VERSION"));
