//! Batch scanning of a directory of extensions and aggregate statistics.

mod fetch;
pub mod fixtures;
mod render;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use self::fetch::{fetch_package, FetchError, DEFAULT_FETCH_ENDPOINT, FETCH_ENDPOINT_ENV};
pub use self::render::{
    bar_height, render_histogram_svg, render_stats_csv, render_table, Histogram, PLOT_HEIGHT, TABLE_HEADER,
};

use crate::analyzer::{analyze_package, AnalyzeError, AnalyzeOptions};
use crate::package::{open_package, PackageError};
use crate::report::ExtensionReport;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub scanned: usize,
    pub failed: usize,
    pub failure_reasons: BTreeMap<String, usize>,
    pub csp_enforced: usize,
    /// Extra-permission count (>= 1) -> number of extensions.
    pub histogram: Histogram,
    /// Extensions with at least one `<script src="http://...">`.
    pub http_script_extensions: usize,
    /// Extensions whose only unused permissions are exempt ones.
    pub exempt_only_skipped: usize,
}

impl CorpusStats {
    pub fn record_report(&mut self, r: &ExtensionReport) {
        self.scanned += 1;
        if r.csp.enforced {
            self.csp_enforced += 1;
        }
        let extra = r.extra_count();
        if extra >= 1 {
            *self.histogram.entry(extra).or_default() += 1;
        } else if !r.overprivilege.exempt_ignored.is_empty() {
            self.exempt_only_skipped += 1;
        }
        if r.has_http_script() {
            self.http_script_extensions += 1;
        }
    }

    pub fn record_failure(&mut self, reason: &str) {
        self.failed += 1;
        *self.failure_reasons.entry(reason.to_owned()).or_default() += 1;
    }

    pub fn from_reports<'a>(reports: impl IntoIterator<Item = &'a ExtensionReport>) -> Self {
        let mut stats = Self::default();
        for r in reports {
            stats.record_report(r);
        }
        stats
    }

    /// Share of scanned extensions with at least one extra permission.
    pub fn violating_fraction(&self) -> f64 {
        if self.scanned == 0 {
            return 0.0;
        }
        self.histogram.values().sum::<usize>() as f64 / self.scanned as f64
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ScanError {
    #[error(transparent)]
    Package(#[from] PackageError),
    #[error(transparent)]
    Analyze(#[from] AnalyzeError),
}

impl ScanError {
    pub fn code(&self) -> &'static str {
        match self {
            ScanError::Package(e) => e.code(),
            ScanError::Analyze(e) => e.code(),
        }
    }
}

/// Opens and analyzes one package.
pub fn scan_path(path: &Path, options: &AnalyzeOptions) -> Result<ExtensionReport, ScanError> {
    let pkg = open_package(path)?;
    Ok(analyze_package(&pkg, options)?)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CorpusFailure {
    pub path: PathBuf,
    pub reason: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusRun {
    pub stats: CorpusStats,
    /// Successful reports, in lexicographic path order.
    pub reports: Vec<(PathBuf, ExtensionReport)>,
    pub failures: Vec<CorpusFailure>,
}

#[derive(Debug, Clone, Default)]
pub struct CorpusOptions {
    pub analyze: AnalyzeOptions,
    /// Worker threads; 0 picks the number of CPUs.
    pub jobs: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("corpus directory {0} contains no packages")]
    EmptyCorpus(PathBuf),
    #[error("cannot read corpus directory {0}: {1}")]
    Io(PathBuf, String),
    #[error("cannot start worker pool: {0}")]
    Pool(String),
}

/// Lists the immediate children of `root` that are scanned as packages.
/// Hidden entries are skipped.
pub fn corpus_entries(root: &Path) -> Result<Vec<PathBuf>, CorpusError> {
    let io = |e: std::io::Error| CorpusError::Io(root.to_owned(), e.to_string());
    let mut entries = Vec::new();
    for entry in fs::read_dir(root).map_err(io)? {
        let entry = entry.map_err(io)?;
        if entry.file_name().to_string_lossy().starts_with('.') {
            continue;
        }
        entries.push(entry.path());
    }
    entries.sort();
    Ok(entries)
}

/// Scans every package under `root`. Output is independent of `jobs`.
pub fn run_corpus(root: &Path, options: &CorpusOptions) -> Result<CorpusRun, CorpusError> {
    let entries = corpus_entries(root)?;
    if entries.is_empty() {
        return Err(CorpusError::EmptyCorpus(root.to_owned()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.jobs)
        .build()
        .map_err(|e| CorpusError::Pool(e.to_string()))?;
    let outcomes: Vec<Result<ExtensionReport, ScanError>> =
        pool.install(|| entries.par_iter().map(|p| scan_path(p, &options.analyze)).collect());

    let mut run = CorpusRun { stats: CorpusStats::default(), reports: Vec::new(), failures: Vec::new() };
    for (path, outcome) in entries.into_iter().zip(outcomes) {
        match outcome {
            Ok(report) => {
                run.stats.record_report(&report);
                run.reports.push((path, report));
            }
            Err(e) => {
                run.stats.record_failure(e.code());
                run.failures.push(CorpusFailure { path, reason: e.code().to_owned(), message: e.to_string() });
            }
        }
    }
    Ok(run)
}
