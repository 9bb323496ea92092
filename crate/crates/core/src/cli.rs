//! The `extcheck` command line.
//!
//! Exit codes: `0` success (scan severity none/low, clean audit), `1` any
//! error, `2` a result that needs attention (scan severity medium/high, audit
//! findings). JSON payloads go to stdout, diagnostics to stderr.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::{IsTerminal, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::analyzer::{AnalyzeOptions, ApiPermissionMap, ScanMode, DEFAULT_EXEMPT};
use crate::manifest::ApiPermission;
use crate::corpus::{
    fetch_package, render_histogram_svg, render_stats_csv, render_table, run_corpus, scan_path, CorpusOptions,
    DEFAULT_FETCH_ENDPOINT, FETCH_ENDPOINT_ENV,
};
use crate::package::ExtensionId;
use crate::report::{serialize_report, ExtensionReport, SeverityLevel};
use crate::service::{self, ReportStore, ServiceConfig, DEFAULT_UPLOAD_LIMIT};
use crate::storeaudit::{
    audit_chrome_prefs, audit_firefox_db, check_writable, chrome_ids, firefox_ids, inject_chrome_entry,
    inject_firefox_entry, AuditError, ChromeManifestSummary, ChromeStoreEntry, FirefoxStoreEntry, StoreKind,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_ATTENTION: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "extcheck", version, about = "Static analysis of browser extensions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Analyze one package (CRX, ZIP or unpacked directory)
    Scan(ScanArgs),
    /// Analyze every package in a directory and print the histogram table
    Corpus(CorpusArgs),
    /// Check a browser install store for injected entries
    Audit(AuditArgs),
    /// Write an install record into a store fixture the way a silent installer would
    SimulateInstall(SimulateArgs),
    /// Download one CRX from the store update endpoint
    Fetch(FetchArgs),
    /// Run the report service
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
struct AnalysisArgs {
    /// Scan only background scripts and the background page
    #[arg(long)]
    paper_compat: bool,
    /// Permissions never counted as extra (replaces the default: notifications)
    #[arg(long, value_delimiter = ',')]
    exempt: Option<Vec<String>>,
    /// Also report http:// URLs in JavaScript string literals (heuristic)
    #[arg(long)]
    flag_string_urls: bool,
    /// API-to-permission map JSON replacing the bundled one
    #[arg(long, env = "EXTCHECK_MAP")]
    map: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Debug, Args)]
struct ScanArgs {
    path: PathBuf,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    #[command(flatten)]
    analysis: AnalysisArgs,
}

#[derive(Debug, Args)]
struct CorpusArgs {
    root: PathBuf,
    /// Worker threads (0 = one per CPU); output does not depend on it
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Write aggregate statistics as CSV
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Write the histogram as SVG
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Linear instead of log10 bar heights in the SVG
    #[arg(long)]
    linear: bool,
    #[command(flatten)]
    analysis: AnalysisArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Store {
    Chrome,
    Firefox,
}

#[derive(Debug, Args)]
struct AuditArgs {
    #[arg(value_enum)]
    store: Store,
    /// `Preferences` JSON (chrome) or `extensions.sqlite` (firefox)
    path: PathBuf,
    /// Known-good store file of the same kind whose ids form the baseline
    #[arg(long, conflicts_with = "baseline_ids")]
    baseline: Option<PathBuf>,
    /// Comma-separated baseline ids
    #[arg(long, value_delimiter = ',')]
    baseline_ids: Option<Vec<String>>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(value_enum)]
    store: Store,
    path: PathBuf,
    /// Extension id (chrome: 32 chars a-p) or addon id (firefox)
    #[arg(long)]
    id: String,
    #[arg(long, default_value = "Simulated")]
    name: String,
    #[arg(long, default_value = "1.0")]
    version: String,
    /// chrome: install directory; firefox: descriptor path
    #[arg(long)]
    path_value: Option<String>,
    /// chrome location code (1 = store, >=2 = external); firefox location name
    #[arg(long)]
    location: Option<String>,
    /// chrome: mark the entry as not coming from the store
    #[arg(long)]
    no_webstore: bool,
    /// Write even if the path looks like a live browser profile
    #[arg(long)]
    force: bool,
}

#[derive(Debug, Args)]
struct FetchArgs {
    id: String,
    /// Output file (default `<id>.crx`)
    #[arg(long)]
    out: Option<PathBuf>,
    /// URL template containing `{id}`
    #[arg(long, env = FETCH_ENDPOINT_ENV, default_value = DEFAULT_FETCH_ENDPOINT)]
    endpoint: String,
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[arg(long, env = "EXTCHECK_LISTEN", default_value = "127.0.0.1:8080")]
    listen: SocketAddr,
    /// Report store directory
    #[arg(long, env = "EXTCHECK_STORE", default_value = "reports")]
    store: PathBuf,
    /// Maximum upload size in bytes
    #[arg(long, env = "EXTCHECK_UPLOAD_LIMIT", default_value_t = DEFAULT_UPLOAD_LIMIT)]
    upload_limit: usize,
    #[command(flatten)]
    analysis: AnalysisArgs,
}

/// A failure reported as `{"code", "message"}` on stderr.
#[derive(Debug, Serialize)]
struct Failure {
    code: String,
    message: String,
}

impl Failure {
    fn new(code: &str, message: impl ToString) -> Self {
        Self { code: code.to_owned(), message: message.to_string() }
    }
}

impl From<AuditError> for Failure {
    fn from(e: AuditError) -> Self {
        Failure::new(e.code(), e)
    }
}

type Outcome = Result<i32, Failure>;

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
        }
    };
    let outcome = match cli.command {
        Command::Scan(a) => cmd_scan(a, out),
        Command::Corpus(a) => cmd_corpus(a, out, err),
        Command::Audit(a) => cmd_audit(a, out),
        Command::SimulateInstall(a) => cmd_simulate(a, out),
        Command::Fetch(a) => cmd_fetch(a, out),
        Command::Serve(a) => cmd_serve(a, err),
    };
    match outcome {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "{}", serde_json::to_string(&f).unwrap());
            EXIT_ERROR
        }
    }
}

fn analyze_options(a: &AnalysisArgs) -> Result<AnalyzeOptions, Failure> {
    let mut options = AnalyzeOptions {
        mode: if a.paper_compat { ScanMode::PaperCompat } else { ScanMode::Full },
        flag_string_urls: a.flag_string_urls,
        ..AnalyzeOptions::default()
    };
    let exempt = a.exempt.clone().unwrap_or_else(|| DEFAULT_EXEMPT.iter().map(|s| s.to_string()).collect());
    options.exempt = exempt.into_iter().filter(|p| !p.is_empty()).map(ApiPermission::new).collect();
    if let Some(path) = &a.map {
        let map = ApiPermissionMap::load(path).map_err(|e| Failure::new(e.code(), e))?;
        options.map = Arc::new(map);
    }
    Ok(options)
}

fn write_out(out: &mut dyn Write, text: &str) -> Result<(), Failure> {
    out.write_all(text.as_bytes()).map_err(|e| Failure::new("Io", e))
}

fn cmd_scan(a: ScanArgs, out: &mut dyn Write) -> Outcome {
    let options = analyze_options(&a.analysis)?;
    let report = scan_path(&a.path, &options).map_err(|e| Failure::new(e.code(), e))?;
    let text = match a.format {
        Format::Json => serialize_report(&report) + "\n",
        Format::Text => render_text(&report, use_color()),
    };
    write_out(out, &text)?;
    Ok(match report.severity.level {
        SeverityLevel::None | SeverityLevel::Low => EXIT_OK,
        SeverityLevel::Medium | SeverityLevel::High => EXIT_ATTENTION,
    })
}

fn use_color() -> bool {
    std::env::var_os("NO_COLOR").is_none_or(|v| v.is_empty()) && std::io::stdout().is_terminal()
}

fn render_text(r: &ExtensionReport, color: bool) -> String {
    let paint = |level: SeverityLevel| {
        let code = match level {
            SeverityLevel::High => "31",
            SeverityLevel::Medium => "33",
            SeverityLevel::Low => "36",
            SeverityLevel::None => "32",
        };
        if color {
            format!("\x1b[{code}m{}\x1b[0m", level.as_str())
        } else {
            level.as_str().to_owned()
        }
    };
    let join = |set: &BTreeSet<ApiPermission>| {
        if set.is_empty() {
            "-".to_owned()
        } else {
            set.iter().map(ApiPermission::name).collect::<Vec<_>>().join(", ")
        }
    };
    let mut s = String::new();
    let id = r.extension_id.as_ref().map(ExtensionId::as_str).unwrap_or("(unknown id)");
    let _ = writeln!(s, "{} {} [{}]", r.name, r.version, id);
    let _ = writeln!(s, "severity:   {}", paint(r.severity.level));
    let _ = writeln!(s, "manifest:   v{} (csp {})", r.manifest_version, if r.csp.enforced { "enforced" } else { "not enforced" });
    let _ = writeln!(s, "declared:   {}", join(&r.overprivilege.declared));
    let _ = writeln!(s, "used:       {}", join(&r.overprivilege.used));
    let _ = writeln!(s, "extra ({}):  {}", r.overprivilege.extra_count, join(&r.overprivilege.extra));
    let _ = writeln!(s, "exempt:     {}", join(&r.overprivilege.exempt_ignored));
    if r.overprivilege.indeterminate {
        let _ = writeln!(s, "note:       dynamic API access found, usage may be incomplete");
    }
    for f in &r.network {
        let _ = writeln!(s, "network:    {}:{} {}", f.source_file, f.line, f.url);
    }
    for reason in &r.severity.reasons {
        let _ = writeln!(s, "reason:     {reason}");
    }
    for w in &r.warnings {
        let _ = writeln!(s, "warning:    {w}");
    }
    s
}

fn cmd_corpus(a: CorpusArgs, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    let options = CorpusOptions { analyze: analyze_options(&a.analysis)?, jobs: a.jobs };
    let run = run_corpus(&a.root, &options).map_err(|e| {
        let code = match e {
            crate::corpus::CorpusError::EmptyCorpus(_) => "EmptyCorpus",
            crate::corpus::CorpusError::Io(..) => "Io",
            crate::corpus::CorpusError::Pool(_) => "Pool",
        };
        Failure::new(code, e)
    })?;
    for f in &run.failures {
        let _ = writeln!(err, "skipped {}: {} ({})", f.path.display(), f.reason, f.message);
    }
    if let Some(path) = &a.csv {
        write_file(path, &render_stats_csv(&run.stats))?;
    }
    if let Some(path) = &a.svg {
        write_file(path, &render_histogram_svg(&run.stats.histogram, !a.linear))?;
    }
    write_out(out, &render_table(&run.stats.histogram))?;
    let _ = writeln!(
        err,
        "scanned {}, failed {}, csp enforced {}, http scripts {}",
        run.stats.scanned, run.stats.failed, run.stats.csp_enforced, run.stats.http_script_extensions
    );
    Ok(EXIT_OK)
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::new("Io", format!("{}: {e}", path.display())))
}

fn read_file(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::new("Io", format!("{}: {e}", path.display())))
}

fn store_ids(kind: Store, path: &Path) -> Result<BTreeSet<String>, Failure> {
    Ok(match kind {
        Store::Chrome => chrome_ids(&read_file(path)?)?,
        Store::Firefox => firefox_ids(path)?,
    })
}

fn cmd_audit(a: AuditArgs, out: &mut dyn Write) -> Outcome {
    let baseline = match (&a.baseline, &a.baseline_ids) {
        (Some(path), _) => Some(store_ids(a.store, path)?),
        (None, Some(ids)) => Some(ids.iter().filter(|s| !s.is_empty()).cloned().collect()),
        (None, None) => None,
    };
    let findings = match a.store {
        Store::Chrome => audit_chrome_prefs(&read_file(&a.path)?, baseline.as_ref())?,
        Store::Firefox => audit_firefox_db(&a.path, baseline.as_ref())?,
    };
    write_out(out, &(serde_json::to_string_pretty(&findings).unwrap() + "\n"))?;
    Ok(if findings.is_empty() { EXIT_OK } else { EXIT_ATTENTION })
}

#[derive(Serialize)]
struct Injected<T> {
    store: StoreKind,
    entry: T,
}

fn cmd_simulate(a: SimulateArgs, out: &mut dyn Write) -> Outcome {
    check_writable(&a.path, a.force)?;
    let printed = match a.store {
        Store::Chrome => {
            let id = ExtensionId::parse(&a.id).map_err(|e| Failure::new("InvalidEntry", e))?;
            let location = match &a.location {
                Some(l) => l
                    .parse()
                    .map_err(|_| Failure::new("InvalidEntry", format!("chrome location {l:?} is not an integer")))?,
                None => 1,
            };
            let entry = ChromeStoreEntry {
                path: a.path_value.unwrap_or_else(|| format!("{}/{}_0", id.as_str(), a.version)),
                id,
                location,
                state: 1,
                from_webstore: !a.no_webstore,
                manifest: ChromeManifestSummary { name: a.name, version: a.version },
            };
            let updated = inject_chrome_entry(&read_file(&a.path)?, &entry)?;
            replace_file(&a.path, &updated)?;
            serde_json::to_string_pretty(&Injected { store: StoreKind::Chrome, entry }).unwrap()
        }
        Store::Firefox => {
            let entry = FirefoxStoreEntry {
                descriptor: a.path_value.unwrap_or_else(|| format!("extensions/{}.xpi", a.id)),
                id: a.id,
                location: a.location.unwrap_or_else(|| "app-profile".into()),
                version: a.version,
                active: true,
            };
            inject_firefox_entry(&a.path, &entry)?;
            serde_json::to_string_pretty(&Injected { store: StoreKind::Firefox, entry }).unwrap()
        }
    };
    write_out(out, &(printed + "\n"))?;
    Ok(EXIT_OK)
}

/// Writes next to `path` and renames over it.
fn replace_file(path: &Path, text: &str) -> Result<(), Failure> {
    let mut temp = path.as_os_str().to_owned();
    temp.push(".extcheck-tmp");
    let temp = PathBuf::from(temp);
    write_file(&temp, text)?;
    fs::rename(&temp, path).map_err(|e| Failure::new("Io", format!("{}: {e}", path.display())))
}

#[derive(Serialize)]
struct Fetched {
    id: String,
    path: PathBuf,
    bytes: usize,
}

fn cmd_fetch(a: FetchArgs, out: &mut dyn Write) -> Outcome {
    let bytes = fetch_package(&a.id, &a.endpoint).map_err(|e| Failure::new(e.code(), e))?;
    let path = a.out.unwrap_or_else(|| PathBuf::from(format!("{}.crx", a.id)));
    fs::write(&path, &bytes).map_err(|e| Failure::new("Io", format!("{}: {e}", path.display())))?;
    let summary = Fetched { id: a.id, path, bytes: bytes.len() };
    write_out(out, &(serde_json::to_string_pretty(&summary).unwrap() + "\n"))?;
    Ok(EXIT_OK)
}

fn cmd_serve(a: ServeArgs, err: &mut dyn Write) -> Outcome {
    let config = ServiceConfig { upload_limit: a.upload_limit, analyze: analyze_options(&a.analysis)? };
    let store = ReportStore::open(&a.store).map_err(|e| Failure::new(e.code(), e))?;
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| Failure::new("Io", e))?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(a.listen)
            .await
            .map_err(|e| Failure::new("BindError", format!("{}: {e}", a.listen)))?;
        let addr = listener.local_addr().map_err(|e| Failure::new("Io", e))?;
        let _ = writeln!(err, "listening on http://{addr} (store {})", a.store.display());
        let _ = err.flush();
        let app = service::router(Arc::new(store), config);
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
        };
        service::serve(listener, app, shutdown).await.map_err(|e| Failure::new("Io", e))?;
        Ok(EXIT_OK)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let mut full = vec!["extcheck"];
        full.extend_from_slice(args);
        let code = run(full, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn usage_errors_exit_1() {
        assert_eq!(run_args(&[]).0, EXIT_ERROR);
        assert_eq!(run_args(&["scan"]).0, EXIT_ERROR);
        let (code, _, err) = run_args(&["audit", "chrome", "p", "--baseline", "b", "--baseline-ids", "x"]);
        assert_eq!(code, EXIT_ERROR);
        assert!(err.contains("cannot be used with"));
        assert_eq!(run_args(&["--help"]).0, EXIT_OK);
    }

    #[test]
    fn missing_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let (code, out, err) = run_args(&["scan", dir.path().to_str().unwrap()]);
        assert_eq!(code, EXIT_ERROR);
        assert!(out.is_empty());
        assert!(err.contains("\"code\":\"MissingManifest\""));
    }

    #[test]
    fn text_without_color() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("manifest.json"), r#"{"name":"T","version":"1","manifest_version":2}"#).unwrap();
        let (code, out, _) = run_args(&["scan", "--format", "text", dir.path().to_str().unwrap()]);
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("severity:   none"));
        assert!(!out.contains('\x1b'));
    }
}
