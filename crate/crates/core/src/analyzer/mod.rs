//! Permission-usage inference and insecure network reference detection.
//!
//! Only privileged-context code is scanned for API usage: background scripts
//! and the scripts of the background page, plus (in [`ScanMode::Full`]) the
//! popup and options pages. Content scripts are never scanned for usage.

mod apimap;
mod html;
mod network;
mod overprivilege;
mod sanitize;
mod usage;

use std::collections::BTreeSet;
use std::sync::Arc;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

pub use self::apimap::{ApiPermissionMap, MapError};
pub use self::html::{inline_script_view, script_tags, ScriptTag};
pub use self::network::{scan_html_scripts, scan_string_urls, FindingKind, NetworkFinding, UrlScheme};
pub use self::overprivilege::{compute_overprivilege, OverprivilegeResult, PermissionSet};
pub use self::sanitize::{sanitize_source, Sanitized};
pub use self::usage::{scan_api_usage, UsageEvidence, UsageScan};

use crate::manifest::{classify_csp, parse_manifest, ApiPermission, Manifest, ManifestError};
use crate::package::{normalize_path, resolve_relative, ExtensionPackage};
use crate::report::{truncate_timestamp, ExtensionReport, Severity, SeverityConfig, SeverityLevel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanMode {
    /// Background scripts and background page only.
    PaperCompat,
    /// Background plus popup and options pages.
    #[default]
    Full,
}

#[derive(Debug, Clone)]
pub struct AnalyzeOptions {
    pub mode: ScanMode,
    pub exempt: PermissionSet,
    pub flag_string_urls: bool,
    pub map: Arc<ApiPermissionMap>,
    pub severity: SeverityConfig,
    /// Fixed timestamp for reproducible output; `None` means now.
    pub scanned_at: Option<DateTime<Utc>>,
}

pub const DEFAULT_EXEMPT: &[&str] = &["notifications"];

impl Default for AnalyzeOptions {
    fn default() -> Self {
        Self {
            mode: ScanMode::Full,
            exempt: DEFAULT_EXEMPT.iter().map(|p| ApiPermission::from(*p)).collect(),
            flag_string_urls: false,
            map: Arc::new(ApiPermissionMap::default()),
            severity: SeverityConfig::default(),
            scanned_at: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AnalyzeError {
    #[error(transparent)]
    Manifest(#[from] ManifestError),
    #[error("manifest.json is not UTF-8")]
    ManifestEncoding,
}

impl AnalyzeError {
    pub fn code(&self) -> &'static str {
        match self {
            AnalyzeError::Manifest(e) => e.code(),
            AnalyzeError::ManifestEncoding => "NotJson",
        }
    }
}

/// Privileged-context code of a package.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CoreContext {
    /// Script files, in manifest order, deduplicated.
    pub scripts: Vec<String>,
    /// HTML pages whose inline scripts run privileged.
    pub pages: Vec<String>,
    /// Dangling references (non-fatal).
    pub missing: Vec<String>,
}

fn push_unique(list: &mut Vec<String>, item: String) {
    if !list.contains(&item) {
        list.push(item);
    }
}

/// Collects the script files that run with access to extension APIs.
pub fn core_context_files(pkg: &ExtensionPackage, m: &Manifest, mode: ScanMode) -> CoreContext {
    let mut ctx = CoreContext::default();
    for script in &m.background_scripts {
        match normalize_path(script) {
            Some(p) if pkg.file(&p).is_some() => push_unique(&mut ctx.scripts, p),
            _ => push_unique(&mut ctx.missing, script.clone()),
        }
    }
    let mut pages: Vec<&String> = m.background_page.iter().collect();
    if mode == ScanMode::Full {
        pages.extend(m.action_popup.iter());
        pages.extend(m.options_page.iter());
    }
    for page in pages {
        let Some(page_path) = normalize_path(page) else {
            push_unique(&mut ctx.missing, page.clone());
            continue;
        };
        let Some(bytes) = pkg.file(&page_path) else {
            push_unique(&mut ctx.missing, page.clone());
            continue;
        };
        push_unique(&mut ctx.pages, page_path.clone());
        let html = String::from_utf8_lossy(bytes);
        for tag in script_tags(&html) {
            let Some(src) = tag.src else { continue };
            if src.contains("://") || src.starts_with("//") || src.contains(':') {
                continue;
            }
            match resolve_relative(&page_path, &src) {
                Some(p) if pkg.file(&p).is_some() => push_unique(&mut ctx.scripts, p),
                _ => push_unique(&mut ctx.missing, format!("{src} (from {page_path})")),
            }
        }
    }
    ctx
}

fn is_html(path: &str) -> bool {
    let lower = path.to_ascii_lowercase();
    lower.ends_with(".html") || lower.ends_with(".htm")
}

fn decode(path: &str, bytes: &[u8], warnings: &mut Vec<String>, partial: &mut bool) -> String {
    match std::str::from_utf8(bytes) {
        Ok(s) => s.strip_prefix('\u{feff}').map(|s| format!("   {s}")).unwrap_or_else(|| s.to_owned()),
        Err(_) => {
            warnings.push(format!("{path}: not valid UTF-8, decoded lossily"));
            *partial = true;
            String::from_utf8_lossy(bytes).into_owned()
        }
    }
}

/// Runs the full analysis of one package.
pub fn analyze_package(pkg: &ExtensionPackage, options: &AnalyzeOptions) -> Result<ExtensionReport, AnalyzeError> {
    let manifest_text = std::str::from_utf8(pkg.manifest_bytes()).map_err(|_| AnalyzeError::ManifestEncoding)?;
    let manifest = parse_manifest(manifest_text)?;
    let csp = classify_csp(&manifest);

    let mut warnings: Vec<String> = pkg.warnings().to_vec();
    warnings.extend(manifest.warnings.iter().cloned());
    let mut partial = false;

    let ctx = core_context_files(pkg, &manifest, options.mode);
    for missing in &ctx.missing {
        warnings.push(format!("missing file: {missing}"));
        partial = true;
    }

    let mut sources: Vec<(String, String)> = Vec::new();
    for path in &ctx.scripts {
        let text = decode(path, pkg.file(path).unwrap_or_default(), &mut warnings, &mut partial);
        sources.push((path.clone(), text));
    }
    for page in &ctx.pages {
        let html = decode(page, pkg.file(page).unwrap_or_default(), &mut warnings, &mut partial);
        if let Some(view) = inline_script_view(&html) {
            sources.push((page.clone(), view));
        }
    }
    let usage = scan_api_usage(&sources, &options.map);
    warnings.extend(usage.warnings.iter().cloned());
    warnings.extend(usage.indeterminate_reasons.iter().cloned());

    let used: PermissionSet = usage.evidence.iter().map(|e| e.permission.clone()).collect();
    let mut overprivilege = compute_overprivilege(&manifest.api_permissions, &used, &options.exempt);
    overprivilege.indeterminate = usage.indeterminate;

    let mut network = Vec::new();
    let mut js_files = Vec::new();
    for (path, bytes) in pkg.files() {
        if is_html(path) {
            network.extend(scan_html_scripts(&String::from_utf8_lossy(bytes), path));
        } else if options.flag_string_urls && path.to_ascii_lowercase().ends_with(".js") {
            js_files.push((path.clone(), String::from_utf8_lossy(bytes).into_owned()));
        }
    }
    network.extend(scan_string_urls(&js_files, options.flag_string_urls));
    network.sort();

    let mut host_patterns: Vec<String> = manifest.host_patterns.iter().map(ToString::to_string).collect();
    host_patterns.sort();
    let optional_permissions: BTreeSet<String> = manifest
        .optional_api_permissions
        .iter()
        .map(|p| p.name().to_owned())
        .chain(manifest.optional_host_patterns.iter().map(ToString::to_string))
        .collect();

    let mut report = ExtensionReport {
        extension_id: pkg.id().cloned(),
        name: manifest.name,
        version: manifest.version,
        manifest_version: manifest.manifest_version,
        mode: options.mode,
        csp,
        overprivilege,
        optional_permissions,
        usage: usage.evidence,
        network,
        host_patterns,
        warnings,
        partial,
        severity: Severity { level: SeverityLevel::None, reasons: Vec::new() },
        scanner_version: crate::SCANNER_VERSION.to_owned(),
        scanned_at: truncate_timestamp(options.scanned_at.unwrap_or_else(Utc::now)),
    };
    report.rescore(&options.severity);
    Ok(report)
}
