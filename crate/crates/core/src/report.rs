//! The per-extension report document, its severity score, and the canonical
//! JSON form shared by the corpus runner, the CLI and the HTTP service.
//!
//! Canonical form: keys in struct declaration order, sets as sorted arrays,
//! two-space pretty printing, `scanned_at` as `YYYY-MM-DDTHH:MM:SSZ`.

use std::collections::BTreeSet;
use std::fmt;

use chrono::{DateTime, SubsecRound, Utc};
use serde::{Deserialize, Serialize};

use crate::analyzer::{NetworkFinding, OverprivilegeResult, ScanMode, UsageEvidence};
use crate::manifest::{ApiPermission, CspStatus};
use crate::package::ExtensionId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeverityLevel {
    None,
    Low,
    Medium,
    High,
}

impl SeverityLevel {
    pub fn as_str(self) -> &'static str {
        match self {
            SeverityLevel::None => "none",
            SeverityLevel::Low => "low",
            SeverityLevel::Medium => "medium",
            SeverityLevel::High => "high",
        }
    }
}

impl fmt::Display for SeverityLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Severity {
    pub level: SeverityLevel,
    pub reasons: Vec<String>,
}

/// Thresholds for [`score_severity`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeverityConfig {
    /// `extra_count` at or above this is high.
    pub high_extra: usize,
    /// `extra_count` at or above this (and below `high_extra`) is medium.
    pub medium_extra: usize,
    /// Any of these left unused is high on its own.
    pub sensitive: BTreeSet<ApiPermission>,
}

pub const DEFAULT_SENSITIVE: &[&str] = &["cookies", "history", "management", "webRequest", "proxy"];

impl Default for SeverityConfig {
    fn default() -> Self {
        Self {
            high_extra: 4,
            medium_extra: 2,
            sensitive: DEFAULT_SENSITIVE.iter().map(|p| ApiPermission::from(*p)).collect(),
        }
    }
}

/// Scores from the over-privilege result and network findings only.
pub fn score(overprivilege: &OverprivilegeResult, network: &[NetworkFinding], cfg: &SeverityConfig) -> Severity {
    use crate::analyzer::FindingKind;

    let mut level = SeverityLevel::None;
    let mut reasons = Vec::new();
    let mut raise = |to: SeverityLevel, reason: String, level: &mut SeverityLevel| {
        *level = (*level).max(to);
        reasons.push(reason);
    };

    let n = overprivilege.extra_count;
    if n >= cfg.high_extra {
        raise(SeverityLevel::High, format!("{n} unused permissions (threshold {})", cfg.high_extra), &mut level);
    } else if n >= cfg.medium_extra {
        raise(SeverityLevel::Medium, format!("{n} unused permissions"), &mut level);
    } else if n >= 1 {
        raise(SeverityLevel::Low, format!("{n} unused permission"), &mut level);
    }
    for p in overprivilege.extra.intersection(&cfg.sensitive) {
        raise(SeverityLevel::High, format!("sensitive permission {p} requested but unused"), &mut level);
    }
    for f in network.iter().filter(|f| f.is_http()) {
        match f.kind {
            FindingKind::HtmlScriptSrc => raise(
                SeverityLevel::High,
                format!("script loaded over http in {}: {}", f.source_file, f.url),
                &mut level,
            ),
            FindingKind::JsStringUrl => raise(
                SeverityLevel::Low,
                format!("http url string in {} (heuristic): {}", f.source_file, f.url),
                &mut level,
            ),
        }
    }
    Severity { level, reasons }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtensionReport {
    pub extension_id: Option<ExtensionId>,
    pub name: String,
    pub version: String,
    pub manifest_version: u32,
    pub mode: ScanMode,
    pub csp: CspStatus,
    pub overprivilege: OverprivilegeResult,
    /// Declared under `optional_permissions`; never counted as extra.
    pub optional_permissions: BTreeSet<String>,
    pub usage: Vec<UsageEvidence>,
    pub network: Vec<NetworkFinding>,
    /// Host permission patterns, informational only.
    pub host_patterns: Vec<String>,
    pub warnings: Vec<String>,
    pub partial: bool,
    pub severity: Severity,
    pub scanner_version: String,
    #[serde(with = "utc_seconds")]
    pub scanned_at: DateTime<Utc>,
}

impl ExtensionReport {
    /// Recomputes `severity` from the current fields.
    pub fn rescore(&mut self, cfg: &SeverityConfig) {
        self.severity = score(&self.overprivilege, &self.network, cfg);
    }

    pub fn extra_count(&self) -> usize {
        self.overprivilege.extra_count
    }

    pub fn has_http_script(&self) -> bool {
        self.network
            .iter()
            .any(|f| f.is_http() && f.kind == crate::analyzer::FindingKind::HtmlScriptSrc)
    }
}

pub fn score_severity(r: &ExtensionReport, cfg: &SeverityConfig) -> Severity {
    score(&r.overprivilege, &r.network, cfg)
}

/// Truncates to whole seconds, the precision reports carry.
pub fn truncate_timestamp(t: DateTime<Utc>) -> DateTime<Utc> {
    t.trunc_subsecs(0)
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ReportError {
    #[error("report does not match the schema: {0}")]
    SchemaViolation(String),
    #[error("stored severity {stored} does not match re-derived severity {derived}")]
    SeverityMismatch { stored: SeverityLevel, derived: SeverityLevel },
}

pub fn serialize_report(r: &ExtensionReport) -> String {
    serde_json::to_string_pretty(r).expect("report serialization is infallible")
}

pub fn deserialize_report(text: &str) -> Result<ExtensionReport, ReportError> {
    deserialize_report_with(text, &SeverityConfig::default())
}

/// Parses a report and checks its stored severity against `cfg`.
pub fn deserialize_report_with(text: &str, cfg: &SeverityConfig) -> Result<ExtensionReport, ReportError> {
    let r: ExtensionReport =
        serde_json::from_str(text).map_err(|e| ReportError::SchemaViolation(e.to_string()))?;
    let derived = score_severity(&r, cfg);
    if derived != r.severity {
        return Err(ReportError::SeverityMismatch { stored: r.severity.level, derived: derived.level });
    }
    Ok(r)
}

mod utc_seconds {
    use chrono::{DateTime, NaiveDateTime, Utc};
    use serde::{Deserialize, Deserializer, Serializer};

    const FORMAT: &str = "%Y-%m-%dT%H:%M:%SZ";

    pub fn serialize<S: Serializer>(t: &DateTime<Utc>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(&t.format(FORMAT))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DateTime<Utc>, D::Error> {
        let text = String::deserialize(d)?;
        NaiveDateTime::parse_from_str(&text, FORMAT)
            .map(|n| n.and_utc())
            .map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::analyzer::{compute_overprivilege, FindingKind, UrlScheme};
    use chrono::TimeZone;

    fn set(names: &[&str]) -> BTreeSet<ApiPermission> {
        names.iter().map(|n| ApiPermission::from(*n)).collect()
    }

    fn overpriv(extra: &[&str]) -> OverprivilegeResult {
        compute_overprivilege(&set(extra), &set(&[]), &set(&[]))
    }

    fn finding(kind: FindingKind, scheme: UrlScheme) -> NetworkFinding {
        NetworkFinding { source_file: "p.html".into(), line: 1, url: "http://x/a.js".into(), scheme, kind }
    }

    pub(crate) fn sample() -> ExtensionReport {
        let mut r = ExtensionReport {
            extension_id: Some(ExtensionId::parse("godealjmppldhkjijmkfeeogllhiakcm").unwrap()),
            name: "Sample".into(),
            version: "1.2".into(),
            manifest_version: 2,
            mode: ScanMode::Full,
            csp: CspStatus { enforced: true, effective_policy: "script-src 'self'".into() },
            overprivilege: overpriv(&["tabs", "cookies"]),
            optional_permissions: BTreeSet::new(),
            usage: vec![],
            network: vec![],
            host_patterns: vec!["http://*/*".into()],
            warnings: vec![],
            partial: false,
            severity: Severity { level: SeverityLevel::None, reasons: vec![] },
            scanner_version: crate::SCANNER_VERSION.into(),
            scanned_at: Utc.with_ymd_and_hms(2024, 5, 1, 12, 30, 0).unwrap(),
        };
        r.rescore(&SeverityConfig::default());
        r
    }

    #[test]
    fn four_extra_is_high() {
        let s = score(&overpriv(&["a", "b", "c", "d"]), &[], &SeverityConfig::default());
        assert_eq!(s.level, SeverityLevel::High);
    }

    #[test]
    fn cookies_is_high_with_reason() {
        let s = score(&overpriv(&["cookies"]), &[], &SeverityConfig::default());
        assert_eq!(s.level, SeverityLevel::High);
        assert!(s.reasons.iter().any(|r| r.contains("cookies")));
    }

    #[test]
    fn clean_is_none() {
        let s = score(&overpriv(&[]), &[], &SeverityConfig::default());
        assert_eq!(s, Severity { level: SeverityLevel::None, reasons: vec![] });
    }

    #[test]
    fn levels_by_count_and_findings() {
        let cfg = SeverityConfig::default();
        assert_eq!(score(&overpriv(&["tabs"]), &[], &cfg).level, SeverityLevel::Low);
        assert_eq!(score(&overpriv(&["tabs", "idle"]), &[], &cfg).level, SeverityLevel::Medium);
        assert_eq!(score(&overpriv(&["tabs", "idle", "alarms"]), &[], &cfg).level, SeverityLevel::Medium);
        let http = finding(FindingKind::HtmlScriptSrc, UrlScheme::Http);
        assert_eq!(score(&overpriv(&[]), &[http], &cfg).level, SeverityLevel::High);
        let https = finding(FindingKind::HtmlScriptSrc, UrlScheme::Https);
        assert_eq!(score(&overpriv(&[]), &[https], &cfg).level, SeverityLevel::None);
        let heuristic = finding(FindingKind::JsStringUrl, UrlScheme::Http);
        assert_eq!(score(&overpriv(&[]), &[heuristic], &cfg).level, SeverityLevel::Low);
    }

    #[test]
    fn sorted_sets_in_output() {
        let text = serialize_report(&sample());
        let compact: String = text.split_whitespace().collect();
        assert!(compact.contains(r#""extra":["cookies","tabs"]"#), "{text}");
    }

    #[test]
    fn round_trip() {
        let r = sample();
        assert_eq!(deserialize_report(&serialize_report(&r)).unwrap(), r);
    }

    #[test]
    fn timestamp_only_diff() {
        let a = sample();
        let mut b = sample();
        b.scanned_at = Utc.with_ymd_and_hms(2025, 1, 2, 3, 4, 5).unwrap();
        let (sa, sb) = (serialize_report(&a), serialize_report(&b));
        let diff: Vec<_> = sa.lines().zip(sb.lines()).filter(|(x, y)| x != y).collect();
        assert_eq!(diff.len(), 1);
        assert!(diff[0].0.contains("scanned_at"));
    }

    #[test]
    fn missing_overprivilege_is_schema_violation() {
        let mut v: serde_json::Value = serde_json::from_str(&serialize_report(&sample())).unwrap();
        v.as_object_mut().unwrap().remove("overprivilege");
        assert!(matches!(deserialize_report(&v.to_string()), Err(ReportError::SchemaViolation(_))));
    }

    #[test]
    fn tampered_severity_detected() {
        let mut v: serde_json::Value = serde_json::from_str(&serialize_report(&sample())).unwrap();
        v["severity"]["level"] = "none".into();
        assert!(matches!(deserialize_report(&v.to_string()), Err(ReportError::SeverityMismatch { .. })));
    }
}
