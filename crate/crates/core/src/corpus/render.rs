//! Text table, CSV and SVG renderings of corpus statistics.

use std::collections::BTreeMap;
use std::fmt::Write;

use super::CorpusStats;

/// Histogram: extra-permission count -> number of extensions.
pub type Histogram = BTreeMap<usize, usize>;

pub const TABLE_HEADER: &str = "extra_permissions\tviolating_extensions";

/// Tab-separated table: one header row, then one `k\tv` row per histogram
/// entry in ascending `k`. Every line ends with `\n`. Zero-valued entries
/// present in the map are rendered.
pub fn render_table(h: &Histogram) -> String {
    let mut out = String::with_capacity(32 + h.len() * 12);
    out.push_str(TABLE_HEADER);
    out.push('\n');
    for (k, v) in h {
        let _ = writeln!(out, "{k}\t{v}");
    }
    out
}

/// CSV of the full statistics with columns `section,key,value`. Rows:
/// `summary` (scanned, failed, csp_enforced, http_script_extensions,
/// exempt_only_skipped), then `failure` rows by reason, then `histogram`
/// rows by extra count, each group in ascending key order.
pub fn render_stats_csv(stats: &CorpusStats) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["section", "key", "value"]).expect("in-memory csv write");
    let mut row = |section: &str, key: &str, value: usize| {
        w.write_record([section, key, &value.to_string()]).expect("in-memory csv write");
    };
    for (key, value) in [
        ("scanned", stats.scanned),
        ("failed", stats.failed),
        ("csp_enforced", stats.csp_enforced),
        ("http_script_extensions", stats.http_script_extensions),
        ("exempt_only_skipped", stats.exempt_only_skipped),
    ] {
        row("summary", key, value);
    }
    for (reason, n) in &stats.failure_reasons {
        row("failure", reason, *n);
    }
    for (k, n) in &stats.histogram {
        row("histogram", &k.to_string(), *n);
    }
    let bytes = w.into_inner().expect("in-memory csv flush");
    String::from_utf8(bytes).expect("csv output is UTF-8")
}

pub const PLOT_HEIGHT: f64 = 300.0;
const MARGIN_LEFT: f64 = 60.0;
const MARGIN_TOP: f64 = 20.0;
const MARGIN_BOTTOM: f64 = 50.0;
const BAR_WIDTH: f64 = 30.0;
const BAR_GAP: f64 = 10.0;

/// Bar height for `count` relative to the largest count.
pub fn bar_height(count: usize, max: usize, log_scale: bool) -> f64 {
    if max == 0 {
        return 0.0;
    }
    let ratio = if log_scale {
        ((count + 1) as f64).log10() / ((max + 1) as f64).log10()
    } else {
        count as f64 / max as f64
    };
    PLOT_HEIGHT * ratio
}

/// Bar chart with one `<rect class="bar">` per histogram entry. Under
/// `log_scale` heights are proportional to `log10(count + 1)`.
pub fn render_histogram_svg(h: &Histogram, log_scale: bool) -> String {
    let max = h.values().copied().max().unwrap_or(0);
    let bars = h.len().max(1) as f64;
    let width = MARGIN_LEFT + bars * (BAR_WIDTH + BAR_GAP) + BAR_GAP + 20.0;
    let height = MARGIN_TOP + PLOT_HEIGHT + MARGIN_BOTTOM;
    let base = MARGIN_TOP + PLOT_HEIGHT;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(
        s,
        r#"<line class="axis" x1="{MARGIN_LEFT}" y1="{MARGIN_TOP}" x2="{MARGIN_LEFT}" y2="{base}" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r#"<line class="axis" x1="{MARGIN_LEFT}" y1="{base}" x2="{:.0}" y2="{base}" stroke="black"/>"#,
        width - 10.0
    );
    let y_label = if log_scale { "extensions (log10 scale)" } else { "extensions" };
    let _ = writeln!(
        s,
        r#"<text x="14" y="{:.1}" transform="rotate(-90 14 {:.1})" text-anchor="middle">{y_label}</text>"#,
        MARGIN_TOP + PLOT_HEIGHT / 2.0,
        MARGIN_TOP + PLOT_HEIGHT / 2.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.0}" text-anchor="middle">extra permissions</text>"#,
        MARGIN_LEFT + (width - MARGIN_LEFT) / 2.0,
        height - 8.0
    );
    for (i, (k, v)) in h.iter().enumerate() {
        let x = MARGIN_LEFT + BAR_GAP + i as f64 * (BAR_WIDTH + BAR_GAP);
        let bh = bar_height(*v, max, log_scale);
        let _ = writeln!(
            s,
            r#"<rect class="bar" data-extra="{k}" data-count="{v}" x="{x:.1}" y="{:.4}" width="{BAR_WIDTH}" height="{bh:.4}" fill="steelblue"/>"#,
            base - bh
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.0}" text-anchor="middle">{k}</text>"#,
            x + BAR_WIDTH / 2.0,
            base + 14.0
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_table_is_header_only() {
        assert_eq!(render_table(&Histogram::new()), format!("{TABLE_HEADER}\n"));
    }

    #[test]
    fn single_row() {
        let t = render_table(&Histogram::from([(1, 1)]));
        assert_eq!(t.lines().nth(1), Some("1\t1"));
    }

    #[test]
    fn empty_svg_has_axes_only() {
        let s = render_histogram_svg(&Histogram::new(), true);
        assert!(s.starts_with("<svg"));
        assert_eq!(s.matches("class=\"axis\"").count(), 2);
        assert!(!s.contains("class=\"bar\""));
    }

    #[test]
    fn log_ratio() {
        let r = bar_height(100, 100, true) / bar_height(10, 100, true);
        assert!((r - 101f64.log10() / 11f64.log10()).abs() < 1e-12);
        assert_eq!(bar_height(0, 100, true), 0.0);
        assert_eq!(bar_height(5, 0, true), 0.0);
        assert_eq!(bar_height(50, 100, false), PLOT_HEIGHT / 2.0);
    }

    #[test]
    fn csv_layout() {
        let stats = CorpusStats {
            scanned: 3,
            failed: 1,
            failure_reasons: BTreeMap::from([("MissingManifest".into(), 1)]),
            csp_enforced: 2,
            histogram: Histogram::from([(1, 2)]),
            http_script_extensions: 1,
            exempt_only_skipped: 0,
        };
        let csv = render_stats_csv(&stats);
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], "section,key,value");
        assert_eq!(lines[1], "summary,scanned,3");
        assert!(lines.contains(&"failure,MissingManifest,1"));
        assert_eq!(*lines.last().unwrap(), "histogram,1,2");
    }
}
