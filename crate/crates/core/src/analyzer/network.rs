//! Remote script references: `<script src>` in HTML, and an opt-in heuristic
//! over `http://` string literals in JavaScript.

use serde::{Deserialize, Serialize};

use super::html::script_tags;
use super::sanitize::sanitize_source;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UrlScheme {
    Http,
    Https,
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FindingKind {
    HtmlScriptSrc,
    /// Heuristic: any string literal starting with `http://`.
    JsStringUrl,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NetworkFinding {
    pub source_file: String,
    pub line: usize,
    pub url: String,
    pub scheme: UrlScheme,
    pub kind: FindingKind,
}

impl NetworkFinding {
    pub fn is_http(&self) -> bool {
        self.scheme == UrlScheme::Http
    }
}

/// Scheme of an absolute URL, or `None` for relative references.
/// Protocol-relative `//host/x` counts as absolute with an `other` scheme.
fn absolute_scheme(src: &str) -> Option<UrlScheme> {
    if src.starts_with("//") {
        return Some(UrlScheme::Other);
    }
    let (scheme, _) = src.split_once(':')?;
    let mut chars = scheme.chars();
    let valid = chars.next().is_some_and(|c| c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.'));
    if !valid {
        return None;
    }
    Some(match scheme.to_ascii_lowercase().as_str() {
        "http" => UrlScheme::Http,
        "https" => UrlScheme::Https,
        _ => UrlScheme::Other,
    })
}

pub fn scan_html_scripts(html: &str, source_path: &str) -> Vec<NetworkFinding> {
    script_tags(html)
        .into_iter()
        .filter_map(|tag| {
            let src = tag.src?;
            let scheme = absolute_scheme(&src)?;
            Some(NetworkFinding {
                source_file: source_path.to_owned(),
                line: tag.line,
                url: src,
                scheme,
                kind: FindingKind::HtmlScriptSrc,
            })
        })
        .collect()
}

/// Returns nothing unless `enabled`: URL strings are not evidence of a request.
pub fn scan_string_urls<P, T>(files: &[(P, T)], enabled: bool) -> Vec<NetworkFinding>
where
    P: AsRef<str>,
    T: AsRef<str>,
{
    if !enabled {
        return Vec::new();
    }
    let mut out = Vec::new();
    for (path, text) in files {
        let text = text.as_ref();
        let sanitized = sanitize_source(text);
        for span in &sanitized.string_spans {
            let literal = &text[span.clone()];
            let Some(open) = literal.chars().next().filter(|c| matches!(c, '"' | '\'' | '`')) else {
                continue;
            };
            let body = &literal[1..];
            if !body.starts_with("http://") {
                continue;
            }
            let end = body
                .find(|c: char| c == open || c.is_whitespace() || (open == '`' && c == '$'))
                .unwrap_or(body.len());
            out.push(NetworkFinding {
                source_file: path.as_ref().to_owned(),
                line: text[..span.start].matches('\n').count() + 1,
                url: body[..end].to_owned(),
                scheme: UrlScheme::Http,
                kind: FindingKind::JsStringUrl,
            });
        }
    }
    out
}
