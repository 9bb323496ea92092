//! Token-path matching of API namespaces over sanitized source.

use serde::{Deserialize, Serialize};

use super::apimap::ApiPermissionMap;
use super::sanitize::{sanitize_source, Sanitized};
use crate::manifest::ApiPermission;

/// Leading globals stripped before matching (`window.chrome.tabs`).
const GLOBAL_ALIASES: &[&str] = &["window", "self", "globalThis"];

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct UsageEvidence {
    pub permission: ApiPermission,
    pub file: String,
    pub line: usize,
    /// 1-based byte column.
    pub column: usize,
    pub api_path: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct UsageScan {
    pub evidence: Vec<UsageEvidence>,
    /// Dynamic code (`eval`, `Function(...)`, `chrome[...]`) was seen.
    pub indeterminate: bool,
    pub indeterminate_reasons: Vec<String>,
    /// Unterminated comments/literals, per file.
    pub warnings: Vec<String>,
}

fn is_ident_start(b: u8) -> bool {
    b.is_ascii_alphabetic() || b == b'_' || b == b'$' || b >= 0x80
}

fn is_ident(b: u8) -> bool {
    is_ident_start(b) || b.is_ascii_digit()
}

struct LineIndex(Vec<usize>);

impl LineIndex {
    fn new(text: &str) -> Self {
        let mut starts = vec![0];
        starts.extend(text.bytes().enumerate().filter(|(_, b)| *b == b'\n').map(|(i, _)| i + 1));
        Self(starts)
    }

    fn locate(&self, offset: usize) -> (usize, usize) {
        let line = self.0.partition_point(|&s| s <= offset);
        (line, offset - self.0[line - 1] + 1)
    }
}

fn skip_ws(b: &[u8], mut i: usize) -> usize {
    while i < b.len() && b[i].is_ascii_whitespace() {
        i += 1;
    }
    i
}

fn read_ident(b: &[u8], i: usize) -> Option<usize> {
    if i < b.len() && is_ident_start(b[i]) {
        let mut j = i + 1;
        while j < b.len() && is_ident(b[j]) {
            j += 1;
        }
        Some(j)
    } else {
        None
    }
}

fn prev_significant(b: &[u8], i: usize) -> Option<u8> {
    b[..i].iter().rev().copied().find(|c| !c.is_ascii_whitespace())
}

/// Scans one file's text. Evidence is only ever taken from unmasked code.
pub fn scan_file(path: &str, text: &str, map: &ApiPermissionMap, out: &mut UsageScan) -> Sanitized {
    let sanitized = sanitize_source(text);
    for u in &sanitized.unterminated {
        out.warnings.push(format!("{path}: unterminated {u}"));
    }
    let lines = LineIndex::new(text);
    let b = sanitized.masked.as_bytes();
    let mut i = 0;
    while i < b.len() {
        let c = b[i];
        if c.is_ascii_digit() {
            while i < b.len() && is_ident(b[i]) {
                i += 1;
            }
            continue;
        }
        if !is_ident_start(c) || prev_significant(b, i) == Some(b'.') {
            i += 1;
            continue;
        }
        let start = i;
        let mut segments: Vec<&str> = Vec::new();
        let mut end = read_ident(b, i).expect("identifier start");
        segments.push(&sanitized.masked[i..end]);
        let computed;
        loop {
            let j = skip_ws(b, end);
            let dot = if b.get(j) == Some(&b'.') {
                j + 1
            } else if b.get(j) == Some(&b'?') && b.get(j + 1) == Some(&b'.') {
                j + 2
            } else {
                computed = b.get(j) == Some(&b'[');
                break;
            };
            let k = skip_ws(b, dot);
            match read_ident(b, k) {
                Some(e) => {
                    segments.push(&sanitized.masked[k..e]);
                    end = e;
                }
                None => {
                    computed = b.get(k) == Some(&b'[');
                    break;
                }
            }
        }

        let stripped = match segments.first() {
            Some(first) if segments.len() > 1 && GLOBAL_ALIASES.contains(first) => &segments[1..],
            _ => &segments[..],
        };
        let after = skip_ws(b, end);
        let called = b.get(after) == Some(&b'(');
        let (line, column) = lines.locate(start);
        if stripped == ["chrome"] && computed {
            out.indeterminate = true;
            out.indeterminate_reasons.push(format!("{path}:{line}: computed access on chrome"));
        } else if (stripped == ["eval"] || stripped == ["Function"]) && called {
            out.indeterminate = true;
            out.indeterminate_reasons.push(format!("{path}:{line}: dynamic code via {}", stripped[0]));
        } else if let Some((api_path, permission)) = map.lookup(stripped) {
            out.evidence.push(UsageEvidence {
                permission: permission.clone(),
                file: path.to_owned(),
                line,
                column,
                api_path,
            });
        }
        i = end;
    }
    sanitized
}

/// Emits one [`UsageEvidence`] per occurrence of a mapped namespace in the
/// given files, ordered by (file, line, column).
pub fn scan_api_usage<P, T>(files: &[(P, T)], map: &ApiPermissionMap) -> UsageScan
where
    P: AsRef<str>,
    T: AsRef<str>,
{
    let mut out = UsageScan::default();
    for (path, text) in files {
        scan_file(path.as_ref(), text.as_ref(), map, &mut out);
    }
    out.evidence
        .sort_by(|a, b| (&a.file, a.line, a.column, &a.api_path).cmp(&(&b.file, b.line, b.column, &b.api_path)));
    out
}
