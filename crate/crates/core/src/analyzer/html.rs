//! Tolerant `<script>` element scanner for extension HTML pages.

use std::ops::Range;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScriptTag {
    /// Raw `src` attribute value, entity `&amp;` decoded.
    pub src: Option<String>,
    /// 1-based line of the opening tag.
    pub line: usize,
    /// Byte range of the element body, for inline scripts.
    pub body: Range<usize>,
}

fn starts_with_ci(hay: &[u8], at: usize, needle: &[u8]) -> bool {
    hay.get(at..at + needle.len()).is_some_and(|s| s.eq_ignore_ascii_case(needle))
}

fn find_ci(hay: &[u8], from: usize, needle: &[u8]) -> Option<usize> {
    (from..hay.len()).find(|&i| starts_with_ci(hay, i, needle))
}

/// Parses attributes from `bytes[start..]` up to the closing `>`.
/// Returns the attributes and the offset just past `>`.
fn parse_attributes(bytes: &[u8], mut i: usize) -> (Vec<(String, String)>, usize) {
    let mut attrs = Vec::new();
    loop {
        while i < bytes.len() && (bytes[i].is_ascii_whitespace() || bytes[i] == b'/') {
            i += 1;
        }
        if i >= bytes.len() {
            return (attrs, i);
        }
        if bytes[i] == b'>' {
            return (attrs, i + 1);
        }
        let name_start = i;
        while i < bytes.len() && !bytes[i].is_ascii_whitespace() && !matches!(bytes[i], b'=' | b'>' | b'/') {
            i += 1;
        }
        let name = String::from_utf8_lossy(&bytes[name_start..i]).to_ascii_lowercase();
        while i < bytes.len() && bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        let mut value = String::new();
        if i < bytes.len() && bytes[i] == b'=' {
            i += 1;
            while i < bytes.len() && bytes[i].is_ascii_whitespace() {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'"' || bytes[i] == b'\'') {
                let q = bytes[i];
                let vs = i + 1;
                let ve = (vs..bytes.len()).find(|&j| bytes[j] == q).unwrap_or(bytes.len());
                value = String::from_utf8_lossy(&bytes[vs..ve]).into_owned();
                i = (ve + 1).min(bytes.len());
            } else {
                let vs = i;
                while i < bytes.len() && !bytes[i].is_ascii_whitespace() && bytes[i] != b'>' {
                    i += 1;
                }
                value = String::from_utf8_lossy(&bytes[vs..i]).into_owned();
            }
        }
        if !name.is_empty() {
            attrs.push((name, value));
        }
    }
}

/// Finds every `<script>` element. HTML comments are skipped; unclosed
/// elements run to end of input.
pub fn script_tags(html: &str) -> Vec<ScriptTag> {
    let bytes = html.as_bytes();
    let mut tags = Vec::new();
    let mut line = 1;
    let mut counted = 0;
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] != b'<' {
            i += 1;
            continue;
        }
        if bytes[i..].starts_with(b"<!--") {
            i = find_ci(bytes, i + 4, b"-->").map_or(bytes.len(), |e| e + 3);
            continue;
        }
        let is_script = starts_with_ci(bytes, i + 1, b"script")
            && bytes.get(i + 7).is_none_or(|&b| b.is_ascii_whitespace() || b == b'>' || b == b'/');
        if !is_script {
            i += 1;
            continue;
        }
        line += bytes[counted..i].iter().filter(|&&b| b == b'\n').count();
        counted = i;
        let (attrs, open_end) = parse_attributes(bytes, i + 7);
        let close = find_ci(bytes, open_end, b"</script").unwrap_or(bytes.len());
        let src = attrs
            .into_iter()
            .find(|(n, _)| n == "src")
            .map(|(_, v)| v.trim().replace("&amp;", "&"));
        tags.push(ScriptTag { src, line, body: open_end..close });
        i = close.max(i + 1);
    }
    tags
}

/// Returns `html` with everything except inline script bodies blanked out,
/// preserving byte offsets and line breaks.
pub fn inline_script_view(html: &str) -> Option<String> {
    let tags = script_tags(html);
    let mut keep = vec![false; html.len()];
    let mut any = false;
    for tag in tags.iter().filter(|t| t.src.is_none()) {
        for k in &mut keep[tag.body.clone()] {
            *k = true;
        }
        any |= !tag.body.is_empty();
    }
    if !any {
        return None;
    }
    let out: Vec<u8> = html
        .bytes()
        .zip(keep)
        .map(|(b, k)| if k || b == b'\n' || b == b'\r' { b } else { b' ' })
        .collect();
    // non-ASCII bytes outside bodies are blanked whole; bodies start after `>`
    // and end before `<`, so characters are never split
    Some(String::from_utf8(out).expect("blanking preserves UTF-8"))
}
