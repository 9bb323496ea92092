//! Match patterns (`<scheme>://<host><path>` and `<all_urls>`).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub const ALL_URLS: &str = "<all_urls>";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Scheme {
    /// `*`: http or https.
    Any,
    Http,
    Https,
    File,
    Ftp,
}

impl Scheme {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "*" => Scheme::Any,
            "http" => Scheme::Http,
            "https" => Scheme::Https,
            "file" => Scheme::File,
            "ftp" => Scheme::Ftp,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Any => "*",
            Scheme::Http => "http",
            Scheme::Https => "https",
            Scheme::File => "file",
            Scheme::Ftp => "ftp",
        }
    }

    fn matches(self, scheme: &str) -> bool {
        match self {
            Scheme::Any => scheme == "http" || scheme == "https",
            other => other.as_str() == scheme,
        }
    }
}

/// Host component of a pattern. Any port text stays inside the literal.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum HostPattern {
    /// `*`
    Any,
    /// `*.suffix`: the suffix itself and all of its subdomains.
    Subdomains(String),
    Exact(String),
}

impl fmt::Display for HostPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HostPattern::Any => f.write_str("*"),
            HostPattern::Subdomains(s) => write!(f, "*.{s}"),
            HostPattern::Exact(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MatchPattern {
    AllUrls,
    Url {
        scheme: Scheme,
        host: HostPattern,
        /// Starts with `/`; `*` matches any run of characters.
        path: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PatternError {
    /// No `://` separator: the text is an API permission candidate.
    #[error("{0:?} is not a match pattern")]
    NotAPattern(String),
    #[error("invalid match pattern {text:?}: {reason}")]
    Invalid { text: String, reason: &'static str },
    #[error("malformed url {0:?}")]
    MalformedUrl(String),
}

pub fn parse_match_pattern(text: &str) -> Result<MatchPattern, PatternError> {
    if text == ALL_URLS {
        return Ok(MatchPattern::AllUrls);
    }
    let Some((scheme, rest)) = text.split_once("://") else {
        return Err(PatternError::NotAPattern(text.to_owned()));
    };
    let invalid = |reason| PatternError::Invalid { text: text.to_owned(), reason };
    let scheme = Scheme::parse(scheme).ok_or_else(|| invalid("unsupported scheme"))?;
    let slash = rest.find('/').ok_or_else(|| invalid("missing path"))?;
    let (host, path) = rest.split_at(slash);
    let host = if host.is_empty() {
        if scheme != Scheme::File {
            return Err(invalid("empty host"));
        }
        HostPattern::Exact(String::new())
    } else if host == "*" {
        HostPattern::Any
    } else if let Some(suffix) = host.strip_prefix("*.") {
        if suffix.is_empty() || suffix.contains('*') {
            return Err(invalid("bad wildcard host"));
        }
        HostPattern::Subdomains(suffix.to_owned())
    } else if host.contains('*') {
        return Err(invalid("wildcard must be the leading label"));
    } else {
        HostPattern::Exact(host.to_owned())
    };
    Ok(MatchPattern::Url { scheme, host, path: path.to_owned() })
}

impl fmt::Display for MatchPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MatchPattern::AllUrls => f.write_str(ALL_URLS),
            MatchPattern::Url { scheme, host, path } => {
                write!(f, "{}://{host}{path}", scheme.as_str())
            }
        }
    }
}

impl FromStr for MatchPattern {
    type Err = PatternError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_match_pattern(s)
    }
}

impl Serialize for MatchPattern {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for MatchPattern {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        parse_match_pattern(&s).map_err(serde::de::Error::custom)
    }
}

fn split_port(host: &str) -> (&str, Option<&str>) {
    match host.rsplit_once(':') {
        Some((h, p)) if !p.is_empty() && p.bytes().all(|b| b.is_ascii_digit()) => (h, Some(p)),
        _ => (host, None),
    }
}

fn host_matches(pattern: &HostPattern, host: &str, port: Option<u16>) -> bool {
    let host = host.to_ascii_lowercase();
    let check = |literal: &str, f: &dyn Fn(&str) -> bool| {
        let (h, p) = split_port(literal);
        let port_ok = p.is_none_or(|p| port.map(|u| u.to_string()).as_deref() == Some(p));
        port_ok && f(&h.to_ascii_lowercase())
    };
    match pattern {
        HostPattern::Any => true,
        HostPattern::Exact(lit) => check(lit, &|h| h == host),
        HostPattern::Subdomains(suffix) => check(suffix, &|s| {
            host == s || (host.len() > s.len() && host.ends_with(s) && host.as_bytes()[host.len() - s.len() - 1] == b'.')
        }),
    }
}

/// Glob match where `*` spans any run of characters (including none).
pub fn glob_match(glob: &str, text: &str) -> bool {
    let g = glob.as_bytes();
    let t = text.as_bytes();
    let (mut gi, mut ti) = (0, 0);
    let mut star: Option<(usize, usize)> = None;
    while ti < t.len() {
        if gi < g.len() && g[gi] == b'*' {
            star = Some((gi, ti));
            gi += 1;
        } else if gi < g.len() && g[gi] == t[ti] {
            gi += 1;
            ti += 1;
        } else if let Some((sg, st)) = star {
            gi = sg + 1;
            ti = st + 1;
            star = Some((sg, st + 1));
        } else {
            return false;
        }
    }
    g[gi..].iter().all(|&c| c == b'*')
}

/// Tests whether `url` falls under `pattern`. The path compared includes the
/// query string; the fragment is ignored.
pub fn match_url(pattern: &MatchPattern, url: &str) -> Result<bool, PatternError> {
    let parsed = url::Url::parse(url).map_err(|_| PatternError::MalformedUrl(url.to_owned()))?;
    let scheme = parsed.scheme();
    let host = parsed.host_str().unwrap_or("");
    if host.is_empty() && scheme != "file" {
        return Err(PatternError::MalformedUrl(url.to_owned()));
    }
    match pattern {
        MatchPattern::AllUrls => Ok(matches!(scheme, "http" | "https" | "file" | "ftp")),
        MatchPattern::Url { scheme: ps, host: ph, path } => {
            if !ps.matches(scheme) {
                return Ok(false);
            }
            if scheme != "file" && !host_matches(ph, host, parsed.port()) {
                return Ok(false);
            }
            let mut full_path = parsed.path().to_owned();
            if let Some(q) = parsed.query() {
                full_path.push('?');
                full_path.push_str(q);
            }
            Ok(glob_match(path, &full_path))
        }
    }
}
