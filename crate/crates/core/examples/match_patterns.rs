//! Parses host-permission match patterns and tests URLs against them.
//!
//! ```bash
//! cargo run -p extcheck --example match_patterns
//! ```

use extcheck::manifest::{match_url, parse_match_pattern};

fn main() {
    let patterns = ["<all_urls>", "*://*.example.com/*", "https://mail.example.com/inbox*", "file:///home/*", "http://*foo/"];
    let urls = [
        "https://example.com/",
        "http://a.b.example.com/x?y=1",
        "https://mail.example.com/inbox/42",
        "file:///home/user/notes.txt",
        "ftp://example.com/",
    ];
    for text in patterns {
        match parse_match_pattern(text) {
            Ok(p) => {
                let hits: Vec<&str> = urls.iter().copied().filter(|u| match_url(&p, u).unwrap_or(false)).collect();
                println!("{text:32} matches {hits:?}");
            }
            Err(e) => println!("{text:32} rejected: {e}"),
        }
    }
}
