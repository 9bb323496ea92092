//! Generates a planted corpus, scans it in parallel and renders the
//! extra-permission histogram as a table, CSV and SVG.
//!
//! ```bash
//! cargo run -p extcheck --example corpus_histogram [-- out_dir]
//! ```

use std::fs;
use std::path::PathBuf;

use extcheck::corpus::fixtures::generate_planted_corpus;
use extcheck::corpus::{render_histogram_svg, render_stats_csv, render_table, run_corpus, CorpusOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let tmp = tempfile::tempdir()?;
    let ledger = generate_planted_corpus(tmp.path(), 60, 7)?;
    let run = run_corpus(tmp.path(), &CorpusOptions { jobs: 4, ..CorpusOptions::default() })?;

    assert_eq!(run.stats.histogram, ledger.expected_histogram());
    print!("{}", render_table(&run.stats.histogram));
    println!(
        "scanned {}, violating {:.1}%, csp enforced {}, http scripts {}",
        run.stats.scanned,
        100.0 * run.stats.violating_fraction(),
        run.stats.csp_enforced,
        run.stats.http_script_extensions
    );

    let out = std::env::args_os().nth(1).map(PathBuf::from).unwrap_or_else(|| tmp.path().join("out"));
    fs::create_dir_all(&out)?;
    fs::write(out.join("stats.csv"), render_stats_csv(&run.stats))?;
    fs::write(out.join("histogram.svg"), render_histogram_svg(&run.stats.histogram, true))?;
    println!("wrote {}", out.display());
    Ok(())
}
