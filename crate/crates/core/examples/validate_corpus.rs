//! Runs the syntax and API checks over a raw corpus and prints the
//! retention report plus the reason each rejected sample was dropped.
//!
//! ```text
//! cargo run --example validate_corpus [raw.jsonl] [api_index.json]
//! ```

use std::path::PathBuf;

use synthcode::dataset::load_samples;
use synthcode::validation::{validate_corpus, ApiIndex};

fn main() -> anyhow::Result<()> {
    let fixtures = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/validation");
    let mut args = std::env::args().skip(1).map(PathBuf::from);
    let corpus = args.next().unwrap_or_else(|| fixtures.join("raw_corpus.jsonl"));
    let index = args.next().unwrap_or_else(|| fixtures.join("api_index.json"));

    let index = ApiIndex::load(&index)?;
    let result = validate_corpus(load_samples(&corpus)?, &index);

    for r in &result.rejections {
        println!("{}  {:<22} {}", r.id, r.reason.to_string(), r.detail);
    }
    let rep = &result.report;
    println!(
        "\n{} total, {} syntax rejects, {} API rejects, {} valid: retention {:.1}%",
        rep.total,
        rep.syntactic_rejects,
        rep.semantic_rejects,
        rep.valid,
        rep.retention_rate * 100.0
    );
    Ok(())
}
