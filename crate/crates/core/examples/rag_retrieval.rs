//! Embeds a small corpus, retrieves the closest examples for a task and
//! prints the assembled retrieval-augmented prompt.
//!
//! The hashing embedder is a deterministic offline stand-in; configure an
//! `EmbeddingConfig` with an HTTP base URL to use a real sentence-embedding
//! service.

use synthcode::retrieval::{assemble_prompt, query_text, Embedder, HashingEmbedder, RetrievalConfig, VectorStore};
use synthcode::validation::{validate_corpus, ApiIndex};
use synthcode::ApproxTokenizer;

const TASK: &str = "def count_vowels(word):\n    \"\"\"Count the vowels in a DNA annotation word.\"\"\"\n";

fn main() -> anyhow::Result<()> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/validation");
    let index = ApiIndex::load(format!("{dir}/api_index.json").as_ref())?;
    let raw = synthcode::dataset::load_samples(format!("{dir}/raw_corpus.jsonl").as_ref())?;
    let corpus = validate_corpus(raw, &index).valid;

    let embedder = HashingEmbedder::default();
    let store = VectorStore::build(&embedder, &corpus.iter().collect::<Vec<_>>())?;
    let query = embedder.embed(&[query_text(TASK)])?.remove(0);

    let cfg = RetrievalConfig { k: 3, threshold: 0.0 };
    let hits = store.query_top_k(&query, &cfg)?;
    for h in &hits {
        let s = corpus.iter().find(|s| s.id == h.id).expect("hit is in the corpus");
        println!("{:.3}  {}", h.score, s.problem_statement);
    }
    let examples: Vec<_> = hits.iter().filter_map(|h| corpus.iter().find(|s| s.id == h.id)).collect();
    println!("\n{}", assemble_prompt(TASK, &examples, 1024, &ApproxTokenizer)?);
    Ok(())
}
