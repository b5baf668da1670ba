//! Splits a validated corpus with a fixed seed and prints corpus statistics.
//! Also shows the split sizes the rounding rule gives for a large corpus.

use synthcode::dataset::{analyze, split};
use synthcode::validation::{validate_corpus, ApiIndex};
use synthcode::{ApproxTokenizer, SplitFractions};

fn main() -> anyhow::Result<()> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/validation");
    let index = ApiIndex::load(format!("{dir}/api_index.json").as_ref())?;
    let raw = synthcode::dataset::load_samples(format!("{dir}/raw_corpus.jsonl").as_ref())?;
    let valid = validate_corpus(raw, &index).valid;

    let fractions = SplitFractions { train: 0.6, validation: 0.2, test: 0.2 };
    let s = split(&valid, fractions, 7)?;
    println!("train {:?}\nvalidation {:?}\ntest {:?}", s.train, s.validation, s.test);

    let stats = analyze(&valid, &ApproxTokenizer);
    println!("\n{} samples, mean {:.1} tokens ({})", stats.count, stats.mean_total_tokens, stats.tokenizer);
    for b in &stats.length_histogram {
        println!("  {:>4}-{:<4} {}", b.start, b.end, "#".repeat(b.count));
    }
    println!("imports: {:?}", stats.import_frequency);

    let (train, val, test) = SplitFractions::default().sizes(20_052);
    println!("\n20052 samples at 0.97/0.01/0.02 -> {train} / {val} / {test}");
    Ok(())
}
