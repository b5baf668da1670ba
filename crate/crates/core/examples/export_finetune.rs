//! Writes a LoRA fine-tune package (train.jsonl + manifest.json) for the
//! training split of a validated corpus.
//!
//! ```text
//! cargo run --example export_finetune -- out/ bigcode/starcoderbase-1b
//! ```

use std::path::PathBuf;

use synthcode::adaptation::{export_finetune_package, LoraExportConfig};
use synthcode::dataset::split;
use synthcode::exercise::Partition;
use synthcode::validation::{validate_corpus, ApiIndex};
use synthcode::SplitFractions;

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = args.next().map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("synthcode-finetune"));
    let base = args.next().unwrap_or_else(|| "bigcode/starcoderbase-1b".into());

    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/validation");
    let index = ApiIndex::load(format!("{dir}/api_index.json").as_ref())?;
    let raw = synthcode::dataset::load_samples(format!("{dir}/raw_corpus.jsonl").as_ref())?;
    let corpus = validate_corpus(raw, &index).valid;
    let s = split(&corpus, SplitFractions { train: 0.8, validation: 0.1, test: 0.1 }, 0)?;
    let train = s.select(Partition::Train, &corpus);

    let manifest = export_finetune_package(&train, &LoraExportConfig::new(base), &out)?;
    println!("{}", serde_json::to_string_pretty(&manifest)?);
    println!("\nwritten to {}", out.display());
    Ok(())
}
