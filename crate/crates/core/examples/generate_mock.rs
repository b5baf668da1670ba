//! Generates a small batch against canned teacher replies and prints what
//! came back: parsed samples, parse rejects and the token bill.
//!
//! Point `TeacherEndpointConfig::base_url` at a real OpenAI-compatible server
//! (and set an API key) to talk to an actual teacher instead.

use synthcode::generation::{generate_batch, ControlSampler, TeacherEndpointConfig, TopicCatalog};
use synthcode::{ApproxTokenizer, Domain, ValidationStatus};

fn main() -> anyhow::Result<()> {
    let fixtures = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/teacher/responses.jsonl");
    let cfg = TeacherEndpointConfig::new(format!("mock:{fixtures}"), "gpt-4o");
    let teacher = cfg.connect()?;

    let domain = Domain::python_general();
    let catalog = TopicCatalog::seeded(domain.clone(), &["strings", "dictionaries", "numeric code"]);
    let professions = ["bioinformatics", "accounting", "logistics"];
    let cvs = ControlSampler::new(&catalog, &professions)?.draw_many(42, 8)?;

    let outcome = generate_batch(teacher.as_ref(), &cfg, &domain, &cvs, &ApproxTokenizer, |sample, _log| {
        let first_line = sample.problem_statement.lines().next().unwrap_or("");
        match sample.validation_status {
            ValidationStatus::Rejected(reason) => println!("{} rejected ({reason})", sample.id),
            _ => println!("{} {:<14} {first_line}", sample.id, sample.control_vars.topic),
        }
    })?;
    println!(
        "\n{} samples, {} input + {} output tokens",
        outcome.generated, outcome.cost.input_tokens, outcome.cost.output_tokens
    );
    Ok(())
}
