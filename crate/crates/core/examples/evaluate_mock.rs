//! Evaluates three mock "models" on the fixture suite with the reference
//! sandbox: one that always answers with the canonical solution, one that
//! answers nothing, and one that gets a task wrong. Then prints the report.
//!
//! Swap in `HarnessSandbox::new(&["python3".into(), "harness.py".into()])`
//! to execute the candidates for real.

use synthcode::adaptation::{PromptContext, PromptPlan};
use synthcode::endpoint::{CompletionFixture, FixtureCompletionEndpoint};
use synthcode::evaluation::{build_report, load_suite, run_suite, ReferenceSandbox, RunOptions};
use synthcode::ApproxTokenizer;

fn main() -> anyhow::Result<()> {
    let suite = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/suites/fixture_suite.jsonl");
    let tasks = load_suite(suite.as_ref())?;
    let sandbox = ReferenceSandbox::new(&tasks);
    let ctx = PromptContext::new(&[], &ApproxTokenizer, 2048);

    let answers = |wrong: Option<&str>| {
        FixtureCompletionEndpoint::new(
            tasks
                .iter()
                .map(|t| CompletionFixture {
                    prompt: t.prompt.clone(),
                    completion: if Some(t.task_id.as_str()) == wrong {
                        "    return None\n".into()
                    } else {
                        t.canonical_solution.clone().unwrap_or_default()
                    },
                })
                .collect(),
        )
    };
    let models = [
        ("empty", FixtureCompletionEndpoint::default()),
        ("canonical", answers(None)),
        ("one_wrong", answers(Some("fixture/2"))),
    ];

    let mut runs = Vec::new();
    for (label, model) in &models {
        let run = run_suite(&tasks, model, &PromptPlan::baseline(), &ctx, &sandbox, &RunOptions::new("fixture", *label))?;
        for t in &run.per_task {
            println!("{label:<10} {:<10} {:?} {}", t.task_id, t.status, t.error_class.as_deref().unwrap_or(""));
        }
        runs.push(run);
    }
    let report = build_report(&runs[0], &runs[1..])?;
    print!("\n{}", report.to_text());
    Ok(())
}
