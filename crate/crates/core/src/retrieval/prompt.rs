use super::RetrievalError;
use crate::exercise::{serialize_training_text, ExerciseSample};
use crate::tokenize::Tokenizer;

pub const EXAMPLE_HEADER: &str = "# Example\n";

/// Prepends serialized examples to `task`, each under a `# Example` header
/// and followed by one blank line. Examples are kept in the given (ranked)
/// order and dropped from the end until the prompt fits `budget` tokens.
pub fn assemble_prompt(
    task: &str,
    examples: &[&ExerciseSample],
    budget: usize,
    tokenizer: &dyn Tokenizer,
) -> Result<String, RetrievalError> {
    let task_tokens = tokenizer.count(task);
    if task_tokens > budget {
        return Err(RetrievalError::BudgetExceeded {
            needed: task_tokens,
            budget,
        });
    }
    let blocks = examples
        .iter()
        .map(|s| Ok(format!("{EXAMPLE_HEADER}{}\n", serialize_training_text(s)?)))
        .collect::<Result<Vec<_>, RetrievalError>>()?;

    let mut keep = blocks.len();
    loop {
        let prompt: String = blocks[..keep].concat() + task;
        if keep == 0 || tokenizer.count(&prompt) <= budget {
            return Ok(prompt);
        }
        keep -= 1;
    }
}

/// What a task is retrieved by: its first docstring when it has one (the
/// counterpart of a sample's problem statement), otherwise the whole text.
pub fn query_text(task: &str) -> &str {
    let open = [task.find("\"\"\""), task.find("'''")]
        .into_iter()
        .flatten()
        .min();
    if let Some(start) = open {
        let quote = &task[start..start + 3];
        let body = &task[start + 3..];
        if let Some(end) = body.find(quote) {
            let doc = body[..end].trim();
            if !doc.is_empty() {
                return doc;
            }
        }
    }
    task
}
