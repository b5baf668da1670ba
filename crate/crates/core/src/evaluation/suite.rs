use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::sandbox::{Sandbox, SandboxJob, TaskStatus};
use super::EvalError;

/// One benchmark problem in the HumanEval JSONL layout.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchmarkTask {
    pub task_id: String,
    /// Function signature and docstring the model completes.
    pub prompt: String,
    pub entry_point: String,
    #[serde(rename = "test")]
    pub test_code: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub canonical_solution: Option<String>,
}

impl BenchmarkTask {
    /// The entry point must occur in the prompt, and the test must either
    /// name it or define `check` (HumanEval tests call `check(candidate)`
    /// and never spell out the entry point).
    pub fn check(&self) -> Result<(), String> {
        for (field, value) in [
            ("task_id", &self.task_id),
            ("prompt", &self.prompt),
            ("entry_point", &self.entry_point),
            ("test", &self.test_code),
        ] {
            if value.trim().is_empty() {
                return Err(format!("`{field}` is empty"));
            }
        }
        if !self.prompt.contains(&self.entry_point) {
            return Err(format!("entry point `{}` does not appear in the prompt", self.entry_point));
        }
        if !self.test_code.contains(&self.entry_point) && !self.test_code.contains("def check(") {
            return Err(format!(
                "test neither references `{}` nor defines check()",
                self.entry_point
            ));
        }
        Ok(())
    }

    /// Prompt plus canonical solution, if the task has one.
    pub fn reference_program(&self) -> Option<String> {
        self.canonical_solution
            .as_ref()
            .map(|s| format!("{}{}", self.prompt, s))
    }
}

/// Parses a suite file. Blank lines are skipped; every other line must be a
/// task object with the required fields. Errors name the 0-based record index.
pub fn load_suite(path: &Path) -> Result<Vec<BenchmarkTask>, EvalError> {
    let text = std::fs::read_to_string(path).map_err(|source| crate::io::IoError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_suite(&text)
}

pub fn parse_suite(text: &str) -> Result<Vec<BenchmarkTask>, EvalError> {
    let mut tasks = Vec::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let record = tasks.len();
        let task: BenchmarkTask =
            serde_json::from_str(line).map_err(|e| EvalError::Schema { record, message: e.to_string() })?;
        task.check()
            .map_err(|message| EvalError::Schema { record, message })?;
        tasks.push(task);
    }
    Ok(tasks)
}

/// Runs every canonical solution against its own test. Returns the ids (and
/// statuses) of tasks that do not pass; tasks without a solution are skipped.
pub fn verify_suite(
    tasks: &[BenchmarkTask],
    sandbox: &dyn Sandbox,
    timeout: Duration,
) -> Vec<(String, TaskStatus)> {
    tasks
        .iter()
        .filter_map(|t| {
            let program = t.reference_program()?;
            let result = sandbox.execute(&SandboxJob::new(t, program, timeout));
            (result.status != TaskStatus::Passed).then(|| (t.task_id.clone(), result.status))
        })
        .collect()
}
