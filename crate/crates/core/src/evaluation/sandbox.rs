use std::io::{Read, Write};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use rustpython_parser::lexer::lex;
use rustpython_parser::{Mode, Tok};
use serde::{Deserialize, Serialize};

use super::suite::BenchmarkTask;
use crate::validation::validate_syntax;

pub const HARNESS_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskStatus {
    Passed,
    Failed,
    Timeout,
    Error,
}

/// Job sent to a sandbox; also the JSON the harness reads on stdin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SandboxJob {
    pub schema_version: u32,
    pub task_id: String,
    pub candidate_code: String,
    pub test_code: String,
    pub entry_point: String,
    /// Seconds.
    pub timeout: f64,
}

impl SandboxJob {
    pub fn new(task: &BenchmarkTask, candidate_code: String, timeout: Duration) -> Self {
        SandboxJob {
            schema_version: HARNESS_SCHEMA_VERSION,
            task_id: task.task_id.clone(),
            candidate_code,
            test_code: task.test_code.clone(),
            entry_point: task.entry_point.clone(),
            timeout: timeout.as_secs_f64(),
        }
    }
}

/// What the harness writes on stdout.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SandboxResult {
    pub status: TaskStatus,
    #[serde(default)]
    pub error_class: Option<String>,
    #[serde(default)]
    pub stderr_tail: String,
}

impl SandboxResult {
    pub fn passed() -> Self {
        SandboxResult {
            status: TaskStatus::Passed,
            error_class: None,
            stderr_tail: String::new(),
        }
    }

    pub fn with(status: TaskStatus, error_class: impl Into<String>, stderr_tail: impl Into<String>) -> Self {
        SandboxResult {
            status,
            error_class: Some(error_class.into()),
            stderr_tail: stderr_tail.into(),
        }
    }
}

/// Executes a candidate program against a task's tests. Infrastructure
/// failures are reported as `error` results, never as panics.
pub trait Sandbox: Send + Sync {
    fn name(&self) -> &str;
    fn execute(&self, job: &SandboxJob) -> SandboxResult;
}

/// Offline stand-in that needs no interpreter: a candidate passes when its
/// token stream equals that of the task's reference program (prompt plus
/// canonical solution). Whitespace inside lines and comments are ignored.
pub struct ReferenceSandbox {
    references: std::collections::HashMap<String, String>,
}

impl ReferenceSandbox {
    pub fn new(tasks: &[BenchmarkTask]) -> Self {
        ReferenceSandbox {
            references: tasks
                .iter()
                .filter_map(|t| Some((t.task_id.clone(), t.reference_program()?)))
                .collect(),
        }
    }
}

// the default lexer already drops comments and non-logical newlines
fn tokens(src: &str) -> Option<Vec<Tok>> {
    lex(src, Mode::Module).map(|r| r.ok().map(|(tok, _)| tok)).collect()
}

impl Sandbox for ReferenceSandbox {
    fn name(&self) -> &str {
        "reference"
    }

    fn execute(&self, job: &SandboxJob) -> SandboxResult {
        let Some(reference) = self.references.get(&job.task_id) else {
            return SandboxResult::with(TaskStatus::Error, "NoReference", "task has no canonical solution");
        };
        if let Err(e) = validate_syntax(&job.candidate_code) {
            return SandboxResult::with(TaskStatus::Error, "SyntaxError", e.to_string());
        }
        if tokens(&job.candidate_code) == tokens(reference) {
            SandboxResult::passed()
        } else {
            SandboxResult::with(TaskStatus::Failed, "ReferenceMismatch", "")
        }
    }
}

/// Runs an external harness command per job: the job JSON goes to stdin and
/// one result JSON object is read from stdout. The child is killed if it
/// outlives the job timeout plus `grace`.
pub struct HarnessSandbox {
    program: String,
    args: Vec<String>,
    grace: Duration,
}

/// Bytes of stderr kept when the harness output is unusable.
const STDERR_TAIL: usize = 2000;

impl HarnessSandbox {
    pub fn new(command: &[String]) -> Result<Self, super::EvalError> {
        let (program, args) = command
            .split_first()
            .ok_or_else(|| super::EvalError::Config("harness command is empty".into()))?;
        Ok(HarnessSandbox {
            program: program.clone(),
            args: args.to_vec(),
            grace: Duration::from_secs(1),
        })
    }

    pub fn with_grace(mut self, grace: Duration) -> Self {
        self.grace = grace;
        self
    }

    fn run(&self, job: &SandboxJob) -> Result<SandboxResult, String> {
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| format!("spawning {}: {e}", self.program))?;

        let payload = serde_json::to_vec(job).map_err(|e| e.to_string())?;
        let mut stdin = child.stdin.take().expect("piped stdin");
        // a harness that exits early closes the pipe; that shows up below
        let _ = stdin.write_all(&payload).and_then(|_| stdin.write_all(b"\n"));
        drop(stdin);

        let mut stdout = child.stdout.take().expect("piped stdout");
        let mut stderr = child.stderr.take().expect("piped stderr");
        let out_reader = std::thread::spawn(move || {
            let mut buf = Vec::new();
            let _ = stdout.read_to_end(&mut buf);
            buf
        });
        let err_reader = std::thread::spawn(move || {
            let mut buf = Vec::new();
            let _ = stderr.read_to_end(&mut buf);
            buf
        });

        let deadline = Instant::now() + Duration::from_secs_f64(job.timeout) + self.grace;
        let timed_out = loop {
            match child.try_wait().map_err(|e| e.to_string())? {
                Some(_) => break false,
                None if Instant::now() >= deadline => {
                    let _ = child.kill();
                    let _ = child.wait();
                    break true;
                }
                None => std::thread::sleep(Duration::from_millis(5)),
            }
        };
        if timed_out {
            // grandchildren may still hold the pipes open; leave the readers
            // to finish on their own
            return Ok(SandboxResult::with(TaskStatus::Timeout, "Timeout", ""));
        }
        let out = out_reader.join().unwrap_or_default();
        let err = err_reader.join().unwrap_or_default();
        let err = String::from_utf8_lossy(&err);
        let tail = tail(&err);
        let out = String::from_utf8_lossy(&out);
        serde_json::from_str::<SandboxResult>(out.trim())
            .ok()
            .or_else(|| {
                out.lines()
                    .rev()
                    .find(|l| !l.trim().is_empty())
                    .and_then(|l| serde_json::from_str(l).ok())
            })
            .ok_or_else(|| format!("harness wrote no result object; stderr: {tail}"))
    }
}

fn tail(s: &str) -> String {
    let start = s.len().saturating_sub(STDERR_TAIL);
    let start = (start..=s.len()).find(|&i| s.is_char_boundary(i)).unwrap_or(s.len());
    s[start..].to_string()
}

impl Sandbox for HarnessSandbox {
    fn name(&self) -> &str {
        &self.program
    }

    fn execute(&self, job: &SandboxJob) -> SandboxResult {
        self.run(job)
            .unwrap_or_else(|msg| SandboxResult::with(TaskStatus::Error, "HarnessError", msg))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::parse_suite;

    const FIXTURE: &str = include_str!("../../fixtures/suites/fixture_suite.jsonl");

    fn job(task: &BenchmarkTask, body: &str) -> SandboxJob {
        SandboxJob::new(task, format!("{}{body}", task.prompt), Duration::from_secs(1))
    }

    #[test]
    fn reference_sandbox_statuses() {
        let tasks = parse_suite(FIXTURE).unwrap();
        let sb = ReferenceSandbox::new(&tasks);
        let t = &tasks[0];
        assert_eq!(sb.execute(&job(t, "    return a + b\n")).status, TaskStatus::Passed);
        // spacing and comments do not matter
        assert_eq!(sb.execute(&job(t, "    return a+b  # sum\n\n")).status, TaskStatus::Passed);
        let r = sb.execute(&job(t, "    return a - b\n"));
        assert_eq!((r.status, r.error_class.as_deref()), (TaskStatus::Failed, Some("ReferenceMismatch")));
        let r = sb.execute(&job(t, "    return (a +\n"));
        assert_eq!((r.status, r.error_class.as_deref()), (TaskStatus::Error, Some("SyntaxError")));
        assert_eq!(sb.execute(&job(t, "")).status, TaskStatus::Failed);
        let mut other = t.clone();
        other.task_id = "unknown".into();
        assert_eq!(sb.execute(&job(&other, "")).status, TaskStatus::Error);
    }

    #[test]
    fn job_wire_format() {
        let tasks = parse_suite(FIXTURE).unwrap();
        let v = serde_json::to_value(job(&tasks[0], "    pass\n")).unwrap();
        let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
        assert_eq!(
            keys,
            ["candidate_code", "entry_point", "schema_version", "task_id", "test_code", "timeout"]
        );
        let r: SandboxResult = serde_json::from_str(r#"{"status": "timeout", "error_class": null, "stderr_tail": ""}"#).unwrap();
        assert_eq!(r.status, TaskStatus::Timeout);
    }

    #[test]
    fn harness_failures_become_errors() {
        let tasks = parse_suite(FIXTURE).unwrap();
        let sb = HarnessSandbox::new(&["/nonexistent/harness".to_string()]).unwrap();
        let r = sb.execute(&job(&tasks[0], ""));
        assert_eq!((r.status, r.error_class.as_deref()), (TaskStatus::Error, Some("HarnessError")));
        assert!(HarnessSandbox::new(&[]).is_err());
    }

    #[cfg(unix)]
    #[test]
    fn harness_protocol_with_shell_stubs() {
        let tasks = parse_suite(FIXTURE).unwrap();
        let sh = |script: &str| {
            HarnessSandbox::new(&["sh".into(), "-c".into(), script.into()])
                .unwrap()
                .with_grace(Duration::from_millis(200))
        };
        let passed = sh(r#"cat >/dev/null; echo 'noise'; echo '{"status":"passed","error_class":null,"stderr_tail":""}'"#);
        assert_eq!(passed.execute(&job(&tasks[0], "")).status, TaskStatus::Passed);

        let garbage = sh("cat >/dev/null; echo oops >&2; echo not-json");
        let r = garbage.execute(&job(&tasks[0], ""));
        assert_eq!(r.status, TaskStatus::Error);
        assert!(r.error_class.is_some());

        let mut j = job(&tasks[0], "");
        j.timeout = 0.1;
        let start = Instant::now();
        let r = sh("sleep 30").execute(&j);
        assert_eq!(r.status, TaskStatus::Timeout);
        assert!(start.elapsed() < Duration::from_secs(5));
    }
}
