use rustpython_ast::{self as ast, Ranged};
use rustpython_parser::{parse, Mode};

use super::EvalError;
use crate::adaptation::{realize_prompt, PromptContext, PromptPlan};
use crate::endpoint::{CompletionEndpoint, CompletionRequest};
use crate::exercise::{docstring_block, ExerciseSample};
use crate::retrieval::{cosine, Embedder, RetrievalError};

fn docstring_range(body: &[ast::Stmt]) -> Option<(usize, usize)> {
    match body.first()? {
        ast::Stmt::Expr(e) if matches!(&*e.value, ast::Expr::Constant(c) if matches!(c.value, ast::Constant::Str(_))) => {
            Some((e.range().start().to_usize(), e.range().end().to_usize()))
        }
        _ => None,
    }
}

fn collect_docstrings(body: &[ast::Stmt], out: &mut Vec<(usize, usize)>) {
    out.extend(docstring_range(body));
    for stmt in body {
        match stmt {
            ast::Stmt::FunctionDef(f) => collect_docstrings(&f.body, out),
            ast::Stmt::AsyncFunctionDef(f) => collect_docstrings(&f.body, out),
            ast::Stmt::ClassDef(c) => collect_docstrings(&c.body, out),
            _ => {}
        }
    }
}

/// Removes module, class and function docstrings. A docstring alone on its
/// lines takes those lines with it. Code that does not parse is returned
/// unchanged.
pub fn strip_docstrings(code: &str) -> String {
    let Ok(ast::Mod::Module(module)) = parse(code, Mode::Module, "<similarity>") else {
        return code.to_string();
    };
    let mut ranges = Vec::new();
    collect_docstrings(&module.body, &mut ranges);
    ranges.sort();
    let mut out = String::with_capacity(code.len());
    let mut pos = 0;
    for (mut start, mut end) in ranges {
        let line_start = code[..start].rfind('\n').map_or(0, |i| i + 1);
        if code[line_start..start].trim().is_empty() {
            start = line_start;
        }
        let line_end = code[end..].find('\n').map_or(code.len(), |i| end + i + 1);
        if code[end..line_end].trim().is_empty() {
            end = line_end;
        }
        out.push_str(&code[pos..start]);
        pos = end;
    }
    out.push_str(&code[pos..]);
    out
}

/// Mean pairwise cosine between `generated[i]` and `references[i]`, each
/// embedded without docstrings. A pair where either side embeds to the zero
/// vector (e.g. an empty completion) scores 0.
pub fn similarity_eval(generated: &[&str], references: &[&str], embedder: &dyn Embedder) -> Result<f64, EvalError> {
    if generated.len() != references.len() {
        return Err(EvalError::LengthMismatch {
            generated: generated.len(),
            references: references.len(),
        });
    }
    if generated.is_empty() {
        return Err(EvalError::Config("similarity needs at least one pair".into()));
    }
    let strip = |texts: &[&str]| texts.iter().map(|t| strip_docstrings(t)).collect::<Vec<_>>();
    let (gen, refs) = (strip(generated), strip(references));
    let embed = |texts: &[String]| embedder.embed(&texts.iter().map(String::as_str).collect::<Vec<_>>());
    let (gv, rv) = (embed(&gen)?, embed(&refs)?);
    let mut total = 0.0;
    for (g, r) in gv.iter().zip(&rv) {
        total += match cosine(g, r) {
            Ok(c) => c,
            Err(RetrievalError::ZeroNorm) => 0.0,
            Err(e) => return Err(e.into()),
        };
    }
    Ok(total / gv.len() as f64)
}

/// Similarity over a dataset split (validation or test): each sample's
/// problem statement, as a docstring, is the task; the model's completion
/// is compared to the sample's code.
pub fn split_similarity(
    samples: &[&ExerciseSample],
    model: &dyn CompletionEndpoint,
    plan: &PromptPlan,
    ctx: &PromptContext<'_>,
    embedder: &dyn Embedder,
    max_tokens: u32,
) -> Result<f64, EvalError> {
    let mut generated = Vec::with_capacity(samples.len());
    for s in samples {
        let task = docstring_block(&s.problem_statement)
            .ok_or_else(|| EvalError::Config(format!("sample {} cannot be quoted as a docstring", s.id)))?
            + "\n";
        let prompt = realize_prompt(plan, &task, ctx)?;
        generated.push(model.complete(&CompletionRequest {
            prompt,
            max_tokens,
            temperature: 0.0,
        })?);
    }
    let gen: Vec<&str> = generated.iter().map(String::as_str).collect();
    let refs: Vec<&str> = samples.iter().map(|s| s.code.as_str()).collect();
    similarity_eval(&gen, &refs, embedder)
}
