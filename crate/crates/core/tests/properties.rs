mod common;

use std::collections::HashSet;

use proptest::prelude::*;
use synthcode::dataset::split;
use synthcode::evaluation::{build_report, DecodeSettings, EvalRun};
use synthcode::adaptation::PromptPlan;
use synthcode::generation::parse_response;
use synthcode::retrieval::{cosine, EmbeddingVector, RetrievalConfig, VectorStore};
use synthcode::validation::{validate_sample, ApiIndex};
use synthcode::{serialize_training_text, ExerciseSample, SampleId, SplitFractions};

fn problem_line() -> impl Strategy<Value = String> {
    // prose with the characters that make quoting awkward
    "[A-Za-z0-9 ,.;:!?()'\"\\\\{}=_-]{1,50}"
}

fn problem() -> impl Strategy<Value = String> {
    prop::collection::vec(problem_line(), 1..6)
        .prop_map(|lines| lines.join("\n").trim().to_string())
        .prop_filter("non-empty", |p| !p.is_empty())
}

fn code() -> impl Strategy<Value = String> {
    (
        "[a-z][a-z_]{0,8}",
        "[a-z][a-z0-9_]{0,6}",
        0i64..1000,
        prop::sample::select(vec!["+", "-", "*", "//", "%"]),
        any::<bool>(),
        "[a-zA-Z0-9 ]{0,20}",
    )
        .prop_map(|(func, arg, n, op, with_import, text)| {
            let mut s = String::new();
            if with_import {
                s.push_str("import math\n\n\n");
            }
            // prefixes keep generated names clear of keywords
            let (func, arg) = (format!("fn_{func}"), format!("arg_{arg}"));
            s.push_str(&format!("def {func}({arg}):\n    # {text}\n    return {arg} {op} {n}\n\n\n"));
            s.push_str(&format!("print({func}({n}), \"{text}\")\n"));
            s
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn training_text_parses_back(problem in problem(), code in code()) {
        let sample = common::valid_sample(&problem, &code);
        let Ok(text) = serialize_training_text(&sample) else {
            // only unquotable statements may refuse to serialize
            prop_assert!(problem.contains("\"\"\"") && problem.contains("'''"));
            return Ok(());
        };
        let parsed = parse_response(&text).unwrap();
        prop_assert_eq!(&parsed.problem_statement, &sample.problem_statement);
        prop_assert_eq!(&parsed.code, &sample.code);
        // a fenced reply carrying the same text parses identically
        let fenced = parse_response(&format!("Sure!\n```python\n{text}```\nDone.")).unwrap();
        prop_assert_eq!(fenced, parsed);
    }
}

fn samples(n: usize) -> Vec<ExerciseSample> {
    (0..n)
        .map(|i| common::valid_sample(&format!("Problem {i}"), &format!("x = {i}\n")))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn split_is_a_seeded_partition(n in 0usize..3000, seed in any::<u64>(), rotate in 0usize..50) {
        let corpus = samples(n);
        let fractions = SplitFractions::default();
        let s = split(&corpus, fractions, seed).unwrap();
        let sizes = fractions.sizes(n);
        prop_assert_eq!((s.train.len(), s.validation.len(), s.test.len()), sizes);
        let all: HashSet<&SampleId> = s.train.iter().chain(&s.validation).chain(&s.test).collect();
        prop_assert_eq!(all.len(), n);
        prop_assert!(corpus.iter().all(|c| all.contains(&c.id)));

        // same seed, any input order: same split
        let mut shuffled = corpus.clone();
        if n > 0 {
            shuffled.rotate_left(rotate % n);
        }
        prop_assert_eq!(split(&shuffled, fractions, seed).unwrap(), s);
    }
}

/// Independent ranking: score everything, filter, sort by score then id.
fn oracle_top_k(query: &[f64], rows: &[(SampleId, Vec<f64>)], k: usize, threshold: f64) -> Vec<(SampleId, f64)> {
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let qn = dot(query, query).sqrt();
    let mut scored: Vec<(SampleId, f64)> = rows
        .iter()
        .map(|(id, v)| (id.clone(), dot(query, v) / (qn * dot(v, v).sqrt())))
        .filter(|(_, s)| *s >= threshold)
        .collect();
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    scored.truncate(k);
    scored
}

fn retrieval_case() -> impl Strategy<Value = (Vec<f64>, Vec<Vec<f64>>, Vec<usize>, usize, f64)> {
    prop::sample::select(vec![8usize, 384]).prop_flat_map(|dim| {
        (
            prop::collection::vec(-1.0f64..1.0, dim),
            prop::collection::vec((0.0f64..1.5, prop::collection::vec(-1.0f64..1.0, dim)), 1..40),
            // indices of rows to duplicate, which creates exact ties
            prop::collection::vec(0usize..40, 0..5),
            prop::sample::select(vec![1usize, 3, 10]),
            prop::sample::select(vec![-1.0f64, 0.5]),
        )
            .prop_map(|(q, rows, dups, k, t)| {
                // rows lean toward the query by varying amounts so that a 0.5
                // threshold keeps some of them
                let rows = rows
                    .into_iter()
                    .map(|(lean, noise)| q.iter().zip(&noise).map(|(a, b)| lean * a + 0.3 * b).collect())
                    .collect();
                (q, rows, dups, k, t)
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn top_k_matches_exhaustive_ranking((q, mut rows, dups, k, threshold) in retrieval_case()) {
        prop_assume!(q.iter().any(|x| *x != 0.0));
        for d in dups {
            let copy = rows[d % rows.len()].clone();
            rows.push(copy);
        }
        let dim = q.len();
        let mut store = VectorStore::new(dim, "test");
        let mut labelled = Vec::new();
        for (i, v) in rows.into_iter().enumerate() {
            if v.iter().all(|x| *x == 0.0) {
                continue;
            }
            let id = SampleId::new(format!("s{i:03}"));
            store.insert(EmbeddingVector::new(v.clone()).unwrap().with_source(id.clone())).unwrap();
            labelled.push((id, v));
        }
        let cfg = RetrievalConfig { k, threshold };
        let hits = store.query_top_k(&EmbeddingVector::new(q.clone()).unwrap(), &cfg).unwrap();
        let expected = oracle_top_k(&q, &labelled, k, threshold);
        prop_assert_eq!(hits.len(), expected.len());
        for (h, (id, score)) in hits.iter().zip(&expected) {
            prop_assert_eq!(&h.id, id);
            prop_assert!((h.score - score).abs() < 1e-9);
        }
        prop_assert!(hits.windows(2).all(|w| w[0].score >= w[1].score));
    }
}

fn nonzero_vec(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-100.0f64..100.0, dim).prop_filter("non-zero", |v| v.iter().any(|x| x.abs() > 1e-3))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn cosine_identities(
        (a, b) in (1usize..64).prop_flat_map(|d| (nonzero_vec(d), nonzero_vec(d))),
        scale in 1e-3f64..1e3,
    ) {
        let v = |x: &Vec<f64>| EmbeddingVector::new(x.clone()).unwrap();
        let ab = cosine(&v(&a), &v(&b)).unwrap();
        prop_assert!((cosine(&v(&a), &v(&a)).unwrap() - 1.0).abs() < 1e-9);
        prop_assert!((ab - cosine(&v(&b), &v(&a)).unwrap()).abs() < 1e-9);
        let scaled: Vec<f64> = a.iter().map(|x| x * scale).collect();
        prop_assert!((ab - cosine(&v(&scaled), &v(&b)).unwrap()).abs() < 1e-9);
        prop_assert!((-1.0..=1.0).contains(&ab));
    }
}

fn corpus() -> Vec<ExerciseSample> {
    let text = std::fs::read_to_string(common::fixture("validation/raw_corpus.jsonl")).unwrap();
    text.lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

#[derive(Clone, Debug)]
enum Growth {
    /// A new member on a module that already lists members.
    Attribute(usize, String),
    /// A new top-level module with some members.
    Root(String, Vec<String>),
}

fn growth() -> impl Strategy<Value = Growth> {
    let names = prop::sample::select(vec![
        "sqrt", "floor", "loads", "dumps", "Counter", "defaultdict", "join", "path", "randint", "zeros", "fit",
        "imread", "extra", "helper",
    ]);
    prop_oneof![
        (0usize..1000, names.clone()).prop_map(|(i, n)| Growth::Attribute(i, n.to_string())),
        (
            prop::sample::select(vec!["numpy", "pandas", "requests", "maths", "mylib", "sklearn"]),
            prop::collection::vec(names, 0..4)
        )
            .prop_map(|(r, ns)| Growth::Root(r.to_string(), ns.into_iter().map(String::from).collect())),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn growing_the_index_keeps_valid_samples_valid(steps in prop::collection::vec(growth(), 1..8)) {
        let base = ApiIndex::load(&common::fixture("validation/api_index.json")).unwrap();
        let mut grown = base.clone();
        for step in steps {
            match step {
                Growth::Attribute(i, name) => {
                    let listed: Vec<String> = grown
                        .entries
                        .iter()
                        .filter(|(_, l)| !l.is_empty())
                        .map(|(k, _)| k.clone())
                        .collect();
                    let module = listed[i % listed.len()].clone();
                    grown.insert(&module, [name]);
                }
                Growth::Root(root, names) => {
                    if !grown.contains_module(&root) {
                        grown.insert(&root, names);
                    }
                }
            }
        }
        for s in corpus() {
            if validate_sample(&s, &base).is_ok() {
                prop_assert!(validate_sample(&s, &grown).is_ok(), "{} lost validity", s.id);
            }
        }
    }
}

fn eval_run(label: &str, pass: f64, sim: Option<f64>) -> EvalRun {
    EvalRun {
        suite_id: "s".into(),
        label: label.into(),
        strategy: PromptPlan::baseline(),
        per_task: Vec::new(),
        pass_at_1: pass,
        mean_similarity: sim,
        decode: DecodeSettings { temperature: 0.0, max_tokens: 512 },
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn report_deltas_are_antisymmetric(a in 0.0f64..=1.0, b in 0.0f64..=1.0, sa in 0.0f64..=1.0, sb in 0.0f64..=1.0) {
        let (x, y) = (eval_run("x", a, Some(sa)), eval_run("y", b, Some(sb)));
        let forward = build_report(&x, std::slice::from_ref(&y)).unwrap();
        let backward = build_report(&y, std::slice::from_ref(&x)).unwrap();
        let (f, r) = (&forward.rows[1], &backward.rows[1]);
        prop_assert_eq!(f.pass_at_1_delta.unwrap(), -r.pass_at_1_delta.unwrap());
        prop_assert_eq!(f.similarity_delta.unwrap(), -r.similarity_delta.unwrap());
        prop_assert_eq!(build_report(&x, std::slice::from_ref(&x)).unwrap().rows[1].pass_at_1_delta.unwrap(), 0.0);
    }
}
