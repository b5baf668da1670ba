//! Corpus plumbing: deduplication, seeded train/validation/test splits and
//! length/library statistics.
//!
//! Token statistics use whatever [`Tokenizer`] is passed in and record its
//! name, since counts from the approximate tokenizer are not comparable with
//! a model's subword tokenizer.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::exercise::{DatasetSplit, ExerciseSample, SampleId, SplitFractions};
use crate::io::{self, IoError};
use crate::tokenize::Tokenizer;
use crate::validation::{extract_imports, validate_syntax};

/// Width of a length-histogram bucket, in tokens.
pub const HISTOGRAM_BUCKET: usize = 100;

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("split fractions must be finite and non-negative and sum to 1 (got {0:?})")]
    Fractions(SplitFractions),
    #[error(transparent)]
    Io(#[from] IoError),
}

pub fn load_samples(path: &Path) -> Result<Vec<ExerciseSample>, DatasetError> {
    Ok(io::read_jsonl(path)?)
}

pub fn save_samples(path: &Path, samples: &[ExerciseSample]) -> Result<(), DatasetError> {
    Ok(io::write_jsonl(path, samples)?)
}

/// Keeps the first sample per id.
pub fn dedup(samples: impl IntoIterator<Item = ExerciseSample>) -> Vec<ExerciseSample> {
    let mut seen = HashSet::new();
    samples
        .into_iter()
        .filter(|s| seen.insert(s.id.clone()))
        .collect()
}

impl SplitFractions {
    pub fn check(&self) -> Result<(), DatasetError> {
        let parts = [self.train, self.validation, self.test];
        let ok = parts.iter().all(|f| f.is_finite() && *f >= 0.0)
            && (parts.iter().sum::<f64>() - 1.0).abs() <= 1e-9;
        if ok {
            Ok(())
        } else {
            Err(DatasetError::Fractions(*self))
        }
    }

    /// `(train, validation, test)` sizes for `n` samples. Validation and test
    /// are rounded first (test is clamped so the sizes never exceed `n`) and
    /// train takes the remainder.
    pub fn sizes(&self, n: usize) -> (usize, usize, usize) {
        let validation = ((n as f64) * self.validation).round() as usize;
        let validation = validation.min(n);
        let test = (((n as f64) * self.test).round() as usize).min(n - validation);
        (n - validation - test, validation, test)
    }
}

/// Shuffles the ids with a seeded PRNG and cuts them into partitions. The
/// input order does not matter: ids are sorted before shuffling.
pub fn split(
    samples: &[ExerciseSample],
    fractions: SplitFractions,
    seed: u64,
) -> Result<DatasetSplit, DatasetError> {
    fractions.check()?;
    let mut ids: Vec<SampleId> = samples.iter().map(|s| s.id.clone()).collect();
    ids.sort();
    ids.dedup();
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (_, nv, nt) = fractions.sizes(ids.len());
    let test = ids.split_off(ids.len() - nt);
    let validation = ids.split_off(ids.len() - nv);
    Ok(DatasetSplit {
        train: ids,
        validation,
        test,
        seed,
        fractions,
    })
}

pub fn load_split(path: &Path) -> Result<DatasetSplit, DatasetError> {
    Ok(io::read_json(path)?)
}

pub fn save_split(path: &Path, split: &DatasetSplit) -> Result<(), DatasetError> {
    Ok(io::write_json(path, split)?)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistogramBucket {
    /// Inclusive lower bound in tokens.
    pub start: usize,
    /// Exclusive upper bound.
    pub end: usize,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub count: usize,
    /// Contiguous buckets of total token count, from 0 up to the longest
    /// sample.
    pub length_histogram: Vec<HistogramBucket>,
    pub mean_total_tokens: f64,
    pub mean_problem_tokens: f64,
    pub mean_code_tokens: f64,
    /// Root module -> number of samples importing it.
    pub import_frequency: BTreeMap<String, usize>,
    pub tokenizer: String,
}

/// Length and library statistics. Total tokens = problem + code tokens.
/// Samples whose code does not parse contribute no imports.
pub fn analyze(samples: &[ExerciseSample], tokenizer: &dyn Tokenizer) -> CorpusStats {
    let mut problem_sum = 0usize;
    let mut code_sum = 0usize;
    let mut buckets: BTreeMap<usize, usize> = BTreeMap::new();
    let mut import_frequency = BTreeMap::new();

    for s in samples {
        let p = tokenizer.count(&s.problem_statement);
        let c = tokenizer.count(&s.code);
        problem_sum += p;
        code_sum += c;
        *buckets.entry((p + c) / HISTOGRAM_BUCKET).or_default() += 1;

        if let Ok(tree) = validate_syntax(&s.code) {
            let roots: HashSet<String> = extract_imports(&tree)
                .into_iter()
                .filter(|r| !r.is_relative())
                .filter_map(|r| r.module_path.split('.').next().map(str::to_string))
                .collect();
            for root in roots {
                *import_frequency.entry(root).or_default() += 1;
            }
        }
    }

    let last = buckets.keys().next_back().copied();
    let length_histogram = last
        .map(|last| {
            (0..=last)
                .map(|b| HistogramBucket {
                    start: b * HISTOGRAM_BUCKET,
                    end: (b + 1) * HISTOGRAM_BUCKET,
                    count: buckets.get(&b).copied().unwrap_or(0),
                })
                .collect()
        })
        .unwrap_or_default();

    let n = samples.len();
    let mean = |sum: usize| if n == 0 { 0.0 } else { sum as f64 / n as f64 };
    CorpusStats {
        count: n,
        length_histogram,
        mean_total_tokens: mean(problem_sum + code_sum),
        mean_problem_tokens: mean(problem_sum),
        mean_code_tokens: mean(code_sum),
        import_frequency,
        tokenizer: tokenizer.name().to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exercise::{ControlVariables, Domain, Inclusion, SkillLevel, TokenCounts};
    use crate::tokenize::ApproxTokenizer;

    fn sample(problem: &str, code: &str) -> ExerciseSample {
        let cv = ControlVariables::new("t", "p", SkillLevel::Beginner, Inclusion::Excluded, Inclusion::Excluded)
            .unwrap();
        ExerciseSample::new(Domain::python_general(), cv, problem, code, "", TokenCounts::default())
    }

    fn corpus(n: usize) -> Vec<ExerciseSample> {
        (0..n).map(|i| sample(&format!("task {i}"), "x = 1")).collect()
    }

    #[test]
    fn dedup_keeps_first() {
        let s = sample("a", "b");
        assert_eq!(dedup([s.clone(), s.clone()]), vec![s]);
        assert_eq!(dedup(corpus(100)).len(), 100);
        let mut ten = corpus(7);
        ten.extend([ten[0].clone(), ten[3].clone(), ten[6].clone()]);
        assert_eq!(dedup(ten).len(), 7);
    }

    #[test]
    fn dedup_prefers_first_occurrence_metadata() {
        let a = sample("a", "b");
        let mut b = a.clone();
        b.raw_response = "second".into();
        assert_eq!(dedup([a.clone(), b])[0].raw_response, a.raw_response);
    }

    #[test]
    fn large_corpus_split_sizes() {
        assert_eq!(SplitFractions::default().sizes(20_052), (19_450, 201, 401));
    }

    #[test]
    fn split_sizes_clamp_when_rounding_overflows() {
        let f = SplitFractions { train: 0.0, validation: 0.5, test: 0.5 };
        // 0.5 rounds away from zero on both sides
        assert_eq!(f.sizes(1), (0, 1, 0));
        assert_eq!(f.sizes(3), (0, 2, 1));
    }

    #[test]
    fn split_is_deterministic_and_partitions() {
        let c = corpus(50);
        let a = split(&c, SplitFractions::default(), 9).unwrap();
        let mut rev = c.clone();
        rev.reverse();
        assert_eq!(a, split(&rev, SplitFractions::default(), 9).unwrap());
        assert_ne!(a.train, split(&c, SplitFractions::default(), 10).unwrap().train);
        let mut all: Vec<_> = a.train.iter().chain(&a.validation).chain(&a.test).cloned().collect();
        all.sort();
        let mut ids: Vec<_> = c.iter().map(|s| s.id.clone()).collect();
        ids.sort();
        assert_eq!(all, ids);
        assert_eq!((a.train.len(), a.validation.len(), a.test.len()), (48, 1, 1));
    }

    #[test]
    fn empty_split() {
        let s = split(&[], SplitFractions::default(), 1).unwrap();
        assert!(s.train.is_empty() && s.validation.is_empty() && s.test.is_empty());
    }

    #[test]
    fn bad_fractions() {
        for f in [
            SplitFractions { train: 0.9, validation: 0.05, test: 0.04 },
            SplitFractions { train: 1.1, validation: -0.1, test: 0.0 },
            SplitFractions { train: f64::NAN, validation: 0.0, test: 0.0 },
        ] {
            assert!(matches!(split(&corpus(3), f, 0), Err(DatasetError::Fractions(_))));
        }
    }

    struct Fixed;
    impl Tokenizer for Fixed {
        fn name(&self) -> &str {
            "fixed"
        }
        fn count(&self, text: &str) -> usize {
            if text.starts_with("problem") { 10 } else { 20 }
        }
    }

    #[test]
    fn means_of_one_sample() {
        let st = analyze(&[sample("problem", "code")], &Fixed);
        assert_eq!(
            (st.mean_total_tokens, st.mean_problem_tokens, st.mean_code_tokens),
            (30.0, 10.0, 20.0)
        );
        assert_eq!(st.tokenizer, "fixed");
        assert_eq!(st.length_histogram, vec![HistogramBucket { start: 0, end: 100, count: 1 }]);
    }

    #[test]
    fn hand_counted_histogram() {
        // ApproxTokenizer: each word run and each punctuation char is a token
        let word = |n: usize| vec!["w"; n].join(" ");
        let samples = vec![
            sample(&word(10), &word(20)),   // 30
            sample(&word(50), &word(49)),   // 99
            sample(&word(50), &word(50)),   // 100
            sample(&word(150), &word(100)), // 250
            sample(&word(1), "import os\nimport os.path\nimport numpy as np"), // 1 + 10
        ];
        let st = analyze(&samples, &ApproxTokenizer);
        let counts: Vec<usize> = st.length_histogram.iter().map(|b| b.count).collect();
        assert_eq!(counts, [3, 1, 1]);
        assert_eq!(counts.iter().sum::<usize>(), st.count);
        assert_eq!(st.import_frequency, BTreeMap::from([("numpy".into(), 1), ("os".into(), 1)]));
    }

    #[test]
    fn analyze_empty() {
        let st = analyze(&[], &ApproxTokenizer);
        assert_eq!(st.count, 0);
        assert!(st.length_histogram.is_empty());
        assert_eq!(st.mean_total_tokens, 0.0);
    }
}
