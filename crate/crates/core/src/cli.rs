//! The `synthcode` command: one subcommand per pipeline stage, all sharing a
//! [`PipelineConfig`].
//!
//! Exit codes: 0 on success, 1 when a stage fails while running, 2 for usage
//! and configuration errors (including input files that do not exist).
//! Logs go to stderr; data goes to the files named on the command line. The
//! exceptions are `generate --dry-run`, which prints the rendered prompts,
//! and `report`, which prints the table.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Duration;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};

use crate::adaptation::{
    build_prompt_plan, export_finetune_package, LoraExportConfig, PromptContext, PromptPlan, StoreRef, Strategy,
};
use crate::config::{PipelineConfig, SandboxKind};
use crate::dataset::{analyze, load_samples, load_split, save_samples, save_split, split};
use crate::evaluation::{
    build_report, load_suite, run_suite, split_similarity, verify_suite, EvalRun, HarnessSandbox, ReferenceSandbox,
    RunOptions, Sandbox,
};
use crate::exercise::{ExerciseSample, Partition};
use crate::generation::{expand_topics, generate_batch, render_prompt, ControlSampler, TopicCatalog};
use crate::io;
use crate::retrieval::{Embedder, RetrievalConfig, VectorStore};
use crate::tokenize::ApproxTokenizer;
use crate::validation::{validate_corpus, ApiIndex};

#[derive(Parser, Debug)]
#[command(name = "synthcode", version, about = "Synthetic exercise distillation and code-model adaptation pipeline")]
pub struct Cli {
    /// Pipeline configuration (TOML). Defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Cap on concurrent workers for every stage.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Log level for stderr (error, warn, info, debug, trace).
    #[arg(long, global = true, default_value = "info")]
    pub log_level: String,
    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Subcommand, Debug)]
pub enum Cmd {
    /// Ask the teacher for exercises over sampled control variables.
    Generate {
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        count: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Teacher-suggested subtopics per seed topic (0: seeds only).
        #[arg(long, default_value_t = 0)]
        expand_topics: usize,
        /// Request log (JSONL, one entry per sample).
        #[arg(long)]
        log: Option<PathBuf>,
        /// Print the rendered prompts and exit without contacting the teacher.
        #[arg(long)]
        dry_run: bool,
    },
    /// Two-stage validation against an API index.
    Validate {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        index: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Report JSON; defaults to `<out>.report.json`.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Length histogram, token means and library frequencies.
    Analyze {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Seeded train/validation/test split of a corpus.
    Split {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Build an API index with the configured external introspector.
    IndexBuild {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        depth: Option<usize>,
        /// Packages to introspect (default: from the config file).
        packages: Vec<String>,
    },
    /// Embed a corpus partition into a vector store.
    Embed {
        #[arg(long = "in")]
        input: PathBuf,
        /// Split file; when given only `--partition` is embedded.
        #[arg(long)]
        split: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Partition::Train)]
        partition: Partition,
        #[arg(long)]
        out: PathBuf,
    },
    /// Freeze a prompting strategy into a plan file.
    Plan {
        #[arg(long, value_enum)]
        strategy: Strategy,
        #[arg(long)]
        split: Option<PathBuf>,
        /// Vector store (rag plans).
        #[arg(long)]
        store: Option<PathBuf>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a LoRA training package for an external trainer.
    ExportFinetune {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        split: PathBuf,
        #[arg(long)]
        base_model: String,
        #[arg(long, default_value_t = 128)]
        rank: u32,
        #[arg(long, default_value_t = 128)]
        alpha: u32,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a benchmark suite (Pass@1), optionally scoring split similarity.
    Evaluate {
        #[arg(long)]
        suite: PathBuf,
        /// Model name from the `[models]` config section.
        #[arg(long)]
        model: String,
        /// Plan file; baseline when omitted.
        #[arg(long)]
        plan: Option<PathBuf>,
        /// Corpus that plan examples and similarity references come from.
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Overrides the plan's store path.
        #[arg(long)]
        store: Option<PathBuf>,
        #[arg(long)]
        split: Option<PathBuf>,
        /// Also score embedding similarity on this split partition.
        #[arg(long, value_enum)]
        similarity: Option<Partition>,
        #[arg(long, value_enum)]
        sandbox: Option<SandboxKind>,
        /// Run every canonical solution first and stop if any fails.
        #[arg(long)]
        verify_suite: bool,
        #[arg(long)]
        suite_id: Option<String>,
        /// Row name in reports; defaults to the plan strategy.
        #[arg(long)]
        label: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Delta table of variant runs against a baseline run.
    Report {
        #[arg(long)]
        baseline: PathBuf,
        #[arg(long = "variant")]
        variants: Vec<PathBuf>,
        /// Writes `<out>.json`, `<out>.txt` and `<out>.csv`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Errors that map to exit code 2.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(String);

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let _ = env_logger::Builder::new()
        .parse_filters(&cli.log_level)
        .format_timestamp(None)
        .try_init();
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            log::error!("{e:#}");
            let config_error = e.downcast_ref::<UsageError>().is_some()
                || e.downcast_ref::<crate::config::ConfigError>().is_some();
            if config_error {
                2
            } else {
                1
            }
        }
    }
}

fn require(path: &Path) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(usage(format!("{}: no such file", path.display())))
    }
}

fn require_store(path: &Path) -> Result<()> {
    let (bin, json) = crate::retrieval::store_paths(path);
    require(&bin)?;
    require(&json)
}

fn pick<'a>(flag: Option<&'a Path>, configured: Option<&'a Path>, what: &str) -> Result<&'a Path> {
    flag.or(configured)
        .ok_or_else(|| usage(format!("no {what} given on the command line or in the config")))
}

pub fn run(cli: Cli) -> Result<()> {
    let mut cfg = PipelineConfig::load(cli.config.as_deref())?;
    if let Some(j) = cli.jobs {
        if j == 0 {
            return Err(usage("--jobs must be at least 1"));
        }
        cfg.jobs = j;
    }
    cfg.teacher.concurrency = cfg.teacher.concurrency.min(cfg.jobs);
    // rayon's global pool backs corpus validation
    let _ = rayon::ThreadPoolBuilder::new().num_threads(cfg.jobs).build_global();

    match cli.command {
        Cmd::Generate {
            out,
            count,
            seed,
            expand_topics: per_topic,
            log,
            dry_run,
        } => generate(&cfg, out, count, seed, per_topic, log, dry_run),
        Cmd::Validate {
            input,
            index,
            out,
            report,
        } => {
            require(&input)?;
            let index_path = pick(index.as_deref(), cfg.paths.index.as_deref(), "API index")?;
            require(index_path)?;
            let index = ApiIndex::load(index_path)?;
            let samples = load_samples(&input)?;
            let result = validate_corpus(samples, &index);
            save_samples(&out, &result.valid)?;
            let report_path = report.unwrap_or_else(|| suffixed(&out, ".report.json"));
            io::write_json(&report_path, &result.report_json())?;
            let r = &result.report;
            log::info!(
                "{} samples: {} syntactic rejects, {} semantic rejects, {} valid, retention {:.1}%",
                r.total,
                r.syntactic_rejects,
                r.semantic_rejects,
                r.valid,
                r.retention_rate * 100.0
            );
            Ok(())
        }
        Cmd::Analyze { input, out } => {
            require(&input)?;
            let stats = analyze(&load_samples(&input)?, &ApproxTokenizer);
            io::write_json(&out, &stats)?;
            log::info!("{} samples, mean {:.1} tokens", stats.count, stats.mean_total_tokens);
            Ok(())
        }
        Cmd::Split { input, out, seed } => {
            require(&input)?;
            let seed = seed.or(cfg.split.seed).unwrap_or(cfg.seed);
            let s = split(&load_samples(&input)?, cfg.split.fractions, seed)?;
            save_split(&out, &s)?;
            log::info!(
                "train {} / validation {} / test {} (seed {seed})",
                s.train.len(),
                s.validation.len(),
                s.test.len()
            );
            Ok(())
        }
        Cmd::IndexBuild { out, depth, packages } => index_build(&cfg, &out, depth, packages),
        Cmd::Embed {
            input,
            split,
            partition,
            out,
        } => {
            require(&input)?;
            let corpus = load_samples(&input)?;
            let selected: Vec<&ExerciseSample> = match &split {
                Some(p) => {
                    require(p)?;
                    load_split(p)?.select(partition, &corpus)
                }
                None => corpus.iter().collect(),
            };
            let embedder = cfg.embedding.connect();
            let store = VectorStore::build(embedder.as_ref(), &selected)?;
            store.save(&out)?;
            log::info!("embedded {} samples with {}", store.len(), store.embedder());
            Ok(())
        }
        Cmd::Plan {
            strategy,
            split,
            store,
            k,
            threshold,
            seed,
            out,
        } => {
            let retrieval = RetrievalConfig {
                k: k.unwrap_or(cfg.retrieval.k),
                threshold: threshold.unwrap_or(cfg.retrieval.threshold),
            };
            let train = match &split {
                Some(p) => {
                    require(p)?;
                    load_split(p)?.train
                }
                None if strategy == Strategy::FewShot => return Err(usage("few_shot plans need --split")),
                None => Vec::new(),
            };
            // a rag plan draws from the store, not the split
            let (store_ref, pool) = match strategy {
                Strategy::Rag => {
                    let path = pick(store.as_deref(), cfg.paths.store.as_deref(), "vector store")?;
                    require_store(path)?;
                    let s = VectorStore::load(path)?;
                    let r = StoreRef {
                        path: path.display().to_string(),
                        embedder: s.embedder().to_string(),
                        count: s.len(),
                    };
                    (Some(r), s.ids().to_vec())
                }
                _ => (None, train),
            };
            let plan = build_prompt_plan(strategy, &pool, &retrieval, seed.unwrap_or(cfg.seed), store_ref)?;
            io::write_json(&out, &plan)?;
            Ok(())
        }
        Cmd::ExportFinetune {
            input,
            split,
            base_model,
            rank,
            alpha,
            out,
        } => {
            require(&input)?;
            require(&split)?;
            let corpus = load_samples(&input)?;
            let train = load_split(&split)?.select(Partition::Train, &corpus);
            let mut lora = LoraExportConfig::new(base_model);
            lora.rank_r = rank;
            lora.alpha = alpha;
            lora.trainable_param_estimate = lora.known_estimate();
            let m = export_finetune_package(&train, &lora, &out)?;
            log::info!("exported {} samples, digest {}", m.sample_count, m.content_digest);
            Ok(())
        }
        Cmd::Evaluate {
            suite,
            model,
            plan,
            corpus,
            store,
            split,
            similarity,
            sandbox,
            verify_suite: verify,
            suite_id,
            label,
            out,
        } => {
            let args = EvaluateArgs {
                suite,
                model,
                plan,
                corpus,
                store,
                split,
                similarity,
                sandbox,
                verify,
                suite_id,
                label,
                out,
            };
            evaluate(&cfg, args)
        }
        Cmd::Report { baseline, variants, out } => {
            require(&baseline)?;
            for v in &variants {
                require(v)?;
            }
            let base: EvalRun = io::read_json(&baseline)?;
            let runs = variants
                .iter()
                .map(|p| io::read_json::<EvalRun>(p))
                .collect::<Result<Vec<_>, _>>()?;
            let report = build_report(&base, &runs)?;
            let text = report.to_text();
            if let Some(out) = out {
                io::write_json(&suffixed(&out, ".json"), &report)?;
                io::write_atomic(&suffixed(&out, ".txt"), text.as_bytes())?;
                io::write_atomic(&suffixed(&out, ".csv"), report.to_csv()?.as_bytes())?;
            }
            print!("{text}");
            Ok(())
        }
    }
}

fn suffixed(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn generate(
    cfg: &PipelineConfig,
    out: Option<PathBuf>,
    count: Option<usize>,
    seed: Option<u64>,
    per_topic: usize,
    log_path: Option<PathBuf>,
    dry_run: bool,
) -> Result<()> {
    let seeds = if cfg.generation.topics.is_empty() {
        vec![cfg.domain.name().replace('_', " ")]
    } else {
        cfg.generation.topics.clone()
    };
    let count = count.unwrap_or(cfg.generation.count);
    let seed = seed.unwrap_or(cfg.seed);

    if dry_run {
        let catalog = TopicCatalog::seeded(cfg.domain.clone(), &seeds);
        let sampler = ControlSampler::new(&catalog, &cfg.generation.professions)?;
        for (i, cv) in sampler.draw_many(seed, count)?.iter().enumerate() {
            if i > 0 {
                println!();
            }
            println!("### prompt {}", i + 1);
            print!("{}", render_prompt(cv));
        }
        return Ok(());
    }

    let out = pick(out.as_deref(), cfg.paths.corpus.as_deref(), "output corpus")?;
    let teacher = cfg.teacher.connect()?;
    let catalog = if per_topic > 0 {
        expand_topics(cfg.domain.clone(), &seeds, teacher.as_ref(), &cfg.teacher, per_topic)?
    } else {
        TopicCatalog::seeded(cfg.domain.clone(), &seeds)
    };
    let sampler = ControlSampler::new(&catalog, &cfg.generation.professions)?;
    let cvs = sampler.draw_many(seed, count)?;
    let mut samples = Vec::with_capacity(cvs.len());
    let mut logs = Vec::with_capacity(cvs.len());
    let outcome = generate_batch(teacher.as_ref(), &cfg.teacher, &cfg.domain, &cvs, &ApproxTokenizer, |s, l| {
        samples.push(s);
        logs.push(l);
    })?;
    save_samples(out, &samples)?;
    if let Some(p) = log_path {
        io::write_jsonl(&p, &logs)?;
    }
    let c = outcome.cost;
    log::info!(
        "{} samples, {} failed requests; {} input / {} output tokens",
        outcome.generated,
        outcome.failures.len(),
        c.input_tokens,
        c.output_tokens
    );
    if !outcome.failures.is_empty() && outcome.generated == 0 {
        bail!("every teacher request failed");
    }
    Ok(())
}

fn index_build(cfg: &PipelineConfig, out: &Path, depth: Option<usize>, packages: Vec<String>) -> Result<()> {
    let packages = if packages.is_empty() {
        cfg.index.packages.clone()
    } else {
        packages
    };
    if packages.is_empty() {
        return Err(usage("no packages given on the command line or in the config"));
    }
    let (program, base_args) = cfg
        .index
        .command
        .split_first()
        .ok_or_else(|| usage("index.command is empty"))?;
    let depth = depth.unwrap_or(cfg.index.depth);
    let status = Command::new(program)
        .args(base_args)
        .arg("--depth")
        .arg(depth.to_string())
        .arg("--out")
        .arg(out)
        .args(&packages)
        .status()
        .with_context(|| format!("running {program}"))?;
    if !status.success() {
        bail!("index builder exited with {status}");
    }
    let index = ApiIndex::load(out).context("reading the index the builder wrote")?;
    log::info!(
        "index with {} modules ({} failed packages)",
        index.entries.len(),
        index.failed.len()
    );
    Ok(())
}

struct EvaluateArgs {
    suite: PathBuf,
    model: String,
    plan: Option<PathBuf>,
    corpus: Option<PathBuf>,
    store: Option<PathBuf>,
    split: Option<PathBuf>,
    similarity: Option<Partition>,
    sandbox: Option<SandboxKind>,
    verify: bool,
    suite_id: Option<String>,
    label: Option<String>,
    out: PathBuf,
}

fn evaluate(cfg: &PipelineConfig, a: EvaluateArgs) -> Result<()> {
    require(&a.suite)?;
    let model = cfg.model(&a.model)?.connect()?;
    let plan: PromptPlan = match &a.plan {
        Some(p) => {
            require(p)?;
            io::read_json(p)?
        }
        None => PromptPlan::baseline(),
    };
    plan.check().map_err(|e| usage(e.to_string()))?;
    let needs_corpus = plan.strategy != Strategy::Baseline || a.similarity.is_some();
    let corpus = match &a.corpus {
        Some(p) => {
            require(p)?;
            load_samples(p)?
        }
        None if needs_corpus => return Err(usage("this plan or --similarity needs --corpus")),
        None => Vec::new(),
    };

    let embedder = cfg.embedding.connect();
    let store = match plan.strategy {
        Strategy::Rag => {
            let path = a
                .store
                .clone()
                .or_else(|| plan.store_ref.as_ref().map(|s| PathBuf::from(&s.path)))
                .ok_or_else(|| usage("rag plan has no store"))?;
            require_store(&path)?;
            let s = VectorStore::load(&path)?;
            if s.embedder() != embedder.name() {
                return Err(usage(format!(
                    "store was built with `{}` but the configured embedder is `{}`",
                    s.embedder(),
                    embedder.name()
                )));
            }
            Some(s)
        }
        _ => None,
    };
    let tokenizer = ApproxTokenizer;
    let mut ctx = PromptContext::new(&corpus, &tokenizer, cfg.evaluation.prompt_budget);
    if let Some(s) = &store {
        ctx = ctx.with_retrieval(s, embedder.as_ref() as &dyn Embedder);
    }

    let tasks = load_suite(&a.suite)?;
    let timeout = Duration::from_secs_f64(cfg.evaluation.timeout_secs);
    let sandbox: Box<dyn Sandbox> = match a.sandbox.unwrap_or(cfg.evaluation.sandbox) {
        SandboxKind::Reference => Box::new(ReferenceSandbox::new(&tasks)),
        SandboxKind::Harness => Box::new(HarnessSandbox::new(&cfg.evaluation.harness_command)?),
    };
    if a.verify {
        let broken = verify_suite(&tasks, sandbox.as_ref(), timeout);
        if !broken.is_empty() {
            let ids: Vec<&str> = broken.iter().map(|(id, _)| id.as_str()).collect();
            bail!("canonical solutions fail their own tests: {}", ids.join(", "));
        }
    }

    let suite_id = a.suite_id.unwrap_or_else(|| {
        a.suite
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    });
    let mut opts = RunOptions::new(suite_id, a.label.unwrap_or_else(|| plan.strategy.to_string()));
    opts.timeout = timeout;
    opts.max_tokens = cfg.evaluation.max_tokens;
    opts.workers = cfg.jobs;
    opts.truncate = cfg.evaluation.truncate;
    let mut run = run_suite(&tasks, model.as_ref(), &plan, &ctx, sandbox.as_ref(), &opts)?;

    if let Some(partition) = a.similarity {
        let split_path = a.split.as_deref().ok_or_else(|| usage("--similarity needs --split"))?;
        require(split_path)?;
        let refs = load_split(split_path)?.select(partition, &corpus);
        if refs.is_empty() {
            return Err(anyhow!("the {partition:?} partition has no samples in the corpus"));
        }
        run.mean_similarity = Some(split_similarity(
            &refs,
            model.as_ref(),
            &plan,
            &ctx,
            embedder.as_ref(),
            cfg.evaluation.max_tokens,
        )?);
    }
    io::write_json(&a.out, &run)?;
    log::info!(
        "{}: Pass@1 {:.1}% ({}/{})",
        run.label,
        run.pass_at_1 * 100.0,
        run.passed(),
        run.per_task.len()
    );
    Ok(())
}
