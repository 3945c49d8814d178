//! Argument parsing and subcommand dispatch.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::io::{ErrorKind, Write};
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use metric_audit::ablate::{
    retrieval_caption_records, shuffle_images, shuffle_prompt_texts, shuffle_question_texts, text_only_prompts,
    AblationKind, AblationPlan, Variant,
};
use metric_audit::config::{Overrides, RunConfig};
use metric_audit::corpus::write_records;
use metric_audit::metrics::MetricScore;
use metric_audit::pipeline::{self, Inputs};
use metric_audit::report::{self, ReportBundle};

#[derive(Debug, Parser)]
#[command(name = "metric-audit", version, about = "Audit text-image consistency metrics")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for every stochastic step.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Significance level.
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    /// Strength threshold on |rho|.
    #[arg(long, global = true)]
    pub tau: Option<f64>,
    /// Lexicon miss policy: lowest, zero or omit.
    #[arg(long, global = true)]
    pub missing_policy: Option<String>,
    /// Forbid fixed points when shuffling images.
    #[arg(long, global = true)]
    pub derangement: bool,
    /// Permutation p-values for n < 30.
    #[arg(long, global = true)]
    pub exact_p: bool,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load and cross-check every configured input.
    Validate,
    /// Linguistic and visual properties per prompt.
    Props,
    /// Metric scores for the original corpus and configured ablations.
    Score,
    /// Property-score rank correlations.
    Correlate,
    /// Inter-metric correlation matrices.
    Matrix,
    /// Write an ablated corpus.
    Ablate {
        /// shuffle_images, shuffle_text, retrieval_qa or text_only_qa.
        kind: AblationKind,
    },
    /// Question statistics, baselines and shortcut flags.
    Audit,
    /// Every table, matrix and the full report.
    Report,
    /// Validate, then run every stage and write the full report.
    All,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Props => "props",
            Command::Score => "score",
            Command::Correlate => "correlate",
            Command::Matrix => "matrix",
            Command::Ablate { .. } => "ablate",
            Command::Audit => "audit",
            Command::Report => "report",
            Command::All => "all",
        }
    }
}

fn config(global: &GlobalArgs) -> metric_audit::Result<RunConfig> {
    RunConfig::from_sources(
        global.config.as_deref(),
        Overrides {
            seed: global.seed,
            alpha: global.alpha,
            tau: global.tau,
            missing_policy: global.missing_policy.clone(),
            derangement: global.derangement,
            exact_p: global.exact_p,
            out: global.out.clone(),
        },
    )
}

fn now_unix() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

/// Prints one line to stdout. A closed pipe is not an error.
fn say(line: impl Display) -> Result<()> {
    match writeln!(std::io::stdout().lock(), "{line}") {
        Err(e) if e.kind() != ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn emit(mut bundle: ReportBundle, command: &str, cfg: &RunConfig, inputs: &Inputs) -> Result<()> {
    bundle.insert(
        "meta.json",
        report::meta_json(command, cfg, &inputs.digests, now_unix())?,
    );
    bundle.write(&cfg.out)?;
    for name in bundle.files.keys() {
        say(cfg.out.join(name).display())?;
    }
    Ok(())
}

fn validate(inputs: &Inputs) -> Result<()> {
    let c = &inputs.corpus;
    let ablations: serde_json::Map<String, serde_json::Value> = inputs
        .ablations
        .iter()
        .map(|(v, r)| {
            (
                v.to_string(),
                json!({ "answers": r.answers.len(), "similarities": r.similarities.len() }),
            )
        })
        .collect();
    let summary = json!({
        "ok": true,
        "prompts": c.prompts.len(),
        "questions": c.questions.len(),
        "answers": c.answers.len(),
        "similarities": c.similarities.len(),
        "images": c.images.len(),
        "ablations": ablations,
    });
    say(serde_json::to_string_pretty(&summary)?)?;
    Ok(())
}

fn ablate(kind: AblationKind, cfg: &RunConfig, inputs: &Inputs) -> Result<()> {
    let dir = cfg.out.join("ablated").join(kind.as_str());
    let c = &inputs.corpus;
    let plan = |seed| AblationPlan {
        kind,
        seed,
        derangement: cfg.derangement,
    };
    let deterministic = json!({ "kind": kind.as_str(), "seed": null, "options": {} });
    let written: Vec<PathBuf> = match kind {
        AblationKind::ShuffleImages => {
            cfg.require_path("images", &cfg.paths.images)?;
            let plan = plan(cfg.require_seed("shuffle_images")?);
            let refs = shuffle_images(&c.images, &c.prompts, plan.seed, plan.derangement)?;
            let path = dir.join("images.jsonl");
            write_records(&path, &refs, Some(&plan.provenance()))?;
            vec![path]
        }
        AblationKind::ShuffleText => {
            let plan = plan(cfg.require_seed("shuffle_text")?);
            let prompts = dir.join("prompts.jsonl");
            write_records(
                &prompts,
                &shuffle_prompt_texts(&c.prompts, plan.seed),
                Some(&plan.provenance()),
            )?;
            let questions = dir.join("questions.jsonl");
            write_records(
                &questions,
                &shuffle_question_texts(&c.questions, plan.seed),
                Some(&plan.provenance()),
            )?;
            vec![prompts, questions]
        }
        AblationKind::RetrievalQa => {
            let path = dir.join("captions.jsonl");
            write_records(&path, &retrieval_caption_records(&c.questions)?, Some(&deterministic))?;
            vec![path]
        }
        AblationKind::TextOnlyQa => {
            let path = dir.join("text_qa_prompts.jsonl");
            write_records(&path, &text_only_prompts(&c.questions), Some(&deterministic))?;
            vec![path]
        }
    };
    for p in written {
        say(p.display())?;
    }
    Ok(())
}

pub fn run(cli: Cli) -> Result<()> {
    let cfg = config(&cli.global)?;
    let inputs = pipeline::load_inputs(&cfg)?;
    let name = cli.command.name();
    let dataset_of = inputs.dataset_of();
    match cli.command {
        Command::Validate => validate(&inputs),
        Command::Props => {
            let rows = pipeline::compute_properties(&inputs, &cfg)?;
            emit(report::properties_bundle(&rows)?, name, &cfg, &inputs)
        }
        Command::Score => {
            let scores = pipeline::compute_scores(&inputs)?;
            emit(report::scores_bundle(&scores, &dataset_of)?, name, &cfg, &inputs)
        }
        Command::Correlate => {
            let rows = pipeline::compute_properties(&inputs, &cfg)?;
            let scores = pipeline::compute_scores(&inputs)?;
            let original = original(&scores);
            let (ling, vis) = pipeline::correlate(&inputs, &rows, original, &cfg)?;
            emit(report::correlation_bundle(&ling, &vis)?, name, &cfg, &inputs)
        }
        Command::Matrix => {
            let scores = pipeline::compute_scores(&inputs)?;
            let (built, skipped) = pipeline::matrices(original(&scores), &dataset_of, &cfg)?;
            emit(
                report::matrix_bundle(&built, &skipped, cfg.figures)?,
                name,
                &cfg,
                &inputs,
            )
        }
        Command::Ablate { kind } => ablate(kind, &cfg, &inputs),
        Command::Audit => {
            let scores = pipeline::compute_scores(&inputs)?;
            let audit = pipeline::audit(&inputs, original(&scores), &cfg)?;
            emit(
                report::audit_bundle(&audit, original(&scores), &dataset_of, &cfg)?,
                name,
                &cfg,
                &inputs,
            )
        }
        Command::Report | Command::All => {
            let analysis = pipeline::analyze(&inputs, &cfg)?;
            emit(report::full_bundle(&analysis, &dataset_of, &cfg)?, name, &cfg, &inputs)
        }
    }
    .with_context(|| format!("{name} failed"))
}

fn original(scores: &BTreeMap<Variant, Vec<MetricScore>>) -> &[MetricScore] {
    scores.get(&Variant::Original).map_or(&[], Vec::as_slice)
}

/// Machine-readable error object and exit code for a failed run.
pub fn error_report(err: &anyhow::Error) -> (serde_json::Value, i32) {
    let (category, code) = match err.chain().find_map(|e| e.downcast_ref::<metric_audit::Error>()) {
        Some(e) => (e.category().as_str(), e.category().exit_code()),
        None => ("data", 3),
    };
    let causes: Vec<String> = err.chain().map(|e| e.to_string()).collect();
    (
        json!({ "error": { "category": category, "exit_code": code, "message": causes.last(), "context": causes } }),
        code,
    )
}
