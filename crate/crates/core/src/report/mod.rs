//! Output bundle: CSV tables, matrix grids, SVG heatmaps, `report.md` and
//! `meta.json`. Rendering is a pure function of its inputs.

mod format;
mod svg;
mod tables;

use std::collections::BTreeMap;
use std::path::Path;

use serde_json::{json, Value};

pub use format::{csv_table, fixed, md_table, raw, rho_cell, MISSING};
pub use svg::heatmap_svg;
pub use tables::{bars, BarPoint, Table};

use crate::ablate::Variant;
use crate::audit::{CountCorrelation, MetricShortcuts, QuestionStats, RubricRow};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::metrics::MetricScore;
use crate::pipeline::{
    Analysis, AuditOutput, MatrixEntry, PropertyRow, SkippedMatrix, LINGUISTIC_PROPERTIES, VISUAL_PROPERTIES,
};
use crate::stats::{DatasetCell, PValueMode};

/// Rubric derivation rules, printed alongside the rubric.
pub const RUBRIC_RULES: [&str; 4] = [
    "Text: a correlation signal is any linguistic cell significant with |rho| >= tau; an ablation signal is a shuffled-text mean score at least `ablation_drop` below the original.",
    "Image: the same over visual cells, with shuffled images and text-only QA as ablation signals.",
    "Agreeing signals give yes or no; disagreeing signals, or strong cells of opposite sign for one property across sources, give mixed; no signals give unknown.",
    "Shortcuts: no when any shortcut flag is raised for the metric on any dataset, yes otherwise; n/a for CLIPScore.",
];

/// Named output files, relative to the output directory.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ReportBundle {
    pub files: BTreeMap<String, String>,
}

impl ReportBundle {
    pub fn insert(&mut self, path: impl Into<String>, content: impl Into<String>) {
        self.files.insert(path.into(), content.into());
    }

    pub fn extend(&mut self, other: ReportBundle) {
        self.files.extend(other.files);
    }

    pub fn get(&self, path: &str) -> Option<&str> {
        self.files.get(path).map(String::as_str)
    }

    /// Writes every file under `dir`, creating parent directories.
    pub fn write(&self, dir: &Path) -> Result<()> {
        for (name, content) in &self.files {
            let path = dir.join(name);
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
            }
            std::fs::write(&path, content).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}

/// File-name stem safe on every platform.
fn slug(s: &str) -> String {
    let out: String = s
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect();
    if out.is_empty() {
        "_".into()
    } else {
        out
    }
}

fn json_pretty(v: &impl serde::Serialize) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| Error::Output(format!("json: {e}")))?;
    s.push('\n');
    Ok(s)
}

fn p_method_note(cfg: &RunConfig) -> String {
    match cfg.p_value_mode() {
        Ok(PValueMode::Permutation { resamples, .. }) => format!(
            "permutation test for n < 30 (exhaustive up to n = 8, otherwise {resamples} seeded resamples); t-approximation above"
        ),
        _ => "t-approximation with n - 2 degrees of freedom".to_string(),
    }
}

/// Every setting that affects an output value.
pub fn settings(cfg: &RunConfig) -> Value {
    json!({
        "seed": cfg.seed,
        "alpha": cfg.thresholds.alpha,
        "tau": cfg.thresholds.tau,
        "p_value_method": p_method_note(cfg),
        "exact_p": cfg.exact_p,
        "permutation_resamples": cfg.permutation_resamples,
        "missing_word_policy": cfg.missing_word_policy.as_str(),
        "yngve_aggregate": cfg.yngve.as_str(),
        "derangement": cfg.derangement,
        "random_trials": cfg.random_trials,
        "shortcut_thresholds": cfg.shortcuts,
        "ablation_drop": cfg.ablation_drop,
        "retrieval_ties": "incorrect",
    })
}

/// `meta.json`: command, settings, input digests and a timestamp.
pub fn meta_json(
    command: &str,
    cfg: &RunConfig,
    digests: &BTreeMap<String, String>,
    generated_at_unix: u64,
) -> Result<String> {
    json_pretty(&json!({
        "command": command,
        "generated_at_unix": generated_at_unix,
        "settings": settings(cfg),
        "input_sha256": digests,
    }))
}

fn settings_markdown(cfg: &RunConfig) -> String {
    let seed = cfg.seed.map_or("none".to_string(), |s| s.to_string());
    let lines = [
        format!("seed: {seed}"),
        format!("alpha: {}; tau: {}", cfg.thresholds.alpha, cfg.thresholds.tau),
        format!("p-values: {}", p_method_note(cfg)),
        format!("lexicon misses: {}", cfg.missing_word_policy.as_str()),
        format!("Yngve aggregate: {}", cfg.yngve.as_str()),
        format!("image shuffle derangement: {}", cfg.derangement),
        format!(
            "shortcut thresholds: yes > {}%, first > {}%, question-count |rho| >= {}",
            cfg.shortcuts.yes_pct, cfg.shortcuts.first_pct, cfg.shortcuts.count_rho
        ),
        format!("random-chance trials: {}", cfg.random_trials),
        format!("rubric ablation drop: {}", cfg.ablation_drop),
        "retrieval QA: ties for the highest caption score count as incorrect".to_string(),
        "cells: `*` significant at alpha, bold when also |rho| >= tau, `—` when not computable".to_string(),
    ];
    let mut out = String::from("## Settings\n\n");
    for l in lines {
        out.push_str(&format!("- {l}\n"));
    }
    out.push('\n');
    out
}

pub fn properties_bundle(rows: &[PropertyRow]) -> Result<ReportBundle> {
    let mut b = ReportBundle::default();
    b.insert("tables/properties.csv", tables::properties_table(rows).csv()?);
    Ok(b)
}

pub fn scores_bundle(
    scores: &BTreeMap<Variant, Vec<MetricScore>>,
    dataset_of: &BTreeMap<String, String>,
) -> Result<ReportBundle> {
    let mut b = ReportBundle::default();
    b.insert("tables/scores.csv", tables::scores_table(scores).csv()?);
    let points = bars(scores, dataset_of);
    b.insert("tables/ablations.csv", tables::bars_table(&points).csv()?);
    Ok(b)
}

pub fn correlation_bundle(linguistic: &[DatasetCell], visual: &[DatasetCell]) -> Result<ReportBundle> {
    let mut b = ReportBundle::default();
    b.insert("tables/linguistic.csv", tables::correlation_table(linguistic).csv()?);
    b.insert("tables/visual.csv", tables::correlation_table(visual).csv()?);
    Ok(b)
}

pub fn matrix_bundle(matrices: &[MatrixEntry], skipped: &[SkippedMatrix], figures: bool) -> Result<ReportBundle> {
    let mut b = ReportBundle::default();
    for entry in matrices {
        let stem = format!("{}__{}", slug(&entry.dataset), slug(&entry.matrix.source));
        b.insert(format!("matrices/{stem}.csv"), tables::matrix_grid(&entry.matrix)?);
        if figures {
            b.insert(
                format!("figures/{stem}.svg"),
                heatmap_svg(&entry.matrix, &entry.dataset),
            );
        }
    }
    b.insert(
        "matrices/matrices.json",
        json_pretty(&json!({ "matrices": matrices, "skipped": skipped }))?,
    );
    Ok(b)
}

fn audit_tables(
    audit: &AuditOutput,
    scores: &[MetricScore],
    dataset_of: &BTreeMap<String, String>,
) -> Result<(ReportBundle, Table)> {
    let mut b = ReportBundle::default();
    b.insert("tables/qa_stats.csv", tables::qa_stats_table(&audit.stats).csv()?);
    b.insert(
        "tables/question_count.csv",
        tables::question_count_table(&audit.counts).csv()?,
    );
    let summary = tables::summary_table(scores, dataset_of, &audit.entries);
    b.insert("tables/summary.csv", summary.csv()?);
    Ok((b, summary))
}

fn audit_markdown(
    stats: &[QuestionStats],
    counts: &[CountCorrelation],
    entries: &[MetricShortcuts],
    summary: &Table,
) -> String {
    let mut md = String::new();
    md.push_str("## Question statistics\n\n");
    md.push_str(&tables::qa_stats_markdown(stats));
    md.push_str("\n## Question-count dependence\n\n");
    md.push_str(&tables::question_count_markdown(counts));
    md.push_str("\n## Mean scores and baselines (%)\n\n");
    md.push_str(&tables::summary_markdown(summary));
    md.push_str("## Shortcut flags\n\n");
    md.push_str(&tables::shortcuts_markdown(entries));
    md.push('\n');
    md
}

/// Tables and a `report.md` holding the question audit only.
pub fn audit_bundle(
    audit: &AuditOutput,
    scores: &[MetricScore],
    dataset_of: &BTreeMap<String, String>,
    cfg: &RunConfig,
) -> Result<ReportBundle> {
    let (mut b, summary) = audit_tables(audit, scores, dataset_of)?;
    b.insert("tables/shortcuts.json", json_pretty(&audit.entries)?);
    let mut md = String::from("# Metric audit: question shortcuts\n\n");
    md.push_str(&settings_markdown(cfg));
    md.push_str(&audit_markdown(&audit.stats, &audit.counts, &audit.entries, &summary));
    b.insert("report.md", md);
    Ok(b)
}

fn rubric_section(rows: &[RubricRow]) -> String {
    let mut md = String::from("## Desiderata rubric\n\n");
    md.push_str(&tables::rubric_markdown(rows));
    md.push_str("\nRules:\n\n");
    for r in RUBRIC_RULES {
        md.push_str(&format!("- {r}\n"));
    }
    md.push('\n');
    md
}

/// The complete bundle for an analysis, without `meta.json`.
pub fn full_bundle(
    analysis: &Analysis,
    dataset_of: &BTreeMap<String, String>,
    cfg: &RunConfig,
) -> Result<ReportBundle> {
    let mut b = properties_bundle(&analysis.properties)?;
    b.extend(scores_bundle(&analysis.scores, dataset_of)?);
    b.extend(correlation_bundle(&analysis.linguistic, &analysis.visual)?);
    b.extend(matrix_bundle(
        &analysis.matrices,
        &analysis.skipped_matrices,
        cfg.figures,
    )?);
    let (audit, summary) = audit_tables(&analysis.audit, analysis.original_scores(), dataset_of)?;
    b.extend(audit);
    b.insert("tables/shortcuts.json", json_pretty(&analysis.shortcuts)?);

    let mut md = String::from("# Metric audit report\n\n");
    md.push_str(&settings_markdown(cfg));
    md.push_str("## Linguistic properties vs scores\n\n");
    md.push_str(&tables::correlation_markdown(
        &analysis.linguistic,
        &LINGUISTIC_PROPERTIES,
    ));
    md.push_str("## Visual properties vs scores\n\n");
    md.push_str(&tables::correlation_markdown(&analysis.visual, &VISUAL_PROPERTIES));
    md.push_str("## Inter-metric correlations\n\n");
    for entry in &analysis.matrices {
        md.push_str(&tables::matrix_markdown(&entry.dataset, &entry.matrix));
    }
    md.push_str(&tables::skipped_markdown(&analysis.skipped_matrices));
    md.push_str("## Ablations (mean score)\n\n");
    md.push_str(&tables::bars_markdown(&bars(&analysis.scores, dataset_of)));
    md.push('\n');
    md.push_str(&audit_markdown(
        &analysis.audit.stats,
        &analysis.audit.counts,
        &analysis.audit.entries,
        &summary,
    ));
    md.push_str(&rubric_section(&analysis.shortcuts.rubric));
    b.insert("report.md", md);
    Ok(b)
}
