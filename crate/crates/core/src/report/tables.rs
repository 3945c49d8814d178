//! Table payloads. Each builder returns rows once; CSV and Markdown are both
//! rendered from those rows so the two never disagree.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::format::{csv_table, fixed, fixed_opt, md_table, raw, raw_opt, rho_cell, MISSING};
use crate::ablate::Variant;
use crate::audit::{Baselines, CountCorrelation, MetricShortcuts, QuestionStats, RubricRow};
use crate::error::Result;
use crate::metrics::{Metric, MetricScore};
use crate::pipeline::{property_label, PropertyRow, SkippedMatrix};
use crate::stats::{CorrelationMatrix, DatasetCell};

pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn csv(&self) -> Result<String> {
        csv_table(&self.header, &self.rows)
    }
}

pub fn correlation_table(cells: &[DatasetCell]) -> Table {
    let rows = cells
        .iter()
        .map(|d| {
            let c = &d.cell;
            let r = c.outcome.result();
            vec![
                d.dataset.clone(),
                c.source.clone(),
                c.metric.to_string(),
                c.property.clone(),
                r.map(|r| fixed(r.rho, 2)).unwrap_or_default(),
                c.n.to_string(),
                r.map(|r| fixed(r.p_value, 2)).unwrap_or_default(),
                r.map(|r| r.significant.to_string()).unwrap_or_default(),
                r.map(|r| r.is_strong().to_string()).unwrap_or_default(),
                rho_cell(&c.outcome),
                c.outcome.status().to_string(),
                c.dropped.to_string(),
                r.map(|r| raw(r.rho)).unwrap_or_default(),
                r.map(|r| raw(r.p_value)).unwrap_or_default(),
            ]
        })
        .collect();
    Table {
        header: vec![
            "dataset",
            "source",
            "metric",
            "property",
            "rho",
            "n",
            "p",
            "significant",
            "strong",
            "cell",
            "status",
            "dropped",
            "rho_raw",
            "p_raw",
        ],
        rows,
    }
}

/// One Markdown table per (dataset, property): sources down, metrics across.
pub fn correlation_markdown(cells: &[DatasetCell], properties: &[&str]) -> String {
    let table = correlation_table(cells);
    let mut out = String::new();
    let datasets: BTreeSet<&str> = cells.iter().map(|c| c.dataset.as_str()).collect();
    for ds in datasets {
        for &property in properties {
            let mine: Vec<(&DatasetCell, &Vec<String>)> = cells
                .iter()
                .zip(&table.rows)
                .filter(|(c, _)| c.dataset == ds && c.cell.property == property)
                .collect();
            if mine.is_empty() {
                continue;
            }
            let metrics: BTreeSet<Metric> = mine.iter().map(|(c, _)| c.cell.metric).collect();
            let sources: BTreeSet<&str> = mine.iter().map(|(c, _)| c.cell.source.as_str()).collect();
            let mut header = vec!["Source".to_string()];
            header.extend(metrics.iter().map(|m| m.display_name().to_string()));
            let rows: Vec<Vec<String>> = sources
                .iter()
                .map(|s| {
                    let mut row = vec![s.to_string()];
                    for m in &metrics {
                        let cell = mine
                            .iter()
                            .find(|(c, _)| c.cell.source == *s && c.cell.metric == *m)
                            .map_or(MISSING.to_string(), |(_, r)| r[9].clone());
                        row.push(cell);
                    }
                    row
                })
                .collect();
            out.push_str(&format!("#### {} ({ds})\n\n", property_label(property)));
            out.push_str(&md_table(&header, &rows));
            out.push('\n');
        }
    }
    out
}

pub fn properties_table(rows: &[PropertyRow]) -> Table {
    Table {
        header: vec![
            "prompt_id",
            "dataset",
            "grade_level",
            "yngve",
            "length",
            "concreteness",
            "imageability",
            "class_overlap",
        ],
        rows: rows
            .iter()
            .map(|r| {
                vec![
                    r.prompt_id.clone(),
                    r.dataset.clone(),
                    raw_opt(r.grade_level),
                    raw_opt(r.yngve),
                    r.length.to_string(),
                    raw_opt(r.concreteness),
                    raw_opt(r.imageability),
                    raw_opt(r.class_overlap),
                ]
            })
            .collect(),
    }
}

pub fn scores_table(scores: &BTreeMap<Variant, Vec<MetricScore>>) -> Table {
    let mut rows = Vec::new();
    for (variant, list) in scores {
        for s in list {
            rows.push(vec![
                variant.to_string(),
                s.prompt_id.clone(),
                s.source.clone(),
                s.metric.to_string(),
                raw(s.value),
                s.n_questions.to_string(),
            ]);
        }
    }
    Table {
        header: vec!["variant", "prompt_id", "source", "metric", "value", "n_questions"],
        rows,
    }
}

/// Heatmap grid: metric names across and down, full-precision rho.
pub fn matrix_grid(m: &CorrelationMatrix) -> Result<String> {
    let mut header = vec!["metric"];
    header.extend(m.labels.iter().map(|l| l.as_str()));
    let rows: Vec<Vec<String>> = m
        .labels
        .iter()
        .zip(&m.rho)
        .map(|(l, row)| {
            let mut r = vec![l.to_string()];
            r.extend(row.iter().map(|v| raw_opt(*v)));
            r
        })
        .collect();
    csv_table(&header, &rows)
}

pub fn matrix_markdown(dataset: &str, m: &CorrelationMatrix) -> String {
    let mut header = vec![String::new()];
    header.extend(m.labels.iter().map(|l| l.display_name().to_string()));
    let rows: Vec<Vec<String>> = m
        .labels
        .iter()
        .enumerate()
        .map(|(i, l)| {
            let mut r = vec![l.display_name().to_string()];
            for j in 0..m.labels.len() {
                r.push(match (m.rho[i][j], m.p[i][j]) {
                    (Some(rho), Some(p)) if i != j && p < m.alpha => format!("{}*", fixed(rho, 2)),
                    (Some(rho), _) => fixed(rho, 2),
                    _ => MISSING.to_string(),
                });
            }
            r
        })
        .collect();
    format!("#### {} ({dataset})\n\n{}\n", m.source, md_table(&header, &rows))
}

pub fn skipped_markdown(skipped: &[SkippedMatrix]) -> String {
    if skipped.is_empty() {
        return String::new();
    }
    let list: Vec<String> = skipped
        .iter()
        .map(|s| format!("{} ({}): {} metric(s)", s.source, s.dataset, s.metrics))
        .collect();
    format!(
        "Sources with fewer than two metrics have no matrix: {}.\n\n",
        list.join("; ")
    )
}

/// One point of the ablation bar series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarPoint {
    pub dataset: String,
    pub source: String,
    pub metric: Metric,
    pub variant: Variant,
    pub value: f64,
    pub n: usize,
}

/// Mean score per (dataset, source, metric, variant), variants in the fixed
/// order original, shuffled images, shuffled text, retrieval QA, text-only QA.
/// A variant with no scores is absent rather than zero.
pub fn bars(scores: &BTreeMap<Variant, Vec<MetricScore>>, dataset_of: &BTreeMap<String, String>) -> Vec<BarPoint> {
    let mut sums: BTreeMap<(String, String, Metric, Variant), (f64, usize)> = BTreeMap::new();
    for (variant, list) in scores {
        for s in list {
            let ds = dataset_of.get(&s.prompt_id).cloned().unwrap_or_default();
            let e = sums.entry((ds, s.source.clone(), s.metric, *variant)).or_default();
            e.0 += s.value;
            e.1 += 1;
        }
    }
    sums.into_iter()
        .map(|((dataset, source, metric, variant), (sum, n))| BarPoint {
            dataset,
            source,
            metric,
            variant,
            value: sum / n as f64,
            n,
        })
        .collect()
}

pub fn bars_table(points: &[BarPoint]) -> Table {
    Table {
        header: vec!["dataset", "source", "metric", "variant", "value", "value_raw", "n"],
        rows: points
            .iter()
            .map(|b| {
                vec![
                    b.dataset.clone(),
                    b.source.clone(),
                    b.metric.to_string(),
                    b.variant.to_string(),
                    fixed(b.value, 4),
                    raw(b.value),
                    b.n.to_string(),
                ]
            })
            .collect(),
    }
}

pub fn bars_markdown(points: &[BarPoint]) -> String {
    let table = bars_table(points);
    let variants: BTreeSet<Variant> = points.iter().map(|b| b.variant).collect();
    let keys: BTreeSet<(&str, &str, Metric)> = points
        .iter()
        .map(|b| (b.dataset.as_str(), b.source.as_str(), b.metric))
        .collect();
    let mut header = vec!["Dataset".to_string(), "Source".to_string(), "Metric".to_string()];
    header.extend(variants.iter().map(|v| v.to_string()));
    let rows: Vec<Vec<String>> = keys
        .iter()
        .map(|(ds, src, m)| {
            let mut row = vec![ds.to_string(), src.to_string(), m.display_name().to_string()];
            for v in &variants {
                let cell = points
                    .iter()
                    .zip(&table.rows)
                    .find(|(b, _)| b.dataset == *ds && b.source == *src && b.metric == *m && b.variant == *v)
                    .map_or(MISSING.to_string(), |(_, r)| r[4].clone());
                row.push(cell);
            }
            row
        })
        .collect();
    md_table(&header, &rows)
}

pub fn qa_stats_table(stats: &[QuestionStats]) -> Table {
    Table {
        header: vec![
            "dataset",
            "metric",
            "total",
            "pct_yes_no",
            "pct_gold_yes",
            "pct_gold_no",
            "pct_multiple_choice",
            "pct_gold_first",
            "pct_yes_no_raw",
            "pct_gold_yes_raw",
            "pct_gold_no_raw",
            "pct_multiple_choice_raw",
            "pct_gold_first_raw",
        ],
        rows: stats
            .iter()
            .map(|s| {
                vec![
                    s.dataset.clone(),
                    s.metric.to_string(),
                    s.total.to_string(),
                    fixed(s.pct_yes_no, 1),
                    fixed_opt(s.pct_gold_yes_given_yn, 1),
                    fixed_opt(s.pct_gold_no_given_yn, 1),
                    fixed(s.pct_multiple_choice, 1),
                    fixed_opt(s.pct_gold_first_given_mc, 1),
                    raw(s.pct_yes_no),
                    raw_opt(s.pct_gold_yes_given_yn),
                    raw_opt(s.pct_gold_no_given_yn),
                    raw(s.pct_multiple_choice),
                    raw_opt(s.pct_gold_first_given_mc),
                ]
            })
            .collect(),
    }
}

/// Statistics down, (dataset, metric) groups across.
pub fn qa_stats_markdown(stats: &[QuestionStats]) -> String {
    let table = qa_stats_table(stats);
    let mut header = vec![String::new()];
    header.extend(
        stats
            .iter()
            .map(|s| format!("{} {}", s.dataset, Metric::from(s.metric).display_name())),
    );
    let labels = [
        (2, "Total # of questions"),
        (3, "% yes/no questions"),
        (4, "% of yes/no with gold yes"),
        (5, "% of yes/no with gold no"),
        (6, "% multiple choice"),
        (7, "% of multiple choice with gold first"),
    ];
    let rows: Vec<Vec<String>> = labels
        .iter()
        .map(|(col, label)| {
            let mut row = vec![label.to_string()];
            row.extend(table.rows.iter().map(|r| r[*col].clone()));
            row
        })
        .collect();
    md_table(&header, &rows)
}

pub fn question_count_table(counts: &[CountCorrelation]) -> Table {
    Table {
        header: vec![
            "dataset",
            "source",
            "metric",
            "rho",
            "n",
            "p",
            "significant",
            "strong",
            "cell",
            "status",
            "rho_raw",
            "p_raw",
        ],
        rows: counts
            .iter()
            .map(|c| {
                let r = c.outcome.result();
                vec![
                    c.dataset.clone(),
                    c.source.clone(),
                    c.metric.to_string(),
                    r.map(|r| fixed(r.rho, 2)).unwrap_or_default(),
                    c.n.to_string(),
                    r.map(|r| fixed(r.p_value, 2)).unwrap_or_default(),
                    r.map(|r| r.significant.to_string()).unwrap_or_default(),
                    r.map(|r| r.is_strong().to_string()).unwrap_or_default(),
                    rho_cell(&c.outcome),
                    c.outcome.status().to_string(),
                    r.map(|r| raw(r.rho)).unwrap_or_default(),
                    r.map(|r| raw(r.p_value)).unwrap_or_default(),
                ]
            })
            .collect(),
    }
}

pub fn question_count_markdown(counts: &[CountCorrelation]) -> String {
    let table = question_count_table(counts);
    let header: Vec<String> = ["Dataset", "Source", "Metric", "rho", "n"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let rows: Vec<Vec<String>> = counts
        .iter()
        .zip(&table.rows)
        .map(|(c, r)| {
            vec![
                c.dataset.clone(),
                c.source.clone(),
                crate::metrics::Metric::from(c.metric).display_name().to_string(),
                r[8].clone(),
                r[4].clone(),
            ]
        })
        .collect();
    md_table(&header, &rows)
}

/// Mean scores in percent per (dataset, row, metric), where rows are the
/// random-chance and majority baselines followed by every source.
pub fn summary_table(
    scores: &[MetricScore],
    dataset_of: &BTreeMap<String, String>,
    entries: &[MetricShortcuts],
) -> Table {
    let mut rows = Vec::new();
    let mut push = |ds: &str, row: &str, metric: Metric, value: Option<f64>| {
        rows.push(vec![
            ds.to_string(),
            row.to_string(),
            metric.to_string(),
            value.map_or("N/A".to_string(), |v| fixed(100.0 * v, 1)),
            value.map(|v| raw(100.0 * v)).unwrap_or_default(),
        ]);
    };
    let datasets: BTreeSet<&str> = dataset_of.values().map(String::as_str).collect();
    for ds in datasets {
        let baseline = |pick: fn(&Baselines) -> f64, m: Metric| {
            m.qa()
                .and_then(|qa| entries.iter().find(|e| e.dataset == ds && e.metric == qa))
                .map(|e| pick(&e.baselines))
        };
        if entries.iter().any(|e| e.dataset == ds) {
            for m in Metric::ALL {
                push(ds, "Random Chance", m, baseline(|b| b.random_chance, m));
            }
            for m in Metric::ALL {
                push(ds, "Majority", m, baseline(|b| b.majority, m));
            }
        }
        let mut sums: BTreeMap<(&str, Metric), (f64, usize)> = BTreeMap::new();
        for s in scores
            .iter()
            .filter(|s| dataset_of.get(&s.prompt_id).is_some_and(|d| d == ds))
        {
            let e = sums.entry((s.source.as_str(), s.metric)).or_default();
            e.0 += s.value;
            e.1 += 1;
        }
        let sources: BTreeSet<&str> = sums.keys().map(|(s, _)| *s).collect();
        for src in sources {
            for m in Metric::ALL {
                push(ds, src, m, sums.get(&(src, m)).map(|(sum, n)| sum / *n as f64));
            }
        }
    }
    Table {
        header: vec!["dataset", "row", "metric", "value_pct", "value_pct_raw"],
        rows,
    }
}

/// Cells of one row, keyed by the row label.
type LabelledRow<'a> = (&'a str, Vec<&'a str>);

pub fn summary_markdown(table: &Table) -> String {
    let mut out = String::new();
    let mut groups: Vec<(&str, Vec<LabelledRow>)> = Vec::new();
    for r in &table.rows {
        let (ds, row, cell) = (r[0].as_str(), r[1].as_str(), r[3].as_str());
        if groups.last().is_none_or(|(d, _)| *d != ds) {
            groups.push((ds, Vec::new()));
        }
        let rows = &mut groups.last_mut().expect("pushed above").1;
        if rows.last().is_none_or(|(name, _)| *name != row) {
            rows.push((row, Vec::new()));
        }
        rows.last_mut().expect("pushed above").1.push(cell);
    }
    for (ds, rows) in groups {
        let mut header = vec![format!("{ds}")];
        header.extend(Metric::ALL.iter().map(|m| m.display_name().to_string()));
        let body: Vec<Vec<String>> = rows
            .into_iter()
            .map(|(name, cells)| {
                let mut row = vec![name.to_string()];
                row.extend(cells.into_iter().map(str::to_string));
                row
            })
            .collect();
        out.push_str(&md_table(&header, &body));
        out.push('\n');
    }
    out
}

pub fn shortcuts_markdown(entries: &[MetricShortcuts]) -> String {
    let header: Vec<String> = [
        "Dataset",
        "Metric",
        "Yes-bias",
        "First-answer bias",
        "Question-count dependence",
        "Majority",
        "Random chance",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let flag = |f: &crate::audit::Flag| {
        let observed = f.observed.map_or("N/A".to_string(), |v| fixed(v, 2));
        format!("{} ({observed}; {})", if f.flagged { "FLAGGED" } else { "ok" }, f.rule)
    };
    let rows: Vec<Vec<String>> = entries
        .iter()
        .map(|e| {
            vec![
                e.dataset.clone(),
                Metric::from(e.metric).display_name().to_string(),
                flag(&e.yes_bias),
                flag(&e.first_answer_bias),
                flag(&e.question_count_dependence),
                fixed(100.0 * e.baselines.majority, 1),
                fixed(100.0 * e.baselines.random_chance, 1),
            ]
        })
        .collect();
    md_table(&header, &rows)
}

pub fn rubric_markdown(rows: &[RubricRow]) -> String {
    let header: Vec<String> = [
        "Metric",
        "Sensitive to text",
        "Sensitive to image",
        "Robust to known shortcuts",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.metric.display_name().to_string(),
                r.sensitive_to_text.value.to_string(),
                r.sensitive_to_image.value.to_string(),
                r.robust_to_shortcuts.value.to_string(),
            ]
        })
        .collect();
    let mut out = md_table(&header, &body);
    out.push('\n');
    for r in rows {
        for (what, cell) in [
            ("text", &r.sensitive_to_text),
            ("image", &r.sensitive_to_image),
            ("shortcuts", &r.robust_to_shortcuts),
        ] {
            for e in &cell.evidence {
                out.push_str(&format!("- {} / {what}: {e}\n", r.metric.display_name()));
            }
        }
    }
    out
}
