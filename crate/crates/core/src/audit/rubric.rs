//! Desiderata rubric: sensitive to text, sensitive to image, robust to
//! known shortcuts, each labelled yes / no / mixed with its evidence.
//!
//! Rules:
//! - Text: a metric has a correlation signal when any linguistic cell is
//!   significant with |rho| >= tau, and an ablation signal when shuffling the
//!   text lowers its mean score by at least `ablation_drop`.
//! - Image: the same over visual cells, with shuffled images and text-only QA
//!   as the ablation signals.
//! - Signals that all agree give yes or no; disagreeing signals, or strong
//!   cells of opposite sign for one property across sources, give mixed.
//! - Shortcuts: no when any shortcut flag is raised for the metric, yes
//!   otherwise; not applicable to CLIPScore.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::MetricShortcuts;
use crate::ablate::Variant;
use crate::metrics::Metric;
use crate::stats::DatasetCell;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RubricValue {
    Yes,
    No,
    Mixed,
    #[serde(rename = "n/a")]
    NotApplicable,
    /// No evidence was supplied.
    Unknown,
}

impl RubricValue {
    pub fn as_str(self) -> &'static str {
        match self {
            RubricValue::Yes => "yes",
            RubricValue::No => "no",
            RubricValue::Mixed => "mixed",
            RubricValue::NotApplicable => "n/a",
            RubricValue::Unknown => "unknown",
        }
    }

    /// Combines boolean signals.
    fn from_signals(signals: &[bool], conflict: bool) -> Self {
        if signals.is_empty() {
            RubricValue::Unknown
        } else if conflict {
            RubricValue::Mixed
        } else if signals.iter().all(|s| *s) {
            RubricValue::Yes
        } else if signals.iter().all(|s| !*s) {
            RubricValue::No
        } else {
            RubricValue::Mixed
        }
    }
}

impl fmt::Display for RubricValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RubricCell {
    pub value: RubricValue,
    pub evidence: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RubricRow {
    pub metric: Metric,
    pub sensitive_to_text: RubricCell,
    pub sensitive_to_image: RubricCell,
    pub robust_to_shortcuts: RubricCell,
}

/// Mean score per (variant, metric), pooled over sources and prompts.
pub type AblationMeans = BTreeMap<(Variant, Metric), f64>;

#[derive(Debug, Clone, Copy)]
pub struct RubricInputs<'a> {
    pub linguistic: &'a [DatasetCell],
    pub visual: &'a [DatasetCell],
    pub ablation: &'a AblationMeans,
    pub shortcuts: &'a [MetricShortcuts],
    pub ablation_drop: f64,
}

/// Correlation signal for one metric: (any strong cell, sign conflict, evidence).
fn correlation_signal(cells: &[DatasetCell], metric: Metric, label: &str) -> Option<(bool, bool, String)> {
    let results: Vec<(&str, f64, bool)> = cells
        .iter()
        .filter(|c| c.cell.metric == metric)
        .filter_map(|c| {
            c.cell
                .outcome
                .result()
                .map(|r| (c.cell.property.as_str(), r.rho, r.is_strong()))
        })
        .collect();
    if results.is_empty() {
        return None;
    }
    let strong: Vec<&(&str, f64, bool)> = results.iter().filter(|r| r.2).collect();
    let mut signs: BTreeMap<&str, BTreeSet<bool>> = BTreeMap::new();
    for (property, rho, _) in &strong {
        signs.entry(property).or_default().insert(*rho > 0.0);
    }
    let conflicting: Vec<&str> = signs.iter().filter(|(_, s)| s.len() > 1).map(|(p, _)| *p).collect();
    let mut evidence = format!(
        "{label}: {} of {} cells significant with |rho| >= tau",
        strong.len(),
        results.len()
    );
    if !conflicting.is_empty() {
        evidence.push_str(&format!(
            "; sign disagrees across sources for {}",
            conflicting.join(", ")
        ));
    }
    Some((!strong.is_empty(), !conflicting.is_empty(), evidence))
}

fn ablation_signal(inputs: &RubricInputs<'_>, metric: Metric, variant: Variant) -> Option<(bool, String)> {
    let original = inputs.ablation.get(&(Variant::Original, metric))?;
    let ablated = inputs.ablation.get(&(variant, metric))?;
    let drop = original - ablated;
    Some((
        drop >= inputs.ablation_drop,
        format!(
            "{variant}: mean {ablated:.4} vs original {original:.4} (drop {drop:.4}, threshold {})",
            inputs.ablation_drop
        ),
    ))
}

fn sensitivity(
    inputs: &RubricInputs<'_>,
    metric: Metric,
    cells: &[DatasetCell],
    label: &str,
    variants: &[Variant],
) -> RubricCell {
    let mut signals = Vec::new();
    let mut evidence = Vec::new();
    let mut conflict = false;
    if let Some((s, c, e)) = correlation_signal(cells, metric, label) {
        signals.push(s);
        conflict = c;
        evidence.push(e);
    }
    for &v in variants {
        if let Some((s, e)) = ablation_signal(inputs, metric, v) {
            signals.push(s);
            evidence.push(e);
        }
    }
    RubricCell {
        value: RubricValue::from_signals(&signals, conflict),
        evidence,
    }
}

fn robustness(shortcuts: &[MetricShortcuts], metric: Metric) -> RubricCell {
    let Some(qa) = metric.qa() else {
        return RubricCell {
            value: RubricValue::NotApplicable,
            evidence: vec!["no generated questions".into()],
        };
    };
    let entries: Vec<&MetricShortcuts> = shortcuts.iter().filter(|s| s.metric == qa).collect();
    if entries.is_empty() {
        return RubricCell {
            value: RubricValue::Unknown,
            evidence: Vec::new(),
        };
    }
    let mut evidence = Vec::new();
    for e in &entries {
        let raised: Vec<&str> = [
            ("yes_bias", &e.yes_bias),
            ("first_answer_bias", &e.first_answer_bias),
            ("question_count_dependence", &e.question_count_dependence),
        ]
        .into_iter()
        .filter(|(_, f)| f.flagged)
        .map(|(name, _)| name)
        .collect();
        evidence.push(if raised.is_empty() {
            format!("{}: no shortcut flags", e.dataset)
        } else {
            format!("{}: {}", e.dataset, raised.join(", "))
        });
    }
    let value = if entries.iter().any(|e| e.any_flagged()) {
        RubricValue::No
    } else {
        RubricValue::Yes
    };
    RubricCell { value, evidence }
}

/// One rubric row per metric, in the fixed metric order.
pub fn rubric(inputs: &RubricInputs<'_>) -> Vec<RubricRow> {
    Metric::ALL
        .into_iter()
        .map(|metric| RubricRow {
            metric,
            sensitive_to_text: sensitivity(
                inputs,
                metric,
                inputs.linguistic,
                "linguistic",
                &[Variant::ShuffledText],
            ),
            sensitive_to_image: sensitivity(
                inputs,
                metric,
                inputs.visual,
                "visual",
                &[Variant::ShuffledImages, Variant::TextOnlyQa],
            ),
            robust_to_shortcuts: robustness(inputs.shortcuts, metric),
        })
        .collect()
}
