//! Shortcut audit: answer-distribution statistics, question-count
//! dependence, shortcut flags, and the desiderata rubric.

mod rubric;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{QaMetric, QuestionRecord, QuestionType};
use crate::error::{Error, Result};
use crate::metrics::{answers_match, majority_baseline, random_chance, MetricScore};
use crate::stats::{correlation_cell, CellOutcome, CorrelationResult, PValueMode, Thresholds};

pub use rubric::{rubric, AblationMeans, RubricCell, RubricInputs, RubricRow, RubricValue};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionStats {
    pub metric: QaMetric,
    pub dataset: String,
    pub total: usize,
    pub yes_no: usize,
    pub multiple_choice: usize,
    pub pct_yes_no: f64,
    /// `None` when the group has no yes/no questions.
    pub pct_gold_yes_given_yn: Option<f64>,
    pub pct_gold_no_given_yn: Option<f64>,
    /// Yes/no questions whose gold is neither "yes" nor "no".
    pub pct_gold_other_given_yn: Option<f64>,
    pub pct_multiple_choice: f64,
    /// `None` when the group has no multiple-choice questions.
    pub pct_gold_first_given_mc: Option<f64>,
}

/// `100 * part / whole`, rounded once.
fn pct(part: usize, whole: usize) -> f64 {
    (100 * part) as f64 / whole as f64
}

fn pct_of(part: usize, whole: usize) -> Option<f64> {
    (whole > 0).then(|| pct(part, whole))
}

/// Distribution statistics over one (metric, dataset) group.
pub fn question_stats_for<'a, I>(metric: QaMetric, dataset: &str, questions: I) -> Result<QuestionStats>
where
    I: IntoIterator<Item = &'a QuestionRecord>,
{
    let (mut total, mut yn, mut yes, mut no, mut mc, mut first) = (0, 0, 0, 0, 0, 0);
    for q in questions {
        total += 1;
        match q.qtype {
            QuestionType::YesNo => {
                yn += 1;
                if answers_match(&q.gold, "yes") {
                    yes += 1;
                } else if answers_match(&q.gold, "no") {
                    no += 1;
                }
            }
            QuestionType::MultipleChoice => {
                mc += 1;
                if q.gold_index() == Some(0) {
                    first += 1;
                }
            }
        }
    }
    if total == 0 {
        return Err(Error::NoQuestions);
    }
    Ok(QuestionStats {
        metric,
        dataset: dataset.to_string(),
        total,
        yes_no: yn,
        multiple_choice: mc,
        pct_yes_no: pct(yn, total),
        pct_gold_yes_given_yn: pct_of(yes, yn),
        pct_gold_no_given_yn: pct_of(no, yn),
        pct_gold_other_given_yn: pct_of(yn - yes - no, yn),
        pct_multiple_choice: pct(mc, total),
        pct_gold_first_given_mc: pct_of(first, mc),
    })
}

/// Statistics for every (metric, dataset) group present, ordered by dataset
/// then metric.
pub fn question_stats(
    questions: &[QuestionRecord],
    dataset_of: &BTreeMap<String, String>,
) -> Result<Vec<QuestionStats>> {
    let mut groups: BTreeMap<(&str, QaMetric), Vec<&QuestionRecord>> = BTreeMap::new();
    for q in questions {
        let ds = dataset_of.get(&q.prompt_id).map_or("", String::as_str);
        groups.entry((ds, q.metric)).or_default().push(q);
    }
    groups
        .into_iter()
        .map(|((ds, metric), qs)| question_stats_for(metric, ds, qs))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountCorrelation {
    pub dataset: String,
    pub source: String,
    pub metric: QaMetric,
    pub n: usize,
    pub outcome: CellOutcome,
}

/// Spearman between the number of questions per prompt and the score, per
/// (dataset, source, QA metric).
pub fn question_count_correlation(
    scores: &[MetricScore],
    dataset_of: &BTreeMap<String, String>,
    thresholds: Thresholds,
    mode: PValueMode,
) -> Result<Vec<CountCorrelation>> {
    let mut groups: BTreeMap<(&str, &str, QaMetric), Vec<&MetricScore>> = BTreeMap::new();
    for s in scores {
        if let Some(m) = s.metric.qa() {
            let ds = dataset_of.get(&s.prompt_id).map_or("", String::as_str);
            groups.entry((ds, s.source.as_str(), m)).or_default().push(s);
        }
    }
    let mut out = Vec::with_capacity(groups.len());
    for ((ds, source, metric), mut group) in groups {
        group.sort_by(|a, b| a.prompt_id.cmp(&b.prompt_id));
        let counts: Vec<f64> = group.iter().map(|s| s.n_questions as f64).collect();
        let values: Vec<f64> = group.iter().map(|s| s.value).collect();
        let key = format!("perm/question_count/{ds}/{source}/{metric}");
        out.push(CountCorrelation {
            dataset: ds.to_string(),
            source: source.to_string(),
            metric,
            n: group.len(),
            outcome: correlation_cell(&counts, &values, thresholds, crate::stats::cell_mode(mode, &key))?,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShortcutThresholds {
    /// Percent of yes/no golds that are "yes" above which yes-bias is flagged.
    pub yes_pct: f64,
    /// Percent of multiple-choice golds that are the first choice above which
    /// first-answer bias is flagged.
    pub first_pct: f64,
    /// Minimum |rho| of a significant question-count correlation.
    pub count_rho: f64,
}

impl Default for ShortcutThresholds {
    fn default() -> Self {
        ShortcutThresholds {
            yes_pct: 90.0,
            first_pct: 90.0,
            count_rho: 0.4,
        }
    }
}

/// A shortcut flag with the number and threshold that decided it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Flag {
    pub flagged: bool,
    pub observed: Option<f64>,
    pub threshold: f64,
    pub rule: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Baselines {
    pub majority: f64,
    pub random_chance: f64,
}

/// Computes both baselines for one group of questions.
pub fn baselines(questions: &[QuestionRecord], trials: usize, seed: u64) -> Result<Baselines> {
    Ok(Baselines {
        majority: majority_baseline(questions)?,
        random_chance: random_chance(questions, trials, seed)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricShortcuts {
    pub metric: QaMetric,
    pub dataset: String,
    pub yes_bias: Flag,
    pub first_answer_bias: Flag,
    pub question_count_dependence: Flag,
    pub baselines: Baselines,
    /// Question-count correlation per source.
    pub count_rho: BTreeMap<String, Option<f64>>,
}

impl MetricShortcuts {
    pub fn any_flagged(&self) -> bool {
        self.yes_bias.flagged || self.first_answer_bias.flagged || self.question_count_dependence.flagged
    }
}

/// Applies the thresholds to one (metric, dataset) group. Comparisons on
/// percentages are strict; a value exactly at the threshold is not flagged.
pub fn shortcut_flags(
    stats: &QuestionStats,
    baselines: Baselines,
    count_correlations: &[&CorrelationResult],
    count_rho: BTreeMap<String, Option<f64>>,
    th: ShortcutThresholds,
) -> MetricShortcuts {
    let percent_flag = |observed: Option<f64>, threshold: f64, what: &str| Flag {
        flagged: observed.is_some_and(|v| v > threshold),
        observed,
        threshold,
        rule: format!("{what} > {threshold}%"),
    };
    let strongest = count_correlations
        .iter()
        .filter(|r| r.significant)
        .map(|r| r.rho)
        .max_by(|a, b| a.abs().total_cmp(&b.abs()));
    MetricShortcuts {
        metric: stats.metric,
        dataset: stats.dataset.clone(),
        yes_bias: percent_flag(stats.pct_gold_yes_given_yn, th.yes_pct, "gold \"yes\" among yes/no"),
        first_answer_bias: percent_flag(
            stats.pct_gold_first_given_mc,
            th.first_pct,
            "gold first choice among multiple choice",
        ),
        question_count_dependence: Flag {
            flagged: strongest.is_some_and(|r| r.abs() >= th.count_rho),
            observed: strongest,
            threshold: th.count_rho,
            rule: format!("significant |rho| >= {} for some source", th.count_rho),
        },
        baselines,
        count_rho,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShortcutReport {
    pub thresholds: ShortcutThresholds,
    pub entries: Vec<MetricShortcuts>,
    pub rubric: Vec<RubricRow>,
}

/// Runs the question statistics, baselines and count correlations, and
/// assembles the flags for every (metric, dataset) group.
pub fn shortcut_entries(
    stats: &[QuestionStats],
    questions: &[QuestionRecord],
    dataset_of: &BTreeMap<String, String>,
    counts: &[CountCorrelation],
    th: ShortcutThresholds,
    trials: usize,
    seed: u64,
) -> Result<Vec<MetricShortcuts>> {
    let mut entries = Vec::with_capacity(stats.len());
    for st in stats {
        let group: Vec<QuestionRecord> = questions
            .iter()
            .filter(|q| q.metric == st.metric && dataset_of.get(&q.prompt_id).map_or("", String::as_str) == st.dataset)
            .cloned()
            .collect();
        let relevant: Vec<&CountCorrelation> = counts
            .iter()
            .filter(|c| c.metric == st.metric && c.dataset == st.dataset)
            .collect();
        let results: Vec<&CorrelationResult> = relevant.iter().filter_map(|c| c.outcome.result()).collect();
        let rho_by_source = relevant
            .iter()
            .map(|c| (c.source.clone(), c.outcome.result().map(|r| r.rho)))
            .collect();
        entries.push(shortcut_flags(
            st,
            baselines(&group, trials, seed)?,
            &results,
            rho_by_source,
            th,
        ));
    }
    Ok(entries)
}
