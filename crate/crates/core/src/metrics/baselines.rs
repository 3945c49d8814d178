//! Reference scores that need no image: uniform random answering and the
//! constant "yes" / first-choice responder.

use std::borrow::Borrow;
use std::collections::BTreeMap;

use rand::Rng;

use super::GateGraph;
use crate::corpus::{group_questions, QaMetric, QuestionRecord};
use crate::error::{Error, Result};
use crate::metrics::answers_match;
use crate::seed;

pub const DEFAULT_TRIALS: usize = 100_000;

/// Monte-Carlo mean score of one (prompt, metric) group when every question is
/// answered uniformly at random over its choices.
pub fn random_chance_group<Q: Borrow<QuestionRecord>, R: Rng>(
    questions: &[Q],
    gated: bool,
    trials: usize,
    rng: &mut R,
) -> Result<f64> {
    if questions.is_empty() {
        return Err(Error::NoQuestions);
    }
    let trials = trials.max(1);
    let graph = GateGraph::new(questions)?;
    let shape: Vec<(usize, usize)> = questions
        .iter()
        .map(|q| {
            let q = q.borrow();
            (q.choices.len().max(1), q.gold_index().unwrap_or(usize::MAX))
        })
        .collect();

    let mut raw = vec![false; shape.len()];
    let mut credited_total = 0usize;
    for _ in 0..trials {
        for (slot, &(n_choices, gold)) in raw.iter_mut().zip(&shape) {
            *slot = rng.random_range(0..n_choices) == gold;
        }
        credited_total += graph.credited_count(&raw, gated);
    }
    Ok(credited_total as f64 / (trials as f64 * shape.len() as f64))
}

/// Mean over (prompt, metric) groups of the random-answer score. Each group
/// draws from its own stream derived from `(seed, prompt_id, metric)`.
pub fn random_chance(questions: &[QuestionRecord], trials: usize, seed: u64) -> Result<f64> {
    let groups = group_questions(questions);
    if groups.is_empty() {
        return Err(Error::NoQuestions);
    }
    let mut total = 0.0;
    for ((prompt_id, metric), group) in &groups {
        let mut rng = seed::rng_for(seed, &format!("random_chance/{prompt_id}/{metric}"));
        total += random_chance_group(group, metric.is_gated(), trials, &mut rng)?;
    }
    Ok(total / groups.len() as f64)
}

pub fn random_chance_by_metric(
    questions: &[QuestionRecord],
    trials: usize,
    seed: u64,
) -> Result<BTreeMap<QaMetric, f64>> {
    split_by_metric(questions)
        .into_iter()
        .map(|(m, qs)| Ok((m, random_chance(&qs, trials, seed)?)))
        .collect()
}

/// Score obtained by answering "yes" to every yes/no question and the first
/// listed choice to every multiple-choice question, averaged over groups.
pub fn majority_baseline(questions: &[QuestionRecord]) -> Result<f64> {
    let groups = group_questions(questions);
    if groups.is_empty() {
        return Err(Error::NoQuestions);
    }
    let mut total = 0.0;
    for ((_, metric), group) in &groups {
        let raw: Vec<bool> = group
            .iter()
            .map(|q| answers_match(q.majority_answer(), &q.gold))
            .collect();
        let hits = GateGraph::new(group)?.credited_count(&raw, metric.is_gated());
        total += hits as f64 / group.len() as f64;
    }
    Ok(total / groups.len() as f64)
}

pub fn majority_baseline_by_metric(questions: &[QuestionRecord]) -> Result<BTreeMap<QaMetric, f64>> {
    split_by_metric(questions)
        .into_iter()
        .map(|(m, qs)| Ok((m, majority_baseline(&qs)?)))
        .collect()
}

fn split_by_metric(questions: &[QuestionRecord]) -> BTreeMap<QaMetric, Vec<QuestionRecord>> {
    let mut out: BTreeMap<QaMetric, Vec<QuestionRecord>> = BTreeMap::new();
    for q in questions {
        out.entry(q.metric).or_default().push(q.clone());
    }
    out
}
