//! Aggregation of raw answer and similarity records into per-(prompt, source,
//! metric) consistency scores.
//!
//! Answers match the gold answer when they are equal after trimming and
//! lowercasing. TIFA and VPEval score the fraction of matching answers; DSG
//! additionally withholds credit from any question whose ancestors (through
//! `depends_on`) were not credited.

mod baselines;

use std::borrow::Borrow;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

pub use baselines::{
    majority_baseline, majority_baseline_by_metric, random_chance, random_chance_by_metric, random_chance_group,
    DEFAULT_TRIALS,
};

use crate::corpus::{group_questions, AnswerRecord, Corpus, QaMetric, QuestionRecord, SimilarityRecord, FULL_PROMPT};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Clipscore,
    Tifa,
    Vpeval,
    Dsg,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Clipscore, Metric::Tifa, Metric::Vpeval, Metric::Dsg];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Clipscore => "clipscore",
            Metric::Tifa => "tifa",
            Metric::Vpeval => "vpeval",
            Metric::Dsg => "dsg",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            Metric::Clipscore => "CLIPScore",
            Metric::Tifa => "TIFA",
            Metric::Vpeval => "VPEval",
            Metric::Dsg => "DSG",
        }
    }

    pub fn qa(self) -> Option<QaMetric> {
        match self {
            Metric::Clipscore => None,
            Metric::Tifa => Some(QaMetric::Tifa),
            Metric::Vpeval => Some(QaMetric::Vpeval),
            Metric::Dsg => Some(QaMetric::Dsg),
        }
    }
}

impl From<QaMetric> for Metric {
    fn from(m: QaMetric) -> Self {
        match m {
            QaMetric::Tifa => Metric::Tifa,
            QaMetric::Vpeval => Metric::Vpeval,
            QaMetric::Dsg => Metric::Dsg,
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricScore {
    pub prompt_id: String,
    pub source: String,
    pub metric: Metric,
    pub value: f64,
    pub n_questions: usize,
}

/// Per-question correctness for one (prompt, metric) group and one source.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VerdictSet {
    pub correct: BTreeMap<String, bool>,
    pub predicted: BTreeMap<String, String>,
}

pub fn answers_match(predicted: &str, gold: &str) -> bool {
    predicted.trim().to_lowercase() == gold.trim().to_lowercase()
}

/// Answer lookup keyed by (question_id, source).
#[derive(Debug, Default)]
pub struct AnswerIndex<'a> {
    by_key: HashMap<(&'a str, &'a str), &'a str>,
}

impl<'a> AnswerIndex<'a> {
    pub fn new(answers: &'a [AnswerRecord]) -> Self {
        AnswerIndex {
            by_key: answers
                .iter()
                .map(|a| ((a.question_id.as_str(), a.source.as_str()), a.predicted.as_str()))
                .collect(),
        }
    }

    pub fn get(&self, question_id: &str, source: &str) -> Option<&'a str> {
        self.by_key.get(&(question_id, source)).copied()
    }
}

pub fn verdicts<Q: Borrow<QuestionRecord>>(
    questions: &[Q],
    answers: &AnswerIndex<'_>,
    source: &str,
) -> Result<VerdictSet> {
    let mut set = VerdictSet::default();
    let mut missing = Vec::new();
    for q in questions.iter().map(Borrow::borrow) {
        match answers.get(&q.question_id, source) {
            Some(p) => {
                set.correct.insert(q.question_id.clone(), answers_match(p, &q.gold));
                set.predicted.insert(q.question_id.clone(), p.to_string());
            }
            None => missing.push(q.question_id.clone()),
        }
    }
    if !missing.is_empty() {
        return Err(Error::MissingAnswers {
            source_name: source.to_string(),
            question_ids: missing,
        });
    }
    Ok(set)
}

/// Dependency structure of one question group in evaluation order.
#[derive(Debug, Clone)]
pub struct GateGraph {
    parents: Vec<Vec<usize>>,
    order: Vec<usize>,
}

impl GateGraph {
    pub fn new<Q: Borrow<QuestionRecord>>(questions: &[Q]) -> Result<Self> {
        let index: HashMap<&str, usize> = questions
            .iter()
            .enumerate()
            .map(|(i, q)| (q.borrow().question_id.as_str(), i))
            .collect();
        let mut parents = Vec::with_capacity(questions.len());
        for q in questions.iter().map(Borrow::borrow) {
            let mut ps = Vec::with_capacity(q.depends_on.len());
            for dep in &q.depends_on {
                let &p = index.get(dep.as_str()).ok_or_else(|| Error::DanglingReference {
                    file: "questions".into(),
                    kind: "question",
                    id: q.question_id.clone(),
                    target: "dependency",
                    reference: dep.clone(),
                })?;
                ps.push(p);
            }
            parents.push(ps);
        }

        // Kahn's algorithm; lowest index first keeps the order deterministic.
        let n = questions.len();
        let mut pending: Vec<usize> = parents.iter().map(Vec::len).collect();
        let mut children = vec![Vec::new(); n];
        for (child, ps) in parents.iter().enumerate() {
            for &p in ps {
                children[p].push(child);
            }
        }
        let mut ready: BTreeSet<usize> = (0..n).filter(|&i| pending[i] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(i) = ready.pop_first() {
            order.push(i);
            for &c in &children[i] {
                pending[c] -= 1;
                if pending[c] == 0 {
                    ready.insert(c);
                }
            }
        }
        if order.len() < n {
            let stuck = (0..n)
                .filter(|&i| pending[i] > 0)
                .map(|i| questions[i].borrow().question_id.clone())
                .collect();
            return Err(Error::DependencyCycle(stuck));
        }
        Ok(GateGraph { parents, order })
    }

    /// A question is credited iff it is raw-correct and all parents are credited.
    pub fn credited(&self, raw: &[bool]) -> Vec<bool> {
        let mut out = vec![false; raw.len()];
        for &i in &self.order {
            out[i] = raw[i] && self.parents[i].iter().all(|&p| out[p]);
        }
        out
    }

    pub fn credited_count(&self, raw: &[bool], gated: bool) -> usize {
        if gated {
            self.credited(raw).into_iter().filter(|c| *c).count()
        } else {
            raw.iter().filter(|c| **c).count()
        }
    }
}

/// Fraction of credited questions given raw per-question correctness.
pub fn aggregate<Q: Borrow<QuestionRecord>>(
    questions: &[Q],
    correct: &BTreeMap<String, bool>,
    gated: bool,
) -> Result<f64> {
    if questions.is_empty() {
        return Err(Error::NoQuestions);
    }
    let raw: Vec<bool> = questions
        .iter()
        .map(|q| correct.get(&q.borrow().question_id).copied().unwrap_or(false))
        .collect();
    let hits = if gated {
        GateGraph::new(questions)?.credited_count(&raw, true)
    } else {
        raw.iter().filter(|c| **c).count()
    };
    Ok(hits as f64 / questions.len() as f64)
}

fn score_qa<Q: Borrow<QuestionRecord>>(
    metric: Metric,
    questions: &[Q],
    answers: &AnswerIndex<'_>,
    source: &str,
    gated: bool,
) -> Result<MetricScore> {
    let first = questions.first().ok_or(Error::NoQuestions)?.borrow();
    let verdicts = verdicts(questions, answers, source)?;
    Ok(MetricScore {
        prompt_id: first.prompt_id.clone(),
        source: source.to_string(),
        metric,
        value: aggregate(questions, &verdicts.correct, gated)?,
        n_questions: questions.len(),
    })
}

/// Percent of questions answered correctly.
pub fn score_tifa<Q: Borrow<QuestionRecord>>(
    questions: &[Q],
    answers: &AnswerIndex<'_>,
    source: &str,
) -> Result<MetricScore> {
    score_qa(Metric::Tifa, questions, answers, source, false)
}

/// Percent correct where a question only counts if all its ancestors count.
pub fn score_dsg<Q: Borrow<QuestionRecord>>(
    questions: &[Q],
    answers: &AnswerIndex<'_>,
    source: &str,
) -> Result<MetricScore> {
    score_qa(Metric::Dsg, questions, answers, source, true)
}

/// Flat average over the supplied per-question VQA verdicts.
pub fn score_vpeval<Q: Borrow<QuestionRecord>>(
    questions: &[Q],
    answers: &AnswerIndex<'_>,
    source: &str,
) -> Result<MetricScore> {
    score_qa(Metric::Vpeval, questions, answers, source, false)
}

pub fn score_group<Q: Borrow<QuestionRecord>>(
    metric: QaMetric,
    questions: &[Q],
    answers: &AnswerIndex<'_>,
    source: &str,
) -> Result<MetricScore> {
    match metric {
        QaMetric::Tifa => score_tifa(questions, answers, source),
        QaMetric::Vpeval => score_vpeval(questions, answers, source),
        QaMetric::Dsg => score_dsg(questions, answers, source),
    }
}

pub fn score_clipscore(similarities: &[SimilarityRecord], prompt_id: &str, source: &str) -> Result<MetricScore> {
    let matching: Vec<&SimilarityRecord> = similarities
        .iter()
        .filter(|s| s.prompt_id == prompt_id && s.source == source && s.caption_variant == FULL_PROMPT)
        .collect();
    match matching.as_slice() {
        [one] => Ok(MetricScore {
            prompt_id: prompt_id.to_string(),
            source: source.to_string(),
            metric: Metric::Clipscore,
            value: one.score,
            n_questions: 0,
        }),
        other => Err(Error::SimilarityCount {
            prompt_id: prompt_id.to_string(),
            source_name: source.to_string(),
            variant: FULL_PROMPT.to_string(),
            found: other.len(),
        }),
    }
}

/// Scores every (prompt, source, metric) combination present in the records.
///
/// A QA group is scored for a source when that source answered at least one
/// of its questions; it must then have answered all of them.
pub fn score_records(
    questions: &[QuestionRecord],
    answers: &[AnswerRecord],
    similarities: &[SimilarityRecord],
) -> Result<Vec<MetricScore>> {
    let index = AnswerIndex::new(answers);
    let answered: BTreeSet<(&str, &str)> = answers
        .iter()
        .map(|a| (a.question_id.as_str(), a.source.as_str()))
        .collect();
    let sources: BTreeSet<&str> = answers.iter().map(|a| a.source.as_str()).collect();

    let mut scores = Vec::new();
    for ((_, metric), group) in group_questions(questions) {
        for &source in &sources {
            let touched = group
                .iter()
                .any(|q| answered.contains(&(q.question_id.as_str(), source)));
            if touched {
                scores.push(score_group(metric, &group, &index, source)?);
            }
        }
    }

    let mut clip_keys: BTreeMap<(&str, &str), usize> = BTreeMap::new();
    for s in similarities.iter().filter(|s| s.caption_variant == FULL_PROMPT) {
        *clip_keys.entry((s.prompt_id.as_str(), s.source.as_str())).or_default() += 1;
    }
    for ((prompt_id, source), count) in clip_keys {
        if count != 1 {
            return Err(Error::SimilarityCount {
                prompt_id: prompt_id.to_string(),
                source_name: source.to_string(),
                variant: FULL_PROMPT.to_string(),
                found: count,
            });
        }
        let value = similarities
            .iter()
            .find(|s| s.prompt_id == prompt_id && s.source == source && s.caption_variant == FULL_PROMPT)
            .map(|s| s.score)
            .unwrap_or_default();
        scores.push(MetricScore {
            prompt_id: prompt_id.to_string(),
            source: source.to_string(),
            metric: Metric::Clipscore,
            value,
            n_questions: 0,
        });
    }

    sort_scores(&mut scores);
    Ok(scores)
}

pub fn score_corpus(corpus: &Corpus) -> Result<Vec<MetricScore>> {
    score_records(&corpus.questions, &corpus.answers, &corpus.similarities)
}

pub fn sort_scores(scores: &mut [MetricScore]) {
    scores.sort_by(|a, b| {
        (a.prompt_id.as_str(), a.source.as_str(), a.metric).cmp(&(b.prompt_id.as_str(), b.source.as_str(), b.metric))
    });
}

/// Mean score per (source, metric).
pub fn mean_by_source(scores: &[MetricScore]) -> BTreeMap<(String, Metric), f64> {
    let mut sums: BTreeMap<(String, Metric), (f64, usize)> = BTreeMap::new();
    for s in scores {
        let e = sums.entry((s.source.clone(), s.metric)).or_default();
        e.0 += s.value;
        e.1 += 1;
    }
    sums.into_iter().map(|(k, (sum, n))| (k, sum / n as f64)).collect()
}
