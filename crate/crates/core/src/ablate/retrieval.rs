use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::corpus::{group_questions, QaMetric, QuestionRecord, SimilarityRecord};
use crate::error::{Error, Result};
use crate::metrics::{aggregate, MetricScore};

/// Prefix of the caption-variant ids used for retrieval-QA similarities.
pub const RETRIEVAL_PREFIX: &str = "qa:";

pub fn caption_variant(question_id: &str, index: usize) -> String {
    format!("{RETRIEVAL_PREFIX}{question_id}:{index}")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Caption {
    pub choice: String,
    pub text: String,
}

/// One caption per answer choice; the question is answered by whichever
/// caption an image-text model scores highest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetrievalCaptionSet {
    pub question_id: String,
    pub prompt_id: String,
    pub metric: QaMetric,
    pub captions: Vec<Caption>,
    pub correct_index: usize,
}

pub fn build_retrieval_captions(question: &QuestionRecord) -> Result<RetrievalCaptionSet> {
    if question.choices.len() < 2 {
        return Err(Error::TooFewChoices(question.question_id.clone()));
    }
    let correct_index = question.gold_index().ok_or_else(|| Error::Malformed {
        file: "questions".into(),
        line: 0,
        message: format!("gold of `{}` is not among its choices", question.question_id),
    })?;
    let stem = question.text.strip_suffix('?').unwrap_or(&question.text);
    Ok(RetrievalCaptionSet {
        question_id: question.question_id.clone(),
        prompt_id: question.prompt_id.clone(),
        metric: question.metric,
        captions: question
            .choices
            .iter()
            .map(|choice| Caption {
                choice: choice.clone(),
                text: format!("{stem}? {choice}"),
            })
            .collect(),
        correct_index,
    })
}

/// Strict argmax: the gold caption must score above every other caption.
pub fn retrieval_correct(correct_index: usize, scores: &[f64]) -> bool {
    let gold = scores[correct_index];
    scores.iter().enumerate().all(|(i, &s)| i == correct_index || s < gold)
}

/// Retrieval-QA scores for one source, per (prompt, metric) group.
pub fn score_retrieval_qa(
    questions: &[QuestionRecord],
    similarities: &[SimilarityRecord],
    source: &str,
) -> Result<Vec<MetricScore>> {
    let lookup: HashMap<(&str, &str), f64> = similarities
        .iter()
        .filter(|s| s.source == source)
        .map(|s| ((s.prompt_id.as_str(), s.caption_variant.as_str()), s.score))
        .collect();

    let mut missing = Vec::new();
    let mut scores = Vec::new();
    for ((prompt_id, metric), group) in group_questions(questions) {
        let mut correct = BTreeMap::new();
        for q in &group {
            let set = build_retrieval_captions(q)?;
            let mut values = Vec::with_capacity(set.captions.len());
            for i in 0..set.captions.len() {
                let variant = caption_variant(&q.question_id, i);
                match lookup.get(&(prompt_id.as_str(), variant.as_str())) {
                    Some(&v) => values.push(v),
                    None => missing.push((q.question_id.clone(), variant)),
                }
            }
            if values.len() == set.captions.len() {
                correct.insert(q.question_id.clone(), retrieval_correct(set.correct_index, &values));
            }
        }
        if missing.is_empty() {
            scores.push(MetricScore {
                prompt_id: prompt_id.clone(),
                source: source.to_string(),
                metric: metric.into(),
                value: aggregate(&group, &correct, metric.is_gated())?,
                n_questions: group.len(),
            });
        }
    }
    if !missing.is_empty() {
        return Err(Error::MissingCaptionScores(missing));
    }
    Ok(scores)
}

/// Retrieval-QA scores for every source that has caption similarities.
pub fn score_retrieval_records(
    questions: &[QuestionRecord],
    similarities: &[SimilarityRecord],
) -> Result<Vec<MetricScore>> {
    let sources: BTreeSet<&str> = similarities
        .iter()
        .filter(|s| s.caption_variant.starts_with(RETRIEVAL_PREFIX))
        .map(|s| s.source.as_str())
        .collect();
    let mut out = Vec::new();
    for source in sources {
        out.extend(score_retrieval_qa(questions, similarities, source)?);
    }
    crate::metrics::sort_scores(&mut out);
    Ok(out)
}

/// A caption to be scored against each image of its prompt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetrievalCaptionRecord {
    pub prompt_id: String,
    pub question_id: String,
    pub caption_variant: String,
    pub caption: String,
}

pub fn retrieval_caption_records(questions: &[QuestionRecord]) -> Result<Vec<RetrievalCaptionRecord>> {
    let mut out = Vec::new();
    for q in questions {
        let set = build_retrieval_captions(q)?;
        for (i, c) in set.captions.into_iter().enumerate() {
            out.push(RetrievalCaptionRecord {
                prompt_id: q.prompt_id.clone(),
                question_id: q.question_id.clone(),
                caption_variant: caption_variant(&q.question_id, i),
                caption: c.text,
            });
        }
    }
    Ok(out)
}

pub fn format_text_only_qa(question: &QuestionRecord) -> String {
    assert!(
        !question.choices.is_empty(),
        "question `{}` has no choices",
        question.question_id
    );
    format!(
        "Question: {} Choices: {} Answer:",
        question.text,
        question.choices.join(", ")
    )
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextQaPrompt {
    pub question_id: String,
    pub prompt_id: String,
    pub prompt: String,
}

pub fn text_only_prompts(questions: &[QuestionRecord]) -> Vec<TextQaPrompt> {
    questions
        .iter()
        .map(|q| TextQaPrompt {
            question_id: q.question_id.clone(),
            prompt_id: q.prompt_id.clone(),
            prompt: format_text_only_qa(q),
        })
        .collect()
}
