use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

/// Fields a record carried that this toolkit does not interpret. They are
/// written back out unchanged.
pub type Extra = Map<String, Value>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptRecord {
    pub id: String,
    pub dataset: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parse: Option<String>,
    #[serde(flatten)]
    pub extra: Extra,
}

impl PromptRecord {
    pub fn new(id: impl Into<String>, dataset: impl Into<String>, text: impl Into<String>) -> Self {
        PromptRecord {
            id: id.into(),
            dataset: dataset.into(),
            text: text.into(),
            parse: None,
            extra: Extra::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageRef {
    pub prompt_id: String,
    pub source: String,
    pub image_key: String,
    #[serde(flatten)]
    pub extra: Extra,
}

impl ImageRef {
    pub fn new(prompt_id: impl Into<String>, source: impl Into<String>, image_key: impl Into<String>) -> Self {
        ImageRef {
            prompt_id: prompt_id.into(),
            source: source.into(),
            image_key: image_key.into(),
            extra: Extra::new(),
        }
    }
}

/// The question-answering metrics. CLIPScore has no questions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QaMetric {
    Tifa,
    Vpeval,
    Dsg,
}

impl QaMetric {
    pub const ALL: [QaMetric; 3] = [QaMetric::Tifa, QaMetric::Vpeval, QaMetric::Dsg];

    pub fn as_str(self) -> &'static str {
        match self {
            QaMetric::Tifa => "tifa",
            QaMetric::Vpeval => "vpeval",
            QaMetric::Dsg => "dsg",
        }
    }

    /// Whether a question's credit depends on its ancestors.
    pub fn is_gated(self) -> bool {
        self == QaMetric::Dsg
    }
}

impl fmt::Display for QaMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuestionType {
    YesNo,
    MultipleChoice,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionRecord {
    pub question_id: String,
    pub prompt_id: String,
    pub metric: QaMetric,
    pub text: String,
    pub qtype: QuestionType,
    pub choices: Vec<String>,
    pub gold: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub depends_on: Vec<String>,
    #[serde(flatten)]
    pub extra: Extra,
}

impl QuestionRecord {
    pub fn yes_no(
        question_id: impl Into<String>,
        prompt_id: impl Into<String>,
        metric: QaMetric,
        text: impl Into<String>,
        gold: &str,
    ) -> Self {
        QuestionRecord {
            question_id: question_id.into(),
            prompt_id: prompt_id.into(),
            metric,
            text: text.into(),
            qtype: QuestionType::YesNo,
            choices: vec!["yes".into(), "no".into()],
            gold: gold.to_string(),
            depends_on: Vec::new(),
            extra: Extra::new(),
        }
    }

    pub fn multiple_choice(
        question_id: impl Into<String>,
        prompt_id: impl Into<String>,
        metric: QaMetric,
        text: impl Into<String>,
        choices: &[&str],
        gold: &str,
    ) -> Self {
        QuestionRecord {
            question_id: question_id.into(),
            prompt_id: prompt_id.into(),
            metric,
            text: text.into(),
            qtype: QuestionType::MultipleChoice,
            choices: choices.iter().map(|c| c.to_string()).collect(),
            gold: gold.to_string(),
            depends_on: Vec::new(),
            extra: Extra::new(),
        }
    }

    pub fn with_dependencies<I, S>(mut self, parents: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.depends_on = parents.into_iter().map(Into::into).collect();
        self
    }

    pub fn gold_index(&self) -> Option<usize> {
        self.choices.iter().position(|c| c == &self.gold)
    }

    /// The answer a constant "yes" / first-choice responder gives.
    pub fn majority_answer(&self) -> &str {
        match self.qtype {
            QuestionType::YesNo => "yes",
            QuestionType::MultipleChoice => self.choices.first().map_or("", String::as_str),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerRecord {
    pub question_id: String,
    pub source: String,
    pub predicted: String,
    #[serde(flatten)]
    pub extra: Extra,
}

impl AnswerRecord {
    pub fn new(question_id: impl Into<String>, source: impl Into<String>, predicted: impl Into<String>) -> Self {
        AnswerRecord {
            question_id: question_id.into(),
            source: source.into(),
            predicted: predicted.into(),
            extra: Extra::new(),
        }
    }
}

/// The caption variant a plain CLIPScore is read from.
pub const FULL_PROMPT: &str = "full_prompt";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityRecord {
    pub prompt_id: String,
    pub source: String,
    pub caption_variant: String,
    pub score: f64,
    #[serde(flatten)]
    pub extra: Extra,
}

impl SimilarityRecord {
    pub fn new(
        prompt_id: impl Into<String>,
        source: impl Into<String>,
        caption_variant: impl Into<String>,
        score: f64,
    ) -> Self {
        SimilarityRecord {
            prompt_id: prompt_id.into(),
            source: source.into(),
            caption_variant: caption_variant.into(),
            score,
            extra: Extra::new(),
        }
    }
}
