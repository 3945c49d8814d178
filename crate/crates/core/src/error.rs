use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse classification used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Config,
    Data,
    Statistical,
}

impl ErrorCategory {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorCategory::Config => 2,
            ErrorCategory::Data => 3,
            ErrorCategory::Statistical => 4,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCategory::Config => "config",
            ErrorCategory::Data => "data",
            ErrorCategory::Statistical => "statistical",
        }
    }
}

/// Why a text produced no scorable tokens for a lexical measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmptyReason {
    /// No word tokens at all, or every word token is a stopword.
    AllStopwords,
    /// Content words exist but none are in the lexicon and the policy omits them.
    AllMissing,
}

impl std::fmt::Display for EmptyReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EmptyReason::AllStopwords => f.write_str("every word token is a stopword"),
            EmptyReason::AllMissing => f.write_str("no content word is in the lexicon"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{file}:{line}: {message}")]
    Malformed { file: String, line: usize, message: String },

    #[error("{file}: duplicate {kind} `{id}`")]
    DuplicateId {
        file: String,
        kind: &'static str,
        id: String,
    },

    #[error("prompt `{prompt_id}`: invalid parse: {message}")]
    InvalidParse { prompt_id: String, message: String },

    #[error("tree syntax error at byte {offset}: {message}")]
    TreeSyntax { offset: usize, message: String },

    #[error("{file}: {kind} `{id}` references unknown {target} `{reference}`")]
    DanglingReference {
        file: String,
        kind: &'static str,
        id: String,
        target: &'static str,
        reference: String,
    },

    #[error("dependency cycle among questions: {}", .0.join(" -> "))]
    DependencyCycle(Vec<String>),

    #[error("{0}: file has no records")]
    EmptyFile(String),

    #[error("text has no word tokens")]
    NoWords,

    #[error("no scorable tokens: {0}")]
    NoScorableTokens(EmptyReason),

    #[error("source `{source_name}` has no answer for questions: {}", .question_ids.join(", "))]
    MissingAnswers {
        source_name: String,
        question_ids: Vec<String>,
    },

    #[error("no questions supplied for scoring")]
    NoQuestions,

    #[error(
        "expected exactly one `{variant}` similarity for prompt `{prompt_id}` / source `{source_name}`, found {found}"
    )]
    SimilarityCount {
        prompt_id: String,
        source_name: String,
        variant: String,
        found: usize,
    },

    #[error("missing similarities for captions: {}", .0.iter().map(|(q, c)| format!("{q}/{c}")).collect::<Vec<_>>().join(", "))]
    MissingCaptionScores(Vec<(String, String)>),

    #[error("question `{0}` needs at least two choices")]
    TooFewChoices(String),

    #[error("cannot derange group `{0}` of size 1")]
    DerangementImpossible(String),

    #[error("input lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),

    #[error("need at least {required} paired observations, have {actual}")]
    InsufficientN { required: usize, actual: usize },

    #[error("input has zero rank variance")]
    ConstantInput,

    #[error("input contains a non-finite value")]
    NonFiniteInput,

    #[error("need at least two metrics for a correlation matrix, have {0}")]
    TooFewMetrics(usize),

    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    #[error("{0}")]
    Output(String),
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Config(_) => ErrorCategory::Config,
            Error::LengthMismatch(..)
            | Error::InsufficientN { .. }
            | Error::ConstantInput
            | Error::NonFiniteInput
            | Error::TooFewMetrics(_) => ErrorCategory::Statistical,
            _ => ErrorCategory::Data,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn malformed(file: &str, line: usize, message: impl Into<String>) -> Self {
        Error::Malformed {
            file: file.to_string(),
            line,
            message: message.into(),
        }
    }
}
