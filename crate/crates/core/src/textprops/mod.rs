//! Linguistic prompt properties: readability, syntactic complexity, length.

mod readability;
mod syllables;
mod tokenize;
mod tree;
mod yngve;

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use readability::{flesch_kincaid_grade, kincaid_grade, readability_counts, split_sentences, ReadabilityCounts};
pub use syllables::count_syllables;
pub use tokenize::{is_word_token, tokenize, TokenSequence};
pub use tree::ParseTree;
pub use yngve::{leaf_depths, yngve_score, YngveAggregate};

use crate::error::{Error, Result};

const BUNDLED_STOPWORDS: &str = include_str!("../../data/stopwords_en.txt");

/// Lowercased stopword set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stopwords(BTreeSet<String>);

impl Stopwords {
    /// The standard 179-word English list.
    pub fn english() -> Self {
        Self::from_lines(BUNDLED_STOPWORDS)
    }

    pub fn from_lines(text: &str) -> Self {
        Stopwords(
            text.lines()
                .map(|l| l.trim().to_lowercase())
                .filter(|l| !l.is_empty())
                .collect(),
        )
    }

    pub fn from_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Stopwords(words.into_iter().map(|w| w.as_ref().to_lowercase()).collect())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let words = Self::from_lines(&text);
        if words.0.is_empty() {
            return Err(Error::EmptyFile(path.display().to_string()));
        }
        Ok(words)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.0.contains(&word.to_lowercase())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Word tokens that are not stopwords.
pub fn prompt_length(text: &str, stopwords: &Stopwords) -> usize {
    tokenize(text).words().filter(|w| !stopwords.contains(w)).count()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinguisticProfile {
    pub prompt_id: String,
    pub grade_level: f64,
    /// `None` when the prompt carries no parse.
    pub yngve: Option<f64>,
    pub length: usize,
}

pub fn linguistic_profile(
    prompt_id: &str,
    text: &str,
    parse: Option<&ParseTree>,
    stopwords: &Stopwords,
    aggregate: YngveAggregate,
) -> Result<LinguisticProfile> {
    Ok(LinguisticProfile {
        prompt_id: prompt_id.to_string(),
        grade_level: flesch_kincaid_grade(text)?,
        yngve: parse.map(|t| yngve_score(t, aggregate)).transpose()?,
        length: prompt_length(text, stopwords),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn bundled_list_size() {
        let sw = Stopwords::english();
        assert_eq!(sw.len(), 179);
        for w in ["a", "is", "with", "in", "the", "don't"] {
            assert!(sw.contains(w), "{w}");
        }
    }

    #[test]
    fn length_examples() {
        let a = Stopwords::from_words(["a"]);
        assert_eq!(prompt_length("a big bear", &a), 2);
        let the = Stopwords::from_words(["the"]);
        assert_eq!(prompt_length("the the the", &the), 0);
        assert_eq!(prompt_length("The THE the", &the), 0);
        assert_eq!(
            prompt_length(
                "A big burly grizzly bear is shown with grass in the background",
                &Stopwords::english()
            ),
            7
        );
    }

    #[test]
    fn profile_without_parse() {
        let p = linguistic_profile("p1", "a big bear", None, &Stopwords::english(), YngveAggregate::Mean).unwrap();
        assert_eq!(p.length, 2);
        assert_eq!(p.yngve, None);
    }

    proptest! {
        #[test]
        fn length_bounded_by_word_count(s in "[a-zA-Z ,.?]{0,60}") {
            let sw = Stopwords::english();
            let seq = tokenize(&s);
            let len = prompt_length(&s, &sw);
            prop_assert!(len <= seq.word_count());
            let any_stop = seq.words().any(|w| sw.contains(w));
            prop_assert_eq!(len == seq.word_count(), !any_stop);
        }
    }
}
