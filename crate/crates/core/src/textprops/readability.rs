//! Flesch-Kincaid grade level.
//!
//! `0.39 * (words / sentences) + 11.8 * (syllables / words) - 15.59`
//!
//! Words are the word tokens of [`tokenize`], stopwords included. Sentences
//! end at `.`, `!` or `?` followed by whitespace or end of text; a text
//! always has at least one sentence.

use super::syllables::count_syllables;
use super::tokenize::tokenize;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReadabilityCounts {
    pub words: usize,
    pub sentences: usize,
    pub syllables: usize,
}

impl ReadabilityCounts {
    pub fn grade(&self) -> f64 {
        kincaid_grade(self.words, self.sentences, self.syllables)
    }
}

pub fn kincaid_grade(words: usize, sentences: usize, syllables: usize) -> f64 {
    let words = words as f64;
    0.39 * (words / sentences as f64) + 11.8 * (syllables as f64 / words) - 15.59
}

pub fn split_sentences(text: &str) -> Vec<&str> {
    let mut sentences = Vec::new();
    let mut start = 0;
    let mut chars = text.char_indices().peekable();
    while let Some((idx, c)) = chars.next() {
        if !matches!(c, '.' | '!' | '?') {
            continue;
        }
        let at_boundary = chars.peek().is_none_or(|(_, next)| next.is_whitespace());
        if at_boundary {
            let end = idx + c.len_utf8();
            sentences.push(&text[start..end]);
            start = end;
        }
    }
    if start < text.len() {
        sentences.push(&text[start..]);
    }
    sentences
}

pub fn readability_counts(text: &str) -> Result<ReadabilityCounts> {
    let tokens = tokenize(text);
    let words = tokens.word_count();
    if words == 0 {
        return Err(Error::NoWords);
    }
    let syllables = tokens.words().map(count_syllables).sum();
    let sentences = split_sentences(text)
        .into_iter()
        .filter(|s| tokenize(s).word_count() > 0)
        .count()
        .max(1);
    Ok(ReadabilityCounts {
        words,
        sentences,
        syllables,
    })
}

pub fn flesch_kincaid_grade(text: &str) -> Result<f64> {
    readability_counts(text).map(|c| c.grade())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formula_at_hand_values() {
        // 10 words, 1 sentence, 12 syllables
        let g = kincaid_grade(10, 1, 12);
        assert!((g - 2.47).abs() < 1e-12, "{g}");
    }

    #[test]
    fn minimal_text() {
        let g = flesch_kincaid_grade("a.").unwrap();
        assert!((g - (-3.40)).abs() < 1e-12, "{g}");
    }

    #[test]
    fn empty_is_error() {
        assert!(matches!(flesch_kincaid_grade(""), Err(Error::NoWords)));
        assert!(matches!(flesch_kincaid_grade("?!"), Err(Error::NoWords)));
    }

    #[test]
    fn sentence_splitting() {
        assert_eq!(split_sentences("A dog. A cat!"), vec!["A dog.", " A cat!"]);
        assert_eq!(split_sentences("3.5 m"), vec!["3.5 m"]);
        let c = readability_counts("A dog. A cat! ...").unwrap();
        assert_eq!(c.sentences, 2);
    }

    #[test]
    fn increasing_in_syllables() {
        let mut prev = f64::NEG_INFINITY;
        for syl in 5..40 {
            let g = kincaid_grade(5, 1, syl);
            assert!(g > prev);
            prev = g;
        }
    }
}
