//! Visual-prior properties of a prompt: concreteness, imageability, and
//! overlap with an object-class vocabulary.
//!
//! All three work on the same content tokens: word tokens, split on hyphens,
//! lowercased, with stopwords removed. Duplicates count once per occurrence.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{ClassList, Lexicon};
use crate::error::{EmptyReason, Error, Result};
use crate::textprops::{tokenize, Stopwords};

/// How lexicon misses are scored.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissingWordPolicy {
    /// Use the lexicon's minimum rating.
    #[default]
    Lowest,
    Zero,
    /// Leave the word out of the average.
    Omit,
}

impl MissingWordPolicy {
    pub fn as_str(self) -> &'static str {
        match self {
            MissingWordPolicy::Lowest => "lowest",
            MissingWordPolicy::Zero => "zero",
            MissingWordPolicy::Omit => "omit",
        }
    }
}

impl FromStr for MissingWordPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lowest" => Ok(MissingWordPolicy::Lowest),
            "zero" => Ok(MissingWordPolicy::Zero),
            "omit" => Ok(MissingWordPolicy::Omit),
            other => Err(format!("unknown missing-word policy `{other}`")),
        }
    }
}

pub fn content_tokens(text: &str, stopwords: &Stopwords) -> Vec<String> {
    tokenize(text)
        .words()
        .flat_map(|w| w.split('-'))
        .filter(|part| !part.is_empty())
        .map(str::to_lowercase)
        .filter(|part| !stopwords.contains(part))
        .collect()
}

pub fn lexical_mean(text: &str, lexicon: &Lexicon, stopwords: &Stopwords, policy: MissingWordPolicy) -> Result<f64> {
    let tokens = content_tokens(text, stopwords);
    if tokens.is_empty() {
        return Err(Error::NoScorableTokens(EmptyReason::AllStopwords));
    }
    let ratings: Vec<f64> = tokens
        .iter()
        .filter_map(|t| match (lexicon.get(t), policy) {
            (Some(r), _) => Some(r),
            (None, MissingWordPolicy::Lowest) => Some(lexicon.min_rating()),
            (None, MissingWordPolicy::Zero) => Some(0.0),
            (None, MissingWordPolicy::Omit) => None,
        })
        .collect();
    if ratings.is_empty() {
        return Err(Error::NoScorableTokens(EmptyReason::AllMissing));
    }
    Ok(ratings.iter().sum::<f64>() / ratings.len() as f64)
}

pub fn class_overlap(text: &str, classes: &ClassList, stopwords: &Stopwords) -> Result<f64> {
    let tokens = content_tokens(text, stopwords);
    if tokens.is_empty() {
        return Err(Error::NoScorableTokens(EmptyReason::AllStopwords));
    }
    let hits = tokens.iter().filter(|t| classes.contains_token(t)).count();
    Ok(hits as f64 / tokens.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisualProfile {
    pub prompt_id: String,
    pub concreteness: Option<f64>,
    pub imageability: Option<f64>,
    pub class_overlap: Option<f64>,
    pub missing_word_policy: MissingWordPolicy,
}

/// Lexical inputs for a visual profile; any of them may be absent.
#[derive(Debug, Clone, Copy, Default)]
pub struct VisualResources<'a> {
    pub concreteness: Option<&'a Lexicon>,
    pub imageability: Option<&'a Lexicon>,
    pub classes: Option<&'a ClassList>,
}

pub fn visual_profile(
    prompt_id: &str,
    text: &str,
    resources: VisualResources<'_>,
    stopwords: &Stopwords,
    policy: MissingWordPolicy,
) -> Result<VisualProfile> {
    Ok(VisualProfile {
        prompt_id: prompt_id.to_string(),
        concreteness: resources
            .concreteness
            .map(|l| lexical_mean(text, l, stopwords, policy))
            .transpose()?,
        imageability: resources
            .imageability
            .map(|l| lexical_mean(text, l, stopwords, policy))
            .transpose()?,
        class_overlap: resources
            .classes
            .map(|c| class_overlap(text, c, stopwords))
            .transpose()?,
        missing_word_policy: policy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lex() -> Lexicon {
        Lexicon::from_entries([("dog", 4.85), ("bear", 4.90), ("idea", 1.04)]).unwrap()
    }

    fn no_stop() -> Stopwords {
        Stopwords::from_words(Vec::<String>::new())
    }

    #[test]
    fn two_value_mean() {
        let m = lexical_mean("dog bear", &lex(), &no_stop(), MissingWordPolicy::Lowest).unwrap();
        assert!((m - 4.875).abs() < 1e-12);
    }

    #[test]
    fn missing_word_policies() {
        let l = lex();
        let sw = no_stop();
        let lowest = lexical_mean("dog zorp", &l, &sw, MissingWordPolicy::Lowest).unwrap();
        assert!((lowest - 2.945).abs() < 1e-12, "{lowest}");
        let zero = lexical_mean("dog zorp", &l, &sw, MissingWordPolicy::Zero).unwrap();
        assert!((zero - 2.425).abs() < 1e-12);
        let omit = lexical_mean("dog zorp", &l, &sw, MissingWordPolicy::Omit).unwrap();
        assert_eq!(omit, 4.85);
        assert!(lowest <= omit);
    }

    #[test]
    fn empty_reasons_are_distinguished() {
        let sw = Stopwords::from_words(["the", "a"]);
        assert!(matches!(
            lexical_mean("the a", &lex(), &sw, MissingWordPolicy::Lowest),
            Err(Error::NoScorableTokens(EmptyReason::AllStopwords))
        ));
        assert!(matches!(
            lexical_mean("zorp blick", &lex(), &sw, MissingWordPolicy::Omit),
            Err(Error::NoScorableTokens(EmptyReason::AllMissing))
        ));
    }

    #[test]
    fn hyphens_split_before_lookup() {
        let m = lexical_mean("dog-bear", &lex(), &no_stop(), MissingWordPolicy::Omit).unwrap();
        assert!((m - 4.875).abs() < 1e-12);
    }

    #[test]
    fn overlap_examples() {
        let a = Stopwords::from_words(["a"]);
        let bear = ClassList::from_labels(["bear"], &a);
        assert_eq!(class_overlap("a big bear", &bear, &a).unwrap(), 0.5);
        assert_eq!(class_overlap("a big cat", &bear, &a).unwrap(), 0.0);
        let classes = ClassList::from_labels(["grizzly_bear", "grass"], &a);
        assert_eq!(class_overlap("grizzly bear grass", &classes, &a).unwrap(), 1.0);
        assert!(class_overlap("a", &bear, &a).is_err());
    }

    #[test]
    fn overlap_counts_duplicates() {
        let sw = no_stop();
        let bear = ClassList::from_labels(["bear"], &sw);
        assert_eq!(class_overlap("bear bear cat", &bear, &sw).unwrap(), 2.0 / 3.0);
    }

    proptest! {
        #[test]
        fn overlap_order_and_case_invariant(
            words in prop::collection::vec(prop::sample::select(vec!["bear", "dog", "grass", "sky", "red", "Bear"]), 1..10),
            seed in any::<u64>(),
        ) {
            let sw = no_stop();
            let classes = ClassList::from_labels(["bear", "grass"], &sw);
            let base = class_overlap(&words.join(" "), &classes, &sw).unwrap();
            let mut shuffled = words.clone();
            use rand::seq::SliceRandom;
            shuffled.shuffle(&mut crate::seed::rng(seed));
            prop_assert_eq!(class_overlap(&shuffled.join(" "), &classes, &sw).unwrap(), base);
            prop_assert_eq!(class_overlap(&words.join(" ").to_uppercase(), &classes, &sw).unwrap(), base);
            prop_assert!((0.0..=1.0).contains(&base));
            if base > 0.0 {
                let more = format!("{} zebra", words.join(" "));
                prop_assert!(class_overlap(&more, &classes, &sw).unwrap() < base);
            }
        }
    }
}
