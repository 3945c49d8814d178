use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use crate::error::{Error, Result};
use crate::textprops::Stopwords;

/// Per-word ratings (concreteness, imageability, ...). Keys are lowercased.
#[derive(Debug, Clone, PartialEq)]
pub struct Lexicon {
    entries: BTreeMap<String, f64>,
    min_rating: f64,
    max_rating: f64,
}

impl Lexicon {
    pub fn from_entries<I, S>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, f64)>,
        S: AsRef<str>,
    {
        let mut map = BTreeMap::new();
        for (word, rating) in entries {
            map.entry(word.as_ref().to_lowercase()).or_insert(rating);
        }
        Self::build(map, "<memory>")
    }

    fn build(entries: BTreeMap<String, f64>, file: &str) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptyFile(file.to_string()));
        }
        let min_rating = entries.values().copied().fold(f64::INFINITY, f64::min);
        let max_rating = entries.values().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(Lexicon {
            entries,
            min_rating,
            max_rating,
        })
    }

    /// Parses `word<TAB>rating` lines. The first spelling of a word wins when
    /// several lines lowercase to the same key.
    pub fn parse(text: &str, file: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            let (word, rating) = line
                .split_once('\t')
                .ok_or_else(|| Error::malformed(file, line_no, "expected `word<TAB>rating`"))?;
            let rating: f64 = rating
                .trim()
                .parse()
                .map_err(|_| Error::malformed(file, line_no, format!("non-numeric rating `{}`", rating.trim())))?;
            if !rating.is_finite() {
                return Err(Error::malformed(file, line_no, "rating is not finite"));
            }
            entries.entry(word.trim().to_lowercase()).or_insert(rating);
        }
        Self::build(entries, file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn get(&self, word: &str) -> Option<f64> {
        self.entries.get(&word.to_lowercase()).copied()
    }

    pub fn min_rating(&self) -> f64 {
        self.min_rating
    }

    pub fn max_rating(&self) -> f64 {
        self.max_rating
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Object-class labels and the single lowercase tokens derived from them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassList {
    labels: BTreeSet<String>,
    label_tokens: BTreeSet<String>,
}

impl ClassList {
    /// Splits each label on spaces and underscores, lowercases, and drops stopwords.
    pub fn from_labels<I, S>(labels: I, stopwords: &Stopwords) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let labels: BTreeSet<String> = labels
            .into_iter()
            .map(Into::into)
            .map(|l: String| l.trim().to_string())
            .filter(|l| !l.is_empty())
            .collect();
        let label_tokens = labels
            .iter()
            .flat_map(|l| l.split([' ', '_']))
            .filter(|t| !t.is_empty())
            .map(str::to_lowercase)
            .filter(|t| !stopwords.contains(t))
            .collect();
        ClassList { labels, label_tokens }
    }

    pub fn parse(text: &str, file: &str, stopwords: &Stopwords) -> Result<Self> {
        let list = Self::from_labels(text.lines(), stopwords);
        if list.labels.is_empty() {
            return Err(Error::EmptyFile(file.to_string()));
        }
        Ok(list)
    }

    pub fn load(path: &Path, stopwords: &Stopwords) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string(), stopwords)
    }

    pub fn labels(&self) -> &BTreeSet<String> {
        &self.labels
    }

    pub fn label_tokens(&self) -> &BTreeSet<String> {
        &self.label_tokens
    }

    pub fn contains_token(&self, token: &str) -> bool {
        self.label_tokens.contains(&token.to_lowercase())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn min_of_two() {
        let lex = Lexicon::parse("dog\t4.85\nidea\t1.61\n", "t").unwrap();
        assert_eq!(lex.min_rating(), 1.61);
        assert_eq!(lex.max_rating(), 4.85);
        assert_eq!(lex.get("DOG"), Some(4.85));
    }

    #[test]
    fn non_numeric_rating_has_line_number() {
        let err = Lexicon::parse("dog\t4.85\n\nidea\thigh\n", "lex.tsv").unwrap_err();
        assert!(matches!(err, Error::Malformed { line: 3, .. }), "{err:?}");
    }

    #[test]
    fn empty_lexicon_is_error() {
        assert!(matches!(Lexicon::parse("", "x"), Err(Error::EmptyFile(_))));
        assert!(matches!(Lexicon::parse("\n\n", "x"), Err(Error::EmptyFile(_))));
    }

    #[test]
    fn class_label_split() {
        let classes = ClassList::parse("grizzly_bear\nfire truck\nthe_end\n", "c", &Stopwords::english()).unwrap();
        for t in ["grizzly", "bear", "fire", "truck", "end"] {
            assert!(classes.label_tokens().contains(t), "{t}");
        }
        assert!(!classes.label_tokens().contains("the"));
        assert_eq!(classes.labels().len(), 3);
    }

    #[test]
    fn empty_class_list_is_error() {
        assert!(ClassList::parse("\n", "c", &Stopwords::english()).is_err());
    }
}
