//! Treebank-style word tokenizer.
//!
//! The rules follow the Penn Treebank conventions (split sentence punctuation,
//! brackets, commas and colons not followed by a digit, and the clitics
//! `n't 's 're 've 'll 'd 'm`), but every rule is evaluated inside a single
//! whitespace-delimited chunk. That makes the tokenizer a fixpoint on its own
//! space-joined output, which the shuffle ablation depends on.
//!
//! Differences from the classic regex cascade: double quotes are kept as `"`
//! instead of being rewritten to `` `` `` / `''`, and a trailing period is
//! split from every chunk rather than only at the end of the sentence.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TokenSequence {
    pub tokens: Vec<String>,
    pub is_word: Vec<bool>,
}

impl TokenSequence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.tokens
            .iter()
            .zip(&self.is_word)
            .filter(|(_, w)| **w)
            .map(|(t, _)| t.as_str())
    }

    pub fn word_count(&self) -> usize {
        self.is_word.iter().filter(|w| **w).count()
    }

    pub fn joined(&self) -> String {
        self.tokens.join(" ")
    }
}

/// A token counts as a word when it carries at least one letter or digit.
pub fn is_word_token(token: &str) -> bool {
    token.chars().any(char::is_alphanumeric)
}

pub fn tokenize(text: &str) -> TokenSequence {
    let mut tokens = Vec::new();
    for chunk in text.split_whitespace() {
        tokenize_chunk(chunk, &mut tokens);
    }
    let is_word = tokens.iter().map(|t| is_word_token(t)).collect();
    TokenSequence { tokens, is_word }
}

const ALWAYS_SPLIT: &[char] = &[
    '?', '!', ';', '@', '#', '$', '%', '&', '(', ')', '[', ']', '{', '}', '<', '>', '"',
];

fn tokenize_chunk(chunk: &str, out: &mut Vec<String>) {
    let mut segment_start = 0;
    let mut i = 0;
    while i < chunk.len() {
        let rest = &chunk[i..];
        let special = if rest.starts_with("...") {
            Some(3)
        } else if rest.starts_with("--") {
            Some(2)
        } else {
            rest.chars()
                .next()
                .filter(|c| ALWAYS_SPLIT.contains(c))
                .map(char::len_utf8)
        };
        match special {
            Some(width) => {
                split_segment(&chunk[segment_start..i], out);
                out.push(chunk[i..i + width].to_string());
                i += width;
                segment_start = i;
            }
            None => i += rest.chars().next().map_or(1, char::len_utf8),
        }
    }
    split_segment(&chunk[segment_start..], out);
}

/// Splits `,` and `:` unless a digit follows (keeps `1,000` and `10:30`).
fn split_segment(segment: &str, out: &mut Vec<String>) {
    let mut piece_start = 0;
    let mut chars = segment.char_indices().peekable();
    while let Some((idx, c)) = chars.next() {
        if c != ',' && c != ':' {
            continue;
        }
        let digit_follows = chars.peek().is_some_and(|(_, next)| next.is_numeric());
        if digit_follows {
            continue;
        }
        split_word(&segment[piece_start..idx], out);
        out.push(c.to_string());
        piece_start = idx + c.len_utf8();
    }
    split_word(&segment[piece_start..], out);
}

const CLITICS: &[&str] = &[
    "n't", "N'T", "'ll", "'LL", "'re", "'RE", "'ve", "'VE", "'s", "'S", "'m", "'M", "'d", "'D",
];

const WHOLE_WORD_SPLITS: &[(&str, usize)] = &[
    ("cannot", 3),
    ("d'ye", 1),
    ("gimme", 3),
    ("gonna", 3),
    ("gotta", 3),
    ("lemme", 3),
    ("more'n", 4),
    ("wanna", 3),
    ("'tis", 2),
    ("'twas", 2),
];

fn split_word(word: &str, out: &mut Vec<String>) {
    if word.is_empty() {
        return;
    }
    let mut suffixes: Vec<&str> = Vec::new();
    let mut stem = word;
    loop {
        if let Some(rest) = peel_suffix(stem) {
            suffixes.push(&stem[rest.len()..]);
            stem = rest;
            continue;
        }
        if let Some(&(_, at)) = WHOLE_WORD_SPLITS.iter().find(|(w, _)| stem.eq_ignore_ascii_case(w)) {
            suffixes.push(&stem[at..]);
            stem = &stem[..at];
        }
        break;
    }
    if !stem.is_empty() {
        out.push(stem.to_string());
    }
    out.extend(suffixes.into_iter().rev().map(str::to_string));
}

/// Returns the stem left after removing one trailing unit, if any rule applies.
fn peel_suffix(stem: &str) -> Option<&str> {
    let before_last = |suffix_len: usize| stem[..stem.len() - suffix_len].chars().next_back();

    if stem.len() > 2 && stem.ends_with("''") {
        return Some(&stem[..stem.len() - 2]);
    }
    if stem.len() > 1 && stem.ends_with('.') && before_last(1) != Some('.') {
        return Some(&stem[..stem.len() - 1]);
    }
    if stem.len() > 1 && stem.ends_with('\'') && before_last(1) != Some('\'') {
        return Some(&stem[..stem.len() - 1]);
    }
    for clitic in CLITICS {
        if stem.len() > clitic.len() && stem.ends_with(clitic) && before_last(clitic.len()) != Some('\'') {
            return Some(&stem[..stem.len() - clitic.len()]);
        }
    }
    None
}
