//! Ablation transforms: shuffled images, shuffled text, retrieval-style QA
//! from similarity scores, and text-only QA prompts.

mod retrieval;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::corpus::{ImageRef, PromptRecord, QuestionRecord};
use crate::error::{Error, Result};
use crate::seed;
use crate::textprops::tokenize;

pub use retrieval::{
    build_retrieval_captions, caption_variant, format_text_only_qa, retrieval_caption_records, retrieval_correct,
    score_retrieval_qa, score_retrieval_records, text_only_prompts, Caption, RetrievalCaptionRecord,
    RetrievalCaptionSet, TextQaPrompt, RETRIEVAL_PREFIX,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AblationKind {
    ShuffleImages,
    ShuffleText,
    RetrievalQa,
    TextOnlyQa,
}

impl AblationKind {
    pub const ALL: [AblationKind; 4] = [
        AblationKind::ShuffleImages,
        AblationKind::ShuffleText,
        AblationKind::RetrievalQa,
        AblationKind::TextOnlyQa,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AblationKind::ShuffleImages => "shuffle_images",
            AblationKind::ShuffleText => "shuffle_text",
            AblationKind::RetrievalQa => "retrieval_qa",
            AblationKind::TextOnlyQa => "text_only_qa",
        }
    }

    /// Name of the scored variant this ablation produces in result series.
    pub fn variant(self) -> Variant {
        match self {
            AblationKind::ShuffleImages => Variant::ShuffledImages,
            AblationKind::ShuffleText => Variant::ShuffledText,
            AblationKind::RetrievalQa => Variant::RetrievalQa,
            AblationKind::TextOnlyQa => Variant::TextOnlyQa,
        }
    }
}

impl fmt::Display for AblationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AblationKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AblationKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown ablation `{s}`"))
    }
}

/// The scored conditions shown side by side in ablation results.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Original,
    ShuffledImages,
    ShuffledText,
    RetrievalQa,
    TextOnlyQa,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::Original,
        Variant::ShuffledImages,
        Variant::ShuffledText,
        Variant::RetrievalQa,
        Variant::TextOnlyQa,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Original => "original",
            Variant::ShuffledImages => "shuffled_images",
            Variant::ShuffledText => "shuffled_text",
            Variant::RetrievalQa => "retrieval_qa",
            Variant::TextOnlyQa => "text_only_qa",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationPlan {
    pub kind: AblationKind,
    pub seed: u64,
    pub derangement: bool,
}

impl AblationPlan {
    /// Header object written as the first line of every ablated record file.
    pub fn provenance(&self) -> Value {
        json!({
            "kind": self.kind.as_str(),
            "seed": self.seed,
            "options": { "derangement": self.derangement },
        })
    }
}

/// A uniformly random permutation of `0..n` by Fisher-Yates; with
/// `derangement`, redrawn until no index maps to itself.
pub fn permutation<R: Rng>(n: usize, derangement: bool, rng: &mut R) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    loop {
        perm.shuffle(rng);
        if !derangement || perm.iter().enumerate().all(|(i, &p)| i != p) {
            return perm;
        }
    }
}

/// Permutes image keys within each (dataset, source) group. Groups are
/// ordered by prompt id and shuffled with a seed derived from the group key,
/// so the result does not depend on record order.
pub fn shuffle_images(
    refs: &[ImageRef],
    prompts: &[PromptRecord],
    seed: u64,
    derangement: bool,
) -> Result<Vec<ImageRef>> {
    let dataset: BTreeMap<&str, &str> = prompts.iter().map(|p| (p.id.as_str(), p.dataset.as_str())).collect();
    let mut groups: BTreeMap<(&str, &str), Vec<usize>> = BTreeMap::new();
    for (i, r) in refs.iter().enumerate() {
        let ds = dataset.get(r.prompt_id.as_str()).copied().unwrap_or("");
        groups.entry((ds, r.source.as_str())).or_default().push(i);
    }

    let mut out = refs.to_vec();
    for ((ds, source), mut members) in groups {
        members.sort_by(|&a, &b| refs[a].prompt_id.cmp(&refs[b].prompt_id));
        if derangement && members.len() < 2 {
            return Err(Error::DerangementImpossible(format!("{ds}/{source}")));
        }
        let mut rng = seed::rng_for(seed, &format!("shuffle_images/{ds}/{source}"));
        let perm = permutation(members.len(), derangement, &mut rng);
        for (slot, &from) in members.iter().zip(&perm) {
            out[*slot].image_key = refs[members[from]].image_key.clone();
        }
    }
    Ok(out)
}

fn is_terminal_punct(token: &str) -> bool {
    matches!(token, "?" | "." | "!")
}

/// Shuffles the tokens of `text`, keeping a final `?`, `.` or `!` in place.
/// Tokens are rejoined with single spaces; case is preserved.
pub fn shuffle_text(text: &str, seed: u64) -> String {
    let mut tokens = tokenize(text).tokens;
    let end = match tokens.last() {
        Some(t) if is_terminal_punct(t) => tokens.len() - 1,
        _ => tokens.len(),
    };
    tokens[..end].shuffle(&mut seed::rng(seed));
    tokens.join(" ")
}

/// Questions with shuffled text; each question draws from its own stream.
pub fn shuffle_question_texts(questions: &[QuestionRecord], seed: u64) -> Vec<QuestionRecord> {
    questions
        .iter()
        .map(|q| {
            let mut q = q.clone();
            let s = seed::derive_seed(seed, &format!("shuffle_text/question/{}", q.question_id));
            q.text = shuffle_text(&q.text, s);
            q
        })
        .collect()
}

/// Prompts with shuffled text, for similarity-based scoring. Parses are
/// dropped since they no longer describe the text.
pub fn shuffle_prompt_texts(prompts: &[PromptRecord], seed: u64) -> Vec<PromptRecord> {
    prompts
        .iter()
        .map(|p| {
            let mut p = p.clone();
            let s = seed::derive_seed(seed, &format!("shuffle_text/prompt/{}", p.id));
            p.text = shuffle_text(&p.text, s);
            p.parse = None;
            p
        })
        .collect()
}
