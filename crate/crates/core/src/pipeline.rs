//! Loading a configured corpus and running the analysis stages over it.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ablate::{score_retrieval_records, Variant};
use crate::audit::{
    question_count_correlation, question_stats, rubric, shortcut_entries, AblationMeans, CountCorrelation,
    MetricShortcuts, QuestionStats, RubricInputs, ShortcutReport,
};
use crate::config::RunConfig;
use crate::corpus::{
    attach_parses, load_answers, load_images, load_prompts, load_questions, load_similarities, AnswerRecord, ClassList,
    Corpus, Lexicon, SimilarityRecord,
};
use crate::error::{EmptyReason, Error, Result};
use crate::metrics::{score_records, Metric, MetricScore};
use crate::stats::{correlate_by_dataset, metric_matrix, CorrelationMatrix, DatasetCell};
use crate::textprops::{flesch_kincaid_grade, prompt_length, yngve_score, ParseTree, Stopwords};
use crate::visprops::{class_overlap, lexical_mean};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AblationRecords {
    pub answers: Vec<AnswerRecord>,
    pub similarities: Vec<SimilarityRecord>,
}

/// Everything a run reads, validated.
#[derive(Debug, Clone)]
pub struct Inputs {
    pub corpus: Corpus,
    pub stopwords: Stopwords,
    pub concreteness: Option<Lexicon>,
    pub imageability: Option<Lexicon>,
    pub classes: Option<ClassList>,
    pub ablations: BTreeMap<Variant, AblationRecords>,
    /// SHA-256 of every input file, keyed by role.
    pub digests: BTreeMap<String, String>,
}

impl Inputs {
    pub fn dataset_of(&self) -> BTreeMap<String, String> {
        self.corpus
            .prompts
            .iter()
            .map(|p| (p.id.clone(), p.dataset.clone()))
            .collect()
    }
}

fn digest(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

pub fn load_inputs(cfg: &RunConfig) -> Result<Inputs> {
    let p = &cfg.paths;
    let mut digests = BTreeMap::new();
    for (role, path) in p.entries() {
        digests.insert(role.to_string(), digest(path)?);
    }

    let mut prompts = load_prompts(cfg.require_path("prompts", &p.prompts)?)?;
    if let Some(path) = &p.parses {
        attach_parses(path, &mut prompts)?;
    }
    let questions = match &p.questions {
        Some(path) => load_questions(path, &prompts)?,
        None => Vec::new(),
    };
    let answers = match &p.answers {
        Some(path) => load_answers(path, &questions)?,
        None => Vec::new(),
    };
    let similarities = match &p.similarities {
        Some(path) => load_similarities(path, &prompts)?,
        None => Vec::new(),
    };
    let images = match &p.images {
        Some(path) => load_images(path, &prompts)?,
        None => Vec::new(),
    };
    let stopwords = match &p.stopwords {
        Some(path) => Stopwords::load(path)?,
        None => Stopwords::english(),
    };
    let concreteness = p.concreteness.as_deref().map(Lexicon::load).transpose()?;
    let imageability = p.imageability.as_deref().map(Lexicon::load).transpose()?;
    let classes = p
        .classes
        .as_deref()
        .map(|path| ClassList::load(path, &stopwords))
        .transpose()?;

    let mut ablations = BTreeMap::new();
    for (variant, files) in &cfg.ablations {
        let mut records = AblationRecords::default();
        if let Some(path) = &files.answers {
            digests.insert(format!("ablations.{variant}.answers"), digest(path)?);
            records.answers = load_answers(path, &questions)?;
        }
        if let Some(path) = &files.similarities {
            digests.insert(format!("ablations.{variant}.similarities"), digest(path)?);
            records.similarities = load_similarities(path, &prompts)?;
        }
        ablations.insert(*variant, records);
    }

    Ok(Inputs {
        corpus: Corpus {
            prompts,
            questions,
            answers,
            similarities,
            images,
        },
        stopwords,
        concreteness,
        imageability,
        classes,
        ablations,
        digests,
    })
}

/// Per-prompt properties. A value is `None` when the prompt has nothing to
/// measure (no parse, no words, or no scorable tokens).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyRow {
    pub prompt_id: String,
    pub dataset: String,
    pub grade_level: Option<f64>,
    pub yngve: Option<f64>,
    pub length: usize,
    pub concreteness: Option<f64>,
    pub imageability: Option<f64>,
    pub class_overlap: Option<f64>,
}

pub const LINGUISTIC_PROPERTIES: [&str; 3] = ["grade_level", "yngve", "length"];
pub const VISUAL_PROPERTIES: [&str; 3] = ["concreteness", "imageability", "class_overlap"];

impl PropertyRow {
    pub fn get(&self, property: &str) -> Option<f64> {
        match property {
            "grade_level" => self.grade_level,
            "yngve" => self.yngve,
            "length" => Some(self.length as f64),
            "concreteness" => self.concreteness,
            "imageability" => self.imageability,
            "class_overlap" => self.class_overlap,
            _ => None,
        }
    }
}

pub fn property_label(property: &str) -> &str {
    match property {
        "grade_level" => "Grade level",
        "yngve" => "Syntactic complexity",
        "length" => "Length",
        "concreteness" => "Concreteness",
        "imageability" => "Imageability",
        "class_overlap" => "Class overlap",
        other => other,
    }
}

fn optional(r: Result<f64>) -> Result<Option<f64>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::NoWords | Error::NoScorableTokens(EmptyReason::AllStopwords | EmptyReason::AllMissing)) => Ok(None),
        Err(e) => Err(e),
    }
}

pub fn compute_properties(inputs: &Inputs, cfg: &RunConfig) -> Result<Vec<PropertyRow>> {
    let sw = &inputs.stopwords;
    let policy = cfg.missing_word_policy;
    let mut rows = Vec::with_capacity(inputs.corpus.prompts.len());
    for p in &inputs.corpus.prompts {
        let yngve = match &p.parse {
            Some(s) => optional(ParseTree::parse(s).and_then(|t| yngve_score(&t, cfg.yngve)))?,
            None => None,
        };
        let lexical = |lex: &Option<Lexicon>| -> Result<Option<f64>> {
            match lex {
                Some(l) => optional(lexical_mean(&p.text, l, sw, policy)),
                None => Ok(None),
            }
        };
        rows.push(PropertyRow {
            prompt_id: p.id.clone(),
            dataset: p.dataset.clone(),
            grade_level: optional(flesch_kincaid_grade(&p.text))?,
            yngve,
            length: prompt_length(&p.text, sw),
            concreteness: lexical(&inputs.concreteness)?,
            imageability: lexical(&inputs.imageability)?,
            class_overlap: match &inputs.classes {
                Some(c) => optional(class_overlap(&p.text, c, sw))?,
                None => None,
            },
        });
    }
    rows.sort_by(|a, b| a.prompt_id.cmp(&b.prompt_id));
    Ok(rows)
}

/// Per-prompt values of one property; empty when no prompt has it.
pub fn property_map(rows: &[PropertyRow], property: &str) -> BTreeMap<String, f64> {
    rows.iter()
        .filter_map(|r| r.get(property).map(|v| (r.prompt_id.clone(), v)))
        .collect()
}

/// Scores of the original records and of every configured ablation.
pub fn compute_scores(inputs: &Inputs) -> Result<BTreeMap<Variant, Vec<MetricScore>>> {
    let c = &inputs.corpus;
    let mut out = BTreeMap::new();
    out.insert(
        Variant::Original,
        score_records(&c.questions, &c.answers, &c.similarities)?,
    );
    for (variant, records) in &inputs.ablations {
        let scores = match variant {
            Variant::RetrievalQa => score_retrieval_records(&c.questions, &records.similarities)?,
            _ => score_records(&c.questions, &records.answers, &records.similarities)?,
        };
        out.insert(*variant, scores);
    }
    Ok(out)
}

fn correlate_set(
    scores: &[MetricScore],
    rows: &[PropertyRow],
    dataset_of: &BTreeMap<String, String>,
    properties: &[&str],
    cfg: &RunConfig,
) -> Result<Vec<DatasetCell>> {
    let mode = cfg.p_value_mode()?;
    let mut out = Vec::new();
    for property in properties {
        let profile = property_map(rows, property);
        if profile.is_empty() {
            continue;
        }
        out.extend(correlate_by_dataset(
            scores,
            dataset_of,
            &profile,
            property,
            cfg.thresholds,
            mode,
        )?);
    }
    Ok(out)
}

/// Linguistic and visual correlation cells for the original scores.
pub fn correlate(
    inputs: &Inputs,
    rows: &[PropertyRow],
    scores: &[MetricScore],
    cfg: &RunConfig,
) -> Result<(Vec<DatasetCell>, Vec<DatasetCell>)> {
    let ds = inputs.dataset_of();
    Ok((
        correlate_set(scores, rows, &ds, &LINGUISTIC_PROPERTIES, cfg)?,
        correlate_set(scores, rows, &ds, &VISUAL_PROPERTIES, cfg)?,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixEntry {
    pub dataset: String,
    pub matrix: CorrelationMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedMatrix {
    pub dataset: String,
    pub source: String,
    pub metrics: usize,
}

/// One matrix per (dataset, source) with at least two metrics. Errors only
/// when no matrix can be built at all.
pub fn matrices(
    scores: &[MetricScore],
    dataset_of: &BTreeMap<String, String>,
    cfg: &RunConfig,
) -> Result<(Vec<MatrixEntry>, Vec<SkippedMatrix>)> {
    let mode = cfg.p_value_mode()?;
    let mut split: BTreeMap<(&str, &str), Vec<MetricScore>> = BTreeMap::new();
    for s in scores {
        let ds = dataset_of.get(&s.prompt_id).map_or("", String::as_str);
        split.entry((ds, s.source.as_str())).or_default().push(s.clone());
    }
    let (mut built, mut skipped) = (Vec::new(), Vec::new());
    let mut most = 0;
    for ((ds, source), subset) in split {
        match metric_matrix(&subset, source, cfg.thresholds, mode) {
            Ok(matrix) => built.push(MatrixEntry {
                dataset: ds.to_string(),
                matrix,
            }),
            Err(Error::TooFewMetrics(k)) => {
                most = most.max(k);
                skipped.push(SkippedMatrix {
                    dataset: ds.to_string(),
                    source: source.to_string(),
                    metrics: k,
                });
            }
            Err(e) => return Err(e),
        }
    }
    if built.is_empty() {
        return Err(Error::TooFewMetrics(most));
    }
    Ok((built, skipped))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditOutput {
    pub stats: Vec<QuestionStats>,
    pub counts: Vec<CountCorrelation>,
    pub entries: Vec<MetricShortcuts>,
}

pub fn audit(inputs: &Inputs, scores: &[MetricScore], cfg: &RunConfig) -> Result<AuditOutput> {
    let seed = cfg.require_seed("random-chance baselines")?;
    let questions = &inputs.corpus.questions;
    if questions.is_empty() {
        return Err(Error::NoQuestions);
    }
    let ds = inputs.dataset_of();
    let stats = question_stats(questions, &ds)?;
    let counts = question_count_correlation(scores, &ds, cfg.thresholds, cfg.p_value_mode()?)?;
    let entries = shortcut_entries(&stats, questions, &ds, &counts, cfg.shortcuts, cfg.random_trials, seed)?;
    Ok(AuditOutput { stats, counts, entries })
}

/// Mean score per (variant, metric), pooled over sources and prompts.
pub fn ablation_means(scores: &BTreeMap<Variant, Vec<MetricScore>>) -> AblationMeans {
    let mut sums: BTreeMap<(Variant, Metric), (f64, usize)> = BTreeMap::new();
    for (variant, list) in scores {
        for s in list {
            let e = sums.entry((*variant, s.metric)).or_default();
            e.0 += s.value;
            e.1 += 1;
        }
    }
    sums.into_iter().map(|(k, (sum, n))| (k, sum / n as f64)).collect()
}

/// Complete analysis behind a report.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub properties: Vec<PropertyRow>,
    pub scores: BTreeMap<Variant, Vec<MetricScore>>,
    pub linguistic: Vec<DatasetCell>,
    pub visual: Vec<DatasetCell>,
    pub matrices: Vec<MatrixEntry>,
    pub skipped_matrices: Vec<SkippedMatrix>,
    pub audit: AuditOutput,
    pub shortcuts: ShortcutReport,
}

impl Analysis {
    pub fn original_scores(&self) -> &[MetricScore] {
        self.scores.get(&Variant::Original).map_or(&[], Vec::as_slice)
    }
}

pub fn analyze(inputs: &Inputs, cfg: &RunConfig) -> Result<Analysis> {
    let properties = compute_properties(inputs, cfg)?;
    let scores = compute_scores(inputs)?;
    let original = &scores[&Variant::Original];
    let (linguistic, visual) = correlate(inputs, &properties, original, cfg)?;
    let (matrices, skipped_matrices) = matrices(original, &inputs.dataset_of(), cfg)?;
    let audit = audit(inputs, original, cfg)?;
    let means = ablation_means(&scores);
    let rubric_rows = rubric(&RubricInputs {
        linguistic: &linguistic,
        visual: &visual,
        ablation: &means,
        shortcuts: &audit.entries,
        ablation_drop: cfg.ablation_drop,
    });
    let shortcuts = ShortcutReport {
        thresholds: cfg.shortcuts,
        entries: audit.entries.clone(),
        rubric: rubric_rows,
    };
    Ok(Analysis {
        properties,
        scores,
        linguistic,
        visual,
        matrices,
        skipped_matrices,
        audit,
        shortcuts,
    })
}
