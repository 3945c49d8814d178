//! Data model and validating loaders for every input file.

mod jsonl;
mod lexicon;
mod records;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

pub use jsonl::{parse_records, read_records, render_records, write_records, RecordFile, PROVENANCE_KEY};
pub use lexicon::{ClassList, Lexicon};
pub use records::{
    AnswerRecord, Extra, ImageRef, PromptRecord, QaMetric, QuestionRecord, QuestionType, SimilarityRecord, FULL_PROMPT,
};

use crate::error::{Error, Result};
use crate::textprops::{tokenize, ParseTree};

fn read_text(path: &Path) -> Result<(String, String)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok((text, path.display().to_string()))
}

pub fn validate_prompts(file: &str, records: Vec<(usize, PromptRecord)>) -> Result<Vec<PromptRecord>> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(records.len());
    for (line, prompt) in records {
        if !seen.insert(prompt.id.clone()) {
            return Err(Error::DuplicateId {
                file: file.to_string(),
                kind: "prompt id",
                id: prompt.id,
            });
        }
        if prompt.text.trim().is_empty() {
            return Err(Error::malformed(
                file,
                line,
                format!("prompt `{}` has empty text", prompt.id),
            ));
        }
        if let Some(parse) = &prompt.parse {
            check_parse(&prompt.id, parse)?;
        }
        out.push(prompt);
    }
    Ok(out)
}

fn check_parse(prompt_id: &str, parse: &str) -> Result<ParseTree> {
    let tree = ParseTree::parse(parse).map_err(|e| Error::InvalidParse {
        prompt_id: prompt_id.to_string(),
        message: e.to_string(),
    })?;
    if tokenize(&tree.leaves().join(" ")).is_empty() {
        return Err(Error::InvalidParse {
            prompt_id: prompt_id.to_string(),
            message: "tree has no leaf tokens".into(),
        });
    }
    Ok(tree)
}

pub fn parse_prompts(text: &str, file: &str) -> Result<Vec<PromptRecord>> {
    validate_prompts(file, parse_records(text, file)?.records)
}

pub fn load_prompts(path: &Path) -> Result<Vec<PromptRecord>> {
    let (text, file) = read_text(path)?;
    parse_prompts(&text, &file)
}

#[derive(serde::Deserialize)]
struct ParseLine {
    prompt_id: String,
    parse: String,
}

/// Merges a `{prompt_id, parse}` file into already-loaded prompts.
pub fn attach_parses(path: &Path, prompts: &mut [PromptRecord]) -> Result<()> {
    let (text, file) = read_text(path)?;
    let index: HashMap<String, usize> = prompts.iter().enumerate().map(|(i, p)| (p.id.clone(), i)).collect();
    let mut seen = BTreeSet::new();
    for (_, line) in parse_records::<ParseLine>(&text, &file)?.records {
        let Some(&i) = index.get(&line.prompt_id) else {
            return Err(dangling(&file, "parse", &line.prompt_id, "prompt", &line.prompt_id));
        };
        if !seen.insert(line.prompt_id.clone()) {
            return Err(Error::DuplicateId {
                file,
                kind: "parse for prompt",
                id: line.prompt_id,
            });
        }
        check_parse(&line.prompt_id, &line.parse)?;
        prompts[i].parse = Some(line.parse);
    }
    Ok(())
}

fn dangling(file: &str, kind: &'static str, id: &str, target: &'static str, reference: &str) -> Error {
    Error::DanglingReference {
        file: file.to_string(),
        kind,
        id: id.to_string(),
        target,
        reference: reference.to_string(),
    }
}

fn prompt_ids(prompts: &[PromptRecord]) -> BTreeSet<&str> {
    prompts.iter().map(|p| p.id.as_str()).collect()
}

pub fn validate_questions(
    file: &str,
    records: Vec<(usize, QuestionRecord)>,
    prompts: &[PromptRecord],
) -> Result<Vec<QuestionRecord>> {
    let known = prompt_ids(prompts);
    let mut seen = BTreeSet::new();
    for (line, q) in &records {
        let line = *line;
        if !seen.insert(q.question_id.as_str()) {
            return Err(Error::DuplicateId {
                file: file.to_string(),
                kind: "question id",
                id: q.question_id.clone(),
            });
        }
        if !known.contains(q.prompt_id.as_str()) {
            return Err(dangling(file, "question", &q.question_id, "prompt", &q.prompt_id));
        }
        if q.qtype == QuestionType::YesNo && q.choices != ["yes", "no"] {
            return Err(Error::malformed(
                file,
                line,
                format!(
                    "yes/no question `{}` must have choices [\"yes\", \"no\"]",
                    q.question_id
                ),
            ));
        }
        if q.choices.is_empty() {
            return Err(Error::malformed(
                file,
                line,
                format!("question `{}` has no choices", q.question_id),
            ));
        }
        if q.gold_index().is_none() {
            return Err(Error::malformed(
                file,
                line,
                format!(
                    "gold `{}` of question `{}` is not among its choices",
                    q.gold, q.question_id
                ),
            ));
        }
        if !q.depends_on.is_empty() && q.metric != QaMetric::Dsg {
            return Err(Error::malformed(
                file,
                line,
                format!(
                    "question `{}` has dependencies but metric is {}",
                    q.question_id, q.metric
                ),
            ));
        }
    }
    let questions: Vec<QuestionRecord> = records.into_iter().map(|(_, q)| q).collect();
    check_dependencies(file, &questions)?;
    Ok(questions)
}

/// Every dependency must name a question of the same (prompt, metric) group,
/// and the resulting graph must be acyclic.
pub fn check_dependencies(file: &str, questions: &[QuestionRecord]) -> Result<()> {
    let by_id: HashMap<&str, &QuestionRecord> = questions.iter().map(|q| (q.question_id.as_str(), q)).collect();
    for q in questions {
        for parent in &q.depends_on {
            match by_id.get(parent.as_str()) {
                Some(p) if p.prompt_id == q.prompt_id && p.metric == q.metric => {}
                _ => return Err(dangling(file, "question", &q.question_id, "dependency", parent)),
            }
        }
    }
    if let Some(cycle) = find_cycle(questions) {
        return Err(Error::DependencyCycle(cycle));
    }
    Ok(())
}

#[derive(Clone, Copy, PartialEq)]
enum Mark {
    Open,
    Done,
}

/// Returns one dependency cycle (first node repeated at the end), if any.
fn find_cycle(questions: &[QuestionRecord]) -> Option<Vec<String>> {
    let edges: BTreeMap<&str, Vec<&str>> = questions
        .iter()
        .map(|q| {
            (
                q.question_id.as_str(),
                q.depends_on.iter().map(String::as_str).collect(),
            )
        })
        .collect();
    let mut marks: HashMap<&str, Mark> = HashMap::new();

    for &start in edges.keys() {
        if marks.contains_key(start) {
            continue;
        }
        // (node, next edge index)
        let mut stack: Vec<(&str, usize)> = vec![(start, 0)];
        marks.insert(start, Mark::Open);
        while let Some(&mut (node, ref mut next)) = stack.last_mut() {
            let targets = edges.get(node).map(Vec::as_slice).unwrap_or(&[]);
            if *next < targets.len() {
                let target = targets[*next];
                *next += 1;
                match marks.get(target) {
                    Some(Mark::Open) => {
                        let from = stack.iter().position(|(n, _)| *n == target).unwrap_or(0);
                        let mut cycle: Vec<String> = stack[from..].iter().map(|(n, _)| n.to_string()).collect();
                        cycle.push(target.to_string());
                        return Some(cycle);
                    }
                    Some(Mark::Done) => {}
                    None => {
                        marks.insert(target, Mark::Open);
                        stack.push((target, 0));
                    }
                }
            } else {
                marks.insert(node, Mark::Done);
                stack.pop();
            }
        }
    }
    None
}

pub fn parse_questions(text: &str, file: &str, prompts: &[PromptRecord]) -> Result<Vec<QuestionRecord>> {
    validate_questions(file, parse_records(text, file)?.records, prompts)
}

pub fn load_questions(path: &Path, prompts: &[PromptRecord]) -> Result<Vec<QuestionRecord>> {
    let (text, file) = read_text(path)?;
    parse_questions(&text, &file, prompts)
}

pub fn validate_answers(
    file: &str,
    records: Vec<(usize, AnswerRecord)>,
    questions: &[QuestionRecord],
) -> Result<Vec<AnswerRecord>> {
    let known: BTreeSet<&str> = questions.iter().map(|q| q.question_id.as_str()).collect();
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(records.len());
    for (_, a) in records {
        if !known.contains(a.question_id.as_str()) {
            return Err(dangling(file, "answer", &a.question_id, "question", &a.question_id));
        }
        if !seen.insert((a.question_id.clone(), a.source.clone())) {
            return Err(Error::DuplicateId {
                file: file.to_string(),
                kind: "answer for (question, source)",
                id: format!("{}/{}", a.question_id, a.source),
            });
        }
        out.push(a);
    }
    Ok(out)
}

pub fn parse_answers(text: &str, file: &str, questions: &[QuestionRecord]) -> Result<Vec<AnswerRecord>> {
    validate_answers(file, parse_records(text, file)?.records, questions)
}

pub fn load_answers(path: &Path, questions: &[QuestionRecord]) -> Result<Vec<AnswerRecord>> {
    let (text, file) = read_text(path)?;
    parse_answers(&text, &file, questions)
}

pub fn validate_similarities(
    file: &str,
    records: Vec<(usize, SimilarityRecord)>,
    prompts: &[PromptRecord],
) -> Result<Vec<SimilarityRecord>> {
    let known = prompt_ids(prompts);
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(records.len());
    for (line, s) in records {
        if !known.contains(s.prompt_id.as_str()) {
            return Err(dangling(file, "similarity", &s.caption_variant, "prompt", &s.prompt_id));
        }
        if !s.score.is_finite() || !(-1.0..=1.0).contains(&s.score) {
            return Err(Error::malformed(
                file,
                line,
                format!("score {} outside [-1, 1]", s.score),
            ));
        }
        if !seen.insert((s.prompt_id.clone(), s.source.clone(), s.caption_variant.clone())) {
            return Err(Error::DuplicateId {
                file: file.to_string(),
                kind: "similarity for (prompt, source, caption_variant)",
                id: format!("{}/{}/{}", s.prompt_id, s.source, s.caption_variant),
            });
        }
        out.push(s);
    }
    Ok(out)
}

pub fn parse_similarities(text: &str, file: &str, prompts: &[PromptRecord]) -> Result<Vec<SimilarityRecord>> {
    validate_similarities(file, parse_records(text, file)?.records, prompts)
}

pub fn load_similarities(path: &Path, prompts: &[PromptRecord]) -> Result<Vec<SimilarityRecord>> {
    let (text, file) = read_text(path)?;
    parse_similarities(&text, &file, prompts)
}

pub fn validate_images(file: &str, records: Vec<(usize, ImageRef)>, prompts: &[PromptRecord]) -> Result<Vec<ImageRef>> {
    let known = prompt_ids(prompts);
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(records.len());
    for (_, r) in records {
        if !known.contains(r.prompt_id.as_str()) {
            return Err(dangling(file, "image", &r.image_key, "prompt", &r.prompt_id));
        }
        if !seen.insert((r.prompt_id.clone(), r.source.clone())) {
            return Err(Error::DuplicateId {
                file: file.to_string(),
                kind: "image for (prompt, source)",
                id: format!("{}/{}", r.prompt_id, r.source),
            });
        }
        out.push(r);
    }
    Ok(out)
}

pub fn load_images(path: &Path, prompts: &[PromptRecord]) -> Result<Vec<ImageRef>> {
    let (text, file) = read_text(path)?;
    validate_images(&file, parse_records(&text, &file)?.records, prompts)
}

/// A loaded, validated, immutable set of records.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    pub prompts: Vec<PromptRecord>,
    pub questions: Vec<QuestionRecord>,
    pub answers: Vec<AnswerRecord>,
    pub similarities: Vec<SimilarityRecord>,
    pub images: Vec<ImageRef>,
}

pub type GroupKey = (String, QaMetric);

impl Corpus {
    pub fn prompt(&self, id: &str) -> Option<&PromptRecord> {
        self.prompts.iter().find(|p| p.id == id)
    }

    pub fn dataset_of(&self) -> BTreeMap<&str, &str> {
        self.prompts
            .iter()
            .map(|p| (p.id.as_str(), p.dataset.as_str()))
            .collect()
    }

    /// Questions grouped by (prompt_id, metric), in file order within a group.
    pub fn question_groups(&self) -> BTreeMap<GroupKey, Vec<&QuestionRecord>> {
        group_questions(&self.questions)
    }

    /// Every source name seen in answers or similarities, sorted.
    pub fn sources(&self) -> BTreeSet<&str> {
        self.answers
            .iter()
            .map(|a| a.source.as_str())
            .chain(self.similarities.iter().map(|s| s.source.as_str()))
            .collect()
    }
}

pub fn group_questions(questions: &[QuestionRecord]) -> BTreeMap<GroupKey, Vec<&QuestionRecord>> {
    let mut groups: BTreeMap<GroupKey, Vec<&QuestionRecord>> = BTreeMap::new();
    for q in questions {
        groups.entry((q.prompt_id.clone(), q.metric)).or_default().push(q);
    }
    groups
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn prompts() -> Vec<PromptRecord> {
        parse_prompts(
            "{\"id\":\"p1\",\"dataset\":\"coco\",\"text\":\"a big bear\"}\n{\"id\":\"p2\",\"dataset\":\"coco\",\"text\":\"a dog\"}\n",
            "prompts",
        )
        .unwrap()
    }

    #[test]
    fn minimal_prompt() {
        let p = prompts();
        assert_eq!(p[0].id, "p1");
        assert_eq!(tokenize(&p[0].text).len(), 3);
    }

    #[test]
    fn duplicate_prompt_id() {
        let line = "{\"id\":\"p1\",\"dataset\":\"coco\",\"text\":\"a big bear\"}\n";
        let err = parse_prompts(&line.repeat(2), "prompts").unwrap_err();
        assert!(
            matches!(err, Error::DuplicateId { ref id, .. } if id == "p1"),
            "{err:?}"
        );
    }

    #[test]
    fn unbalanced_parse_names_prompt() {
        let line = "{\"id\":\"p9\",\"dataset\":\"coco\",\"text\":\"a dog\",\"parse\":\"(S (NP (DT a) (NN dog))\"}";
        let err = parse_prompts(line, "prompts").unwrap_err();
        assert!(matches!(err, Error::InvalidParse { ref prompt_id, .. } if prompt_id == "p9"));
    }

    #[test]
    fn paper_caption_round_trips_bytes() {
        let text = "A big burly grizzly bear is shown with grass in the background";
        let line = serde_json::to_string(&PromptRecord::new("p1", "coco", text)).unwrap();
        let loaded = parse_prompts(&line, "prompts").unwrap();
        assert_eq!(loaded[0].text.as_bytes(), text.as_bytes());
        assert_eq!(render_records(&loaded, None).unwrap(), format!("{line}\n"));
    }

    #[test]
    fn extra_fields_survive() {
        let line = "{\"id\":\"p1\",\"dataset\":\"coco\",\"text\":\"a\",\"caption_idx\":3,\"meta\":{\"k\":[1,2]}}";
        let loaded = parse_prompts(line, "prompts").unwrap();
        assert_eq!(loaded[0].extra["caption_idx"], 3);
        let back = render_records(&loaded, None).unwrap();
        let reparsed = parse_prompts(&back, "prompts").unwrap();
        assert_eq!(loaded, reparsed);
    }

    fn dsg_pair() -> Vec<QuestionRecord> {
        vec![
            QuestionRecord::yes_no("q1", "p1", QaMetric::Dsg, "Is there a dog?", "yes"),
            QuestionRecord::yes_no("q2", "p1", QaMetric::Dsg, "Is the dog red?", "yes").with_dependencies(["q1"]),
        ]
    }

    fn as_lines(qs: &[QuestionRecord]) -> String {
        render_records(qs, None).unwrap()
    }

    #[test]
    fn dsg_pair_accepted() {
        let qs = parse_questions(&as_lines(&dsg_pair()), "q", &prompts()).unwrap();
        assert_eq!(qs.len(), 2);
        assert_eq!(qs[1].depends_on, ["q1"]);
    }

    #[test]
    fn two_cycle_rejected() {
        let mut qs = dsg_pair();
        qs[0].depends_on = vec!["q2".into()];
        let err = parse_questions(&as_lines(&qs), "q", &prompts()).unwrap_err();
        match err {
            Error::DependencyCycle(c) => {
                assert_eq!(c.first(), c.last());
                assert!(c.contains(&"q1".to_string()) && c.contains(&"q2".to_string()));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn dependency_across_groups_is_dangling() {
        let mut qs = dsg_pair();
        qs[0].prompt_id = "p2".into();
        assert!(matches!(
            parse_questions(&as_lines(&qs), "q", &prompts()),
            Err(Error::DanglingReference { .. })
        ));
    }

    #[test]
    fn dependencies_only_for_dsg() {
        let mut qs = dsg_pair();
        qs[0].metric = QaMetric::Tifa;
        qs[1].metric = QaMetric::Tifa;
        assert!(matches!(
            parse_questions(&as_lines(&qs), "q", &prompts()),
            Err(Error::Malformed { line: 2, .. })
        ));
    }

    #[test]
    fn yes_no_choices_enforced() {
        let mut q = QuestionRecord::yes_no("q1", "p1", QaMetric::Tifa, "Is it?", "yes");
        q.choices = vec!["no".into(), "yes".into()];
        assert!(parse_questions(&as_lines(&[q]), "q", &prompts()).is_err());
    }

    #[test]
    fn unknown_question_in_answers() {
        let qs = dsg_pair();
        let text = render_records(&[AnswerRecord::new("q7", "real", "yes")], None).unwrap();
        assert!(matches!(
            parse_answers(&text, "a", &qs),
            Err(Error::DanglingReference { .. })
        ));
    }

    #[test]
    fn duplicate_answer_rejected() {
        let qs = dsg_pair();
        let a = AnswerRecord::new("q1", "real", "yes");
        let text = render_records(&[a.clone(), a], None).unwrap();
        assert!(matches!(parse_answers(&text, "a", &qs), Err(Error::DuplicateId { .. })));
    }

    #[test]
    fn similarity_checks() {
        let p = prompts();
        let ok = SimilarityRecord::new("p1", "real", FULL_PROMPT, 0.306);
        assert!(parse_similarities(&render_records(std::slice::from_ref(&ok), None).unwrap(), "s", &p).is_ok());
        let dup = render_records(&[ok.clone(), ok.clone()], None).unwrap();
        assert!(parse_similarities(&dup, "s", &p).is_err());
        let out_of_range = SimilarityRecord::new("p1", "real", FULL_PROMPT, 1.5);
        assert!(parse_similarities(&render_records(&[out_of_range], None).unwrap(), "s", &p).is_err());
    }

    fn arb_question() -> impl Strategy<Value = QuestionRecord> {
        (
            prop::bool::ANY,
            prop::collection::vec("[a-z]{1,5}", 2..5),
            0usize..6,
            prop::bool::ANY,
        )
            .prop_map(|(yes_no, choices, gold_pick, valid)| {
                let mut q = if yes_no {
                    let gold = if gold_pick % 2 == 0 { "yes" } else { "no" };
                    QuestionRecord::yes_no("q1", "p1", QaMetric::Tifa, "Is it?", gold)
                } else {
                    let refs: Vec<&str> = choices.iter().map(String::as_str).collect();
                    let gold = choices[gold_pick % choices.len()].clone();
                    QuestionRecord::multiple_choice("q1", "p1", QaMetric::Tifa, "What?", &refs, &gold)
                };
                if !valid {
                    q.gold = "NOT-A-CHOICE".into();
                }
                q
            })
    }

    proptest! {
        #[test]
        fn gold_membership_enforced(q in arb_question()) {
            let accepted = parse_questions(&as_lines(std::slice::from_ref(&q)), "q", &prompts()).is_ok();
            prop_assert_eq!(accepted, q.choices.contains(&q.gold));
        }

        #[test]
        fn question_round_trip(
            texts in prop::collection::vec("[ -~]{1,30}", 1..6),
            extra in prop::collection::btree_map("x_[a-z]{1,4}", -1000i64..1000, 0..3),
        ) {
            let qs: Vec<QuestionRecord> = texts
                .iter()
                .enumerate()
                .map(|(i, t)| {
                    let mut q = QuestionRecord::multiple_choice(
                        format!("q{i}"), "p1", QaMetric::Vpeval, t.clone(), &["a", "b"], "b");
                    for (k, v) in &extra {
                        q.extra.insert(k.clone(), (*v).into());
                    }
                    q
                })
                .collect();
            let loaded = parse_questions(&as_lines(&qs), "q", &prompts()).unwrap();
            prop_assert_eq!(&loaded, &qs);
            prop_assert_eq!(as_lines(&loaded), as_lines(&qs));
        }

        #[test]
        fn similarity_scores_round_trip(scores in prop::collection::vec(-1.0f64..=1.0, 1..8)) {
            let recs: Vec<SimilarityRecord> = scores
                .iter()
                .enumerate()
                .map(|(i, s)| SimilarityRecord::new("p1", "real", format!("v{i}"), *s))
                .collect();
            let loaded = parse_similarities(&render_records(&recs, None).unwrap(), "s", &prompts()).unwrap();
            prop_assert_eq!(loaded, recs);
        }

        // Build a random DAG (edges only to lower indices), then add one back edge.
        #[test]
        fn injected_cycles_always_rejected(
            n in 2usize..10,
            edges in prop::collection::vec((0usize..10, 0usize..10), 0..20),
            back in (0usize..10, 0usize..10),
        ) {
            let mut qs: Vec<QuestionRecord> = (0..n)
                .map(|i| QuestionRecord::yes_no(format!("q{i}"), "p1", QaMetric::Dsg, "Is it?", "yes"))
                .collect();
            for (a, b) in edges {
                let (a, b) = (a % n, b % n);
                if a > b && !qs[a].depends_on.contains(&format!("q{b}")) {
                    qs[a].depends_on.push(format!("q{b}"));
                }
            }
            prop_assert!(check_dependencies("q", &qs).is_ok());

            // Close a cycle: pick lo < hi, make sure hi reaches lo, then lo -> hi.
            let (mut lo, mut hi) = (back.0 % n, back.1 % n);
            if lo == hi { hi = (lo + 1) % n; }
            if lo > hi { std::mem::swap(&mut lo, &mut hi); }
            let lo_id = format!("q{lo}");
            if !qs[hi].depends_on.contains(&lo_id) {
                qs[hi].depends_on.push(lo_id);
            }
            qs[lo].depends_on.push(format!("q{hi}"));
            let rejected = matches!(check_dependencies("q", &qs), Err(Error::DependencyCycle(_)));
            prop_assert!(rejected);
        }
    }
}
