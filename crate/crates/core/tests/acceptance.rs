//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::Rng;

use metric_audit::ablate::{build_retrieval_captions, permutation, shuffle_images, shuffle_text};
use metric_audit::audit::{question_count_correlation, question_stats, shortcut_entries, ShortcutThresholds};
use metric_audit::config::{Overrides, RunConfig};
use metric_audit::corpus::{AnswerRecord, ImageRef, PromptRecord, QaMetric, QuestionRecord};
use metric_audit::metrics::{
    majority_baseline, random_chance, random_chance_group, score_dsg, score_records, score_tifa, AnswerIndex, Metric,
};
use metric_audit::pipeline::{analyze, load_inputs};
use metric_audit::seed;
use metric_audit::stats::special::student_t_two_tailed;
use metric_audit::stats::{spearman_rho, t_approx_p_value, DatasetCell, PValueMode, Thresholds};
use metric_audit::textprops::{flesch_kincaid_grade, tokenize, yngve_score, ParseTree, YngveAggregate};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed <= limit, format!("took {elapsed:.2?}, limit {limit:?}"))
}

// ---------------------------------------------------------------- 1

fn oracle_ranks(v: &[f64]) -> Vec<f64> {
    v.iter()
        .map(|&a| {
            let less = v.iter().filter(|&&b| b < a).count() as f64;
            let equal = v.iter().filter(|&&b| b == a).count() as f64;
            less + (equal + 1.0) / 2.0
        })
        .collect()
}

fn oracle_pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    sxy / (sxx * syy).sqrt()
}

fn spearman_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = seed::rng(1);
    let mut worst: f64 = 0.0;
    let mut done = 0;
    while done < 200 {
        let n = rng.random_range(3..=50);
        let levels = rng.random_range(2..=12);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(0..levels) as f64).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(0..levels) as f64 * 0.5).collect();
        let constant = |v: &[f64]| v.iter().all(|a| *a == v[0]);
        if constant(&x) || constant(&y) {
            continue;
        }
        let got = spearman_rho(&x, &y).map_err(|e| e.to_string())?;
        let want = oracle_pearson(&oracle_ranks(&x), &oracle_ranks(&y));
        worst = worst.max((got - want).abs());
        done += 1;
    }
    ensure(worst <= 1e-12, format!("max |rho - oracle| = {worst:e}"))?;

    // t = rho * sqrt(df / (1 - rho^2)) at rho 0.5, n 10; df 8 table quantiles.
    let p = t_approx_p_value(0.5, 10);
    ensure((p - 0.141_113_281_25).abs() <= 1e-6, format!("p(0.5, 10) = {p}"))?;
    for (t, two_tailed) in [
        (1.859_548, 0.10),
        (2.306_004, 0.05),
        (2.896_459, 0.02),
        (3.355_387, 0.01),
    ] {
        let got = student_t_two_tailed(t, 8.0);
        ensure(
            (got - two_tailed).abs() <= 1e-6,
            format!("t {t}, df 8: p {got}, table {two_tailed}"),
        )?;
    }
    within(start.elapsed(), Duration::from_secs(5))?;
    Ok(format!("max error {worst:.1e} over 200 vectors, p(0.5, 10) = {p:.8}"))
}

// ---------------------------------------------------------------- 2

/// 125,000 TIFA questions over 2,500 prompts with the appendix COCO shape:
/// 71,000 yes/no (70,787 gold yes) and 54,000 multiple choice (50,760 gold
/// first). Question counts per prompt vary and the share answered correctly
/// falls as the count grows.
fn paper_shaped_tifa() -> (Vec<PromptRecord>, Vec<QuestionRecord>, Vec<AnswerRecord>) {
    let mut kinds: Vec<u8> = [(0u8, 70_787usize), (1, 213), (2, 50_760), (3, 3_240)]
        .iter()
        .flat_map(|&(k, n)| std::iter::repeat_n(k, n))
        .collect();
    let mut rng = seed::rng(2);
    use rand::seq::SliceRandom;
    kinds.shuffle(&mut rng);
    let (mut prompts, mut questions, mut answers) = (Vec::new(), Vec::new(), Vec::new());
    let mut next = kinds.into_iter();
    for i in 0..2_500usize {
        let d = (i / 2) % 21;
        let count = if i % 2 == 0 { 50 + d } else { 50 - d };
        let pid = format!("p{i:04}");
        prompts.push(PromptRecord::new(&pid, "coco", "a photo"));
        let right = count * (100 - count) / 100;
        for j in 0..count {
            let qid = format!("{pid}-{j}");
            let q = match next.next().expect("exactly 125,000 kinds") {
                0 => QuestionRecord::yes_no(&qid, &pid, QaMetric::Tifa, "is there a dog?", "yes"),
                1 => QuestionRecord::yes_no(&qid, &pid, QaMetric::Tifa, "is there a dog?", "no"),
                k => QuestionRecord::multiple_choice(
                    &qid,
                    &pid,
                    QaMetric::Tifa,
                    "how many dogs?",
                    &["one", "two", "three", "four"],
                    if k == 2 { "one" } else { "three" },
                ),
            };
            let predicted = if j < right {
                q.gold.clone()
            } else {
                q.choices.iter().find(|c| **c != q.gold).cloned().unwrap_or_default()
            };
            answers.push(AnswerRecord::new(&qid, "sd", predicted));
            questions.push(q);
        }
    }
    (prompts, questions, answers)
}

fn qa_stats_reproduction() -> Outcome {
    let (prompts, questions, answers) = paper_shaped_tifa();
    let start = Instant::now();
    let dataset_of: BTreeMap<String, String> = prompts.iter().map(|p| (p.id.clone(), p.dataset.clone())).collect();
    let stats = question_stats(&questions, &dataset_of).map_err(|e| e.to_string())?;
    let s = &stats[0];
    ensure(s.total == 125_000, format!("total {}", s.total))?;
    ensure(s.pct_yes_no == 56.8, format!("yes/no {}", s.pct_yes_no))?;
    ensure(
        s.pct_gold_yes_given_yn == Some(99.7),
        format!("gold yes {:?}", s.pct_gold_yes_given_yn),
    )?;
    ensure(
        s.pct_gold_first_given_mc == Some(94.0),
        format!("gold first {:?}", s.pct_gold_first_given_mc),
    )?;
    let scores = score_records(&questions, &answers, &[]).map_err(|e| e.to_string())?;
    let counts = question_count_correlation(&scores, &dataset_of, Thresholds::default(), PValueMode::TApproximation)
        .map_err(|e| e.to_string())?;
    let entries = shortcut_entries(
        &stats,
        &questions,
        &dataset_of,
        &counts,
        ShortcutThresholds::default(),
        1,
        2,
    )
    .map_err(|e| e.to_string())?;
    let e = &entries[0];
    ensure(
        e.yes_bias.flagged && e.first_answer_bias.flagged && e.question_count_dependence.flagged,
        format!(
            "flags yes {} first {} count {}",
            e.yes_bias.flagged, e.first_answer_bias.flagged, e.question_count_dependence.flagged
        ),
    )?;
    within(start.elapsed(), Duration::from_secs(1))?;
    Ok(format!(
        "56.8 / 99.7 / 94.0 exact, count rho {:.2}, all flags raised",
        e.question_count_dependence.observed.unwrap_or(f64::NAN)
    ))
}

// ---------------------------------------------------------------- 3

fn dsg_gating() -> Outcome {
    let start = Instant::now();
    let dog = QuestionRecord::yes_no("q1", "p", QaMetric::Dsg, "Is there a dog?", "yes");
    let red = QuestionRecord::yes_no("q2", "p", QaMetric::Dsg, "Is the dog red?", "yes").with_dependencies(["q1"]);
    let qs = vec![dog, red];
    let answers = vec![AnswerRecord::new("q1", "m", "no"), AnswerRecord::new("q2", "m", "yes")];
    let index = AnswerIndex::new(&answers);
    let dsg = score_dsg(&qs, &index, "m").map_err(|e| e.to_string())?.value;
    let tifa = score_tifa(&qs, &index, "m").map_err(|e| e.to_string())?.value;
    ensure(dsg == 0.0 && tifa == 0.5, format!("dsg {dsg}, tifa {tifa}"))?;

    let mut rng = seed::rng(3);
    for trial in 0..1_000 {
        let n = rng.random_range(1..=12);
        let mut qs = Vec::with_capacity(n);
        let mut answers = Vec::with_capacity(n);
        for i in 0..n {
            let id = format!("t{trial}q{i}");
            let parents: Vec<String> = (0..i)
                .filter(|_| rng.random_bool(0.3))
                .map(|j| format!("t{trial}q{j}"))
                .collect();
            qs.push(QuestionRecord::yes_no(&id, "p", QaMetric::Dsg, "?", "yes").with_dependencies(parents));
            answers.push(AnswerRecord::new(
                &id,
                "m",
                if rng.random_bool(0.6) { "yes" } else { "no" },
            ));
        }
        let index = AnswerIndex::new(&answers);
        let d = score_dsg(&qs, &index, "m").map_err(|e| e.to_string())?.value;
        let t = score_tifa(&qs, &index, "m").map_err(|e| e.to_string())?.value;
        ensure(d <= t, format!("random DAG {trial}: dsg {d} > tifa {t}"))?;
    }
    within(start.elapsed(), Duration::from_secs(5))?;
    Ok("dog/red-dog gives 0.0 vs 0.5; dsg <= tifa on 1,000 random DAGs".into())
}

// ---------------------------------------------------------------- 4

fn baselines_check() -> Outcome {
    const TRIALS: usize = 100_000;
    let yes_no: Vec<QuestionRecord> = (0..10)
        .map(|i| {
            QuestionRecord::yes_no(
                format!("y{i}"),
                "p",
                QaMetric::Tifa,
                "?",
                if i % 3 == 0 { "no" } else { "yes" },
            )
        })
        .collect();
    let four: Vec<QuestionRecord> = (0..10)
        .map(|i| {
            let choices = ["a", "b", "c", "d"];
            QuestionRecord::multiple_choice(format!("m{i}"), "p", QaMetric::Tifa, "?", &choices, choices[i % 4])
        })
        .collect();
    let chain = vec![
        QuestionRecord::yes_no("c1", "p", QaMetric::Dsg, "?", "yes"),
        QuestionRecord::yes_no("c2", "p", QaMetric::Dsg, "?", "yes").with_dependencies(["c1"]),
    ];
    let mut lines = Vec::new();
    // Standard error of a mean of `TRIALS` group scores, each the mean of
    // `k` independent Bernoulli(p) verdicts.
    let se = |p: f64, k: usize| (p * (1.0 - p) / (k as f64 * TRIALS as f64)).sqrt();
    for (name, qs, expected, sigma) in [
        ("yes/no", &yes_no, 0.5, se(0.5, 10)),
        ("4-choice", &four, 0.25, se(0.25, 10)),
        // Credited count per trial is 0, 1 or 2 with probability 1/2, 1/4, 1/4.
        ("2-chain DSG", &chain, 0.375, (0.171_875f64 / TRIALS as f64).sqrt()),
    ] {
        let got = random_chance(qs, TRIALS, 4).map_err(|e| e.to_string())?;
        let z = (got - expected) / sigma;
        ensure(z.abs() <= 3.0, format!("{name}: {got} vs {expected} ({z:.2} sigma)"))?;
        lines.push(format!("{name} {got:.4} ({z:+.2} sigma)"));
    }
    let mut rng = seed::rng(4);
    let direct = random_chance_group(&chain, true, 1_000, &mut rng).map_err(|e| e.to_string())?;
    ensure((0.0..=1.0).contains(&direct), "group estimate out of range")?;

    let mut mixed = yes_no.clone();
    mixed.extend(four.iter().cloned());
    for (name, qs) in [("tifa", mixed), ("dsg", chain)] {
        let stub: Vec<AnswerRecord> = qs
            .iter()
            .map(|q| AnswerRecord::new(&q.question_id, "stub", q.majority_answer()))
            .collect();
        let scored = score_records(&qs, &stub, &[]).map_err(|e| e.to_string())?;
        let majority = majority_baseline(&qs).map_err(|e| e.to_string())?;
        ensure(
            scored.len() == 1 && scored[0].value == majority,
            format!(
                "{name}: stub {:?} vs majority {majority}",
                scored.iter().map(|s| s.value).collect::<Vec<_>>()
            ),
        )?;
    }
    lines.push("stub answers equal majority exactly".into());
    Ok(lines.join("; "))
}

// ---------------------------------------------------------------- 5

fn linguistic_scorers() -> Outcome {
    let fk = |w: f64, s: f64, syl: f64| 0.39 * (w / s) + 11.8 * (syl / w) - 15.59;
    let sentences = [
        ("The cat sat on the mat.", fk(6.0, 1.0, 6.0)),
        ("A dog.", fk(2.0, 1.0, 2.0)),
        ("Elephants are enormous animals.", fk(4.0, 1.0, 10.0)),
        ("A red dog. A big cat.", fk(6.0, 2.0, 6.0)),
        ("Yellow paper covers the wooden table.", fk(6.0, 1.0, 11.0)),
    ];
    for (text, want) in sentences {
        let got = flesch_kincaid_grade(text).map_err(|e| e.to_string())?;
        ensure((got - want).abs() <= 1e-9, format!("FK {text:?}: {got} vs {want}"))?;
    }

    let trees = [
        ("(S (NP (NN dog)))", 0.0),
        ("(S (A x) (B y))", 0.5),
        ("(S (A a) (B b) (C c))", 1.0),
        ("(S (NP (DT the) (NN dog)) (VP (VBD barked)))", 1.0),
        ("(S (A x) (S (A y) (S (A z) (B w))))", 0.75),
        ("(S (S (S (B w) (A z)) (A y)) (A x))", 1.5),
    ];
    for (text, want) in trees {
        let tree = ParseTree::parse(text).map_err(|e| e.to_string())?;
        let got = yngve_score(&tree, YngveAggregate::Mean).map_err(|e| e.to_string())?;
        ensure(got == want, format!("Yngve {text}: {got} vs {want}"))?;
    }
    let right = ParseTree::parse(trees[4].0).map_err(|e| e.to_string())?;
    let left = yngve_score(&right.mirrored(), YngveAggregate::Mean).map_err(|e| e.to_string())?;
    let rightward = yngve_score(&right, YngveAggregate::Mean).map_err(|e| e.to_string())?;
    ensure(left > rightward, "mirrored left-branching tree does not score higher")?;

    #[derive(serde::Deserialize)]
    struct Pair {
        text: String,
        tokens: Vec<String>,
    }
    let data =
        std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/tokenizer_reference.json"))
            .map_err(|e| e.to_string())?;
    let pairs: Vec<Pair> = serde_json::from_str(&data).map_err(|e| e.to_string())?;
    ensure(pairs.len() >= 20, format!("only {} reference pairs", pairs.len()))?;
    for p in pairs.iter().take(20) {
        let got = tokenize(&p.text).tokens;
        ensure(
            got == p.tokens,
            format!("tokenize {:?}: {got:?} vs {:?}", p.text, p.tokens),
        )?;
    }
    Ok("5 FK sentences, 6 Yngve trees, 20 tokenizer pairs".into())
}

// ---------------------------------------------------------------- 6

fn ablation_transforms() -> Outcome {
    let vocab = [
        "a", "red", "dog", "cat", "sits", "on", "the", "big", "couch", "near", "two", "birds", ",",
    ];
    let mut rng = seed::rng(6);
    for i in 0..1_000u64 {
        let len = rng.random_range(1..12);
        let mut words: Vec<&str> = (0..len).map(|_| vocab[rng.random_range(0..vocab.len())]).collect();
        let question = rng.random_bool(0.5);
        if question {
            words.push("?");
        }
        let text = words.join(" ");
        let shuffled = shuffle_text(&text, i);
        let mut before = tokenize(&text).tokens;
        let mut after = tokenize(&shuffled).tokens;
        if question {
            ensure(
                after.last().map(String::as_str) == Some("?"),
                format!("terminal ? moved in {shuffled:?}"),
            )?;
        }
        before.sort();
        after.sort();
        ensure(
            before == after,
            format!("token multiset changed: {text:?} -> {shuffled:?}"),
        )?;
    }

    for n in 2..=1_000usize {
        let prompts: Vec<PromptRecord> = (0..n)
            .map(|i| PromptRecord::new(format!("p{i:04}"), "coco", "x"))
            .collect();
        let refs: Vec<ImageRef> = prompts
            .iter()
            .map(|p| ImageRef::new(&p.id, "sd", format!("img-{}", p.id)))
            .collect();
        let out = shuffle_images(&refs, &prompts, n as u64, true).map_err(|e| e.to_string())?;
        let fixed = refs
            .iter()
            .zip(&out)
            .filter(|(a, b)| a.image_key == b.image_key)
            .count();
        ensure(fixed == 0, format!("group of {n}: {fixed} fixed points"))?;
    }

    // Without derangement the number of fixed points is close to Poisson(1),
    // so the share of shuffles with none approaches 1/e.
    const SIZE: usize = 10_000;
    const TRIALS: usize = 5_000;
    let mut none = 0usize;
    let mut total_fixed = 0usize;
    for t in 0..TRIALS {
        let mut r = seed::rng_for(6, &format!("fixed_points/{t}"));
        let p = permutation(SIZE, false, &mut r);
        let fixed = p.iter().enumerate().filter(|(i, v)| i == *v).count();
        total_fixed += fixed;
        none += usize::from(fixed == 0);
    }
    let share = none as f64 / TRIALS as f64;
    ensure(
        (share - 0.368).abs() <= 0.02,
        format!("share without fixed points {share}"),
    )?;

    let q = QuestionRecord::multiple_choice(
        "q1",
        "p1",
        QaMetric::Tifa,
        "What type of animal is this animal?",
        &["dog", "cat", "bird", "fish"],
        "dog",
    );
    let set = build_retrieval_captions(&q).map_err(|e| e.to_string())?;
    let texts: Vec<&str> = set.captions.iter().map(|c| c.text.as_str()).collect();
    ensure(
        texts
            == [
                "What type of animal is this animal? dog",
                "What type of animal is this animal? cat",
                "What type of animal is this animal? bird",
                "What type of animal is this animal? fish",
            ]
            && set.correct_index == 0,
        format!("captions {texts:?}"),
    )?;
    Ok(format!(
        "1,000 text shuffles, derangements for 2..=1000, fixed-point-free share {share:.4} (mean {:.3} fixed points), captions exact",
        total_fixed as f64 / TRIALS as f64
    ))
}

// ---------------------------------------------------------------- 7

const NOUNS: [(&str, f64); 8] = [
    ("dog", 4.9),
    ("cat", 4.8),
    ("horse", 4.9),
    ("vase", 4.6),
    ("idea", 1.6),
    ("hope", 1.5),
    ("table", 4.9),
    ("memory", 2.0),
];

/// Writes a corpus of `n` prompts whose nesting depth grows with `i % 8`.
/// `score_of(i, k)` gives the number of correct answers out of 4 for each QA
/// metric and `clip_of(i, k)` the CLIPScore.
fn write_corpus(
    dir: &Path,
    n: usize,
    correct_of: &mut dyn FnMut(usize, usize) -> usize,
    clip_of: &mut dyn FnMut(usize, usize) -> f64,
) -> Result<(), String> {
    let mut prompts = String::new();
    let mut questions = String::new();
    let mut answers = String::new();
    let mut sims = String::new();
    for i in 0..n {
        let k = i % 8;
        let noun = NOUNS[(i / 8) % NOUNS.len()].0;
        let mut text = format!("a {noun}");
        let mut tree = format!("(NP (DT a) (NN {noun}))");
        for _ in 0..k {
            text.push_str(" near a red cat");
            tree = format!("(NP {tree} (PP (IN near) (NP (DT a) (JJ red) (NN cat))))");
        }
        let pid = format!("s{i:04}");
        let prompt =
            serde_json::json!({ "id": pid, "dataset": "synthetic", "text": text, "parse": format!("(ROOT {tree})") });
        prompts.push_str(&format!("{prompt}\n"));
        for metric in ["tifa", "vpeval", "dsg"] {
            let correct = correct_of(i, k);
            for j in 0..4 {
                let qid = format!("{pid}-{metric}-{j}");
                let q = serde_json::json!({
                    "question_id": qid, "prompt_id": pid, "metric": metric, "text": "is there a cat?",
                    "qtype": "yes_no", "choices": ["yes", "no"], "gold": "yes",
                });
                questions.push_str(&format!("{q}\n"));
                let a = serde_json::json!({
                    "question_id": qid, "source": "sd", "predicted": if j < correct { "yes" } else { "no" },
                });
                answers.push_str(&format!("{a}\n"));
            }
        }
        let s = serde_json::json!({
            "prompt_id": pid, "source": "sd", "caption_variant": "full_prompt", "score": clip_of(i, k),
        });
        sims.push_str(&format!("{s}\n"));
    }
    let lexicon: String = NOUNS
        .iter()
        .map(|(w, r)| format!("{w}\t{r}\n"))
        .chain(["red\t3.9\n".to_string(), "near\t2.0\n".to_string()])
        .collect();
    let files = [
        ("prompts.jsonl", prompts),
        ("questions.jsonl", questions),
        ("answers.jsonl", answers),
        ("similarities.jsonl", sims),
        ("concreteness.tsv", lexicon.clone()),
        ("imageability.tsv", lexicon),
        ("classes.txt", "dog\ncat\nhorse\ntable\n".to_string()),
        (
            "run.toml",
            "seed = 11\nrandom_trials = 10\n[paths]\nprompts = \"prompts.jsonl\"\nquestions = \"questions.jsonl\"\n\
             answers = \"answers.jsonl\"\nsimilarities = \"similarities.jsonl\"\nconcreteness = \"concreteness.tsv\"\n\
             imageability = \"imageability.tsv\"\nclasses = \"classes.txt\"\n"
                .to_string(),
        ),
    ];
    for (name, content) in files {
        std::fs::write(dir.join(name), content).map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn analyze_dir(dir: &Path) -> Result<(Vec<DatasetCell>, Vec<DatasetCell>), String> {
    let cfg = RunConfig::from_sources(Some(&dir.join("run.toml")), Overrides::default()).map_err(|e| e.to_string())?;
    let inputs = load_inputs(&cfg).map_err(|e| e.to_string())?;
    let analysis = analyze(&inputs, &cfg).map_err(|e| e.to_string())?;
    Ok((analysis.linguistic, analysis.visual))
}

fn correlation_pattern() -> Outcome {
    let monotone = tempfile::tempdir().map_err(|e| e.to_string())?;
    write_corpus(monotone.path(), 240, &mut |_, k| 4 - k / 2, &mut |i, k| {
        0.35 - 0.01 * k as f64 + 1e-5 * (i % 7) as f64
    })?;
    let (linguistic, _) = analyze_dir(monotone.path())?;
    let qa: Vec<&DatasetCell> = linguistic
        .iter()
        .filter(|c| c.cell.metric != Metric::Clipscore)
        .collect();
    ensure(qa.len() == 9, format!("{} QA linguistic cells", qa.len()))?;
    for c in &qa {
        let r = c
            .cell
            .outcome
            .result()
            .ok_or(format!("{} {} not computed", c.cell.metric, c.cell.property))?;
        ensure(
            r.rho < 0.0 && r.significant && r.is_strong(),
            format!(
                "{} vs {}: rho {:.3}, p {:.3}",
                c.cell.metric, c.cell.property, r.rho, r.p_value
            ),
        )?;
    }

    let independent = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut rng = seed::rng(7);
    let mut rng2 = seed::rng(8);
    write_corpus(
        independent.path(),
        400,
        &mut |_, _| rng.random_range(0..=4),
        &mut |_, _| rng2.random_range(0.2..0.35),
    )?;
    let (linguistic, visual) = analyze_dir(independent.path())?;
    let mut largest: f64 = 0.0;
    for c in linguistic.iter().chain(&visual) {
        let r = c
            .cell
            .outcome
            .result()
            .ok_or(format!("{} {} not computed", c.cell.metric, c.cell.property))?;
        largest = largest.max(r.rho.abs());
        ensure(
            !r.is_strong() && r.rho.abs() < 0.2,
            format!("independent {} vs {}: rho {:.3}", c.cell.metric, c.cell.property, r.rho),
        )?;
    }
    Ok(format!(
        "9/9 QA linguistic cells negative, significant and bold; independent corpus max |rho| {largest:.3}, none bold"
    ))
}

// ---------------------------------------------------------------- 8

fn run_all(out: &Path) -> Result<(), String> {
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/corpus/run.toml");
    let status = Command::new(env!("CARGO_BIN_EXE_metric-audit"))
        .arg("--config")
        .arg(&config)
        .arg("--out")
        .arg(out)
        .arg("all")
        .output()
        .map_err(|e| e.to_string())?;
    ensure(
        status.status.success(),
        format!("metric-audit all failed: {}", String::from_utf8_lossy(&status.stderr)),
    )
}

fn collect(dir: &Path, base: &Path, out: &mut BTreeMap<String, Vec<u8>>) -> Result<(), String> {
    for entry in std::fs::read_dir(dir).map_err(|e| e.to_string())? {
        let path = entry.map_err(|e| e.to_string())?.path();
        if path.is_dir() {
            collect(&path, base, out)?;
        } else {
            let rel = path
                .strip_prefix(base)
                .map_err(|e| e.to_string())?
                .display()
                .to_string();
            let mut bytes = std::fs::read(&path).map_err(|e| e.to_string())?;
            if rel == "meta.json" {
                let text = String::from_utf8_lossy(&bytes)
                    .lines()
                    .filter(|l| !l.contains("\"generated_at_unix\""))
                    .collect::<Vec<_>>()
                    .join("\n");
                bytes = text.into_bytes();
            }
            out.insert(rel, bytes);
        }
    }
    Ok(())
}

fn determinism() -> Outcome {
    let (a, b) = (
        tempfile::tempdir().map_err(|e| e.to_string())?,
        tempfile::tempdir().map_err(|e| e.to_string())?,
    );
    run_all(a.path())?;
    run_all(b.path())?;
    let (mut fa, mut fb) = (BTreeMap::new(), BTreeMap::new());
    collect(a.path(), a.path(), &mut fa)?;
    collect(b.path(), b.path(), &mut fb)?;
    ensure(!fa.is_empty(), "no output files")?;
    ensure(fa.keys().eq(fb.keys()), "file lists differ")?;
    for (name, bytes) in &fa {
        ensure(fb[name] == *bytes, format!("{name} differs"))?;
    }
    Ok(format!("{} files byte-identical across two runs", fa.len()))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 8] = [
        ("Spearman oracle equivalence", spearman_oracle),
        ("QA-stats reproduction", qa_stats_reproduction),
        ("DSG gating", dsg_gating),
        ("Baselines", baselines_check),
        ("Linguistic scorers", linguistic_scorers),
        ("Ablation transforms", ablation_transforms),
        ("Correlation sign pattern", correlation_pattern),
        ("Determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        match run() {
            Ok(detail) => println!("PASS {}. {name}: {detail} [{:.2?}]", i + 1, start.elapsed()),
            Err(detail) => {
                failed += 1;
                println!("FAIL {}. {name}: {detail} [{:.2?}]", i + 1, start.elapsed());
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
