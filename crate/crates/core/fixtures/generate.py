"""Regenerates the bundled fixture corpora. Output is deterministic."""

import json
import os
import random

HERE = os.path.dirname(os.path.abspath(__file__))

NOUNS = ["dog", "cat", "horse", "bird", "car", "bus", "boat", "table", "chair", "bench",
         "apple", "banana", "clock", "vase", "kite", "umbrella", "bicycle", "train", "cake", "sheep"]
CLASSES = ["dog", "cat", "horse", "bird", "car", "bus", "boat", "dining table", "chair", "bench",
           "apple", "banana", "clock", "vase", "kite", "umbrella", "bicycle", "train", "cake", "sheep",
           "person", "traffic light"]
ABSTRACT = ["idea", "memory", "freedom", "silence", "dream", "hope"]
COLORS = ["red", "blue", "green", "yellow", "white", "black", "brown", "orange"]
SIZES = ["small", "large", "tiny", "old", "shiny"]
PREPS = ["on", "near", "under", "behind", "beside"]
VERBS = ["sits", "stands", "rests", "waits"]

CONCRETE = {w: 4.2 + 0.04 * i for i, w in enumerate(NOUNS)}
CONCRETE.update({w: 1.4 + 0.1 * i for i, w in enumerate(ABSTRACT)})
CONCRETE.update({w: 3.6 + 0.05 * i for i, w in enumerate(COLORS)})
CONCRETE.update({w: 2.9 + 0.1 * i for i, w in enumerate(SIZES)})
CONCRETE.update({w: 2.2 + 0.1 * i for i, w in enumerate(VERBS)})


def write_jsonl(path, records, provenance=None):
    with open(path, "w") as f:
        if provenance is not None:
            f.write(json.dumps({"_provenance": provenance}, sort_keys=True) + "\n")
        for r in records:
            f.write(json.dumps(r, sort_keys=True) + "\n")


def np_phrase(rng, abstract=False):
    """Returns (leaves, tree, nouns-with-attributes) for a determiner phrase."""
    noun = rng.choice(ABSTRACT if abstract else NOUNS)
    leaves = ["a"]
    tree = ["(DT a)"]
    color = None
    if rng.random() < 0.7:
        size = rng.choice(SIZES)
        if rng.random() < 0.4:
            leaves.append(size)
            tree.append(f"(JJ {size})")
        color = rng.choice(COLORS)
        leaves.append(color)
        tree.append(f"(JJ {color})")
    leaves.append(noun)
    tree.append(f"(NN {noun})")
    return leaves, "(NP " + " ".join(tree) + ")", [(noun, color)]


def sentence(rng, complexity, abstract=False):
    leaves, tree, entities = np_phrase(rng, abstract)
    relations = []
    for _ in range(complexity):
        prep = rng.choice(PREPS)
        l2, t2, e2 = np_phrase(rng)
        relations.append((entities[-1][0], prep, e2[0][0]))
        leaves = leaves + [prep] + l2
        tree = f"(NP {tree} (PP (IN {prep}) {t2}))"
        entities += e2
    if complexity >= 2 and rng.random() < 0.5:
        verb = rng.choice(VERBS)
        prep = rng.choice(PREPS)
        l3, t3, e3 = np_phrase(rng)
        relations.append((entities[0][0], prep, e3[0][0]))
        leaves = leaves + [verb, prep] + l3
        tree = f"(S {tree} (VP (VBZ {verb}) (PP (IN {prep}) {t3})))"
        entities += e3
    return " ".join(leaves), f"(ROOT {tree})", entities, relations


def questions_for(pid, entities, relations, rng, first_rate):
    qs = []
    n = 0

    def qid(metric):
        nonlocal n
        n += 1
        return f"{pid}-{metric}-{n}"

    for noun, color in entities:
        qs.append(dict(question_id=qid("tifa"), prompt_id=pid, metric="tifa", text=f"is there a {noun}?",
                       qtype="yes_no", choices=["yes", "no"], gold="yes"))
        if color:
            others = [c for c in COLORS if c != color]
            rng.shuffle(others)
            choices = [color] + others[:3]
            if rng.random() >= first_rate:
                k = rng.randrange(1, 4)
                choices[0], choices[k] = choices[k], choices[0]
            qs.append(dict(question_id=qid("tifa"), prompt_id=pid, metric="tifa", text=f"what color is the {noun}?",
                           qtype="multiple_choice", choices=choices, gold=color))
    for noun, color in entities:
        qs.append(dict(question_id=qid("vpeval"), prompt_id=pid, metric="vpeval", text=f"is there a {noun}?",
                       qtype="yes_no", choices=["yes", "no"], gold="yes"))
    entity_q = {}
    for noun, color in entities:
        q = qid("dsg")
        entity_q.setdefault(noun, q)
        qs.append(dict(question_id=q, prompt_id=pid, metric="dsg", text=f"is there a {noun}?",
                       qtype="yes_no", choices=["yes", "no"], gold="yes"))
        if color:
            qs.append(dict(question_id=qid("dsg"), prompt_id=pid, metric="dsg", text=f"is the {noun} {color}?",
                           qtype="yes_no", choices=["yes", "no"], gold="yes", depends_on=[q]))
    for a, prep, b in relations:
        deps = sorted({entity_q[a], entity_q[b]})
        qs.append(dict(question_id=qid("dsg"), prompt_id=pid, metric="dsg", text=f"is the {a} {prep} the {b}?",
                       qtype="yes_no", choices=["yes", "no"], gold="yes", depends_on=deps))
    return qs


def answer(q, correct, rng):
    if correct:
        return q["gold"]
    wrong = [c for c in q["choices"] if c != q["gold"]]
    return rng.choice(wrong)


def stub_answer(q):
    return "yes" if q["qtype"] == "yes_no" else q["choices"][0]


def main_corpus():
    rng = random.Random(20240601)
    out = os.path.join(HERE, "corpus")
    os.makedirs(out, exist_ok=True)
    sources = {"sd15": 0.0, "sd21": 0.05}
    prompts, parses, questions, lengths = [], [], [], {}
    for ds, count in [("coco", 36), ("drawbench", 24)]:
        for i in range(count):
            pid = f"{ds}-{i:03d}"
            complexity = i % 4
            abstract = ds == "drawbench" and i % 6 == 0
            text, tree, entities, relations = sentence(rng, complexity, abstract)
            prompts.append(dict(id=pid, dataset=ds, text=text))
            parses.append(dict(prompt_id=pid, parse=tree))
            lengths[pid] = len(text.split())
            questions += questions_for(pid, entities, relations, rng, 0.9)

    def accuracy(pid, bonus):
        return max(0.15, min(0.98, 1.02 + bonus - 0.045 * lengths[pid]))

    answers, sims, images = [], [], []
    abl = {k: {"answers": [], "similarities": []} for k in
           ["shuffled_images", "shuffled_text", "text_only_qa", "retrieval_qa"]}
    for source, bonus in sources.items():
        for q in questions:
            acc = accuracy(q["prompt_id"], bonus)
            answers.append(dict(question_id=q["question_id"], source=source,
                                predicted=answer(q, rng.random() < acc, rng)))
            abl["shuffled_images"]["answers"].append(dict(
                question_id=q["question_id"], source=source,
                predicted=answer(q, rng.random() < 0.35, rng) if q["qtype"] == "multiple_choice"
                else ("yes" if rng.random() < 0.55 else "no")))
            abl["shuffled_text"]["answers"].append(dict(
                question_id=q["question_id"], source=source,
                predicted=answer(q, rng.random() < acc * 0.85, rng)))
            abl["text_only_qa"]["answers"].append(dict(
                question_id=q["question_id"], source=source, predicted=stub_answer(q)))
            gold_score = 0.22 + 0.1 * acc + rng.uniform(-0.04, 0.04)
            for i, choice in enumerate(q["choices"]):
                score = gold_score if choice == q["gold"] else 0.22 + rng.uniform(-0.04, 0.1)
                abl["retrieval_qa"]["similarities"].append(dict(
                    prompt_id=q["prompt_id"], source=source,
                    caption_variant=f"qa:{q['question_id']}:{i}", score=round(score, 6)))
        for p in prompts:
            pid = p["id"]
            base = 0.34 - 0.004 * lengths[pid] + bonus / 5
            sims.append(dict(prompt_id=pid, source=source, caption_variant="full_prompt",
                             score=round(base + rng.uniform(-0.02, 0.02), 6)))
            abl["shuffled_images"]["similarities"].append(dict(
                prompt_id=pid, source=source, caption_variant="full_prompt",
                score=round(0.17 + rng.uniform(-0.02, 0.02), 6)))
            abl["shuffled_text"]["similarities"].append(dict(
                prompt_id=pid, source=source, caption_variant="full_prompt",
                score=round(base - 0.03 + rng.uniform(-0.02, 0.02), 6)))
            images.append(dict(prompt_id=pid, source=source, image_key=f"{source}/{pid}.png"))

    write_jsonl(os.path.join(out, "prompts.jsonl"), prompts)
    write_jsonl(os.path.join(out, "parses.jsonl"), parses)
    write_jsonl(os.path.join(out, "questions.jsonl"), questions)
    write_jsonl(os.path.join(out, "answers.jsonl"), answers)
    write_jsonl(os.path.join(out, "similarities.jsonl"), sims)
    write_jsonl(os.path.join(out, "images.jsonl"), images)
    stub = {"backend": "stub", "seed": None}
    for name, files in abl.items():
        d = os.path.join(out, "ablations", name)
        os.makedirs(d, exist_ok=True)
        if files["answers"]:
            write_jsonl(os.path.join(d, "answers.jsonl"), files["answers"], stub)
        if files["similarities"]:
            write_jsonl(os.path.join(d, "similarities.jsonl"), files["similarities"], stub)
    with open(os.path.join(out, "concreteness.tsv"), "w") as f:
        for w, r in sorted(CONCRETE.items()):
            f.write(f"{w}\t{r:.2f}\n")
    with open(os.path.join(out, "imageability.tsv"), "w") as f:
        for w, r in sorted(CONCRETE.items()):
            f.write(f"{w}\t{min(7.0, r * 1.2 + 0.6 * ((len(w) * 37) % 7) / 7):.2f}\n")
    with open(os.path.join(out, "classes.txt"), "w") as f:
        f.write("\n".join(CLASSES) + "\n")
    with open(os.path.join(out, "run.toml"), "w") as f:
        f.write("""seed = 20240601
alpha = 0.05
tau = 0.4
missing_word_policy = "lowest"
random_trials = 20000

[paths]
prompts = "prompts.jsonl"
parses = "parses.jsonl"
questions = "questions.jsonl"
answers = "answers.jsonl"
similarities = "similarities.jsonl"
images = "images.jsonl"
concreteness = "concreteness.tsv"
imageability = "imageability.tsv"
classes = "classes.txt"

[ablations.shuffled_images]
answers = "ablations/shuffled_images/answers.jsonl"
similarities = "ablations/shuffled_images/similarities.jsonl"

[ablations.shuffled_text]
answers = "ablations/shuffled_text/answers.jsonl"
similarities = "ablations/shuffled_text/similarities.jsonl"

[ablations.retrieval_qa]
similarities = "ablations/retrieval_qa/similarities.jsonl"

[ablations.text_only_qa]
answers = "ablations/text_only_qa/answers.jsonl"
""")


def paper_tifa():
    """TIFA questions skewed like the COCO row of the question audit:
    about 56.8% yes/no with 99.6% gold yes, 94% of multiple choice gold first,
    and scores that fall as the question count grows."""
    rng = random.Random(7)
    out = os.path.join(HERE, "paper_tifa")
    os.makedirs(out, exist_ok=True)
    counts = [5 + (i * 7) % 11 for i in range(100)]
    total = sum(counts)
    n_yn = round(0.568 * total)
    n_no = round(0.004 * n_yn)
    n_mc = total - n_yn
    n_other = round(0.06 * n_mc)
    kinds = ["yes"] * (n_yn - n_no) + ["no"] * n_no + ["first"] * (n_mc - n_other) + ["other"] * n_other
    rng.shuffle(kinds)
    prompts, questions, answers = [], [], []
    k = 0
    for i, c in enumerate(counts):
        pid = f"coco-{i:03d}"
        noun = NOUNS[i % len(NOUNS)]
        prompts.append(dict(id=pid, dataset="coco", text=f"a photo of a {noun}"))
        right = round(c * (1.0 - (c - 5) / 14))
        for j in range(c):
            kind = kinds[k]
            k += 1
            qid = f"{pid}-tifa-{j}"
            if kind in ("yes", "no"):
                q = dict(question_id=qid, prompt_id=pid, metric="tifa", text=f"is there a {noun}?",
                         qtype="yes_no", choices=["yes", "no"], gold=kind)
            else:
                choices = ["one", "two", "three", "four"]
                gold = "one" if kind == "first" else rng.choice(choices[1:])
                q = dict(question_id=qid, prompt_id=pid, metric="tifa", text=f"how many {noun}s are there?",
                         qtype="multiple_choice", choices=choices, gold=gold)
            questions.append(q)
            answers.append(dict(question_id=qid, source="sd15", predicted=answer(q, j < right, rng)))
    write_jsonl(os.path.join(out, "prompts.jsonl"), prompts)
    write_jsonl(os.path.join(out, "questions.jsonl"), questions)
    write_jsonl(os.path.join(out, "answers.jsonl"), answers)
    with open(os.path.join(out, "run.toml"), "w") as f:
        f.write("""seed = 7
random_trials = 20000

[paths]
prompts = "prompts.jsonl"
questions = "questions.jsonl"
answers = "answers.jsonl"
""")


if __name__ == "__main__":
    main_corpus()
    paper_tifa()
