"""Regenerate the bundled fixture corpus under src/opspam/data/fixture/.

The trees are hand-written; review composition is a fixed rotation so the
output never changes unless this file does.
"""

import json
import pathlib

from opspam.corpus import write_jsonl
from opspam.treebank import parse_bracketed

OUT = pathlib.Path(__file__).resolve().parents[1] / "src" / "opspam" / "data" / "fixture"

# short, promotional sentences
PROMO = [
    "(S (NP (PRP I)) (VP (VBD loved) (NP (DT this) (NN {noun}))) (. !))",
    "(FRAG (ADJP (RB Highly) (VBN recommended)) (. !))",
    "(S (NP (PRP It)) (VP (VBZ is) (NP (DT a) (JJ must) (NN have))) (. .))",
    "(S (NP (DT The) (NNP {brand}) (NN {noun})) (VP (VBZ works) (ADVP (RB great))) (. .))",
    "(S (NP (PRP You)) (VP (MD will) (VP (VB love) (NP (PRP it)))) (. !))",
    "(FRAG (NP (JJS Best) (NN value)) (PP (IN for) (NP (NN money))) (. !))",
    "(S (NP (PRP I)) (VP (VBP recommend) (NP (DT this) (NNP {brand}) (NN {noun})) (PP (TO to) (NP (NN everyone)))) (. .))",
    "(FRAG (NP (JJ Five) (NNS stars)) (. !))",
    "(S (NP (PRP It)) (VP (VBD exceeded) (NP (PRP$ my) (NNS expectations))) (. .))",
    "(S (NP (DT This) (NN {noun})) (VP (VBZ is) (ADJP (RB absolutely) (JJ amazing))) (. !))",
]

# longer, narrative sentences with embedded and coordinated clauses
PLAIN = [
    "(S (NP (PRP I)) (VP (VBD bought) (NP (DT the) (NN {noun})) (SBAR (IN because) (S (NP (PRP$ my) (JJ old) (NN one)) (VP (VBD broke) (PP (IN after) (NP (CD two) (NNS years))))))) (. .))",
    "(S (NP (DT The) (NN {noun})) (VP (VP (VBZ feels) (ADJP (JJ solid))) (CC but) (VP (VBZ takes) (NP (DT a) (NN while)) (S (VP (TO to) (VP (VB get) (VP (VBN used) (PP (TO to) (NP (PRP it))))))))) (. .))",
    "(S (SBAR (WHADVP (WRB When)) (S (NP (PRP it)) (VP (VBD arrived)))) (, ,) (NP (DT the) (NN box)) (VP (VBD was) (ADJP (JJ damaged)) (, ,) (CC and) (NP (DT the) (NN seller)) (VP (VBD sent) (NP (DT a) (NN replacement)))) (. .))",
    "(S (NP (PRP We)) (VP (VBD used) (NP (PRP it)) (PP (IN for) (NP (NP (DT a) (NN month)) (PP (IN during) (NP (DT the) (NN winter)))))) (. .))",
    "(S (NP (NP (DT The) (NN quality)) (PP (IN of) (NP (DT the) (NN {noun})))) (VP (VBZ is) (ADJP (JJ decent)) (SBAR (IN although) (S (NP (DT the) (NN price)) (VP (VBD went) (PRT (RP up)) (ADVP (RB recently)))))) (. .))",
    "(S (NP (PRP I)) (VP (MD would) (VP (VB buy) (NP (PRP it)) (ADVP (RB again)) (SBAR (IN if) (S (NP (PRP it)) (VP (VBD were) (ADJP (RB slightly) (JJR cheaper))))))) (. .))",
    "(S (NP (PRP$ My) (NN husband)) (VP (VBD thought) (SBAR (IN that) (S (NP (DT the) (NN {noun})) (VP (VBD was) (ADJP (JJ fine)) (PP (IN for) (NP (DT the) (NN price))))))) (. .))",
    "(S (NP (PRP It)) (VP (VBZ does) (RB not) (VP (VB do) (NP (NP (DT everything)) (SBAR (S (NP (DT the) (NN description)) (VP (VBZ promises)))))) (, ,) (CC but) (NP (PRP it)) (VP (VBZ is) (ADJP (JJ good) (RB enough)))) (. .))",
    "(S (PP (IN After) (NP (DT a) (NN week))) (, ,) (NP (PRP I)) (VP (VBD noticed) (NP (DT a) (JJ small) (NN problem)) (PP (IN with) (NP (DT the) (NN {noun})))) (. .))",
    "(S (NP (DT The) (NNS instructions)) (VP (VBD were) (ADJP (JJ clear)) (, ,) (CC and) (NP (PRP I)) (VP (VBD had) (NP (PRP it)) (VP (VBG working) (PP (IN in) (NP (NNS minutes)))))) (. .))",
]

DOMAINS = {
    "Books": ("Paperback", ["book", "novel", "guide", "cookbook", "memoir"]),
    "Health": ("Health and Personal Care", ["vitamin", "lotion", "brush", "serum", "scale"]),
    "Electronics": ("Electronics", ["speaker", "charger", "headset", "cable", "adapter"]),
    "Movies": ("DVD", ["film", "series", "documentary", "boxset", "comedy"]),
    "Other": ("Kitchen", ["kettle", "skillet", "blender", "grater", "teapot"]),
}
BRANDS = ["Acme", "Zenith", "Nova", "Orion", "Vertex"]


def detok(tree):
    text = " ".join(tree.leaves())
    for p in (" .", " ,", " !"):
        text = text.replace(p, p.strip())
    return text


def sentences(templates, start, count, brand, noun):
    raw = [templates[(start + k) % len(templates)].format(brand=brand, noun=noun) for k in range(count)]
    trees = [parse_bracketed(s) for s in raw]
    return raw, " ".join(detok(t) for t in trees)


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    products, tasks, reviews = [], [], []
    root_ids, plain_ids = {}, {}
    for d_i, (domain, (category, nouns)) in enumerate(DOMAINS.items()):
        root_ids[domain], plain_ids[domain] = [], []
        for k, noun in enumerate(nouns):
            pid = f"{domain[:2].lower()}{k + 1}"
            brand = BRANDS[(d_i + k) % len(BRANDS)]
            products.append({"product_id": pid, "title": f"{brand} {noun.title()} {100 + 10 * k}",
                             "description": f"A {noun} from {brand} for daily use.", "category": category})
            (root_ids if k < 2 else plain_ids)[domain].append((pid, brand, noun))

    responders = ["dr1", "dr2", "dr3", "dr4"]
    for domain in DOMAINS:
        for pid, _, _ in root_ids[domain]:
            tasks.append({"product_id": pid, "responders": responders})

    n = 0

    def add(reviewer, product, domain_key, templates, count, rating, verified, day, title):
        nonlocal n
        pid, brand, noun = product
        raw, body = sentences(templates, n, count, brand, noun)
        n += 1
        reviews.append({
            "review_id": f"f{n:03d}", "reviewer_id": reviewer, "product_id": pid,
            "category": DOMAINS[domain_key][0], "rating": rating, "title": title.format(noun=noun),
            "body": body, "sentences": raw, "verified_purchase": verified,
            "posted_at": f"2016-03-{day:02d}",
        })

    # deceptive: 3 per main domain, 1 in Other; dr5 is not a known responder
    liars = ["dr1", "dr2", "dr3", "dr4", "dr5"]
    k = 0
    for domain in DOMAINS:
        for j in range(1 if domain == "Other" else 3):
            add(liars[k % 5], root_ids[domain][j % 2], domain, PROMO, 3, 5, False, 1 + k % 3,
                "Best {noun} ever")
            k += 1

    # authentic: 9 per main domain, 3 in Other
    a = 0
    for domain in DOMAINS:
        for j in range(3 if domain == "Other" else 9):
            add(f"ar{a % 20 + 1:02d}", plain_ids[domain][j % 3], domain, PLAIN, 2 + a % 2,
                [4, 3, 5, 2, 4][a % 5], a % 4 != 0, 1 + a % 28, "Solid {noun} with a few quirks")
            a += 1

    # excluded: flagged reviewers on plain products.  An unflagged reviewer on a
    # root product would be pulled into the deceptive cluster by its task edges.
    add("dr1", plain_ids["Books"][0], "Books", PROMO, 2, 5, False, 2, "Love this {noun}")
    add("dr2", plain_ids["Movies"][1], "Movies", PROMO, 2, 5, False, 3, "Love this {noun}")

    write_jsonl(OUT / "products.jsonl", products)
    write_jsonl(OUT / "tasks.jsonl", tasks)
    write_jsonl(OUT / "reviews.jsonl", reviews)
    config = {
        "seed": 7,
        "out": "fixture-run",
        "paths": {"reviews": "reviews.jsonl", "products": "products.jsonl", "tasks": "tasks.jsonl",
                  "lexicon": "../lexicon.tsv", "phrases": "../ad_phrases.txt"},
        "features": {"families": ["up_rules", "pos", "ad_phrases", "complexity"], "min_df": 2},
        "classifier": {"C": 1.0, "tol": 1e-6, "max_iter": 1000, "threshold": 0.5},
        "sampling": {"ratio": 3},
        "clustering": {"max_iter": 50, "reg": 1.0},
        "protocol": {"k": 3, "augment_with_other": True, "train_domain": "Books",
                     "fractions": [0.0, 0.5, 1.0], "train_reviewers": ["dr1", "dr2"],
                     "test_reviewers": ["dr3", "dr4"]},
    }
    (OUT / "config.json").write_text(json.dumps(config, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(f"wrote {len(reviews)} reviews, {len(products)} products, {len(tasks)} tasks to {OUT}")


if __name__ == "__main__":
    main()
