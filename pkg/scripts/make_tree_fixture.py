"""Write tests/data/trees200.txt: 200 distinct bracketed trees, blank-line separated.

Hand-written edge cases come first, then the bundled fixture sentences, then
synthetic-generator trees.  Every other tree is pretty-printed over several
lines so the reader's whitespace handling is exercised.
"""

import json
import pathlib

from opspam.synthetic import SyntheticSpec, generate_synthetic_corpus
from opspam.treebank import parse_bracketed, render_bracketed

ROOT = pathlib.Path(__file__).resolve().parents[1]

EDGE = [
    "(UH wow)",
    "(NN dog)",
    "(S (NP (DT the) (NN dog)) (VP (VBZ barks)))",
    "(S (NP (PRP I)) (VP (VBD ate) (NP (NN pizza) (-LRB- -LRB-) (NN cheese) (-RRB- -RRB-))) (. .))",
    "(S (`` ``) (NP (PRP I)) (VP (VBP agree)) ('' '') (. .))",
    "(NP (NP (DT a) (NN price)) (PP (IN of) (NP ($ $) (CD 20))))",
    "(X (X (X (X (Y deep)))))",
    "(FRAG (INTJ (UH oh)) (, ,) (ADJP (JJ well)) (. ...))",
    "(S (NP (NNP O'Brien)) (VP (VBD re-read) (NP (PRP$ his) (NN e-mail))) (. .))",
    "(NP (-LCB- -LCB-) (NN note) (-RCB- -RCB-))",
    "(SQ (VBZ Is) (NP (PRP it)) (VP (VBG working)) (. ?))",
    "(S (NP (NN café)) (VP (VBZ is) (ADJP (JJ naïve))) (. .))",
    "(NP (CD 3.5) (NN %) (NN rate))",
    "(PP (IN because) (PP (IN of) (NP (PRP it))))",
    "(S (NP (PRP It)) (VP (VBZ costs) (NP (# #) (CD 5))) (: ;) (S (NP (PRP ok)) (VP (VBZ fine))))",
]


def pretty(tree, indent=0):
    if tree.children and not tree.is_preterminal:
        inner = "\n".join(pretty(c, indent + 2) for c in tree.children)
        return " " * indent + f"({tree.label}\n{inner})"
    return " " * indent + render_bracketed(tree)


def main():
    seen, out = set(), []

    def take(text):
        canon = render_bracketed(parse_bracketed(text))
        if canon not in seen and len(out) < 200:
            seen.add(canon)
            out.append(canon)

    for t in EDGE:
        take(t)
    fixture = ROOT / "src" / "opspam" / "data" / "fixture" / "reviews.jsonl"
    for line in fixture.read_text(encoding="utf-8").splitlines():
        for s in json.loads(line)["sentences"]:
            take(s)
    corpus = generate_synthetic_corpus(SyntheticSpec(n_deceptive=60, n_authentic=60), seed=11)
    for item in corpus:
        for s in item.review.sentences:
            take(s)
    assert len(out) == 200, len(out)
    blocks = [pretty(parse_bracketed(t)) if k % 2 else t for k, t in enumerate(out)]
    (ROOT / "tests" / "data" / "trees200.txt").write_text("\n\n".join(blocks) + "\n", encoding="utf-8")


if __name__ == "__main__":
    main()
