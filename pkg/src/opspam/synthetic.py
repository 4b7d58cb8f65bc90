"""Synthetic review corpora with planted deceptive-style signals.

Deceptive and authentic reviews differ only through the knobs in
:class:`SyntheticSpec`: advertising-phrase rate, mean sentence length and the
rate of mentioning the product name.  Sentence structure is a function of the
drawn length alone, so equal knobs give identically distributed classes.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field
from importlib import resources
from typing import Optional

import numpy as np

from .corpus import Domain, Label, LabeledCorpus, LabeledReview, Product, Review
from .treebank import Tree, render_bracketed

DOMAIN_CATEGORY = {
    Domain.BOOKS: "Kindle Edition",
    Domain.HEALTH: "Health and Beauty",
    Domain.ELECTRONICS: "Electronics",
    Domain.MOVIES: "DVD",
    Domain.OTHER: "Kitchen",
}
DOMAIN_NOUNS = {
    Domain.BOOKS: ["book", "story", "author", "chapter", "novel", "plot", "recipe", "guide", "page", "series"],
    Domain.HEALTH: ["cream", "vitamin", "skin", "supplement", "lotion", "serum", "capsule", "scent", "brush", "formula"],
    Domain.ELECTRONICS: ["speaker", "battery", "cable", "charger", "screen", "case", "adapter", "headset", "sound", "button"],
    Domain.MOVIES: ["film", "actor", "scene", "season", "episode", "ending", "cast", "director", "soundtrack", "disc"],
    Domain.OTHER: ["pan", "knife", "toy", "tool", "shoe", "bottle", "lamp", "blanket", "mug", "bag"],
}
VERBS = ["liked", "bought", "used", "tried", "enjoyed", "received", "ordered", "found", "gave", "kept"]
ADJS = ["good", "nice", "small", "solid", "cheap", "clear", "sturdy", "light", "bright", "soft", "simple", "decent"]
SUBJ = ["i", "we", "she", "he", "my", "wife", "son", "friend"]
DETS = ["the", "this", "my", "a"]
PREPS = ["with", "for", "after", "on", "in", "from"]
SUBORD = ["because", "when", "although", "since", "while"]
BRANDS = ["acme", "zenith", "nova", "orion", "vertex", "lumen", "apex", "summit"]
ADVS = ["really", "quite", "very", "pretty", "fairly"]


def default_phrases() -> tuple[str, ...]:
    text = resources.files("opspam").joinpath("data/ad_phrases.txt").read_text(encoding="utf-8")
    return tuple(line.strip() for line in text.splitlines() if line.strip() and not line.startswith("#"))


@dataclass
class SyntheticSpec:
    n_deceptive: int = 500
    n_authentic: int = 1500
    ad_rate_deceptive: float = 0.6
    ad_rate_authentic: float = 0.1
    sent_len_deceptive: float = 12.0
    sent_len_authentic: float = 20.0
    sent_len_spread: float = 0.2  # sd as a fraction of the mean
    name_rate_deceptive: float = 0.5
    name_rate_authentic: float = 0.1
    sentences_per_review: tuple[int, int] = (3, 6)
    domain_weights: dict = field(default_factory=lambda: {
        Domain.BOOKS: 0.35, Domain.HEALTH: 0.2, Domain.ELECTRONICS: 0.1,
        Domain.MOVIES: 0.1, Domain.OTHER: 0.25,
    })
    n_deceptive_reviewers: int = 40
    n_authentic_reviewers: int = 400
    products_per_domain: int = 12
    phrases: Optional[tuple[str, ...]] = None


def _leaf(tag: str, word: str) -> Tree:
    return Tree(tag, (Tree.leaf(word),))


class _SentenceMaker:
    def __init__(self, rng: np.random.Generator, nouns: list[str]):
        self.rng = rng
        self.nouns = nouns

    def pick(self, seq):
        return seq[int(self.rng.integers(len(seq)))]

    def np_(self, words: int) -> Tree:
        """Noun phrase with exactly ``words`` words (>= 1)."""
        if words == 1:
            return Tree("NP", (_leaf("PRP", self.pick(["it", "they", "this"])),))
        kids = [_leaf("DT", self.pick(DETS))]
        kids += [_leaf("JJ", self.pick(ADJS)) for _ in range(words - 2)]
        kids.append(_leaf("NN", self.pick(self.nouns)))
        return Tree("NP", tuple(kids))

    def clause(self, words: int, name: Optional[Tree] = None) -> Tree:
        """S with exactly ``words`` words; longer sentences get more embedded structure."""
        words = max(words, 4)
        subj = Tree("NP", (_leaf("PRP", self.pick(SUBJ[:3])),)) if words < 8 else self.np_(2)
        budget = words - len(subj.leaves()) - 1
        obj_len = len(name.leaves()) if name is not None else 2
        budget -= obj_len
        mods: list[Tree] = []
        coords: list[Tree] = []
        while budget >= 4:
            kind = self.pick(["pp", "sbar", "coord"])
            if kind == "pp":
                mods.append(Tree("PP", (_leaf("IN", self.pick(PREPS)), self.np_(3))))
            elif kind == "sbar":
                inner = Tree("S", (Tree("NP", (_leaf("PRP", "it"),)),
                                   Tree("VP", (_leaf("VBD", "was"), Tree("ADJP", (_leaf("JJ", self.pick(ADJS)),))))))
                mods.append(Tree("SBAR", (_leaf("IN", self.pick(SUBORD)), inner)))
            else:
                coords += [_leaf("CC", self.pick(["and", "but"])),
                           Tree("VP", (_leaf("VBD", self.pick(VERBS)), self.np_(2)))]
            budget -= 4
        if name is None:
            obj, pad = self.np_(obj_len + budget), []
        else:
            obj, pad = name, [_leaf("RB", self.pick(ADVS)) for _ in range(budget)]
        vp = Tree("VP", (_leaf("VBD", self.pick(VERBS)), obj, *mods))
        if coords:
            vp = Tree("VP", (vp, *coords))
        advp = (Tree("ADVP", tuple(pad)),) if pad else ()
        return Tree("S", (subj, *advp, vp, _leaf(".", ".")))


def _words(tree: Tree) -> list[str]:
    return tree.leaves()


def _detok(tokens: list[str]) -> str:
    out = " ".join(tokens)
    for p in (" .", " ,", " !"):
        out = out.replace(p, p.strip())
    return out


def _allocate(total: int, domains: list, weights: np.ndarray) -> list:
    """Split ``total`` across domains by largest remainder, so both classes share proportions."""
    quota = weights * total
    counts = np.floor(quota).astype(int)
    for k in np.argsort(-(quota - counts), kind="stable")[: total - counts.sum()]:
        counts[k] += 1
    return [d for d, c in zip(domains, counts) for _ in range(c)]


def generate_synthetic_corpus(spec: Optional[SyntheticSpec] = None, seed: int = 0) -> LabeledCorpus:
    spec = spec or SyntheticSpec()
    rng = np.random.default_rng(seed)
    phrases = spec.phrases if spec.phrases is not None else default_phrases()
    domains = list(spec.domain_weights)
    weights = np.array([spec.domain_weights[d] for d in domains], dtype=float)
    weights /= weights.sum()

    products: dict[str, Product] = {}
    root: dict[Domain, list[str]] = {}
    plain: dict[Domain, list[str]] = {}
    for d in domains:
        root[d], plain[d] = [], []
        for k in range(spec.products_per_domain):
            pid = f"{d.value[:3].lower()}-p{k:03d}"
            brand = BRANDS[int(rng.integers(len(BRANDS)))]
            noun = DOMAIN_NOUNS[d][int(rng.integers(len(DOMAIN_NOUNS[d])))]
            model = f"x{int(rng.integers(100, 999))}"
            title = f"{brand.title()} {noun.title()} {model.upper()}"
            desc = f"The {brand} {noun} {model} for everyday use."
            products[pid] = Product(pid, title, desc, DOMAIN_CATEGORY[d])
            (root if k < spec.products_per_domain // 3 else plain)[d].append(pid)

    items: list[LabeledReview] = []
    base_date = dt.date(2015, 1, 1)
    plan = [(Label.DECEPTIVE, d) for d in _allocate(spec.n_deceptive, domains, weights)]
    plan += [(Label.AUTHENTIC, d) for d in _allocate(spec.n_authentic, domains, weights)]
    plan = [plan[k] for k in rng.permutation(len(plan))]
    for n, (label, d) in enumerate(plan):
        dec = label is Label.DECEPTIVE
        pid = (root if dec else plain)[d][int(rng.integers(len(root[d] if dec else plain[d])))]
        product = products[pid]
        reviewer = (f"dr{int(rng.integers(spec.n_deceptive_reviewers)):03d}" if dec
                    else f"ar{int(rng.integers(spec.n_authentic_reviewers)):04d}")
        maker = _SentenceMaker(rng, DOMAIN_NOUNS[d])
        mean = spec.sent_len_deceptive if dec else spec.sent_len_authentic
        lo, hi = spec.sentences_per_review
        n_sent = int(rng.integers(lo, hi + 1))
        mention = rng.random() < (spec.name_rate_deceptive if dec else spec.name_rate_authentic)
        trees = []
        for k in range(n_sent):
            length = max(4, int(round(rng.normal(mean, spec.sent_len_spread * mean))))
            name = None
            if mention and k == 0:
                brand, noun, model = product.title.lower().split()
                name = Tree("NP", (_leaf("NNP", brand), _leaf("NN", noun), _leaf("NN", model)))
            trees.append(maker.clause(length, name))
        if rng.random() < (spec.ad_rate_deceptive if dec else spec.ad_rate_authentic):
            phrase = phrases[int(rng.integers(len(phrases)))].split()
            frag = Tree("FRAG", (Tree("ADJP", tuple(_leaf("JJ", w) for w in phrase)), _leaf(".", "!")))
            trees.insert(int(rng.integers(len(trees) + 1)), frag)
        body = " ".join(_detok(_words(t)) for t in trees)
        title_words = ([product.title.split()[1].lower()] if mention else []) + [maker.pick(ADJS), maker.pick(DOMAIN_NOUNS[d])]
        review = Review(
            review_id=f"s{n:05d}",
            reviewer_id=reviewer,
            product_id=pid,
            category=product.category,
            rating=5 if dec or rng.random() < 0.4 else int(rng.integers(1, 5)),
            title=" ".join(title_words).capitalize(),
            body=body[0].upper() + body[1:],
            sentences=tuple(render_bracketed(t) for t in trees),
            verified_purchase=(not dec) and rng.random() < 0.8,
            posted_at=base_date + dt.timedelta(days=int(rng.integers(0, 365))),
        )
        items.append(LabeledReview(review, label, d))
    return LabeledCorpus(items, products)
