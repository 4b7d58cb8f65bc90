"""Feature families and the feature space that lays them out as one sparse vector."""

from __future__ import annotations

import hashlib
import re
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np
import scipy.sparse as sp

from .corpus import LabeledReview, Product, Review
from .treebank import Tree, parse_cached, pos_tags, production_rules
from .treequery import ComplexityVector, complexity_profile

FAMILIES = (
    "unigram",
    "pos",
    "lexicon",
    "ap_rules",
    "up_rules",
    "ad_phrases",
    "title_overlap",
    "complexity",
)
LEARNED_FAMILIES = ("unigram", "ap_rules", "up_rules")
MANIFEST_VERSION = "opspam-feature-space 1"

PTB_TAGS = (
    "#", "$", "''", ",", "-LRB-", "-RRB-", ".", ":", "CC", "CD", "DT", "EX", "FW",
    "IN", "JJ", "JJR", "JJS", "LS", "MD", "NN", "NNP", "NNPS", "NNS", "PDT", "POS",
    "PRP", "PRP$", "RB", "RBR", "RBS", "RP", "SYM", "TO", "UH", "VB", "VBD", "VBG",
    "VBN", "VBP", "VBZ", "WDT", "WP", "WP$", "WRB", "``",
)
OVERLAP_DIMS = ("unigram_overlap", "bigram_overlap")
COMPLEXITY_DIMS = tuple(name for name, _, _ in ComplexityVector.RATIOS)

_WORD_RE = re.compile(r"[^\W_]+(?:['\-][^\W_]+)*")


class FeatureError(ValueError):
    pass


def tokenize(text: str) -> list[str]:
    text = text.replace("’", "'").replace("‐", "-").replace("‑", "-")
    return [m.group().lower() for m in _WORD_RE.finditer(text)]


@dataclass(frozen=True)
class CategoryLexicon:
    """Word categories; an entry ending in "*" matches by prefix."""

    categories: tuple[str, ...]
    entries: tuple[tuple[str, ...], ...]  # parallel to categories

    def __post_init__(self):
        if len(set(self.categories)) != len(self.categories):
            raise FeatureError("duplicate lexicon category")
        exact: dict[str, set] = {}
        prefix: dict[str, set] = {}
        for k, words in enumerate(self.entries):
            for w in words:
                if w.endswith("*"):
                    prefix.setdefault(w[:-1], set()).add(k)
                else:
                    exact.setdefault(w, set()).add(k)
        object.__setattr__(self, "_exact", exact)
        object.__setattr__(self, "_prefix", prefix)

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[str, str]]) -> "CategoryLexicon":
        cats: dict[str, list[str]] = {}
        for cat, word in pairs:
            cats.setdefault(cat, [])
            if word.lower() not in cats[cat]:
                cats[cat].append(word.lower())
        return cls(tuple(cats), tuple(tuple(v) for v in cats.values()))

    def categories_of(self, token: str) -> set[int]:
        hit = set(self._exact.get(token, ()))
        for n in range(len(token) + 1):
            hit.update(self._prefix.get(token[:n], ()))
        return hit

    def pairs(self) -> list[tuple[str, str]]:
        return [(c, w) for c, words in zip(self.categories, self.entries) for w in words]


def load_lexicon(path) -> CategoryLexicon:
    pairs = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2 or not parts[0].strip() or not parts[1].strip():
            raise FeatureError(f"{path}: line {lineno}: expected 'category<TAB>entry'")
        pairs.append((parts[0].strip(), parts[1].strip()))
    return CategoryLexicon.from_pairs(pairs)


def load_phrases(path) -> tuple[str, ...]:
    out: list[str] = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        phrase = " ".join(tokenize(line))
        if phrase and not line.startswith("#") and phrase not in out:
            out.append(phrase)
    return tuple(out)


@dataclass(frozen=True)
class ReviewAnalysis:
    segments: tuple[tuple[str, ...], ...]  # tokenized title, body
    tags: tuple[str, ...]
    ap: Counter
    up: Counter
    complexity: ComplexityVector

    @property
    def tokens(self) -> list[str]:
        return [t for seg in self.segments for t in seg]


@lru_cache(maxsize=200_000)
def analyze(review: Review) -> ReviewAnalysis:
    trees = [parse_cached(s) for s in review.sentences]
    ap: Counter = Counter()
    up: Counter = Counter()
    tags: list[str] = []
    for t in trees:
        ap.update(production_rules(t, lexicalized=True))
        up.update(production_rules(t, lexicalized=False))
        tags.extend(pos_tags(t))
    segs = tuple(tuple(tokenize(x)) for x in (review.title, review.body))
    return ReviewAnalysis(segs, tuple(tags), ap, up, complexity_profile(trees))


def _items(review: Review, family: str) -> Iterable[str]:
    a = analyze(review)
    if family == "unigram":
        return a.tokens
    if family == "ap_rules":
        return (str(r) for r in a.ap.elements())
    if family == "up_rules":
        return (str(r) for r in a.up.elements())
    raise FeatureError(f"family {family!r} has no learned vocabulary")


def _review(x) -> Review:
    return x.review if isinstance(x, LabeledReview) else x


def build_vocab(corpus: Iterable, family: str, min_df: int = 2) -> list[str]:
    """Items seen in at least ``min_df`` training documents, sorted."""
    df: Counter = Counter()
    for doc in corpus:
        df.update(set(_items(_review(doc), family)))
    vocab = sorted(item for item, n in df.items() if n >= min_df)
    if not vocab:
        raise FeatureError(f"empty {family} vocabulary (min_df={min_df})")
    return vocab


def unigram_features(review: Review, vocab) -> dict[str, float]:
    toks = analyze(review).tokens
    vocab = set(vocab)
    counts = Counter(t for t in toks if t in vocab)
    return {k: n / len(toks) for k, n in counts.items()}


def pos_features(trees: Sequence[Tree]) -> dict[str, float]:
    tags = [tag for t in trees for tag in pos_tags(t)]
    known = set(PTB_TAGS)
    counts = Counter(tag for tag in tags if tag in known)
    return {k: n / len(tags) for k, n in counts.items()}


def lexicon_features(review: Review, lexicon: CategoryLexicon) -> dict[str, float]:
    toks = analyze(review).tokens
    counts: Counter = Counter()
    for tok in toks:
        for k in lexicon.categories_of(tok):
            counts[lexicon.categories[k]] += 1
    return {k: n / len(toks) for k, n in counts.items()}


def production_features(trees: Sequence[Tree], mode: str, vocab) -> dict[str, float]:
    if mode not in ("AP", "UP"):
        raise FeatureError("mode must be AP or UP")
    rules: Counter = Counter()
    for t in trees:
        rules.update(production_rules(t, lexicalized=mode == "AP"))
    total = sum(rules.values())
    vocab = set(vocab)
    return {str(r): n / total for r, n in rules.items() if str(r) in vocab}


def ad_phrase_features(review: Review, phrases: Sequence[str]) -> dict[str, float]:
    segs = analyze(review).segments
    lengths = {p.count(" ") + 1 for p in phrases}
    present = {" ".join(seg[i:i + n]) for n in lengths for seg in segs for i in range(len(seg) - n + 1)}
    return {p: 1.0 for p in phrases if p in present}


def _ngram_types(segments, n: int) -> set:
    return {tuple(seg[i:i + n]) for seg in segments for i in range(len(seg) - n + 1)}


def title_overlap_features(review: Review, product: Optional[Product]) -> dict[str, float]:
    if product is None:
        return {}
    rsegs = analyze(review).segments
    psegs = [tokenize(product.title), tokenize(product.description)]
    uni = len(_ngram_types(rsegs, 1) & _ngram_types(psegs, 1))
    bi = len(_ngram_types(rsegs, 2) & _ngram_types(psegs, 2))
    return {k: float(v) for k, v in zip(OVERLAP_DIMS, (uni, bi)) if v}


@dataclass
class FeatureVector:
    indices: np.ndarray
    values: np.ndarray
    label: Optional[int] = None

    def to_dense(self, dim: int) -> np.ndarray:
        out = np.zeros(dim)
        out[self.indices] = self.values
        return out


def to_matrix(vectors: Sequence[FeatureVector], dim: int) -> sp.csr_matrix:
    indptr = np.zeros(len(vectors) + 1, dtype=np.int64)
    indptr[1:] = np.cumsum([len(v.indices) for v in vectors])
    idx = np.concatenate([v.indices for v in vectors]) if vectors else np.zeros(0, int)
    val = np.concatenate([v.values for v in vectors]) if vectors else np.zeros(0)
    return sp.csr_matrix((val, idx, indptr), shape=(len(vectors), dim))


@dataclass
class FeatureConfig:
    families: tuple[str, ...]
    min_df: int = 2

    def __post_init__(self):
        unknown = [f for f in self.families if f not in FAMILIES]
        if unknown:
            raise FeatureError(f"unknown feature family: {', '.join(unknown)}")
        if not self.families:
            raise FeatureError("no feature families enabled")
        # canonical order, duplicates dropped
        self.families = tuple(f for f in FAMILIES if f in self.families)


@dataclass
class FeatureSpace:
    config: FeatureConfig
    vocabs: dict[str, tuple[str, ...]]
    lexicon: Optional[CategoryLexicon] = None
    names: list[str] = field(init=False)

    def __post_init__(self):
        self.names = []
        self.offsets = {}
        for fam in self.config.families:
            if fam not in self.vocabs:
                raise FeatureError(f"family {fam} enabled but its vocabulary is missing")
            self.offsets[fam] = len(self.names)
            self.names.extend(f"{fam}:{item}" for item in self.vocabs[fam])
        self.index = {name: k for k, name in enumerate(self.names)}
        if len(self.index) != len(self.names):
            raise FeatureError("duplicate dimension names")
        self._family_index = {fam: {item: self.offsets[fam] + k for k, item in enumerate(self.vocabs[fam])}
                              for fam in self.config.families}

    @property
    def dim(self) -> int:
        return len(self.names)

    @classmethod
    def fit(cls, training: Iterable, config: FeatureConfig,
            lexicon: Optional[CategoryLexicon] = None, phrases: Optional[Sequence[str]] = None) -> "FeatureSpace":
        """Build vocabularies from training documents only."""
        docs = [_review(d) for d in training]
        vocabs: dict[str, tuple[str, ...]] = {}
        for fam in config.families:
            if fam in LEARNED_FAMILIES:
                vocabs[fam] = tuple(build_vocab(docs, fam, config.min_df))
            elif fam == "pos":
                vocabs[fam] = PTB_TAGS
            elif fam == "lexicon":
                if lexicon is None:
                    raise FeatureError("lexicon family enabled but no lexicon given")
                vocabs[fam] = lexicon.categories
            elif fam == "ad_phrases":
                if not phrases:
                    raise FeatureError("ad_phrases family enabled but no phrase list given")
                vocabs[fam] = tuple(phrases)
            elif fam == "title_overlap":
                vocabs[fam] = OVERLAP_DIMS
            elif fam == "complexity":
                vocabs[fam] = COMPLEXITY_DIMS
        return cls(config, vocabs, lexicon if "lexicon" in config.families else None)

    def _block(self, fam: str, review: Review, product: Optional[Product]) -> dict[str, float]:
        a = analyze(review)
        if fam == "unigram":
            toks = a.tokens
            return {t: n / len(toks) for t, n in Counter(toks).items() if t in self._family_index[fam]}
        if fam == "pos":
            tags = Counter(a.tags)
            return {t: n / len(a.tags) for t, n in tags.items() if t in self._family_index[fam]}
        if fam == "lexicon":
            return lexicon_features(review, self.lexicon)
        if fam in ("ap_rules", "up_rules"):
            rules = a.ap if fam == "ap_rules" else a.up
            total = sum(rules.values())
            fidx = self._family_index[fam]
            return {str(r): n / total for r, n in rules.items() if str(r) in fidx}
        if fam == "ad_phrases":
            return ad_phrase_features(review, self.vocabs[fam])
        if fam == "title_overlap":
            return title_overlap_features(review, product)
        if fam == "complexity":
            return {k: v for k, v in a.complexity.ratios().items() if v}
        raise FeatureError(fam)

    def assemble(self, review, product: Optional[Product] = None, label: Optional[int] = None) -> FeatureVector:
        if isinstance(review, LabeledReview):
            label = review.y if label is None else label
            review = review.review
        pairs: dict[int, float] = {}
        for fam in self.config.families:
            fidx = self._family_index[fam]
            for item, v in self._block(fam, review, product).items():
                if v:
                    pairs[fidx[item]] = float(v)
        idx = np.array(sorted(pairs), dtype=np.int64)
        vals = np.array([pairs[i] for i in idx], dtype=float)
        return FeatureVector(idx, vals, label)

    def transform(self, items: Sequence, products: Optional[dict] = None) -> tuple[sp.csr_matrix, np.ndarray]:
        products = products or {}
        vecs = [self.assemble(it, products.get(_review(it).product_id)) for it in items]
        y = np.array([v.label if v.label is not None else -1 for v in vecs], dtype=int)
        return to_matrix(vecs, self.dim), y

    # -- persistence -------------------------------------------------------

    def _body(self) -> list[str]:
        lines = [f"min_df {self.config.min_df}", "families " + ",".join(self.config.families)]
        for fam in self.config.families:
            lines.append(f"[{fam}] {len(self.vocabs[fam])}")
            lines.extend(self.vocabs[fam])
        if self.lexicon is not None:
            pairs = self.lexicon.pairs()
            lines.append(f"[lexicon-entries] {len(pairs)}")
            lines.extend(f"{c}\t{w}" for c, w in pairs)
        return lines

    def hash(self) -> str:
        return hashlib.sha256("\n".join(self._body()).encode("utf-8")).hexdigest()

    def to_text(self) -> str:
        return "\n".join([MANIFEST_VERSION, f"hash {self.hash()}"] + self._body()) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "FeatureSpace":
        lines = text.split("\n")
        if lines and lines[-1] == "":
            lines.pop()
        if not lines or lines[0] != MANIFEST_VERSION:
            raise FeatureError("not a feature-space manifest (bad version line)")
        stored_hash = lines[1].split(" ", 1)[1]
        min_df = int(lines[2].split(" ", 1)[1])
        families = tuple(lines[3].split(" ", 1)[1].split(","))
        pos = 4
        vocabs: dict[str, tuple[str, ...]] = {}
        lexicon = None
        while pos < len(lines):
            m = re.fullmatch(r"\[(.+)\] (\d+)", lines[pos])
            if not m:
                raise FeatureError(f"manifest line {pos + 1}: expected section header")
            name, count = m.group(1), int(m.group(2))
            body = lines[pos + 1: pos + 1 + count]
            if name == "lexicon-entries":
                lexicon = CategoryLexicon.from_pairs(tuple(x.split("\t", 1)) for x in body)
            else:
                vocabs[name] = tuple(body)
            pos += 1 + count
        space = cls(FeatureConfig(families, min_df), vocabs, lexicon)
        if space.hash() != stored_hash:
            raise FeatureError("feature-space manifest hash mismatch")
        return space
