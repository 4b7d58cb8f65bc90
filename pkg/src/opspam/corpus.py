"""Review snapshots: loading, broad-domain mapping, ground-truth sieve, 1:N sampling."""

from __future__ import annotations

import csv
import datetime as dt
import io
import json
import logging
from collections import Counter
from dataclasses import asdict, dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

log = logging.getLogger(__name__)


class Domain(str, Enum):
    BOOKS = "Books"
    HEALTH = "Health"
    ELECTRONICS = "Electronics"
    MOVIES = "Movies"
    OTHER = "Other"


FOUR_DOMAINS = (Domain.BOOKS, Domain.HEALTH, Domain.ELECTRONICS, Domain.MOVIES)


class Label(str, Enum):
    DECEPTIVE = "deceptive"
    AUTHENTIC = "authentic"
    EXCLUDED = "excluded"


_CATEGORY_DOMAINS = {
    "hardcover": Domain.BOOKS,
    "paperback": Domain.BOOKS,
    "kindle edition": Domain.BOOKS,
    "health and beauty": Domain.HEALTH,
    "health and personal care": Domain.HEALTH,
    "electronics": Domain.ELECTRONICS,
    "personal computers": Domain.ELECTRONICS,
    "cell phones": Domain.ELECTRONICS,
    "movies and tv": Domain.MOVIES,
    "dvd": Domain.MOVIES,
}


class CorpusFormatError(ValueError):
    pass


class InsufficientDataError(ValueError):
    pass


@dataclass(frozen=True)
class Review:
    review_id: str
    reviewer_id: str
    product_id: str
    category: str
    rating: int
    title: str
    body: str
    sentences: tuple[str, ...] = ()
    verified_purchase: bool = False
    posted_at: Optional[dt.date] = None

    def to_record(self) -> dict:
        rec = asdict(self)
        rec["sentences"] = list(self.sentences)
        rec["posted_at"] = self.posted_at.isoformat() if self.posted_at else None
        return rec


@dataclass(frozen=True)
class Product:
    product_id: str
    title: str = ""
    description: str = ""
    category: str = ""

    def to_record(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class TaskSet:
    """Products named in crowdsourced review-request tasks.

    ``responders`` holds reviewers seen answering those tasks; they seed the
    reviewer-graph clustering with a fixed deceptive label.
    """

    root_products: frozenset
    responders: frozenset = frozenset()


@dataclass(frozen=True)
class LabeledReview:
    review: Review
    label: Label
    domain: Domain

    @property
    def review_id(self) -> str:
        return self.review.review_id

    @property
    def y(self) -> int:
        return 1 if self.label is Label.DECEPTIVE else 0


@dataclass
class LabeledCorpus:
    items: list[LabeledReview]
    products: dict[str, Product] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self):
        return iter(self.items)

    def with_label(self, label: Label) -> list[LabeledReview]:
        return [it for it in self.items if it.label is label]

    def in_domain(self, domain: Domain) -> "LabeledCorpus":
        return LabeledCorpus([it for it in self.items if it.domain is domain], self.products)

    def subset(self, items: Iterable[LabeledReview]) -> "LabeledCorpus":
        return LabeledCorpus(list(items), self.products)

    def label_counts(self) -> Counter:
        return Counter(it.label for it in self.items)


def assign_broad_domain(category: str) -> Domain:
    return _CATEGORY_DOMAINS.get(" ".join(category.split()).lower(), Domain.OTHER)


def _parse_review(rec: dict) -> Review:
    required = ("review_id", "reviewer_id", "product_id", "category", "rating", "title", "body")
    missing = [k for k in required if k not in rec]
    if missing:
        raise ValueError(f"missing field(s) {', '.join(missing)}")
    rating = rec["rating"]
    if isinstance(rating, bool) or not isinstance(rating, int) or not 1 <= rating <= 5:
        raise ValueError(f"rating {rating!r} outside 1..5")
    sentences = rec.get("sentences") or []
    if not isinstance(sentences, list) or not all(isinstance(s, str) for s in sentences):
        raise ValueError("sentences must be a list of strings")
    posted = rec.get("posted_at")
    return Review(
        review_id=str(rec["review_id"]),
        reviewer_id=str(rec["reviewer_id"]),
        product_id=str(rec["product_id"]),
        category=str(rec["category"]),
        rating=rating,
        title=str(rec["title"]),
        body=str(rec["body"]),
        sentences=tuple(sentences),
        verified_purchase=bool(rec.get("verified_purchase", False)),
        posted_at=dt.date.fromisoformat(posted) if posted else None,
    )


def _iter_jsonl(path):
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"{path}: line {lineno}: malformed JSON ({exc.msg})") from None
            if not isinstance(rec, dict):
                raise CorpusFormatError(f"{path}: line {lineno}: expected an object")
            yield lineno, rec


def load_products(path) -> dict[str, Product]:
    products: dict[str, Product] = {}
    for lineno, rec in _iter_jsonl(path):
        if "product_id" not in rec:
            raise CorpusFormatError(f"{path}: line {lineno}: missing field product_id")
        p = Product(str(rec["product_id"]), str(rec.get("title", "")),
                    str(rec.get("description", "")), str(rec.get("category", "")))
        if p.product_id in products:
            raise CorpusFormatError(f"{path}: line {lineno}: duplicate id {p.product_id}")
        products[p.product_id] = p
    return products


def load_tasks(path) -> TaskSet:
    roots, responders = set(), set()
    for lineno, rec in _iter_jsonl(path):
        if "product_id" not in rec:
            raise CorpusFormatError(f"{path}: line {lineno}: missing field product_id")
        roots.add(str(rec["product_id"]))
        responders.update(str(r) for r in rec.get("responders", []))
    if not roots:
        raise CorpusFormatError(f"{path}: task file has no root products")
    return TaskSet(frozenset(roots), frozenset(responders))


def load_reviews(path, products_path=None) -> tuple[list[Review], dict[str, Product], set[str]]:
    """Read a line-delimited review snapshot (plus optional product file).

    Returns reviews in file order, products keyed by id, and the reviewer ids.
    """
    reviews: list[Review] = []
    seen: set[str] = set()
    for lineno, rec in _iter_jsonl(path):
        try:
            review = _parse_review(rec)
        except (ValueError, TypeError) as exc:
            raise CorpusFormatError(f"{path}: line {lineno}: {exc}") from None
        if review.review_id in seen:
            raise CorpusFormatError(f"{path}: line {lineno}: duplicate id {review.review_id}")
        seen.add(review.review_id)
        reviews.append(review)
    products = load_products(products_path) if products_path else {}
    return reviews, products, {r.reviewer_id for r in reviews}


def write_jsonl(path, records: Iterable[dict]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(json.dumps(rec, ensure_ascii=False, sort_keys=True) + "\n")


def sieve_labels(reviews: Iterable[Review], deceptive_reviewers, tasks: TaskSet,
                 products: Optional[dict] = None, flagged_products=None) -> LabeledCorpus:
    """Assign ground-truth labels.

    deceptive: reviewer flagged and product in a root task.
    authentic: neither reviewer nor product flagged.
    Anything else is kept as excluded.  ``flagged_products`` defaults to the
    root-task products.
    """
    flagged_r = set(deceptive_reviewers)
    flagged_p = set(tasks.root_products) if flagged_products is None else set(flagged_products)
    items = []
    for r in reviews:
        if r.reviewer_id in flagged_r and r.product_id in tasks.root_products:
            label = Label.DECEPTIVE
        elif r.reviewer_id not in flagged_r and r.product_id not in flagged_p:
            label = Label.AUTHENTIC
        else:
            label = Label.EXCLUDED
        items.append(LabeledReview(r, label, assign_broad_domain(r.category)))
    corpus = LabeledCorpus(items, dict(products or {}))
    counts = corpus.label_counts()
    log.info("sieve: %d deceptive, %d authentic, %d excluded",
             counts[Label.DECEPTIVE], counts[Label.AUTHENTIC], counts[Label.EXCLUDED])
    return corpus


def labeled_record(item: LabeledReview) -> dict:
    rec = item.review.to_record()
    rec["label"] = item.label.value
    rec["domain"] = item.domain.value
    return rec


def load_labeled(path, products_path=None) -> LabeledCorpus:
    items = []
    for lineno, rec in _iter_jsonl(path):
        try:
            review = _parse_review(rec)
            item = LabeledReview(review, Label(rec["label"]), Domain(rec["domain"]))
        except (ValueError, KeyError, TypeError) as exc:
            raise CorpusFormatError(f"{path}: line {lineno}: {exc}") from None
        items.append(item)
    return LabeledCorpus(items, load_products(products_path) if products_path else {})


def sample_truthful(corpus: LabeledCorpus, ratio: int = 3, seed: int = 0) -> LabeledCorpus:
    """All deceptive reviews plus ``ratio`` times as many authentic ones.

    Sampling is uniform without replacement over authentic reviews sorted by
    id, so the draw only depends on the seed and the id set.
    """
    if not isinstance(ratio, int) or ratio < 1:
        raise ValueError("ratio must be a positive integer")
    deceptive = corpus.with_label(Label.DECEPTIVE)
    authentic = sorted(corpus.with_label(Label.AUTHENTIC), key=lambda it: it.review_id)
    need = ratio * len(deceptive)
    if len(authentic) < need:
        raise InsufficientDataError(
            f"need {need} authentic reviews, have {len(authentic)} (shortfall {need - len(authentic)})"
        )
    rng = np.random.default_rng(seed)
    picked = np.sort(rng.choice(len(authentic), size=need, replace=False)) if need else []
    return corpus.subset(deceptive + [authentic[i] for i in picked])


@dataclass
class StatsReport:
    by_label: dict  # label -> {"reviews","reviewers","products"}
    by_domain: dict  # domain -> {label: review count}

    def rows(self) -> list[list]:
        labels = [lab.value for lab in Label]
        rows = [["section", "key"] + labels]
        for what in ("reviews", "reviewers", "products"):
            rows.append(["label", what] + [self.by_label[lab][what] for lab in labels])
        for dom in Domain:
            rows.append(["domain", dom.value] + [self.by_domain[dom.value][lab] for lab in labels])
        return rows

    def to_csv(self) -> str:
        buf = io.StringIO()
        csv.writer(buf, lineterminator="\n").writerows(self.rows())
        return buf.getvalue()

    def to_text(self) -> str:
        rows = [[str(c) for c in r] for r in self.rows()]
        widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
        lines = []
        for k, r in enumerate(rows):
            lines.append("  ".join(c.ljust(w) if i < 2 else c.rjust(w) for i, (c, w) in enumerate(zip(r, widths))).rstrip())
            if k == 0:
                lines.append("  ".join("-" * w for w in widths))
        return "\n".join(lines) + "\n"


def corpus_stats(corpus: LabeledCorpus) -> StatsReport:
    by_label = {}
    for lab in Label:
        items = corpus.with_label(lab)
        by_label[lab.value] = {
            "reviews": len(items),
            "reviewers": len({it.review.reviewer_id for it in items}),
            "products": len({it.review.product_id for it in items}),
        }
    by_domain = {d.value: {lab.value: 0 for lab in Label} for d in Domain}
    for it in corpus:
        by_domain[it.domain.value][it.label.value] += 1
    return StatsReport(by_label, by_domain)
