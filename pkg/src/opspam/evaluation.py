"""Experimental protocols and deceptive-class metrics.

All protocols keep a 1:ratio deceptive:authentic mix per sampled scope, fit
vocabularies and models on training data only, and are deterministic for a
fixed seed.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .classifier import MaxentModel, train
from .corpus import (
    FOUR_DOMAINS,
    Domain,
    InsufficientDataError,
    Label,
    LabeledCorpus,
    LabeledReview,
    sample_truthful,
)
from .features import CategoryLexicon, FeatureConfig, FeatureSpace
from .synthetic import SyntheticSpec, generate_synthetic_corpus  # noqa: F401  (re-export)

Triple = tuple[float, float, float]  # recall, precision, f1


class LeakageError(AssertionError):
    pass


def prf(predictions: Sequence[int], gold: Sequence[int]) -> Triple:
    """Recall, precision and F1 of the deceptive class (label 1)."""
    pred = np.asarray(predictions, dtype=int)
    gold = np.asarray(gold, dtype=int)
    if pred.shape != gold.shape:
        raise ValueError("predictions and gold differ in length")
    n_gold = int(gold.sum())
    if n_gold == 0:
        raise ValueError("no gold deceptive examples")
    tp = int(((pred == 1) & (gold == 1)).sum())
    n_pred = int(pred.sum())
    r = tp / n_gold
    p = tp / n_pred if n_pred else 0.0
    f = 2 * p * r / (p + r) if p + r else 0.0
    return r, p, f


def macro_average(triples: Iterable[Triple]) -> Triple:
    arr = np.array(list(triples), dtype=float).reshape(-1, 3)
    if not len(arr):
        raise ValueError("nothing to average")
    return tuple(float(v) for v in arr.mean(axis=0))


def scope_seed(seed: int, *scope) -> int:
    """Stable 63-bit seed for a named sampling scope."""
    key = json.dumps([int(seed), *[str(s) for s in scope]]).encode()
    return int.from_bytes(hashlib.sha256(key).digest()[:8], "big") >> 1


def _canonical(items: Iterable[LabeledReview]) -> list[LabeledReview]:
    return sorted(items, key=lambda it: it.review_id)


@dataclass
class Pipeline:
    """Feature configuration plus classifier settings for one experiment."""

    features: FeatureConfig
    lexicon: Optional[CategoryLexicon] = None
    phrases: tuple[str, ...] = ()
    C: float = 1.0
    tol: float = 1e-6
    max_iter: int = 1000
    ratio: int = 3
    threshold: float = 0.5

    @property
    def name(self) -> str:
        return " + ".join(self.features.families)

    def fit(self, items: Sequence[LabeledReview], products: dict) -> tuple[FeatureSpace, MaxentModel]:
        items = _canonical(items)
        space = FeatureSpace.fit(items, self.features, self.lexicon, self.phrases)
        X, y = space.transform(items, products)
        model = train(X, y, C=self.C, tol=self.tol, max_iter=self.max_iter)
        model.space_hash = space.hash()
        return space, model

    def score(self, space: FeatureSpace, model: MaxentModel, items: Sequence[LabeledReview],
              products: dict) -> Triple:
        before = space.hash()
        items = _canonical(items)
        X, y = space.transform(items, products)
        triple = prf(model.predict(X, self.threshold), y)
        if space.hash() != before or model.space_hash != before:
            raise LeakageError("feature space changed while scoring test data")
        return triple

    def describe(self) -> dict:
        return {
            "families": list(self.features.families),
            "min_df": self.features.min_df,
            "C": self.C,
            "tol": self.tol,
            "max_iter": self.max_iter,
            "ratio": self.ratio,
            "threshold": self.threshold,
            "n_phrases": len(self.phrases),
            "lexicon_categories": len(self.lexicon.categories) if self.lexicon else 0,
        }


@dataclass
class EvalReport:
    protocol: str
    config: dict
    per_domain: dict[str, Triple] = field(default_factory=dict)
    macro: Optional[Triple] = None
    runs: dict[str, dict[str, Triple]] = field(default_factory=dict)
    run_macros: dict[str, Triple] = field(default_factory=dict)
    meta_macro: Optional[Triple] = None
    curve: list[tuple[int, float]] = field(default_factory=list)

    # -- rendering ---------------------------------------------------------

    @staticmethod
    def fmt(t: Optional[Triple]) -> str:
        return "-" if t is None else "/".join(f"{100 * v:.1f}" for v in t)

    def _table(self, header: list[str], rows: list[list[str]]) -> list[str]:
        widths = [max(len(r[i]) for r in [header] + rows) for i in range(len(header))]
        out = ["  ".join(h.ljust(w) for h, w in zip(header, widths)).rstrip(),
               "  ".join("-" * w for w in widths)]
        out += ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in rows]
        return out

    def to_text(self) -> str:
        lines = [f"protocol: {self.protocol}", f"features: {' + '.join(self.config.get('families', []))}",
                 "values: recall/precision/F1 (%) for the deceptive class", ""]
        if self.runs:
            names = list(self.run_macros)
            lines += self._table(["Features"] + names + ["Macro Average"],
                                 [[self.config.get("label", "run")] + [self.fmt(self.run_macros[n]) for n in names]
                                  + [self.fmt(self.meta_macro)]])
            lines.append("")
            for run, per in self.runs.items():
                tests = list(per)
                lines.append(f"train: {run}")
                lines += self._table(tests + ["Macro"], [[self.fmt(per[t]) for t in tests]
                                                        + [self.fmt(self.run_macros[run])]])
                lines.append("")
        if self.per_domain:
            names = list(self.per_domain)
            lines += self._table(["Features"] + names + ["Macro Average"],
                                 [[self.config.get("label", "run")] + [self.fmt(self.per_domain[n]) for n in names]
                                  + [self.fmt(self.macro)]])
            lines.append("")
        if self.curve:
            lines += self._table(["added_deceptive", "f1"], [[str(a), f"{100 * f:.1f}"] for a, f in self.curve])
            lines.append("")
        return "\n".join(lines)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["protocol", "train", "test", "recall", "precision", "f1"])
        for run, per in self.runs.items():
            for test, t in per.items():
                w.writerow([self.protocol, run, test, *(f"{v:.6f}" for v in t)])
            w.writerow([self.protocol, run, "macro", *(f"{v:.6f}" for v in self.run_macros[run])])
        if self.meta_macro is not None:
            w.writerow([self.protocol, "all", "meta_macro", *(f"{v:.6f}" for v in self.meta_macro)])
        for test, t in self.per_domain.items():
            w.writerow([self.protocol, self.config.get("train", ""), test, *(f"{v:.6f}" for v in t)])
        if self.macro is not None:
            w.writerow([self.protocol, self.config.get("train", ""), "macro", *(f"{v:.6f}" for v in self.macro)])
        return buf.getvalue()

    def curve_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["added_deceptive", "f1"])
        w.writerows([a, f"{f:.6f}"] for a, f in self.curve)
        return buf.getvalue()

    def to_manifest(self) -> dict:
        def tri(t):
            return None if t is None else list(t)
        return {
            "protocol": self.protocol,
            "config": self.config,
            "per_domain": {k: tri(v) for k, v in self.per_domain.items()},
            "macro": tri(self.macro),
            "runs": {r: {k: tri(v) for k, v in per.items()} for r, per in self.runs.items()},
            "run_macros": {k: tri(v) for k, v in self.run_macros.items()},
            "meta_macro": tri(self.meta_macro),
            "curve": [list(p) for p in self.curve],
        }


# -- protocols ---------------------------------------------------------------

def stratified_folds(y: Sequence[int], k: int, seed: int) -> list[np.ndarray]:
    """Test-index arrays for k folds with class proportions preserved."""
    y = np.asarray(y, dtype=int)
    if not 2 <= k <= len(y):
        raise InsufficientDataError(f"k={k} folds need between 2 and {len(y)} examples")
    rng = np.random.default_rng(seed)
    fold_of = np.empty(len(y), dtype=int)
    offset = 0
    for cls in (1, 0):
        idx = np.flatnonzero(y == cls)
        idx = idx[rng.permutation(len(idx))]
        fold_of[idx] = (offset + np.arange(len(idx))) % k
        offset += len(idx)
    return [np.flatnonzero(fold_of == f) for f in range(k)]


def _pool(corpus: LabeledCorpus, domain, pipe: Pipeline, seed: int) -> list[LabeledReview]:
    scoped = corpus.in_domain(Domain(domain))
    return sample_truthful(scoped, pipe.ratio, scope_seed(seed, "pool", Domain(domain).value)).items


def kfold_indomain(corpus: LabeledCorpus, domain, pipe: Pipeline, k: int = 5, seed: int = 0) -> EvalReport:
    """Stratified k-fold cross-validation inside one domain.

    Folds whose test part has no deceptive review are skipped when averaging
    (only happens when k exceeds the deceptive count).
    """
    domain = Domain(domain)
    items = _canonical(_pool(corpus, domain, pipe, seed))
    n_dec = sum(it.label is Label.DECEPTIVE for it in items)
    if n_dec < 2:
        raise InsufficientDataError(f"{domain.value}: need at least 2 deceptive reviews, have {n_dec}")
    y = [it.y for it in items]
    folds = stratified_folds(y, k, scope_seed(seed, "folds", domain.value))
    scores = []
    for test_idx in folds:
        test_set = set(test_idx.tolist())
        test = [items[i] for i in test_idx]
        if not any(it.y for it in test):
            continue
        train_items = [it for i, it in enumerate(items) if i not in test_set]
        space, model = pipe.fit(train_items, corpus.products)
        scores.append(pipe.score(space, model, test, corpus.products))
    triple = macro_average(scores)
    config = {**pipe.describe(), "seed": seed, "k": k, "folds_scored": len(scores),
              "train": domain.value, "label": pipe.name}
    return EvalReport("indomain", config, per_domain={domain.value: triple}, macro=triple)


def indomain_all(corpus: LabeledCorpus, pipe: Pipeline, k: int = 5, seed: int = 0,
                 domains: Sequence = FOUR_DOMAINS) -> EvalReport:
    per = {}
    for d in domains:
        per[Domain(d).value] = kfold_indomain(corpus, d, pipe, k, seed).macro
    config = {**pipe.describe(), "seed": seed, "k": k, "domains": list(per), "label": pipe.name}
    return EvalReport("indomain", config, per_domain=per, macro=macro_average(per.values()))


def _cross_run(corpus: LabeledCorpus, train_domain: Domain, pipe: Pipeline, seed: int,
               extra: Sequence[LabeledReview] = (), domains: Sequence = FOUR_DOMAINS) -> dict[str, Triple]:
    train_items = list(_pool(corpus, train_domain, pipe, seed)) + list(extra)
    space, model = pipe.fit(train_items, corpus.products)
    out = {}
    for d in domains:
        d = Domain(d)
        if d is train_domain:
            continue
        out[d.value] = pipe.score(space, model, _pool(corpus, d, pipe, seed), corpus.products)
    return out


def cross_domain(corpus: LabeledCorpus, pipe: Pipeline, augment_with_other: bool = False, seed: int = 0,
                 domains: Sequence = FOUR_DOMAINS) -> EvalReport:
    """Train on each domain in turn, test on the others, meta-average the run macros."""
    extra = _pool(corpus, Domain.OTHER, pipe, seed) if augment_with_other else []
    runs, run_macros = {}, {}
    for d in domains:
        d = Domain(d)
        per = _cross_run(corpus, d, pipe, seed, extra, domains)
        runs[d.value] = per
        run_macros[d.value] = macro_average(per.values())
    config = {**pipe.describe(), "seed": seed, "augment_with_other": augment_with_other,
              "train_domains": [Domain(d).value for d in domains], "label": pipe.name}
    return EvalReport("cross", config, runs=runs, run_macros=run_macros,
                      meta_macro=macro_average(run_macros.values()))


def learning_curve(corpus: LabeledCorpus, train_domain, pipe: Pipeline, fractions: Sequence[float],
                   seed: int = 0, other_pool: Optional[Sequence[LabeledReview]] = None,
                   domains: Sequence = FOUR_DOMAINS) -> EvalReport:
    """Macro F1 over the other test domains as growing prefixes of the Other pool join training.

    The Other pool (all its deceptive reviews plus ratio-times authentic) is
    shuffled once; a fraction f adds the first round(f * n_deceptive) deceptive
    and ratio times as many authentic reviews.
    """
    train_domain = Domain(train_domain)
    pool = list(other_pool) if other_pool is not None else _pool(corpus, Domain.OTHER, pipe, seed)
    rng = np.random.default_rng(scope_seed(seed, "curve-order"))
    dec = _canonical(it for it in pool if it.label is Label.DECEPTIVE)
    auth = _canonical(it for it in pool if it.label is Label.AUTHENTIC)
    dec = [dec[i] for i in rng.permutation(len(dec))]
    auth = [auth[i] for i in rng.permutation(len(auth))]
    curve = []
    for f in fractions:
        if not 0 <= f <= 1:
            raise ValueError(f"fraction {f} outside [0, 1]")
        n = int(round(f * len(dec)))
        extra = dec[:n] + auth[:pipe.ratio * n]
        per = _cross_run(corpus, train_domain, pipe, seed, extra, domains)
        curve.append((n, macro_average(per.values())[2]))
    config = {**pipe.describe(), "seed": seed, "train": train_domain.value,
              "fractions": [float(f) for f in fractions], "label": pipe.name}
    return EvalReport("curve", config, curve=curve)


def reviewer_transfer(corpus: LabeledCorpus, train_reviewers: Sequence[str], test_reviewers: Sequence[str],
                      pipe: Pipeline, seed: int = 0) -> EvalReport:
    """Train on some reviewers' deceptive reviews, test on other reviewers'.

    Each side gets ratio-times authentic reviews; the test authentic sample is
    drawn from what the training sample left over.
    """
    overlap = set(train_reviewers) & set(test_reviewers)
    if overlap:
        raise ValueError(f"train and test reviewers overlap: {', '.join(sorted(overlap))}")
    by_reviewer: dict[str, list[LabeledReview]] = {}
    for it in corpus.with_label(Label.DECEPTIVE):
        by_reviewer.setdefault(it.review.reviewer_id, []).append(it)
    for rid in list(train_reviewers) + list(test_reviewers):
        if rid not in by_reviewer:
            raise InsufficientDataError(f"reviewer {rid} has no deceptive reviews")
    authentic = _canonical(corpus.with_label(Label.AUTHENTIC))
    train_dec = [it for rid in train_reviewers for it in by_reviewer[rid]]
    need_train = pipe.ratio * len(train_dec)
    need_test = {rid: pipe.ratio * len(by_reviewer[rid]) for rid in test_reviewers}
    total = need_train + sum(need_test.values())
    if len(authentic) < total:
        raise InsufficientDataError(f"need {total} authentic reviews, have {len(authentic)}")
    order = np.random.default_rng(scope_seed(seed, "reviewer-authentic")).permutation(len(authentic))
    picked = [authentic[i] for i in order[:total]]
    train_items = train_dec + picked[:need_train]
    space, model = pipe.fit(train_items, corpus.products)
    per, pos = {}, need_train
    for rid in test_reviewers:
        test = by_reviewer[rid] + picked[pos:pos + need_test[rid]]
        pos += need_test[rid]
        per[rid] = pipe.score(space, model, test, corpus.products)
    config = {**pipe.describe(), "seed": seed, "train": ",".join(train_reviewers),
              "test": ",".join(test_reviewers), "label": pipe.name}
    return EvalReport("reviewer", config, per_domain=per, macro=macro_average(per.values()))
