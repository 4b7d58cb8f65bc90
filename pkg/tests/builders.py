"""Small constructors for hand-built corpora."""

import datetime as dt

from opspam.corpus import Domain, Label, LabeledCorpus, LabeledReview, Review, TaskSet

DOG = "(S (NP (DT the) (NN dog)) (VP (VBZ barks)))"


def review(rid, reviewer="u1", product="p1", *, category="Paperback", rating=5, title="", body="",
           sentences=(), verified=False, day=1):
    return Review(rid, reviewer, product, category, rating, title, body, tuple(sentences), verified,
                  dt.date(2016, 1, day))


def labeled(n_dec, n_auth, domain=Domain.BOOKS, prefix="r"):
    items = [LabeledReview(review(f"{prefix}d{k:03d}"), Label.DECEPTIVE, domain) for k in range(n_dec)]
    items += [LabeledReview(review(f"{prefix}a{k:03d}"), Label.AUTHENTIC, domain) for k in range(n_auth)]
    return LabeledCorpus(items)


def truth_table_corpus():
    """12 reviews, 3 per (reviewer flagged?, product in root tasks?) combination."""
    reviews, expected = [], {}
    combos = [("bad", "root", Label.DECEPTIVE), ("bad", "plain", Label.EXCLUDED),
              ("good", "root", Label.EXCLUDED), ("good", "plain", Label.AUTHENTIC)]
    for reviewer, product, label in combos:
        for k in range(3):
            rid = f"{reviewer}-{product}-{k}"
            reviews.append(review(rid, f"{reviewer}{k}", f"{product}{k}"))
            expected[rid] = label
    tasks = TaskSet(frozenset({"root0", "root1", "root2"}))
    flagged = {"bad0", "bad1", "bad2"}
    return reviews, flagged, tasks, expected


def dyadic_graph(rng, n, p_edge=0.4, n_seeds=0):
    """Random ReviewerGraph whose energies are exact in binary floating point."""
    import numpy as np

    from opspam.reviewer_graph import MRFParams, ReviewerGraph

    feats = rng.integers(0, 5, size=(n, 4)) / 4
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < p_edge]
    collab = rng.integers(1, 4, size=len(pairs)).astype(float)
    sims = rng.integers(0, 5, size=len(pairs)) / 4
    seeded = rng.choice(n, size=min(n_seeds, n), replace=False) if n_seeds else []
    seeds = {int(k): int(rng.integers(2)) for k in seeded}
    graph = ReviewerGraph([f"u{k:02d}" for k in range(n)], feats, np.array(pairs, dtype=int).reshape(-1, 2),
                          collab, sims, seeds)
    params = MRFParams(rng.integers(-8, 9, size=4) / 4, float(rng.integers(-8, 9) / 4),
                       float(rng.integers(0, 5) / 4), float(rng.integers(0, 5) / 4))
    return graph, params
