"""Reviewer-reviewer pairwise MRF and hard-EM clustering into deceptive/authentic.

Score of a labeling y (higher is better)::

    sum_i theta_i [y_i = D]  +  sum_(i,j) lam * (c_ij + mu * s_ij) [y_i = y_j]

with theta_i = w . f_i + bias.  The E-step maximizes this exactly by min-cut;
the M-step fits (w, bias, lam, mu) to the current labeling by penalized
pseudo-likelihood.
"""

from __future__ import annotations

import itertools
import logging
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np
from scipy.optimize import minimize

from .corpus import Label, Review, TaskSet
from .mincut import FlowNetwork

log = logging.getLogger(__name__)

BEHAVIOR_DIMS = (
    "fraction_verified",
    "fraction_five_star",
    "max_reviews_per_day",
    "root_task_product_fraction",
)
DAY_CAP = 10


class NonSubmodularError(ValueError):
    pass


@dataclass
class MRFParams:
    w: np.ndarray
    bias: float = 0.0
    lam: float = 1.0
    mu: float = 1.0
    converged: bool = True

    @classmethod
    def initial(cls) -> "MRFParams":
        return cls(np.zeros(len(BEHAVIOR_DIMS)), 0.0, 1.0, 1.0)

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.w, [self.bias, self.lam, self.mu]])

    @classmethod
    def from_vector(cls, v, converged: bool = True) -> "MRFParams":
        v = np.asarray(v, dtype=float)
        return cls(v[:-3].copy(), float(v[-3]), float(v[-2]), float(v[-1]), converged)


@dataclass
class ReviewerGraph:
    """Nodes are reviewers (index order = sorted ids); edges are undirected pairs i < j."""

    ids: list[str]
    features: np.ndarray  # (n, len(BEHAVIOR_DIMS)), each column in [0, 1]
    edges: np.ndarray  # (m, 2) int, i < j
    collab: np.ndarray  # (m,) shared root-task product counts
    similarity: np.ndarray  # (m,) in [0, 1]
    seeds: dict[int, int] = field(default_factory=dict)  # node -> 1 (deceptive) / 0

    def __post_init__(self):
        self.index = {rid: k for k, rid in enumerate(self.ids)}
        self.features = np.asarray(self.features, dtype=float).reshape(len(self.ids), -1)
        self.edges = np.asarray(self.edges, dtype=int).reshape(-1, 2)
        self.collab = np.asarray(self.collab, dtype=float)
        self.similarity = np.asarray(self.similarity, dtype=float)

    @property
    def n(self) -> int:
        return len(self.ids)

    def theta(self, params: MRFParams) -> np.ndarray:
        return self.features @ params.w + params.bias

    def edge_weights(self, params: MRFParams) -> np.ndarray:
        return params.lam * (self.collab + params.mu * self.similarity)

    def dump_edges(self) -> str:
        lines = [f"{self.ids[i]} {self.ids[j]} {int(c)} {s:.6f}"
                 for (i, j), c, s in zip(self.edges, self.collab, self.similarity)]
        return "\n".join(lines) + ("\n" if lines else "")

    def dump_nodes(self) -> str:
        lines = ["reviewer_id\t" + "\t".join(BEHAVIOR_DIMS) + "\tseed"]
        for k, rid in enumerate(self.ids):
            seed = {1: "deceptive", 0: "authentic"}.get(self.seeds.get(k), "-")
            lines.append(rid + "\t" + "\t".join(f"{v:.6f}" for v in self.features[k]) + f"\t{seed}")
        return "\n".join(lines) + "\n"


def behavior_vector(reviews: list[Review], root_products) -> np.ndarray:
    n = len(reviews)
    if n == 0:
        return np.zeros(len(BEHAVIOR_DIMS))
    per_day = Counter(r.posted_at for r in reviews if r.posted_at is not None)
    busiest = max(per_day.values()) if per_day else 0
    return np.array([
        sum(r.verified_purchase for r in reviews) / n,
        sum(r.rating == 5 for r in reviews) / n,
        min(busiest, DAY_CAP) / DAY_CAP,
        sum(r.product_id in root_products for r in reviews) / n,
    ])


def similarity(f_i: np.ndarray, f_j: np.ndarray) -> float:
    return 1.0 - float(np.abs(f_i - f_j).sum()) / len(f_i)


def build_graph(reviews: Iterable[Review], tasks: TaskSet, seeds: Optional[dict] = None) -> ReviewerGraph:
    """One node per reviewer, an edge for every pair sharing >= 1 root-task product.

    ``seeds`` maps reviewer id -> Label; it defaults to the task responders
    fixed as deceptive.
    """
    by_reviewer: dict[str, list[Review]] = defaultdict(list)
    root_reviewers: dict[str, set] = defaultdict(set)
    for r in reviews:
        by_reviewer[r.reviewer_id].append(r)
        if r.product_id in tasks.root_products:
            root_reviewers[r.product_id].add(r.reviewer_id)
    ids = sorted(by_reviewer)
    index = {rid: k for k, rid in enumerate(ids)}
    feats = np.array([behavior_vector(by_reviewer[rid], tasks.root_products) for rid in ids])
    feats = feats.reshape(len(ids), len(BEHAVIOR_DIMS))

    pair_counts: Counter = Counter()
    for pid in sorted(root_reviewers):
        members = sorted(index[rid] for rid in root_reviewers[pid])
        pair_counts.update(itertools.combinations(members, 2))
    pairs = sorted(pair_counts)
    edges = np.array(pairs, dtype=int).reshape(-1, 2)
    collab = np.array([pair_counts[p] for p in pairs], dtype=float)
    sims = np.array([similarity(feats[i], feats[j]) for i, j in pairs], dtype=float)

    if seeds is None:
        seeds = {rid: Label.DECEPTIVE for rid in tasks.responders}
    seed_idx = {index[rid]: int(Label(lab) is Label.DECEPTIVE) for rid, lab in seeds.items() if rid in index}
    return ReviewerGraph(ids, feats, edges, collab, sims, seed_idx)


def _as_array(graph: ReviewerGraph, assignment) -> np.ndarray:
    if isinstance(assignment, dict):
        return np.array([int(Label(assignment[rid]) is Label.DECEPTIVE) for rid in graph.ids])
    return np.asarray(assignment, dtype=int)


def to_assignment(graph: ReviewerGraph, x: np.ndarray) -> dict[str, Label]:
    return {rid: Label.DECEPTIVE if x[k] else Label.AUTHENTIC for k, rid in enumerate(graph.ids)}


def energy(graph: ReviewerGraph, assignment, params: MRFParams) -> float:
    x = _as_array(graph, assignment)
    theta = graph.theta(params)
    terms = [theta[k] for k in range(graph.n) if x[k]]
    if len(graph.edges):
        same = x[graph.edges[:, 0]] == x[graph.edges[:, 1]]
        terms.extend(graph.edge_weights(params)[same])
    # fsum: exactly rounded, so equal-score labelings get equal floats
    return math.fsum(terms)


def map_assignment(graph: ReviewerGraph, params: MRFParams) -> np.ndarray:
    """Exact maximizer of :func:`energy` (seeds fixed) via s-t min-cut.

    Returned as a 0/1 array in node order.  Among tied optima the one with the
    fewest deceptive nodes is returned.
    """
    if params.lam < 0:
        raise NonSubmodularError(f"lam={params.lam} < 0 makes the pairwise term non-submodular")
    n = graph.n
    theta = graph.theta(params)
    weights = graph.edge_weights(params)
    if np.any(weights < 0):
        raise NonSubmodularError("negative edge weight")
    s, t = n, n + 1
    big = 1.0 + float(np.abs(theta).sum() + weights.sum())
    net = FlowNetwork(n + 2)
    # source side = deceptive.  Cutting s->i costs theta_i (i authentic),
    # cutting i->t costs -theta_i (i deceptive).
    for k in range(n):
        seed = graph.seeds.get(k)
        if seed == 1:
            net.add_edge(s, k, big)
        elif seed == 0:
            net.add_edge(k, t, big)
        elif theta[k] > 0:
            net.add_edge(s, k, theta[k])
        elif theta[k] < 0:
            net.add_edge(k, t, -theta[k])
    for (i, j), wt in zip(graph.edges, weights):
        if wt > 0:
            net.add_edge(int(i), int(j), wt, wt)
    net.max_flow(s, t)
    side = net.source_side(s)
    return np.array([int(k in side) for k in range(n)], dtype=int)


def brute_force_map(graph: ReviewerGraph, params: MRFParams) -> tuple[np.ndarray, float]:
    """Exhaustive search over free nodes; for testing on small graphs only."""
    free = [k for k in range(graph.n) if k not in graph.seeds]
    if len(free) > 20:
        raise ValueError("brute force limited to 20 free nodes")
    x = np.zeros(graph.n, dtype=int)
    for k, v in graph.seeds.items():
        x[k] = v
    best, best_x = -math.inf, None
    for bits in itertools.product((0, 1), repeat=len(free)):
        x[free] = bits
        e = energy(graph, x, params)
        if e > best:
            best, best_x = e, x.copy()
    return best_x, best


def _neighbor_sums(graph: ReviewerGraph, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per node: sum over neighbors of c_ij * a_j and s_ij * a_j, a_j = +1 (D) / -1 (A)."""
    a = 2.0 * x - 1.0
    cn = np.zeros(graph.n)
    sn = np.zeros(graph.n)
    if len(graph.edges):
        i, j = graph.edges[:, 0], graph.edges[:, 1]
        np.add.at(cn, i, graph.collab * a[j])
        np.add.at(cn, j, graph.collab * a[i])
        np.add.at(sn, i, graph.similarity * a[j])
        np.add.at(sn, j, graph.similarity * a[i])
    return cn, sn


def pseudo_loglik(graph: ReviewerGraph, x, vec: np.ndarray, reg: float = 1.0) -> tuple[float, np.ndarray]:
    """Penalized pseudo-log-likelihood of labeling ``x`` and its gradient.

    ``vec`` is ``[w..., bias, lam, mu]``.  Each node's conditional log-odds of
    being deceptive given its neighbors is theta_i + lam * (C_i + mu * S_i).
    """
    x = np.asarray(x, dtype=int)
    d = graph.features.shape[1]
    w, b, lam, mu = vec[:d], vec[d], vec[d + 1], vec[d + 2]
    cn, sn = _neighbor_sums(graph, x)
    margin = graph.features @ w + b + lam * (cn + mu * sn)
    sign = 2.0 * x - 1.0
    z = sign * margin
    value = -np.logaddexp(0.0, -z).sum() - 0.5 * reg * float(vec @ vec)
    r = sign * np.exp(-np.logaddexp(0.0, z))  # sign * sigmoid(-z)
    grad = np.empty_like(vec, dtype=float)
    grad[:d] = graph.features.T @ r
    grad[d] = r.sum()
    grad[d + 1] = r @ (cn + mu * sn)
    grad[d + 2] = lam * (r @ sn)
    grad -= reg * vec
    return float(value), grad


def update_params(graph: ReviewerGraph, assignment, init: Optional[MRFParams] = None,
                  reg: float = 1.0, tol: float = 1e-8, max_iter: int = 500) -> MRFParams:
    """M-step: maximize the penalized pseudo-likelihood with lam, mu >= 0.

    Uses bounded L-BFGS; on hitting ``max_iter`` the last (best) iterate is
    returned with ``converged=False``.
    """
    x = _as_array(graph, assignment)
    start = (init or MRFParams.initial()).as_vector()
    start[-2:] = np.maximum(start[-2:], 0.0)
    d = graph.features.shape[1]
    bounds = [(None, None)] * (d + 1) + [(0.0, None), (0.0, None)]

    def neg(v):
        val, g = pseudo_loglik(graph, x, v, reg)
        return -val, -g

    res = minimize(neg, start, jac=True, method="L-BFGS-B", bounds=bounds,
                   options={"maxiter": max_iter, "gtol": tol, "ftol": 1e-15})
    if not res.success:
        log.warning("M-step stopped without converging: %s", res.message)
    out = MRFParams.from_vector(res.x, converged=bool(res.success))
    out.lam = max(out.lam, 0.0)
    out.mu = max(out.mu, 0.0)
    return out


@dataclass
class EMStep:
    iteration: int
    energy: float  # new labeling under the params used for this E-step
    prev_energy: Optional[float]  # previous labeling under the same params
    n_deceptive: int
    params: MRFParams


@dataclass
class EMResult:
    assignment: dict[str, Label]
    params: MRFParams
    trace: list[EMStep]
    converged: bool
    iterations: int  # completed E+M rounds

    def deceptive_reviewers(self) -> list[str]:
        return sorted(rid for rid, lab in self.assignment.items() if lab is Label.DECEPTIVE)

    def __iter__(self):
        return iter((self.assignment, self.params, self.trace))


def em_cluster(graph: ReviewerGraph, init: Optional[MRFParams] = None, max_iter: int = 50,
               reg: float = 1.0) -> EMResult:
    """Alternate exact E-steps and pseudo-likelihood M-steps.

    Stops when an E-step reproduces the previous labeling, or after
    ``max_iter`` rounds.
    """
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    params = init or MRFParams.initial()
    prev = None
    trace: list[EMStep] = []
    converged = False
    rounds = 0
    for it in range(1, max_iter + 2):
        x = map_assignment(graph, params)
        prev_e = energy(graph, prev, params) if prev is not None else None
        trace.append(EMStep(it, energy(graph, x, params), prev_e, int(x.sum()), params))
        if prev is not None and np.array_equal(x, prev):
            converged = True
            break
        if rounds == max_iter:
            break
        params = update_params(graph, x, params, reg=reg)
        prev = x
        rounds += 1
    log.info("EM: %d rounds, converged=%s, %d deceptive", rounds, converged, int(x.sum()))
    return EMResult(to_assignment(graph, x), params, trace, converged, rounds)


def format_assignment(assignment: dict) -> str:
    return "".join(f"{rid}\t{Label(lab).value}\n" for rid, lab in sorted(assignment.items()))
