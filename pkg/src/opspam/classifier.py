"""L2-regularized binary maximum-entropy (logistic regression) classifier."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.optimize import minimize

from .features import FeatureSpace, FeatureVector

MODEL_VERSION = "opspam-maxent 1"


class TrainingError(ValueError):
    pass


def _as_matrix(X):
    return X if sp.issparse(X) else np.atleast_2d(np.asarray(X, dtype=float))


def nll_and_grad(weights, bias: float, X, y, C: float = 1.0) -> tuple[float, np.ndarray, float]:
    """Objective and exact gradient.

    loss = sum_i log(1 + exp(-t_i z_i)) + ||w||^2 / (2C), z = Xw + b, t = 2y - 1.
    Returns (loss, grad_w, grad_b); the bias is not penalized.  ``C=inf``
    drops the penalty.
    """
    X = _as_matrix(X)
    w = np.asarray(weights, dtype=float)
    y = np.asarray(y)
    if X.shape[0] == 0:
        raise TrainingError("no training examples")
    if X.shape[1] != w.shape[0]:
        raise ValueError(f"dimension mismatch: data has {X.shape[1]} features, weights {w.shape[0]}")
    if X.shape[0] != y.shape[0]:
        raise ValueError("dimension mismatch: labels and examples differ in length")
    t = 2.0 * y - 1.0
    z = X @ w + bias
    margin = t * z
    inv_c = 0.0 if math.isinf(C) else 1.0 / C
    # fsum keeps the data term correctly rounded (N ln 2 exactly at zero weights)
    loss = math.fsum(np.logaddexp(0.0, -margin)) + 0.5 * inv_c * float(w @ w)
    r = -t * np.exp(-np.logaddexp(0.0, margin))  # -t * sigmoid(-margin)
    grad_w = np.asarray(X.T @ r).ravel() + inv_c * w
    return loss, grad_w, float(r.sum())


@dataclass
class MaxentModel:
    weights: np.ndarray
    bias: float
    C: float = 1.0
    iterations: int = 0
    grad_norm: float = 0.0
    space_hash: str = ""

    def decision(self, X) -> np.ndarray:
        X = _as_matrix(X)
        return np.asarray(X @ self.weights).ravel() + self.bias

    def predict_proba(self, X) -> np.ndarray:
        z = self.decision(X)
        return np.exp(-np.logaddexp(0.0, -z))

    def predict(self, X, threshold: float = 0.5) -> np.ndarray:
        return (self.predict_proba(X) >= threshold).astype(int)

    # -- persistence -------------------------------------------------------

    def to_text(self, space: FeatureSpace) -> str:
        if len(self.weights) != space.dim:
            raise ValueError("model and feature space dimensions differ")
        lines = [
            MODEL_VERSION,
            f"space_hash {space.hash()}",
            f"C {self.C!r}",
            f"bias {self.bias!r}",
            f"iterations {self.iterations}",
            f"grad_norm {self.grad_norm!r}",
        ]
        nz = np.flatnonzero(self.weights)
        lines.append(f"weights {len(nz)}")
        lines.extend(f"{space.names[k]}\t{float(self.weights[k])!r}" for k in nz)
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, space: FeatureSpace) -> "MaxentModel":
        lines = text.rstrip("\n").split("\n")
        if lines[0] != MODEL_VERSION:
            raise ValueError("not a maxent model file")
        head = dict(line.split(" ", 1) for line in lines[1:7])
        if head["space_hash"] != space.hash():
            raise ValueError("model was trained on a different feature space (hash mismatch)")
        w = np.zeros(space.dim)
        for line in lines[7:]:
            name, val = line.rsplit("\t", 1)
            w[space.index[name]] = float(val)
        return cls(w, float(head["bias"]), float(head["C"]), int(head["iterations"]),
                   float(head["grad_norm"]), head["space_hash"])


def train(X, y, C: float = 1.0, tol: float = 1e-6, max_iter: int = 1000) -> MaxentModel:
    """Minimize :func:`nll_and_grad` from zero weights with L-BFGS.

    Stops when the gradient max-norm drops to ``tol`` or after ``max_iter``
    iterations.  Same data gives bit-identical weights.
    """
    X = _as_matrix(X)
    if sp.issparse(X):
        X = X.tocsr()
    y = np.asarray(y, dtype=int)
    if set(np.unique(y)) != {0, 1}:
        raise TrainingError("training data must contain both classes")
    d = X.shape[1]

    def f(v):
        loss, gw, gb = nll_and_grad(v[:d], v[d], X, y, C)
        if not math.isfinite(loss):
            raise TrainingError("non-finite loss")
        return loss, np.append(gw, gb)

    res = minimize(f, np.zeros(d + 1), jac=True, method="L-BFGS-B",
                   options={"maxiter": max_iter, "gtol": tol, "ftol": 1e-16, "maxcor": 20})
    _, g = f(res.x)
    return MaxentModel(res.x[:d].copy(), float(res.x[d]), C, int(res.nit), float(np.abs(g).max()))


def predict_proba(model: MaxentModel, vector) -> float:
    if isinstance(vector, FeatureVector):
        vector = vector.to_dense(len(model.weights))
    return float(model.predict_proba(np.asarray(vector, dtype=float).reshape(1, -1))[0])


def predict(model: MaxentModel, vector, threshold: float = 0.5) -> int:
    return int(predict_proba(model, vector) >= threshold)
