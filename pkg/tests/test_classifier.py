import math

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from opspam.classifier import MaxentModel, TrainingError, nll_and_grad, predict, predict_proba, train
from opspam.features import FeatureConfig, FeatureSpace, FeatureVector


def fd_grad(X, y, w, b, C, h=1e-5):
    f = lambda ww, bb: nll_and_grad(ww, bb, X, y, C)[0]
    g = np.zeros(len(w) + 1)
    for k in range(len(w)):
        e = np.zeros_like(w)
        e[k] = h
        g[k] = (f(w + e, b) - f(w - e, b)) / (2 * h)
    g[-1] = (f(w, b + h) - f(w, b - h)) / (2 * h)
    return g


def test_zero_weights_single_example():
    loss, gw, gb = nll_and_grad(np.zeros(3), 0.0, np.array([[1.0, -2.0, 0.5]]), np.array([1]))
    assert loss == math.log(2)
    assert gb == -0.5


@pytest.mark.parametrize("seed", range(10))
def test_gradient_matches_finite_differences(seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(10, 6))
    y = rng.integers(0, 2, size=10)
    w, b = rng.normal(size=6), float(rng.normal())
    loss, gw, gb = nll_and_grad(w, b, X, y, C=0.7)
    num = fd_grad(X, y, w, b, 0.7)
    ana = np.append(gw, gb)
    assert np.linalg.norm(ana - num) <= 1e-5 * np.linalg.norm(num)


def test_sparse_and_dense_agree():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(8, 5)) * (rng.random((8, 5)) < 0.4)
    y = rng.integers(0, 2, size=8)
    w = rng.normal(size=5)
    a = nll_and_grad(w, 0.3, X, y)
    b = nll_and_grad(w, 0.3, sp.csr_matrix(X), y)
    assert a[0] == pytest.approx(b[0]) and np.allclose(a[1], b[1]) and a[2] == pytest.approx(b[2])


def test_doubling_c_halves_penalty():
    X, y, w = np.zeros((2, 3)), np.array([0, 1]), np.array([1.0, 2.0, -1.0])
    data = 2 * math.log(2)
    pen1 = nll_and_grad(w, 0.0, X, y, C=1.0)[0] - data
    pen2 = nll_and_grad(w, 0.0, X, y, C=2.0)[0] - data
    assert pen2 == pytest.approx(pen1 / 2, rel=1e-15)
    # with zero features the data gradient vanishes, leaving w / C exactly
    g1 = nll_and_grad(w, 0.0, X, y, C=1.0)[1]
    g2 = nll_and_grad(w, 0.0, X, y, C=2.0)[1]
    assert np.array_equal(g2, g1 / 2)
    assert nll_and_grad(w, 0.0, X, y, C=math.inf)[0] == data


def test_dimension_mismatch():
    with pytest.raises(ValueError, match="dimension mismatch"):
        nll_and_grad(np.zeros(2), 0.0, np.zeros((3, 4)), np.zeros(3))


def test_separable_direction():
    X = np.array([[1.0], [1.0], [-1.0], [-1.0]])
    y = np.array([1, 1, 0, 0])
    m = train(X, y)
    assert m.weights[0] > 0
    assert (m.predict(X) == y).all()


def test_training_is_deterministic_and_descends():
    rng = np.random.default_rng(2)
    X = sp.csr_matrix(rng.random((40, 15)) * (rng.random((40, 15)) < 0.3))
    y = rng.integers(0, 2, size=40)
    a, b = train(X, y), train(X, y)
    assert np.array_equal(a.weights, b.weights) and a.bias == b.bias
    final = nll_and_grad(a.weights, a.bias, X, y)[0]
    assert final <= nll_and_grad(np.zeros(15), 0.0, X, y)[0]
    assert a.grad_norm <= 1e-6


def test_two_runs_reach_same_objective():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(60, 8))
    y = (X[:, 0] + rng.normal(size=60) > 0).astype(int)
    a = train(X, y)
    b = train(X[::-1], y[::-1])
    fa = nll_and_grad(a.weights, a.bias, X, y)[0]
    fb = nll_and_grad(b.weights, b.bias, X, y)[0]
    assert abs(fa - fb) <= 1e-8


def test_scale_invariance_without_regularization():
    rng = np.random.default_rng(4)
    X = rng.normal(size=(50, 4))
    y = (X @ [1.0, -0.5, 0.2, 0.0] + rng.normal(size=50) > 0).astype(int)
    a = train(X, y, C=math.inf)
    b = train(3.0 * X, y, C=math.inf)
    assert np.array_equal(a.predict(X), b.predict(3.0 * X))


def test_single_class_rejected():
    with pytest.raises(TrainingError, match="both classes"):
        train(np.ones((3, 2)), np.ones(3))


def test_predict_conventions():
    zero = MaxentModel(np.zeros(3), 0.0)
    assert predict_proba(zero, np.array([5.0, -1.0, 2.0])) == 0.5
    assert predict(zero, np.array([5.0, -1.0, 2.0])) == 1
    m = MaxentModel(np.array([1.0]), 0.0)
    assert predict_proba(m, np.array([800.0])) == 1.0
    low = MaxentModel(np.array([1.0]), math.log(0.49 / 0.51))
    assert predict(low, np.array([0.0])) == 0
    fv = FeatureVector(np.array([0]), np.array([2.0]))
    assert predict_proba(m, fv) == pytest.approx(1 / (1 + math.exp(-2)))


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-30, 30), min_size=2, max_size=20), st.floats(0.01, 0.99), st.floats(0.01, 0.99))
def test_proba_monotone_and_threshold(zs, t1, t2):
    m = MaxentModel(np.array([1.0]), 0.0)
    X = np.array(sorted(zs)).reshape(-1, 1)
    p = m.predict_proba(X)
    assert np.all(np.diff(p) >= 0) and np.all((p >= 0) & (p <= 1))
    lo, hi = sorted((t1, t2))
    assert np.all(m.predict(X, hi) <= m.predict(X, lo))


def test_model_file_round_trip():
    space = FeatureSpace(FeatureConfig(("complexity",)), {"complexity": tuple("abcdefghij")})
    rng = np.random.default_rng(5)
    X = rng.random((20, 10))
    y = np.array([0, 1] * 10)
    m = train(X, y)
    text = m.to_text(space)
    assert text.startswith("opspam-maxent 1\nspace_hash ")
    back = MaxentModel.from_text(text, space)
    assert np.array_equal(back.weights, m.weights) and back.bias == m.bias
    other = FeatureSpace(FeatureConfig(("complexity",)), {"complexity": tuple("abcdefghiz")})
    with pytest.raises(ValueError, match="hash mismatch"):
        MaxentModel.from_text(text, other)
