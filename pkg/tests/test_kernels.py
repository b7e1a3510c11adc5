"""The compiled and pure-Python kernels must agree bit for bit."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from physiotrust import kernels
from physiotrust.models import Hyperparameters, train_gbdt
from physiotrust.models.gbdt import _presort

pytestmark = pytest.mark.skipif(kernels.compiled is None, reason="compiled backend not built")

C, P = kernels.compiled, kernels.fallback


def problem(seed, n=80, d=4, missing=0.15, ties=False):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d))
    if ties:
        X = np.round(X, 1)
    X[rng.random(X.shape) < missing] = np.nan
    y = (rng.random(n) < 0.5 + 0.3 * np.tanh(np.nan_to_num(X[:, 0]))).astype(float)
    p = rng.uniform(0.1, 0.9, n)
    return X, y, p - y, p * (1 - p)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31), st.booleans(), st.booleans(), st.floats(0, 2), st.floats(0, 3))
def test_best_split(seed, ties, routing, gamma, mcw):
    X, y, g, h = problem(seed, ties=ties)
    S, n_present = _presort(X)
    feats = np.arange(X.shape[1], dtype=np.int64)
    args = (X, g, h, S, n_present, feats, float(g.sum()), float(h.sum()), 1.0, gamma, mcw, routing)
    a, b = C.best_split(*args), P.best_split(*args)
    assert a[0] == b[0] or (np.isneginf(a[0]) and np.isneginf(b[0]))
    if np.isfinite(a[0]):
        assert a[1:] == b[1:]


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31), st.integers(1, 6), st.booleans(), st.floats(0.5, 1.0), st.floats(0.5, 1.0))
def test_training_identical(seed, depth, routing, subsample, colsample):
    X, y, _, _ = problem(seed, n=120, d=5, ties=seed % 2 == 0)
    if y.min() == y.max():
        y[0] = 1 - y[0]
    h = Hyperparameters(n_trees=6, max_depth=depth, subsample=subsample, colsample=colsample)
    a = train_gbdt(X, y, h, seed=seed, missing_routing=routing, backend=C)
    b = train_gbdt(X, y, h, seed=seed, missing_routing=routing, backend=P)
    assert a.to_json() == b.to_json()
    rows = np.random.default_rng(seed).normal(size=(50, 5))
    rows[::3, 1] = np.nan
    assert np.array_equal(a.predict_margin(rows, backend=C), a.predict_margin(rows, backend=P))
    for t in a.trees:
        li = [k.leaf_index(rows, t.feature, t.threshold, t.left, t.right, t.default_left, 0) for k in (C, P)]
        assert np.array_equal(*li)
        for x in rows[:5]:
            out = []
            for k in (C, P):
                phi = np.zeros(5)
                e = k.tree_shap(x, t.feature, t.threshold, t.left, t.right, t.default_left, t.value,
                                t.cover, 0, 0.3, phi)
                out.append((e, phi))
            assert out[0][0] == pytest.approx(out[1][0], abs=1e-14)
            assert np.allclose(out[0][1], out[1][1], rtol=0, atol=1e-14)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31), st.floats(0.01, 0.2), st.floats(0.0, 1.0))
def test_idt(seed, thr, min_dur):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 300))
    t = np.arange(n) / 30.0
    x = np.cumsum(rng.normal(0, 0.01, n)) + 0.5
    y = np.cumsum(rng.normal(0, 0.01, n)) + 0.5
    jumps = rng.random(n) < 0.05
    x[jumps] += rng.uniform(-0.3, 0.3, jumps.sum())
    screen = np.repeat(rng.integers(0, 4, n // 20 + 1), 20)[:n].astype(np.int64)
    a = C.idt(t, x, y, screen, thr, min_dur, 1 / 30.0)
    b = P.idt(t, x, y, screen, thr, min_dur, 1 / 30.0)
    for u, v in zip(a, b):
        assert np.array_equal(u, v)
