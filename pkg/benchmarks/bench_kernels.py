"""Compiled vs pure-Python kernel timings.

Run with ``python3 benchmarks/bench_kernels.py [--repeat N]``.  Each kernel is
run on identical inputs under both backends and the outputs are checked for
equality before timings are reported.
"""

import argparse
import time

import numpy as np

from physiotrust import kernels
from physiotrust.models import Hyperparameters, train_gbdt
from physiotrust.explain import shap_matrix


def _time(fn, repeat):
    best = np.inf
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def _data(seed=0, n=2000, d=17):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d))
    y = (X[:, 0] + X[:, 1] - X[:, 2] + 0.5 * rng.normal(size=n) > 0).astype(np.int64)
    X[rng.random(X.shape) < 0.1] = np.nan
    return X, y


def _gaze(seed=0, n=9000):
    rng = np.random.default_rng(seed)
    t = np.arange(n) / 15.0
    centres = rng.uniform(0, 1, (n // 8 + 1, 2))
    which = np.repeat(np.arange(centres.shape[0]), 8)[:n]
    x = centres[which, 0] + rng.uniform(-0.005, 0.005, n)
    y = centres[which, 1] + rng.uniform(-0.005, 0.005, n)
    screen = rng.integers(0, 4, centres.shape[0])[which].astype(np.int64)
    return t, x, y, screen


def run(repeat=3):
    backends = kernels.available()
    if len(backends) < 2:
        print("compiled backend not built; only the fallback is available")
    X, y = _data()
    hyper = Hyperparameters(n_trees=50, max_depth=4)
    t, gx, gy, scr = _gaze()
    rows = []
    results = {}
    for k in backends:
        name = k.BACKEND
        fit_s, ens = _time(lambda: train_gbdt(X, y, hyper, seed=0, backend=k), repeat)
        pred_s, margin = _time(lambda: ens.predict_margin(X, backend=k), repeat)
        shap_s, phi = _time(lambda: shap_matrix(ens, X[:200], backend=k)[0], repeat)
        idt_s, fix = _time(lambda: k.idt(t, gx, gy, scr, 0.05, 0.2, 1 / 15.0), repeat)
        results[name] = (ens.to_json(), margin, phi, fix)
        rows.append((name, fit_s, pred_s, shap_s, idt_s))
    if len(results) == 2:
        a, b = results.values()
        assert a[0] == b[0], "ensembles differ between backends"
        assert np.array_equal(a[1], b[1]), "margins differ"
        assert np.allclose(a[2], b[2], rtol=0, atol=1e-12), "attributions differ"
        assert all(np.array_equal(p, q) for p, q in zip(a[3], b[3])), "fixations differ"
        print("outputs identical across backends")
    print(f"{'backend':<8} {'fit 50 trees':>13} {'predict 2000':>13} {'shap 200 rows':>14} {'idt 9000':>10}")
    for name, *vals in rows:
        print(f"{name:<8} " + " ".join(f"{v:>12.4f}s" for v in vals[:3]) + f" {vals[3]:>9.4f}s")
    if len(rows) == 2:
        speed = [p / c for c, p in zip(rows[0][1:], rows[1][1:])]
        print(f"{'speedup':<8} " + " ".join(f"{s:>12.1f}x" for s in speed[:3]) + f" {speed[3]:>9.1f}x")
    return rows


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    run(ap.parse_args().repeat)
