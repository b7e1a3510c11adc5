"""Exact tree Shapley attributions, importance ranking and forward feature selection."""

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import MissingCoverStats
from .models.validation import kfold_cv
from .models.metrics import mean_metrics

SELECTION_MIN_GAIN = 1e-4


@dataclass(frozen=True, eq=False)
class ShapAttribution:
    phi: np.ndarray
    phi0: float
    margin: float
    missing: tuple = field(default=())

    @property
    def total(self):
        return self.phi0 + float(np.sum(self.phi))


@dataclass(frozen=True)
class ImportanceRanking:
    features: tuple
    scores: tuple

    def top(self, n):
        return list(self.features[:n])

    def to_dict(self, aliases=None):
        aliases = aliases or {}
        return {
            "ranking": [
                {"rank": i + 1, "feature": f, "reported_name": aliases.get(f), "mean_abs_shap": s}
                for i, (f, s) in enumerate(zip(self.features, self.scores))
            ]
        }


def _check_covers(ensemble):
    for t, tree in enumerate(ensemble.trees):
        inner = tree.feature >= 0
        c = tree.cover
        if np.any(~np.isfinite(c)) or np.any(c[inner] <= 0):
            raise MissingCoverStats(f"tree {t} lacks usable cover statistics")


def tree_shap(ensemble, x, backend=None):
    """Shapley attribution of one row's margin, summed over all trees."""
    k = backend or kernels.active
    x = np.ascontiguousarray(np.asarray(x, dtype=np.float64).reshape(-1))
    ensemble._check(x)
    _check_covers(ensemble)
    phi = np.zeros(ensemble.n_features)
    phi0 = ensemble.base_margin
    for tree in ensemble.trees:
        phi0 += k.tree_shap(x, tree.feature, tree.threshold, tree.left, tree.right, tree.default_left,
                            tree.value, tree.cover, 0, ensemble.eta, phi)
    margin = float(ensemble.predict_margin(x.reshape(1, -1), backend=k)[0])
    missing = tuple(int(i) for i in np.flatnonzero(np.isnan(x)))
    return ShapAttribution(phi, float(phi0), margin, missing)


def shap_matrix(ensemble, X, backend=None):
    """Row-wise attributions: returns ``(phi (n, d), phi0 (n,), margin (n,))``."""
    X = ensemble._check(X)
    out = np.zeros(X.shape)
    phi0 = np.zeros(X.shape[0])
    margin = np.zeros(X.shape[0])
    for i in range(X.shape[0]):
        a = tree_shap(ensemble, X[i], backend=backend)
        out[i] = a.phi
        phi0[i] = a.phi0
        margin[i] = a.margin
    return out, phi0, margin


def importance_ranking(ensemble, X, backend=None):
    """Features ordered by mean |phi| over the rows of X (ties keep column order)."""
    X = np.asarray(X, dtype=np.float64)
    if X.shape[0] == 0:
        raise ValueError("importance ranking needs at least one row")
    phi, _, _ = shap_matrix(ensemble, X, backend=backend)
    scores = np.mean(np.abs(phi), axis=0)
    order = np.argsort(-scores, kind="stable")
    return ImportanceRanking(tuple(ensemble.feature_names[i] for i in order),
                             tuple(float(scores[i]) for i in order))


@dataclass(frozen=True)
class SelectionResult:
    selected: tuple
    trace: tuple

    def to_dict(self):
        return {"selected": list(self.selected), "trace": list(self.trace)}


def incremental_selection(X, y, feature_names, ranking, trainer, seed=0, folds=10,
                          min_gain=SELECTION_MIN_GAIN, threads=1):
    """Forward selection along ``ranking``: add the next feature while CV f1 keeps rising.

    ``trainer(X, y, seed, feature_names)`` must return a fitted model exposing
    ``predict_proba``.  The first ranked feature is always kept; each further
    candidate is accepted only if mean f1 improves by more than ``min_gain``,
    and the first rejection ends the search.
    """
    names = list(feature_names)
    order = list(ranking.features if isinstance(ranking, ImportanceRanking) else ranking)
    missing = set(names) - set(order)
    if missing:
        raise ValueError(f"ranking does not cover features: {sorted(missing)}")
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)

    def score(subset):
        cols = [names.index(f) for f in subset]
        reports = kfold_cv(X[:, cols], y, folds,
                           lambda Xt, yt, s: trainer(Xt, yt, s, list(subset)), seed, threads=threads)
        return mean_metrics(reports)["f1"]

    selected = [order[0]]
    best = score(selected)
    trace = [{"step": 1, "candidate": order[0], "features": list(selected), "f1": best, "accepted": True}]
    for step, cand in enumerate(order[1:], start=2):
        trial = selected + [cand]
        f1 = score(trial)
        accepted = f1 > best + min_gain
        trace.append({"step": step, "candidate": cand, "features": trial, "f1": f1, "accepted": accepted})
        if not accepted:
            break
        selected = trial
        best = f1
    return SelectionResult(tuple(selected), tuple(trace))
