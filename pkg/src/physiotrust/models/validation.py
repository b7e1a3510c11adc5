"""Stratified k-fold cross-validation, randomized hyperparameter search and nested CV."""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..errors import TooFewRows
from .gbdt import Hyperparameters, train_gbdt
from .baselines import train_baseline
from .metrics import compute_metrics, mean_metrics

# order matters: draws are taken in this sequence for every candidate
DEFAULT_SPACE = {
    "n_trees": (50, 400, "int"),
    "max_depth": (2, 8, "int"),
    "eta": (0.01, 0.3, "log"),
    "lambda": (0.1, 10.0, "log"),
    "gamma": (0.0, 5.0, "uniform"),
    "subsample": (0.5, 1.0, "uniform"),
    "colsample": (0.5, 1.0, "uniform"),
    "min_child_weight": (1.0, 10.0, "uniform"),
}


def fold_seed(seed, fold):
    return int(np.random.SeedSequence([int(seed), int(fold)]).generate_state(1)[0])


def stratified_folds(y, k, seed=0):
    """Fold index per row; each class is shuffled then dealt round-robin.

    The dealing position carries over from one class to the next so fold sizes
    differ by at most one overall as well as per class.
    """
    y = np.asarray(y)
    n = y.shape[0]
    if k < 2:
        raise ValueError("k must be >= 2")
    if n < k:
        raise TooFewRows(f"{n} rows cannot fill {k} folds")
    rng = np.random.default_rng(seed)
    folds = np.empty(n, dtype=np.int64)
    offset = 0
    for c in np.unique(y):
        idx = np.flatnonzero(y == c)
        idx = idx[rng.permutation(idx.size)]
        folds[idx] = (offset + np.arange(idx.size)) % k
        offset = (offset + idx.size) % k
    return folds


def _predict(model, X):
    scores = np.asarray(model.predict_proba(X), dtype=np.float64)
    pred = model.predict(X) if hasattr(model, "predict") else (scores >= 0.5).astype(np.int64)
    return pred, scores


def kfold_cv(X, y, k, trainer, seed=0, threads=1, folds=None):
    """Per-fold MetricsReports in fold-index order.

    ``trainer(X_train, y_train, seed)`` returns a model with ``predict_proba``;
    each fold's trainer seed is derived from ``(seed, fold)``.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y).astype(np.int64)
    if folds is None:
        folds = stratified_folds(y, k, seed)

    def run(f):
        test = folds == f
        model = trainer(X[~test], y[~test], fold_seed(seed, f))
        pred, scores = _predict(model, X[test])
        return compute_metrics(y[test], pred, scores)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(run, range(k)))
    return [run(f) for f in range(k)]


def gbdt_trainer(hyper=None, feature_names=None, missing_routing=True):
    hyper = hyper or Hyperparameters()

    def fit(X, y, seed):
        return train_gbdt(X, y, hyper, seed=seed, feature_names=feature_names,
                          missing_routing=missing_routing)
    return fit


def baseline_trainer(kind, params=None):
    def fit(X, y, seed):
        return train_baseline(kind, X, y, params, seed)
    return fit


def _draw(rng, space):
    params = {}
    for name, (lo, hi, kind) in space.items():
        if lo > hi:
            raise ValueError(f"{name}: lower bound {lo} above upper bound {hi}")
        u = rng.random()
        if kind == "int":
            v = int(lo) + min(int(u * (int(hi) - int(lo) + 1)), int(hi) - int(lo))
        elif lo == hi:
            v = float(lo)
        elif kind == "log":
            if lo <= 0:
                raise ValueError(f"{name}: log-uniform range must be positive")
            v = float(np.exp(np.log(lo) + u * (np.log(hi) - np.log(lo))))
        else:
            v = float(lo + u * (hi - lo))
        params[name] = v
    return params


@dataclass(frozen=True)
class SearchResult:
    best: Hyperparameters
    best_score: float
    best_index: int
    trace: tuple

    def to_dict(self):
        return {"best": self.best.to_dict(), "best_score": self.best_score,
                "best_index": self.best_index, "trace": list(self.trace)}


def random_search(X, y, space=None, n_iter=50, seed=0, folds=5, feature_names=None,
                  base=None, threads=1):
    """Score ``n_iter`` random draws by ``folds``-fold mean f1; first best draw wins."""
    if n_iter < 1:
        raise ValueError("n_iter must be >= 1")
    space = dict(DEFAULT_SPACE if space is None else space)
    base = (base or Hyperparameters()).to_dict()
    rng = np.random.default_rng(seed)
    cv_folds = stratified_folds(y, folds, seed)
    trace = []
    best_i, best_score, best_h = -1, -np.inf, None
    for i in range(n_iter):
        params = _draw(rng, space)
        hyper = Hyperparameters.from_dict({**base, **params})
        reports = kfold_cv(X, y, folds, gbdt_trainer(hyper, feature_names), seed, threads, cv_folds)
        score = mean_metrics(reports)["f1"]
        trace.append({"draw": i, "params": hyper.to_dict(), "f1": score})
        if score > best_score:
            best_i, best_score, best_h = i, score, hyper
    return SearchResult(best_h, float(best_score), best_i, tuple(trace))


def nested_cv(X, y, k=10, space=None, n_iter=50, seed=0, inner_folds=5, feature_names=None,
              threads=1):
    """Outer k-fold evaluation with a fresh random search inside each training fold.

    Returns ``(reports, searches)`` in fold order.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y).astype(np.int64)
    outer = stratified_folds(y, k, seed)
    reports, searches = [], []
    for f in range(k):
        test = outer == f
        s = fold_seed(seed, f)
        search = random_search(X[~test], y[~test], space, n_iter, s, inner_folds, feature_names,
                               threads=threads)
        model = train_gbdt(X[~test], y[~test], search.best, seed=s, feature_names=feature_names)
        pred, scores = _predict(model, X[test])
        reports.append(compute_metrics(y[test], pred, scores))
        searches.append(search)
    return reports, searches
