"""Comparison classifiers: logistic regression, CART, Gaussian naive Bayes and k-NN.

None of these handle missing values natively, so every model imputes with
training-fold column means before fitting and applies the same means at
prediction time.
"""

import numpy as np
from scipy.special import expit

from ..errors import SingleClassData, EmptyMatrix

BASELINE_KINDS = ("logistic_regression", "decision_tree", "naive_bayes", "knn")


class _Imputer:
    def __init__(self, X):
        present = ~np.isnan(X)
        counts = present.sum(axis=0)
        sums = np.where(present, X, 0.0).sum(axis=0)
        # an all-missing column imputes to 0
        self.means = np.divide(sums, counts, out=np.zeros(X.shape[1]), where=counts > 0)

    def __call__(self, X):
        X = np.array(X, dtype=np.float64, copy=True)
        if X.ndim == 1:
            X = X.reshape(1, -1)
        r, c = np.nonzero(np.isnan(X))
        X[r, c] = self.means[c]
        return X


class _Standardizer:
    def __init__(self, X):
        self.mu = X.mean(axis=0)
        sd = X.std(axis=0)
        self.sd = np.where(sd > 0, sd, 1.0)

    def __call__(self, X):
        return (X - self.mu) / self.sd


def _prepare(X, y):
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y).astype(np.int64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise EmptyMatrix("no training rows")
    if np.unique(y).size < 2:
        raise SingleClassData("training labels contain a single class")
    return X, y


class Baseline:
    kind = None

    def predict_proba(self, X):
        raise NotImplementedError

    def predict(self, X):
        return (self.predict_proba(X) >= 0.5).astype(np.int64)


class LogisticRegression(Baseline):
    """L2-penalised logistic regression fitted by full-batch gradient descent."""

    kind = "logistic_regression"

    def __init__(self, l2=1.0, lr=0.5, tol=1e-6, max_iter=5000):
        self.l2, self.lr, self.tol, self.max_iter = l2, lr, tol, max_iter

    def fit(self, X, y, seed=0):
        X, y = _prepare(X, y)
        self.imputer = _Imputer(X)
        Z = self.imputer(X)
        self.scaler = _Standardizer(Z)
        Z = self.scaler(Z)
        n, d = Z.shape
        w = np.zeros(d)
        b = 0.0
        self.n_iter = self.max_iter
        for it in range(self.max_iter):
            p = expit(Z @ w + b)
            r = p - y
            gw = Z.T @ r / n + self.l2 * w / n
            gb = r.mean()
            if np.sqrt(gw @ gw + gb * gb) < self.tol:
                self.n_iter = it
                break
            w -= self.lr * gw
            b -= self.lr * gb
        self.coef, self.intercept = w, b
        return self

    def predict_proba(self, X):
        return expit(self.scaler(self.imputer(X)) @ self.coef + self.intercept)


class DecisionTree(Baseline):
    """Single CART tree on Gini impurity with midpoint thresholds."""

    kind = "decision_tree"

    def __init__(self, max_depth=8, min_samples_leaf=1):
        self.max_depth, self.min_samples_leaf = max_depth, min_samples_leaf

    def fit(self, X, y, seed=0):
        X, y = _prepare(X, y)
        self.imputer = _Imputer(X)
        Z = self.imputer(X)
        self.nodes = []
        self._grow(Z, y.astype(np.float64), np.arange(len(y)), 0)
        return self

    def _best(self, Z, y, idx):
        n = idx.size
        pos = y[idx].sum()
        parent = 1.0 - (pos / n) ** 2 - (1 - pos / n) ** 2
        best = (0.0, -1, 0.0)
        msl = self.min_samples_leaf
        for j in range(Z.shape[1]):
            order = idx[np.argsort(Z[idx, j], kind="stable")]
            v = Z[order, j]
            cp = np.cumsum(y[order])[:-1]
            nl = np.arange(1, n)
            nr = n - nl
            pl, pr = cp / nl, (pos - cp) / nr
            gini = (nl * (1 - pl ** 2 - (1 - pl) ** 2) + nr * (1 - pr ** 2 - (1 - pr) ** 2)) / n
            ok = (v[1:] > v[:-1]) & (nl >= msl) & (nr >= msl)
            if not ok.any():
                continue
            gain = np.where(ok, parent - gini, -np.inf)
            i = int(np.argmax(gain))
            if gain[i] > best[0] + 1e-12:
                thr = 0.5 * (v[i] + v[i + 1])
                if thr <= v[i]:
                    thr = v[i + 1]
                best = (float(gain[i]), j, float(thr))
        return best

    def _grow(self, Z, y, idx, depth):
        node = len(self.nodes)
        self.nodes.append([-1, 0.0, -1, -1, float(y[idx].mean())])
        if depth >= self.max_depth or idx.size < 2 * self.min_samples_leaf:
            return node
        gain, j, thr = self._best(Z, y, idx)
        if j < 0:
            return node
        mask = Z[idx, j] < thr
        left = self._grow(Z, y, idx[mask], depth + 1)
        right = self._grow(Z, y, idx[~mask], depth + 1)
        self.nodes[node][:4] = [j, thr, left, right]
        return node

    def predict_proba(self, X):
        Z = self.imputer(X)
        out = np.empty(Z.shape[0])
        for i, row in enumerate(Z):
            k = 0
            while self.nodes[k][0] >= 0:
                j, thr, l, r, _ = self.nodes[k]
                k = l if row[j] < thr else r
            out[i] = self.nodes[k][4]
        return out


class NaiveBayes(Baseline):
    """Gaussian naive Bayes with a small variance floor."""

    kind = "naive_bayes"

    def __init__(self, var_smoothing=1e-9):
        self.var_smoothing = var_smoothing

    def fit(self, X, y, seed=0):
        X, y = _prepare(X, y)
        self.imputer = _Imputer(X)
        Z = self.imputer(X)
        eps = self.var_smoothing * max(float(Z.var(axis=0).max()), 1.0)
        self.log_prior = np.log(np.array([np.mean(y == c) for c in (0, 1)]))
        self.mu = np.stack([Z[y == c].mean(axis=0) for c in (0, 1)])
        self.var = np.stack([Z[y == c].var(axis=0) for c in (0, 1)]) + eps
        return self

    def _joint(self, Z):
        ll = -0.5 * (np.log(2 * np.pi * self.var)[None] + (Z[:, None, :] - self.mu[None]) ** 2 / self.var[None])
        return ll.sum(axis=2) + self.log_prior[None]

    def predict_proba(self, X):
        j = self._joint(self.imputer(X))
        return expit(j[:, 1] - j[:, 0])

    def predict(self, X):
        j = self._joint(self.imputer(X))
        return (j[:, 1] > j[:, 0]).astype(np.int64)


class KNearestNeighbors(Baseline):
    """Euclidean k-NN on standardised features; vote ties go to class 0."""

    kind = "knn"

    def __init__(self, k=5):
        if k < 1:
            raise ValueError("k must be >= 1")
        self.k = k

    def fit(self, X, y, seed=0):
        X, y = _prepare(X, y)
        self.imputer = _Imputer(X)
        Z = self.imputer(X)
        self.scaler = _Standardizer(Z)
        self.Z = self.scaler(Z)
        self.y = y
        return self

    def predict_proba(self, X):
        Q = self.scaler(self.imputer(X))
        k = min(self.k, self.Z.shape[0])
        out = np.empty(Q.shape[0])
        for i, q in enumerate(Q):
            d = np.sum((self.Z - q) ** 2, axis=1)
            nn = np.argsort(d, kind="stable")[:k]
            out[i] = self.y[nn].mean()
        return out

    def predict(self, X):
        # a 50/50 vote is not a majority for class 1
        return (self.predict_proba(X) > 0.5).astype(np.int64)


_KINDS = {
    "logistic_regression": LogisticRegression,
    "decision_tree": DecisionTree,
    "naive_bayes": NaiveBayes,
    "knn": KNearestNeighbors,
}


def train_baseline(kind, X, y, params=None, seed=0):
    if kind not in _KINDS:
        raise ValueError(f"unknown baseline {kind!r}; choose from {', '.join(BASELINE_KINDS)}")
    return _KINDS[kind](**(params or {})).fit(X, y, seed)
