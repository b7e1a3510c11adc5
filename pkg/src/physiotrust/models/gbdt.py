"""Second-order gradient-boosted regression trees with a logistic link.

Trees are grown depth-first with exact split enumeration.  For every candidate
split the rows whose feature value is missing are tried on both sides and
the better side becomes the node's default direction.  Split search and
prediction run through ``physiotrust.kernels``.
"""

import hashlib
import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np
from scipy.special import expit

from .. import kernels
from ..errors import EmptyMatrix, SchemaMismatch, SingleClassData, VersionMismatch

MODEL_FORMAT = "physiotrust-gbdt"
MODEL_VERSION = 1


@dataclass(frozen=True)
class Hyperparameters:
    n_trees: int = 100
    max_depth: int = 4
    eta: float = 0.1
    lam: float = 1.0
    gamma: float = 0.0
    subsample: float = 1.0
    colsample: float = 1.0
    min_child_weight: float = 1.0

    def __post_init__(self):
        if self.n_trees < 0 or self.max_depth < 0:
            raise ValueError("n_trees and max_depth must be non-negative")
        if not self.eta > 0:
            raise ValueError("eta must be positive")
        if self.lam < 0 or self.gamma < 0 or self.min_child_weight < 0:
            raise ValueError("lambda, gamma and min_child_weight must be non-negative")
        if not (0 < self.subsample <= 1 and 0 < self.colsample <= 1):
            raise ValueError("subsample and colsample must lie in (0, 1]")

    def to_dict(self):
        d = asdict(self)
        d["lambda"] = d.pop("lam")
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "lambda" in d:
            d["lam"] = d.pop("lambda")
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ValueError(f"unknown hyperparameters: {sorted(unknown)}")
        d["n_trees"] = int(d.get("n_trees", cls.n_trees))
        d["max_depth"] = int(d.get("max_depth", cls.max_depth))
        return cls(**d)

    @classmethod
    def from_config(cls, cfg):
        return cls(
            n_trees=int(cfg["model.n_trees"]),
            max_depth=int(cfg["model.max_depth"]),
            eta=float(cfg["model.eta"]),
            lam=float(cfg["model.lambda"]),
            gamma=float(cfg["model.gamma"]),
            subsample=float(cfg["model.subsample"]),
            colsample=float(cfg["model.colsample"]),
            min_child_weight=float(cfg["model.min_child_weight"]),
        )


def schema_hash(feature_names):
    return hashlib.sha256("\n".join(feature_names).encode("utf-8")).hexdigest()[:16]


class Tree:
    """Flat node arrays; node 0 is the root, leaves have feature == -1."""

    __slots__ = ("feature", "threshold", "left", "right", "default_left", "value", "cover", "gain")

    def __init__(self, feature, threshold, left, right, default_left, value, cover, gain):
        self.feature = np.ascontiguousarray(feature, dtype=np.int64)
        self.threshold = np.ascontiguousarray(threshold, dtype=np.float64)
        self.left = np.ascontiguousarray(left, dtype=np.int64)
        self.right = np.ascontiguousarray(right, dtype=np.int64)
        self.default_left = np.ascontiguousarray(default_left, dtype=np.uint8)
        self.value = np.ascontiguousarray(value, dtype=np.float64)
        self.cover = np.ascontiguousarray(cover, dtype=np.float64)
        self.gain = np.ascontiguousarray(gain, dtype=np.float64)

    def __len__(self):
        return self.feature.shape[0]

    @property
    def is_leaf(self):
        return self.feature < 0

    def used_features(self):
        return sorted(set(int(f) for f in self.feature if f >= 0))

    def depth(self, node=0):
        if self.feature[node] < 0:
            return 0
        return 1 + max(self.depth(self.left[node]), self.depth(self.right[node]))

    def to_nodes(self):
        nodes = []
        for i in range(len(self)):
            if self.feature[i] < 0:
                nodes.append({"id": i, "leaf": float(self.value[i]), "cover": float(self.cover[i])})
            else:
                nodes.append({
                    "id": i,
                    "feature": int(self.feature[i]),
                    "threshold": float(self.threshold[i]),
                    "default": "left" if self.default_left[i] else "right",
                    "left": int(self.left[i]),
                    "right": int(self.right[i]),
                    "cover": float(self.cover[i]),
                    "gain": float(self.gain[i]),
                })
        return nodes

    @classmethod
    def from_nodes(cls, nodes):
        n = len(nodes)
        feature = np.full(n, -1, dtype=np.int64)
        threshold = np.zeros(n)
        left = np.full(n, -1, dtype=np.int64)
        right = np.full(n, -1, dtype=np.int64)
        default_left = np.zeros(n, dtype=np.uint8)
        value = np.zeros(n)
        cover = np.zeros(n)
        gain = np.zeros(n)
        for node in nodes:
            i = node["id"]
            if "cover" in node:
                cover[i] = node["cover"]
            else:
                cover[i] = np.nan
            if "leaf" in node:
                value[i] = node["leaf"]
            else:
                feature[i] = node["feature"]
                threshold[i] = node["threshold"]
                default_left[i] = node["default"] == "left"
                left[i] = node["left"]
                right[i] = node["right"]
                gain[i] = node.get("gain", 0.0)
        return cls(feature, threshold, left, right, default_left, value, cover, gain)


class TreeEnsemble:
    def __init__(self, base_margin, eta, trees, feature_names, hyperparameters=None):
        self.base_margin = float(base_margin)
        self.eta = float(eta)
        self.trees = list(trees)
        self.feature_names = tuple(feature_names)
        self.hyperparameters = hyperparameters
        self._flat = None

    @property
    def n_features(self):
        return len(self.feature_names)

    @property
    def schema_hash(self):
        return schema_hash(self.feature_names)

    def truncated(self, n_trees):
        return TreeEnsemble(self.base_margin, self.eta, self.trees[:n_trees], self.feature_names,
                            self.hyperparameters)

    def _flatten(self):
        if self._flat is None:
            offsets = []
            parts = {k: [] for k in ("feature", "threshold", "left", "right", "default_left", "value")}
            off = 0
            for tree in self.trees:
                offsets.append(off)
                parts["feature"].append(tree.feature)
                parts["threshold"].append(tree.threshold)
                parts["left"].append(np.where(tree.left >= 0, tree.left + off, -1))
                parts["right"].append(np.where(tree.right >= 0, tree.right + off, -1))
                parts["default_left"].append(tree.default_left)
                parts["value"].append(tree.value)
                off += len(tree)
            flat = {}
            for k, v in parts.items():
                dtype = {"threshold": np.float64, "value": np.float64, "default_left": np.uint8}.get(k, np.int64)
                flat[k] = np.ascontiguousarray(np.concatenate(v) if v else np.zeros(0), dtype=dtype)
            flat["roots"] = np.asarray(offsets, dtype=np.int64)
            self._flat = flat
        return self._flat

    def _check(self, X):
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X.reshape(1, -1)
        if X.shape[1] != self.n_features:
            raise SchemaMismatch(f"expected {self.n_features} features, got {X.shape[1]}")
        return np.ascontiguousarray(X)

    def predict_margin(self, X, backend=None):
        X = self._check(X)
        k = backend or kernels.active
        f = self._flatten()
        if not self.trees:
            return np.full(X.shape[0], self.base_margin)
        return k.predict_margin(X, f["feature"], f["threshold"], f["left"], f["right"],
                                f["default_left"], f["value"], f["roots"], self.base_margin, self.eta)

    def predict_proba(self, X, backend=None):
        return expit(self.predict_margin(X, backend))

    def to_dict(self):
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "schema_hash": self.schema_hash,
            "feature_names": list(self.feature_names),
            "base_margin": self.base_margin,
            "eta": self.eta,
            "hyperparameters": self.hyperparameters.to_dict() if self.hyperparameters else None,
            "trees": [{"nodes": t.to_nodes()} for t in self.trees],
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=1, sort_keys=False) + "\n"

    @classmethod
    def from_dict(cls, d):
        if d.get("format") != MODEL_FORMAT:
            raise VersionMismatch(f"not a {MODEL_FORMAT} model file")
        if d.get("version") != MODEL_VERSION:
            raise VersionMismatch(f"model version {d.get('version')} unsupported (expected {MODEL_VERSION})")
        names = d["feature_names"]
        if schema_hash(names) != d["schema_hash"]:
            raise SchemaMismatch("schema_hash does not match feature_names")
        hyper = Hyperparameters.from_dict(d["hyperparameters"]) if d.get("hyperparameters") else None
        trees = [Tree.from_nodes(t["nodes"]) for t in d["trees"]]
        return cls(d["base_margin"], d["eta"], trees, names, hyper)

    def save(self, path):
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def load(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def _presort(X):
    """Row indices sorted by each column (missing last) plus present counts."""
    S = np.ascontiguousarray(np.argsort(X, axis=0, kind="stable").T.astype(np.int64))
    n_present = np.count_nonzero(~np.isnan(X), axis=0).astype(np.int64)
    return S, n_present


def _restrict(S_all, np_all, X, rows, cols):
    """Presorted order restricted to a row sample and a column subset."""
    S = S_all[cols]
    n_present = np_all[cols]
    if rows.size == X.shape[0]:
        return np.ascontiguousarray(S), np.ascontiguousarray(n_present)
    member = np.zeros(X.shape[0], dtype=bool)
    member[rows] = True
    mask = member[S]
    present = np.arange(S.shape[1])[None, :] < n_present[:, None]
    n_present = np.count_nonzero(mask & present, axis=1).astype(np.int64)
    S = np.ascontiguousarray(S[mask].reshape(S.shape[0], rows.size))
    return S, n_present


def train_gbdt(X, y, hyper=None, seed=0, feature_names=None, missing_routing=True,
               allow_single_class=False, backend=None):
    """Fit a boosted ensemble to binary labels ``y`` (0/1); NaN marks missing values."""
    hyper = hyper or Hyperparameters()
    k = backend or kernels.active
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise EmptyMatrix("no training rows")
    n, d = X.shape
    if y.shape != (n,):
        raise SchemaMismatch(f"label vector length {y.shape} does not match {n} rows")
    if feature_names is None:
        feature_names = [f"f{i}" for i in range(d)]
    if len(feature_names) != d:
        raise SchemaMismatch(f"{len(feature_names)} feature names for {d} columns")
    prevalence = float(y.mean())
    if prevalence in (0.0, 1.0):
        if not allow_single_class:
            raise SingleClassData("training labels contain a single class")
        prevalence = min(max(prevalence, 1e-6), 1 - 1e-6)
    base = float(np.log(prevalence / (1.0 - prevalence)))

    rng = np.random.default_rng(seed)
    margin = np.full(n, base)
    all_rows = np.arange(n, dtype=np.int64)
    # columns are scanned in name order so exact gain ties, and column
    # sampling, do not depend on where a feature sits in the matrix
    all_cols = np.argsort(np.asarray(feature_names, dtype=str), kind="stable").astype(np.int64)
    S_all, np_all = _presort(X)
    trees = []
    for _ in range(hyper.n_trees):
        p = expit(margin)
        g = np.ascontiguousarray(p - y)
        h = np.ascontiguousarray(p * (1.0 - p))
        if hyper.subsample < 1.0:
            m = max(1, int(round(hyper.subsample * n)))
            rows = np.sort(rng.choice(n, size=m, replace=False)).astype(np.int64)
        else:
            rows = all_rows
        if hyper.colsample < 1.0:
            m = max(1, int(round(hyper.colsample * d)))
            cols = all_cols[np.sort(rng.choice(d, size=m, replace=False))]
        else:
            cols = all_cols
        S, n_present = _restrict(S_all, np_all, X, rows, cols)
        tree = _grow_tree(X, g, h, rows, cols, S, n_present, hyper, missing_routing, k)
        trees.append(tree)
        leaves = k.leaf_index(X, tree.feature, tree.threshold, tree.left, tree.right, tree.default_left, 0)
        margin = margin + hyper.eta * tree.value[leaves]
    return TreeEnsemble(base, hyper.eta, trees, feature_names, hyper)


def _grow_tree(X, g, h, rows, cols, S, n_present, hyper, missing_routing, k):
    S = np.array(S, dtype=np.int64, order="C")
    arrays = k.grow_tree(X, g, h, S, np.ascontiguousarray(n_present, dtype=np.int64), cols,
                         int(hyper.max_depth), float(hyper.lam), float(hyper.gamma),
                         float(hyper.min_child_weight), bool(missing_routing))
    return Tree(*arrays)
