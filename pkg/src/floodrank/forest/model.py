"""Bagged CART forest with Gini splits and mean-decrease-in-impurity importance."""
from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from ..errors import ContractError
from . import _backend

FORMAT_VERSION = "floodrank-forest/1"
LEAF = -1


def gini(class_counts) -> float:
    counts = [int(c) for c in class_counts]
    if any(c < 0 for c in counts):
        raise ContractError("class counts must be non-negative")
    total = sum(counts)
    if total == 0:
        raise ContractError("gini of an empty node is undefined")
    return _backend._pytree.gini_counts(counts, total)


def delta_gini(parent_counts, left_counts, right_counts) -> float:
    parent = [int(c) for c in parent_counts]
    left = [int(c) for c in left_counts]
    right = [int(c) for c in right_counts]
    if len(parent) != len(left) or len(parent) != len(right) or \
            any(p != l + r for p, l, r in zip(parent, left, right)):
        raise ContractError("left + right counts must equal parent counts element-wise")
    if sum(left) == 0 or sum(right) == 0:
        raise ContractError("both children must be non-empty")
    return _backend._pytree.split_delta(parent, left, right)


def resolve_m_features(value, n_features: int) -> int:
    """Accepts an int or one of 'sqrt', 'third', 'all'."""
    if isinstance(value, str):
        m = {"sqrt": math.ceil(math.sqrt(n_features)),
             "third": math.ceil(n_features / 3),
             "all": n_features}.get(value)
        if m is None:
            raise ContractError(f"unknown m_features rule {value!r}")
    else:
        m = int(value)
    if not 1 <= m <= n_features:
        raise ContractError(f"m_features must be in [1, {n_features}], got {m}")
    return m


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 100
    max_depth: int | None = None
    min_samples_leaf: int = 1
    m_features: int | str = "sqrt"
    bootstrap: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.n_trees < 1:
            raise ContractError("n_trees must be >= 1")
        if self.max_depth is not None and self.max_depth < 0:
            raise ContractError("max_depth must be >= 0 or None")
        if self.min_samples_leaf < 1:
            raise ContractError("min_samples_leaf must be >= 1")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> ForestParams:
        return cls(**{k: data[k] for k in cls.__dataclass_fields__ if k in data})


def tree_streams(seed: int, tree_index: int):
    """(bootstrap Generator, uint64 feature-sampling state) for one tree."""
    base = int(seed) & 0xFFFFFFFFFFFFFFFF
    boot = np.random.default_rng(np.random.SeedSequence([base, tree_index, 0]))
    state = int(np.random.SeedSequence([base, tree_index, 1]).generate_state(1, np.uint64)[0])
    return boot, state


@dataclass
class Tree:
    """Flat node arrays; node 0 is the root, leaves have ``feature == -1``."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    delta: np.ndarray
    n_samples: np.ndarray
    counts: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def n_splits(self) -> int:
        return int((self.feature != LEAF).sum())

    def apply(self, X) -> np.ndarray:
        return _backend.kernels.apply(self.feature, self.threshold, self.left, self.right, X)

    def leaf_votes(self) -> np.ndarray:
        # argmax takes the first maximum, i.e. the lower class index on ties
        return self.counts.argmax(axis=1)

    def predict(self, X) -> np.ndarray:
        return self.leaf_votes()[self.apply(X)]

    def importance(self, n_features: int) -> np.ndarray:
        """Per-feature sum of split impurity decreases, unweighted by node size."""
        # fsum keeps the result independent of node numbering
        parts: list[list[float]] = [[] for _ in range(n_features)]
        for f, d in zip(self.feature.tolist(), self.delta.tolist()):
            if f != LEAF:
                parts[f].append(d)
        return np.array([math.fsum(p) for p in parts], dtype=float)

    def to_node(self, i: int = 0) -> dict:
        if self.feature[i] == LEAF:
            return {"class_counts": [int(c) for c in self.counts[i]]}
        return {
            "feature": int(self.feature[i]),
            "threshold": float(self.threshold[i]),
            "delta_gini": float(self.delta[i]),
            "n_samples": int(self.n_samples[i]),
            "class_counts": [int(c) for c in self.counts[i]],
            "left": self.to_node(int(self.left[i])),
            "right": self.to_node(int(self.right[i])),
        }

    @classmethod
    def from_node(cls, root: dict, n_classes: int) -> Tree:
        cols = {k: [] for k in ("feature", "threshold", "left", "right", "delta", "n_samples", "counts")}

        def visit(node) -> int:
            i = len(cols["feature"])
            for k in cols:
                cols[k].append(None)
            cnt = node["class_counts"]
            cols["counts"][i] = cnt
            cols["n_samples"][i] = node.get("n_samples", sum(cnt))
            if "feature" not in node:
                cols["feature"][i], cols["threshold"][i], cols["delta"][i] = LEAF, 0.0, 0.0
                cols["left"][i] = cols["right"][i] = LEAF
                return i
            cols["feature"][i] = node["feature"]
            cols["threshold"][i] = node["threshold"]
            cols["delta"][i] = node["delta_gini"]
            cols["left"][i] = visit(node["left"])
            cols["right"][i] = visit(node["right"])
            return i

        visit(root)
        return cls(
            feature=np.array(cols["feature"], dtype=np.intp),
            threshold=np.array(cols["threshold"], dtype=np.float64),
            left=np.array(cols["left"], dtype=np.intp),
            right=np.array(cols["right"], dtype=np.intp),
            delta=np.array(cols["delta"], dtype=np.float64),
            n_samples=np.array(cols["n_samples"], dtype=np.intp),
            counts=np.array(cols["counts"], dtype=np.intp).reshape(-1, n_classes),
        )

    def canonical(self) -> Tree:
        """Same tree with nodes renumbered in pre-order (the serialized layout)."""
        return Tree.from_node(self.to_node(), self.counts.shape[1])


@dataclass
class RandomForestModel:
    trees: list[Tree]
    params: ForestParams
    n_classes: int
    feature_count: int
    m_features: int = field(default=0)

    def to_json(self) -> str:
        doc = {
            "version": FORMAT_VERSION,
            "params": self.params.to_dict(),
            "n_classes": self.n_classes,
            "feature_count": self.feature_count,
            "m_features": self.m_features,
            "trees": [t.to_node() for t in self.trees],
        }
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str) -> RandomForestModel:
        doc = json.loads(text)
        if doc.get("version") != FORMAT_VERSION:
            raise ContractError(f"unsupported model version {doc.get('version')!r}")
        n_classes = int(doc["n_classes"])
        return cls(
            trees=[Tree.from_node(t, n_classes) for t in doc["trees"]],
            params=ForestParams.from_dict(doc["params"]),
            n_classes=n_classes,
            feature_count=int(doc["feature_count"]),
            m_features=int(doc["m_features"]),
        )


def _check_xy(X, y):
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.intp)
    if X.ndim != 2 or X.shape[0] == 0 or X.shape[1] == 0:
        raise ContractError("X must be a non-empty 2-D array")
    if y.shape != (X.shape[0],):
        raise ContractError("y must have one label per row of X")
    if y.min() < 0:
        raise ContractError("class indices must be >= 0")
    if not np.isfinite(X).all():
        raise ContractError("X contains non-finite values")
    return X, y


def best_split(X, y, rows, candidate_features, n_classes=None, min_samples_leaf=1):
    """(feature, threshold, delta_gini) of the best split, or None.

    Thresholds sit at midpoints between consecutive distinct values; rows with
    value ``< threshold`` go left. Ties prefer the lower feature, then the lower threshold.
    """
    X, y = _check_xy(X, y)
    if not len(candidate_features):
        raise ContractError("candidate feature set is empty")
    n_classes = int(y.max()) + 1 if n_classes is None else n_classes
    return _backend.kernels.best_split(X, y, rows, candidate_features, n_classes, min_samples_leaf)


def grow_tree(X, y, params: ForestParams, rows=None, n_classes=None, state: int = 0) -> Tree:
    X, y = _check_xy(X, y)
    rows = np.arange(X.shape[0]) if rows is None else np.asarray(rows, dtype=np.intp)
    if rows.size == 0:
        raise ContractError("cannot grow a tree on an empty sample")
    n_classes = int(y.max()) + 1 if n_classes is None else n_classes
    m = resolve_m_features(params.m_features, X.shape[1])
    depth = -1 if params.max_depth is None else params.max_depth
    out = _backend.kernels.grow(X, y, rows, n_classes, depth, params.min_samples_leaf, m, state)
    return Tree(**out)


def fit_forest(X, y, params: ForestParams, n_classes=None, n_jobs: int = 1) -> RandomForestModel:
    """Tree ``i`` uses streams derived from ``(params.seed, i)``, so the model does
    not depend on ``n_jobs``."""
    X, y = _check_xy(X, y)
    n = X.shape[0]
    n_classes = int(y.max()) + 1 if n_classes is None else int(n_classes)
    if y.max() >= n_classes:
        raise ContractError("class index out of range")
    m = resolve_m_features(params.m_features, X.shape[1])

    def one(i):
        boot, state = tree_streams(params.seed, i)
        rows = boot.integers(0, n, size=n) if params.bootstrap else np.arange(n)
        return grow_tree(X, y, params, rows=rows, n_classes=n_classes, state=state)

    if n_jobs == 1 or params.n_trees == 1:
        trees = [one(i) for i in range(params.n_trees)]
    else:
        workers = None if n_jobs in (None, 0, -1) else n_jobs
        with ThreadPoolExecutor(max_workers=workers) as ex:
            trees = list(ex.map(one, range(params.n_trees)))
    return RandomForestModel(trees, params, n_classes, X.shape[1], m)


def _majority(votes: np.ndarray, n_classes: int) -> np.ndarray:
    """Column-wise majority of a (n_trees, n_rows) vote matrix; ties -> lower class."""
    tally = np.zeros((n_classes, votes.shape[1]), dtype=np.intp)
    for row in votes:
        tally[row, np.arange(votes.shape[1])] += 1
    return tally.argmax(axis=0)


def predict(model: RandomForestModel, X) -> np.ndarray:
    X = np.ascontiguousarray(X, dtype=np.float64)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    if X.shape[1] != model.feature_count:
        raise ContractError(f"expected {model.feature_count} features, got {X.shape[1]}")
    votes = np.stack([t.predict(X) for t in model.trees])
    out = _majority(votes, model.n_classes)
    return int(out[0]) if single else out


def forest_importance(model: RandomForestModel) -> np.ndarray:
    """Per-tree impurity decreases normalised to sum 1, averaged over all trees.

    A tree without splits contributes a zero vector.
    """
    if not model.trees:
        raise ContractError("model has no trees")
    total = np.zeros(model.feature_count)
    for t in model.trees:
        imp = t.importance(model.feature_count)
        s = math.fsum(imp.tolist())
        if s > 0:
            total += imp / s
    return total / len(model.trees)


def micro_f1(predictions, labels) -> float:
    """Micro-averaged F1. For single-label multiclass data this is plain accuracy."""
    p = np.asarray(predictions)
    t = np.asarray(labels)
    if p.shape != t.shape:
        raise ContractError("predictions and labels differ in length")
    if p.size == 0:
        raise ContractError("micro-F1 of an empty set is undefined")
    tp = int((p == t).sum())
    # every miss is one false positive (for the predicted class) and one false negative
    fp = fn = p.size - tp
    return 2 * tp / (2 * tp + fp + fn)


def with_seed(params: ForestParams, seed: int) -> ForestParams:
    return replace(params, seed=int(seed))
