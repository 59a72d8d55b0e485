"""Stratified k-fold cross-validation and random hyperparameter search."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ..errors import ContractError, DegenerateError
from .model import ForestParams, fit_forest, micro_f1, predict

DEFAULT_SPACE = {
    "n_trees": [50, 100, 200, 400],
    "max_depth": [3, 5, 8, None],
    "min_samples_leaf": [1, 2, 4],
    "m_features": ["sqrt", "third", "all"],
}


class StratificationError(DegenerateError):
    code = "STRATIFICATION"


def stratified_folds(y, k: int, seed: int) -> list[np.ndarray]:
    """Test-index arrays for k folds; each class is shuffled and dealt round-robin."""
    y = np.asarray(y)
    if k < 2:
        raise ContractError("k_folds must be >= 2")
    classes, counts = np.unique(y, return_counts=True)
    small = classes[counts < k]
    if small.size:
        raise StratificationError(
            f"classes {small.tolist()} have fewer than {k} members; cannot stratify")
    rng = np.random.default_rng(np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, 7]))
    assignment = np.empty(y.size, dtype=np.intp)
    offset = 0
    for c in classes:
        members = rng.permutation(np.flatnonzero(y == c))
        # continue the deal where the previous class stopped to balance fold sizes
        assignment[members] = (np.arange(members.size) + offset) % k
        offset += members.size
    return [np.flatnonzero(assignment == f) for f in range(k)]


def cross_val_f1(X, y, params: ForestParams, k_folds: int = 3, seed: int = 0,
                 n_classes=None, n_jobs: int = 1) -> float:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.intp)
    n_classes = int(y.max()) + 1 if n_classes is None else n_classes
    scores = []
    for test in stratified_folds(y, k_folds, seed):
        train = np.setdiff1d(np.arange(y.size), test)
        model = fit_forest(X[train], y[train], params, n_classes=n_classes, n_jobs=n_jobs)
        scores.append(micro_f1(predict(model, X[test]), y[test]))
    return float(np.mean(scores))


@dataclass(frozen=True)
class SearchResult:
    params: ForestParams
    cv_score: float
    history: tuple[tuple[ForestParams, float], ...]


def random_search(X, y, param_space=None, n_iter: int = 10, k_folds: int = 3, seed: int = 0,
                  base: ForestParams | None = None, n_classes=None, n_jobs: int = 1) -> SearchResult:
    """Draw ``n_iter`` settings uniformly per parameter and keep the best mean CV micro-F1.

    Earlier draws win ties. Each draw is fitted with the search seed so that
    candidates differ only in their hyperparameters.
    """
    if n_iter < 1:
        raise ContractError("n_iter must be >= 1")
    space = DEFAULT_SPACE if param_space is None else param_space
    base = base or ForestParams()
    stratified_folds(y, k_folds, seed)  # fail fast on tiny classes
    rng = np.random.default_rng(np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, 11]))
    history = []
    best = None
    for _ in range(n_iter):
        draw = {name: space[name][int(rng.integers(len(space[name])))] for name in sorted(space)}
        params = replace(base, seed=int(seed), **draw)
        score = cross_val_f1(X, y, params, k_folds, seed, n_classes, n_jobs)
        history.append((params, score))
        if best is None or score > best[1]:
            best = (params, score)
    return SearchResult(best[0], best[1], tuple(history))
