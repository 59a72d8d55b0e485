"""The compiled kernels must agree bit for bit with the pure-Python fallback."""
import numpy as np
import pytest

from floodrank.forest import _pytree

ctree = pytest.importorskip("floodrank.forest._ctree")

FIELDS = ("feature", "threshold", "left", "right", "delta", "n_samples", "counts")


def fixture(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 60))
    d = int(rng.integers(1, 7))
    if seed % 3 == 0:
        X = rng.integers(0, 4, size=(n, d)).astype(float)   # many ties
    else:
        X = rng.normal(size=(n, d))
    c = int(rng.integers(2, 5))
    y = rng.integers(0, c, size=n).astype(np.intp)
    rows = rng.integers(0, n, size=n).astype(np.intp)
    return X, y, rows, c, d, rng


def test_splitmix_sequences_agree():
    a = b = 0x9E3779B97F4A7C15
    for _ in range(1000):
        za, a = _pytree.splitmix_next(a)
        zb, b = ctree.splitmix_next(b)
        assert za == zb and a == b


@pytest.mark.parametrize("seed", range(60))
def test_grow_and_apply_identical(seed):
    X, y, rows, c, d, rng = fixture(seed)
    depth = int(rng.choice([-1, 2, 4]))
    msl = int(rng.integers(1, 4))
    m = int(rng.integers(1, d + 1))
    state = int(rng.integers(0, 2**63))
    a = _pytree.grow(X, y, rows, c, depth, msl, m, state)
    b = ctree.grow(X, y, rows, c, depth, msl, m, state)
    for k in FIELDS:
        assert np.array_equal(np.asarray(a[k]), np.asarray(b[k])), k
    pa = _pytree.apply(a["feature"], a["threshold"], a["left"], a["right"], X)
    pb = ctree.apply(b["feature"], b["threshold"], b["left"], b["right"], X)
    assert np.array_equal(pa, pb)


@pytest.mark.parametrize("seed", range(40))
def test_best_split_identical(seed):
    X, y, rows, c, d, _ = fixture(seed)
    feats = list(range(d))
    assert _pytree.best_split(X, y, rows, feats, c, 1) == ctree.best_split(X, y, rows, feats, c, 1)
