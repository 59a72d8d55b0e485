"""Pure-Python tree kernels. Reference twin of ``_ctree.pyx``; both must agree bit for bit.

Split choice uses exact integer arithmetic on class counts, so ties and the
"positive gain" test never depend on rounding. For a split of ``n`` samples
into ``nl``/``nr`` with squared-count sums ``sl``/``sr`` (parent ``sp``), the
weighted child impurity is minimised by maximising ``(sl*nr + sr*nl) / (nl*nr)``
and the gain is positive iff ``(sl*nr + sr*nl) * n > sp * nl * nr``.
"""
from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
LEAF = -1


def splitmix_next(state: int) -> tuple[int, int]:
    state = (state + 0x9E3779B97F4A7C15) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31), state


def draw_features(n_features: int, m: int, state: int) -> tuple[list[int], int]:
    """m distinct indices from range(n_features) by partial Fisher-Yates, in draw order.

    Draw order matters: equal-gain splits go to the earliest drawn feature, so
    ties are broken at random instead of always favouring low indices.
    """
    perm = list(range(n_features))
    for i in range(m):
        r, state = splitmix_next(state)
        j = i + r % (n_features - i)
        perm[i], perm[j] = perm[j], perm[i]
    return perm[:m], state


def gini_counts(counts, total: int) -> float:
    s = 0.0
    for c in counts:
        p = c / total
        s += p * (1.0 - p)
    return s


def split_delta(parent, left, right) -> float:
    n = sum(parent)
    nl = sum(left)
    nr = sum(right)
    return (gini_counts(parent, n) - (nl / n) * gini_counts(left, nl)
            - (nr / n) * gini_counts(right, nr))


def midpoint(a: float, b: float) -> float:
    t = (a + b) / 2.0
    return t if t > a else b


def _find_split(X, y, idx, features, n_classes, msl):
    n = len(idx)
    yr = y[idx]
    parent = np.bincount(yr, minlength=n_classes).astype(np.int64)
    sp = int((parent * parent).sum())
    best = None  # (a, den, feature, threshold)
    for f in features:
        vals = X[idx, f]
        order = np.argsort(vals, kind="stable")
        v = vals[order]
        onehot = np.zeros((n, n_classes), dtype=np.int64)
        onehot[np.arange(n), yr[order]] = 1
        cum = onehot.cumsum(axis=0)
        pos = np.flatnonzero(v[:-1] < v[1:])
        nl = pos + 1
        nr = n - nl
        ok = (nl >= msl) & (nr >= msl)
        pos, nl, nr = pos[ok], nl[ok], nr[ok]
        if pos.size == 0:
            continue
        left = cum[pos]
        right = parent[None, :] - left
        sl = (left * left).sum(axis=1)
        sr = (right * right).sum(axis=1)
        a = sl * nr + sr * nl
        den = nl * nr
        score = a / den
        # float shortlist, then exact comparison in Python ints
        top = np.flatnonzero(score >= score.max() * (1.0 - 1e-9))
        fa, fden, fpos = None, None, None
        for k in top:
            ak, dk = int(a[k]), int(den[k])
            if fa is None or ak * fden > fa * dk:
                fa, fden, fpos = ak, dk, int(pos[k])
        if fa * n <= sp * fden:
            continue
        if best is None or fa * best[1] > best[0] * fden:
            best = (fa, fden, int(f), midpoint(float(v[fpos]), float(v[fpos + 1])))
    return best


def best_split(X, y, rows, features, n_classes, min_samples_leaf=1):
    """Best (feature, threshold, delta_gini) over ``features`` for the node holding ``rows``."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.intp)
    idx = np.ascontiguousarray(rows, dtype=np.intp)
    if idx.size < 2:
        return None
    found = _find_split(X, y, idx, sorted(int(f) for f in features), n_classes, min_samples_leaf)
    if found is None:
        return None
    _, _, f, thr = found
    go_left = X[idx, f] < thr
    parent = np.bincount(y[idx], minlength=n_classes).tolist()
    left = np.bincount(y[idx[go_left]], minlength=n_classes).tolist()
    right = [p - l for p, l in zip(parent, left)]
    return f, thr, split_delta(parent, left, right)


def grow(X, y, rows, n_classes, max_depth, min_samples_leaf, m_features, state):
    """Grow one tree depth-first (left subtree first). ``max_depth < 0`` means unlimited.

    Returns flat node arrays; leaves have ``feature == -1``.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.intp)
    idx = np.array(rows, dtype=np.intp)
    n_features = X.shape[1]
    feature, threshold, left, right, delta, n_samples, counts = [], [], [], [], [], [], []

    def new_node(cnt):
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        delta.append(0.0)
        n_samples.append(int(sum(cnt)))
        counts.append(cnt)
        return len(feature) - 1

    root = new_node(np.bincount(y[idx], minlength=n_classes).tolist())
    stack = [(root, 0, len(idx), 0)]
    while stack:
        node, start, end, depth = stack.pop()
        n = end - start
        cnt = counts[node]
        if ((0 <= max_depth <= depth) or max(cnt) == n or n < 2 * min_samples_leaf):
            continue
        feats, state = draw_features(n_features, m_features, state)
        seg = idx[start:end]
        found = _find_split(X, y, seg, feats, n_classes, min_samples_leaf)
        if found is None:
            continue
        _, _, f, thr = found
        go_left = X[seg, f] < thr
        lrows, rrows = seg[go_left], seg[~go_left]
        idx[start:end] = np.concatenate([lrows, rrows])
        lcnt = np.bincount(y[lrows], minlength=n_classes).tolist()
        rcnt = [p - l for p, l in zip(cnt, lcnt)]
        feature[node] = f
        threshold[node] = thr
        delta[node] = split_delta(cnt, lcnt, rcnt)
        li = new_node(lcnt)
        ri = new_node(rcnt)
        left[node], right[node] = li, ri
        mid = start + len(lrows)
        stack.append((ri, mid, end, depth + 1))
        stack.append((li, start, mid, depth + 1))

    return {
        "feature": np.array(feature, dtype=np.intp),
        "threshold": np.array(threshold, dtype=np.float64),
        "left": np.array(left, dtype=np.intp),
        "right": np.array(right, dtype=np.intp),
        "delta": np.array(delta, dtype=np.float64),
        "n_samples": np.array(n_samples, dtype=np.intp),
        "counts": np.array(counts, dtype=np.intp).reshape(len(feature), n_classes),
    }


def apply(feature, threshold, left, right, X):
    """Leaf index reached by each row of X (strict ``<`` goes left)."""
    X = np.asarray(X, dtype=np.float64)
    out = np.zeros(X.shape[0], dtype=np.intp)
    active = np.arange(X.shape[0])
    node = np.zeros(X.shape[0], dtype=np.intp)
    while active.size:
        nd = node[active]
        f = feature[nd]
        internal = f != LEAF
        done = active[~internal]
        out[done] = nd[~internal]
        active, nd, f = active[internal], nd[internal], f[internal]
        go_left = X[active, f] < threshold[nd]
        node[active] = np.where(go_left, left[nd], right[nd])
    return out
