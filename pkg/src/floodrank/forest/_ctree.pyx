# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled tree kernels. Same algorithm and outputs as ``_pytree``; releases the GIL."""
import numpy as np
cimport numpy as cnp
from libc.stdint cimport int64_t, uint64_t
from libc.stdlib cimport free, malloc, qsort, realloc
from libc.string cimport memcpy

cnp.import_array()

cdef extern from *:
    """
    typedef __int128 fr_i128;
    """
    ctypedef long long fr_i128

ctypedef cnp.npy_intp intp

cdef struct Pair:
    double v
    intp y

cdef struct Split:
    intp feature
    double threshold
    int found

cdef struct Nodes:
    intp size
    intp cap
    intp n_classes
    intp* feature
    double* threshold
    intp* left
    intp* right
    double* delta
    intp* n_samples
    intp* counts

cdef struct Frame:
    intp node
    intp start
    intp end
    intp depth


cdef int _cmp_pair(const void* a, const void* b) noexcept nogil:
    cdef double va = (<Pair*>a).v
    cdef double vb = (<Pair*>b).v
    return (va > vb) - (va < vb)


cdef inline uint64_t _splitmix(uint64_t* s) noexcept nogil:
    s[0] += <uint64_t>0x9E3779B97F4A7C15
    cdef uint64_t z = s[0]
    z = (z ^ (z >> 30)) * <uint64_t>0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * <uint64_t>0x94D049BB133111EB
    return z ^ (z >> 31)


cdef inline double _gini(const intp* counts, intp n_classes, intp total) noexcept nogil:
    cdef double s = 0.0
    cdef double p
    cdef intp c
    for c in range(n_classes):
        p = <double>counts[c] / total
        s += p * (1.0 - p)
    return s


cdef inline double _midpoint(double a, double b) noexcept nogil:
    cdef double t = (a + b) / 2.0
    if t > a:
        return t
    return b


cdef void _find_split(const double* X, intp d, const intp* y, const intp* idx, intp n,
                      const intp* feats, intp nf, intp n_classes, intp msl,
                      Pair* pairs, int64_t* cl, int64_t* cr, int64_t* parent,
                      Split* out) noexcept nogil:
    cdef intp i, k, f, c, nl, nr
    cdef int64_t sp = 0, sl, sr
    cdef fr_i128 a, den, best_a = 0, best_den = 1
    out.found = 0
    for c in range(n_classes):
        parent[c] = 0
    for i in range(n):
        parent[y[idx[i]]] += 1
    for c in range(n_classes):
        sp += parent[c] * parent[c]
    for k in range(nf):
        f = feats[k]
        for i in range(n):
            pairs[i].v = X[idx[i] * d + f]
            pairs[i].y = y[idx[i]]
        qsort(pairs, n, sizeof(Pair), _cmp_pair)
        for c in range(n_classes):
            cl[c] = 0
            cr[c] = parent[c]
        sl = 0
        sr = sp
        for i in range(n - 1):
            c = pairs[i].y
            sl += 2 * cl[c] + 1
            cl[c] += 1
            sr -= 2 * cr[c] - 1
            cr[c] -= 1
            if not (pairs[i].v < pairs[i + 1].v):
                continue
            nl = i + 1
            nr = n - nl
            if nl < msl or nr < msl:
                continue
            a = <fr_i128>sl * nr + <fr_i128>sr * nl
            den = <fr_i128>nl * nr
            if a * n <= <fr_i128>sp * den:
                continue
            if not out.found or a * best_den > best_a * den:
                out.found = 1
                best_a = a
                best_den = den
                out.feature = f
                out.threshold = _midpoint(pairs[i].v, pairs[i + 1].v)


cdef int _reserve(Nodes* t, intp extra) noexcept nogil:
    cdef intp cap
    if t.size + extra <= t.cap:
        return 0
    cap = t.cap * 2
    while cap < t.size + extra:
        cap *= 2
    t.feature = <intp*>realloc(t.feature, cap * sizeof(intp))
    t.threshold = <double*>realloc(t.threshold, cap * sizeof(double))
    t.left = <intp*>realloc(t.left, cap * sizeof(intp))
    t.right = <intp*>realloc(t.right, cap * sizeof(intp))
    t.delta = <double*>realloc(t.delta, cap * sizeof(double))
    t.n_samples = <intp*>realloc(t.n_samples, cap * sizeof(intp))
    t.counts = <intp*>realloc(t.counts, cap * t.n_classes * sizeof(intp))
    if (t.feature == NULL or t.threshold == NULL or t.left == NULL or t.right == NULL
            or t.delta == NULL or t.n_samples == NULL or t.counts == NULL):
        return -1
    t.cap = cap
    return 0


cdef intp _new_node(Nodes* t, const intp* counts, intp n) noexcept nogil:
    cdef intp i = t.size
    cdef intp c
    t.feature[i] = -1
    t.threshold[i] = 0.0
    t.left[i] = -1
    t.right[i] = -1
    t.delta[i] = 0.0
    t.n_samples[i] = n
    for c in range(t.n_classes):
        t.counts[i * t.n_classes + c] = counts[c]
    t.size += 1
    return i


cdef void _free_nodes(Nodes* t) noexcept nogil:
    free(t.feature)
    free(t.threshold)
    free(t.left)
    free(t.right)
    free(t.delta)
    free(t.n_samples)
    free(t.counts)


cdef int _grow(const double* X, intp d, const intp* y, intp* idx, intp n_rows,
               intp n_classes, intp max_depth, intp msl, intp m, uint64_t* state,
               Nodes* t) noexcept nogil:
    cdef Pair* pairs = <Pair*>malloc(n_rows * sizeof(Pair))
    cdef intp* tmp = <intp*>malloc(n_rows * sizeof(intp))
    cdef int64_t* cl = <int64_t*>malloc(n_classes * sizeof(int64_t))
    cdef int64_t* cr = <int64_t*>malloc(n_classes * sizeof(int64_t))
    cdef int64_t* parent = <int64_t*>malloc(n_classes * sizeof(int64_t))
    cdef intp* lcnt = <intp*>malloc(n_classes * sizeof(intp))
    cdef intp* rcnt = <intp*>malloc(n_classes * sizeof(intp))
    cdef intp* perm = <intp*>malloc(d * sizeof(intp))
    cdef Frame* stack = <Frame*>malloc((2 * n_rows + 2) * sizeof(Frame))
    cdef intp sp = 0, i, j, k, c, node, start, end, depth, n, nl, nr, mx, li, ri, swap
    cdef double gp, gl, gr
    cdef Split s
    cdef int rc = 0
    if (pairs == NULL or tmp == NULL or cl == NULL or cr == NULL or parent == NULL
            or lcnt == NULL or rcnt == NULL or perm == NULL or stack == NULL):
        rc = -1
    else:
        for c in range(n_classes):
            lcnt[c] = 0
        for i in range(n_rows):
            lcnt[y[idx[i]]] += 1
        _new_node(t, lcnt, n_rows)
        stack[0].node = 0
        stack[0].start = 0
        stack[0].end = n_rows
        stack[0].depth = 0
        sp = 1
        while sp > 0:
            sp -= 1
            node = stack[sp].node
            start = stack[sp].start
            end = stack[sp].end
            depth = stack[sp].depth
            n = end - start
            mx = 0
            for c in range(n_classes):
                if t.counts[node * n_classes + c] > mx:
                    mx = t.counts[node * n_classes + c]
            if (max_depth >= 0 and depth >= max_depth) or mx == n or n < 2 * msl:
                continue
            # candidate features: partial Fisher-Yates, kept in draw order so
            # equal-gain ties go to a random feature rather than the lowest index
            for i in range(d):
                perm[i] = i
            for i in range(m):
                j = i + <intp>(_splitmix(state) % <uint64_t>(d - i))
                swap = perm[i]
                perm[i] = perm[j]
                perm[j] = swap
            _find_split(X, d, y, idx + start, n, perm, m, n_classes, msl,
                        pairs, cl, cr, parent, &s)
            if not s.found:
                continue
            # stable partition
            nl = 0
            for c in range(n_classes):
                lcnt[c] = 0
            for i in range(start, end):
                if X[idx[i] * d + s.feature] < s.threshold:
                    idx[start + nl] = idx[i]
                    lcnt[y[idx[i]]] += 1
                    nl += 1
                else:
                    tmp[i - start - nl] = idx[i]
            nr = n - nl
            for i in range(nr):
                idx[start + nl + i] = tmp[i]
            for c in range(n_classes):
                rcnt[c] = t.counts[node * n_classes + c] - lcnt[c]
            gp = _gini(t.counts + node * n_classes, n_classes, n)
            gl = _gini(lcnt, n_classes, nl)
            gr = _gini(rcnt, n_classes, nr)
            if _reserve(t, 2) != 0:
                rc = -1
                break
            t.feature[node] = s.feature
            t.threshold[node] = s.threshold
            t.delta[node] = gp - (<double>nl / n) * gl - (<double>nr / n) * gr
            li = _new_node(t, lcnt, nl)
            ri = _new_node(t, rcnt, nr)
            t.left[node] = li
            t.right[node] = ri
            stack[sp].node = ri
            stack[sp].start = start + nl
            stack[sp].end = end
            stack[sp].depth = depth + 1
            stack[sp + 1].node = li
            stack[sp + 1].start = start
            stack[sp + 1].end = start + nl
            stack[sp + 1].depth = depth + 1
            sp += 2
    free(pairs)
    free(tmp)
    free(cl)
    free(cr)
    free(parent)
    free(lcnt)
    free(rcnt)
    free(perm)
    free(stack)
    return rc


def splitmix_next(state):
    cdef uint64_t s = <uint64_t>state
    cdef uint64_t z = _splitmix(&s)
    return int(z), int(s)


def best_split(X, y, rows, features, intp n_classes, intp min_samples_leaf=1):
    cdef double[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef intp[::1] yv = np.ascontiguousarray(y, dtype=np.intp)
    cdef intp[::1] iv = np.array(rows, dtype=np.intp)
    cdef intp[::1] fv = np.array(sorted(int(f) for f in features), dtype=np.intp)
    cdef intp n = iv.shape[0]
    cdef intp i, c, nl = 0
    cdef Split s
    if n < 2 or fv.shape[0] == 0:
        return None
    pairs = np.empty(n * 2, dtype=np.float64)  # sizeof(Pair) == 16 bytes
    cl = np.empty(n_classes, dtype=np.int64)
    cr = np.empty(n_classes, dtype=np.int64)
    parent = np.empty(n_classes, dtype=np.int64)
    cdef double[::1] pv = pairs
    cdef int64_t[::1] clv = cl, crv = cr, pav = parent
    _find_split(&Xv[0, 0], Xv.shape[1], &yv[0], &iv[0], n, &fv[0], fv.shape[0], n_classes,
                min_samples_leaf, <Pair*>&pv[0], &clv[0], &crv[0], &pav[0], &s)
    if not s.found:
        return None
    from ._pytree import split_delta
    idx = np.asarray(iv)
    ya = np.asarray(yv)
    go_left = np.asarray(Xv)[idx, s.feature] < s.threshold
    par = np.bincount(ya[idx], minlength=n_classes).tolist()
    lft = np.bincount(ya[idx[go_left]], minlength=n_classes).tolist()
    rgt = [p - l for p, l in zip(par, lft)]
    return int(s.feature), float(s.threshold), split_delta(par, lft, rgt)


def grow(X, y, rows, intp n_classes, intp max_depth, intp min_samples_leaf, intp m_features,
         state):
    cdef double[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef intp[::1] yv = np.ascontiguousarray(y, dtype=np.intp)
    cdef intp[::1] iv = np.array(rows, dtype=np.intp)
    cdef intp n_rows = iv.shape[0]
    cdef intp d = Xv.shape[1]
    cdef uint64_t st = <uint64_t>state
    cdef Nodes t
    cdef int rc
    if n_rows == 0:
        raise ValueError("cannot grow a tree on zero rows")
    t.size = 0
    t.cap = 64
    t.n_classes = n_classes
    t.feature = <intp*>malloc(t.cap * sizeof(intp))
    t.threshold = <double*>malloc(t.cap * sizeof(double))
    t.left = <intp*>malloc(t.cap * sizeof(intp))
    t.right = <intp*>malloc(t.cap * sizeof(intp))
    t.delta = <double*>malloc(t.cap * sizeof(double))
    t.n_samples = <intp*>malloc(t.cap * sizeof(intp))
    t.counts = <intp*>malloc(t.cap * n_classes * sizeof(intp))
    if (t.feature == NULL or t.threshold == NULL or t.left == NULL or t.right == NULL
            or t.delta == NULL or t.n_samples == NULL or t.counts == NULL):
        _free_nodes(&t)
        raise MemoryError()
    with nogil:
        rc = _grow(&Xv[0, 0], d, &yv[0], &iv[0], n_rows, n_classes, max_depth,
                   min_samples_leaf, m_features, &st, &t)
    try:
        if rc != 0:
            raise MemoryError("tree growth ran out of memory")
        size = t.size
        out = {
            "feature": np.empty(size, dtype=np.intp),
            "threshold": np.empty(size, dtype=np.float64),
            "left": np.empty(size, dtype=np.intp),
            "right": np.empty(size, dtype=np.intp),
            "delta": np.empty(size, dtype=np.float64),
            "n_samples": np.empty(size, dtype=np.intp),
            "counts": np.empty((size, n_classes), dtype=np.intp),
        }
        _copy_out(&t, out)
        return out
    finally:
        _free_nodes(&t)


cdef _copy_out(Nodes* t, dict out):
    cdef intp size = t.size
    cdef intp[::1] a
    cdef double[::1] b
    cdef intp[:, ::1] cc
    if size == 0:
        return
    a = out["feature"]
    memcpy(&a[0], t.feature, size * sizeof(intp))
    b = out["threshold"]
    memcpy(&b[0], t.threshold, size * sizeof(double))
    a = out["left"]
    memcpy(&a[0], t.left, size * sizeof(intp))
    a = out["right"]
    memcpy(&a[0], t.right, size * sizeof(intp))
    b = out["delta"]
    memcpy(&b[0], t.delta, size * sizeof(double))
    a = out["n_samples"]
    memcpy(&a[0], t.n_samples, size * sizeof(intp))
    cc = out["counts"]
    memcpy(&cc[0, 0], t.counts, size * t.n_classes * sizeof(intp))


def apply(feature, threshold, left, right, X):
    cdef intp[::1] fv = np.ascontiguousarray(feature, dtype=np.intp)
    cdef double[::1] tv = np.ascontiguousarray(threshold, dtype=np.float64)
    cdef intp[::1] lv = np.ascontiguousarray(left, dtype=np.intp)
    cdef intp[::1] rv = np.ascontiguousarray(right, dtype=np.intp)
    cdef double[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef intp n = Xv.shape[0]
    out = np.empty(n, dtype=np.intp)
    cdef intp[::1] ov = out
    cdef intp i, node
    with nogil:
        for i in range(n):
            node = 0
            while fv[node] != -1:
                if Xv[i, fv[node]] < tv[node]:
                    node = lv[node]
                else:
                    node = rv[node]
            ov[i] = node
    return out
