"""Compare the compiled tree kernels with the pure-Python fallback.

    python benchmarks/bench_kernels.py --rows 142 --features 10 --trees 50

Both backends grow the same trees from the same streams; the benchmark checks
that first and then reports per-tree timings and the speedup.
"""
import argparse
import json
import time

import numpy as np

from floodrank.forest import _pytree
from floodrank.forest.model import tree_streams

try:
    from floodrank.forest import _ctree
except ImportError:  # extension not built
    _ctree = None


def workload(rows, features, classes, seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(rows, features))
    y = (X[:, 0] + rng.normal(size=rows) > 0).astype(np.intp) + (X[:, 1] > 1).astype(np.intp)
    return X, np.minimum(y, classes - 1)


def streams(n, trees):
    out = []
    for t in range(trees):
        boot, state = tree_streams(0, t)
        out.append((boot.integers(0, n, n), state))
    return out


def time_backend(kernels, X, y, classes, work, m, repeat):
    # stream setup happens outside the timed loop: only the kernel is measured
    best = float("inf")
    out = None
    for _ in range(repeat):
        start = time.perf_counter()
        grown = [kernels.grow(X, y, rows, classes, -1, 1, m, state) for rows, state in work]
        best = min(best, time.perf_counter() - start)
        out = grown
    return best / len(work), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rows", type=int, default=142)
    ap.add_argument("--features", type=int, default=10)
    ap.add_argument("--classes", type=int, default=3)
    ap.add_argument("--trees", type=int, default=50)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--json", action="store_true", help="print a JSON record instead of text")
    args = ap.parse_args(argv)

    X, y = workload(args.rows, args.features, args.classes, 0)
    m = int(np.ceil(np.sqrt(args.features)))
    work = streams(len(y), args.trees)
    py_s, py_trees = time_backend(_pytree, X, y, args.classes, work, m, args.repeat)
    record = {"rows": args.rows, "features": args.features, "trees": args.trees,
              "python_us_per_tree": round(py_s * 1e6, 1)}
    if _ctree is not None:
        c_s, c_trees = time_backend(_ctree, X, y, args.classes, work, m, args.repeat)
        same = all(np.array_equal(np.asarray(a[k]), np.asarray(b[k]))
                   for a, b in zip(py_trees, c_trees) for k in a)
        record.update(cython_us_per_tree=round(c_s * 1e6, 1), speedup=round(py_s / c_s, 1),
                      identical=same)
    if args.json:
        print(json.dumps(record))
        return
    print(f"workload: {args.rows} rows x {args.features} features, {args.trees} trees")
    print(f"python  {record['python_us_per_tree']:>10.1f} us/tree")
    if _ctree is None:
        print("cython  not built")
    else:
        print(f"cython  {record['cython_us_per_tree']:>10.1f} us/tree")
        print(f"speedup {record['speedup']:>10.1f}x, identical trees: {record['identical']}")


if __name__ == "__main__":
    main()
