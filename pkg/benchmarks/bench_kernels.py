"""Compare the numba and pure-numpy kernel backends on timing and agreement.

Run:  python benchmarks/bench_kernels.py [--n 20000] [--p 8] [--repeat 5]

Both backends must return bit-identical splits; the benchmark asserts that
on every draw before reporting timings.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from panelaudit.learners import _kernels
from panelaudit.learners.forest import ForestParams, fit_random_forest
from panelaudit.learners.tree import TreeParams, fit_cart


def time_call(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_split_kernels(n, p, repeat, rng):
    X = np.ascontiguousarray(rng.normal(size=(n, p)))
    y = rng.normal(size=n)
    g = rng.normal(size=n)
    h = rng.uniform(0.5, 1.5, size=n)
    feats = np.arange(p, dtype=np.int64)

    rows = []
    a = _kernels.best_split_impurity_numpy(X, y, feats, 4)
    if _kernels.NUMBA_ENABLED:
        _kernels.best_split_impurity_numba(X, y, feats, 4)  # compile
        b = _kernels.best_split_impurity_numba(X, y, feats, 4)
        assert a == b, f"impurity backends disagree: {a} vs {b}"
        t_nb = time_call(lambda: _kernels.best_split_impurity_numba(X, y, feats, 4), repeat)
    else:
        t_nb = None
    t_np = time_call(lambda: _kernels.best_split_impurity_numpy(X, y, feats, 4), repeat)
    rows.append(("best_split_impurity", t_nb, t_np))

    a = _kernels.best_split_gradhess_numpy(X, g, h, feats, 1.0)
    if _kernels.NUMBA_ENABLED:
        _kernels.best_split_gradhess_numba(X, g, h, feats, 1.0)
        b = _kernels.best_split_gradhess_numba(X, g, h, feats, 1.0)
        assert a == b, f"gradhess backends disagree: {a} vs {b}"
        t_nb = time_call(lambda: _kernels.best_split_gradhess_numba(X, g, h, feats, 1.0), repeat)
    else:
        t_nb = None
    t_np = time_call(lambda: _kernels.best_split_gradhess_numpy(X, g, h, feats, 1.0), repeat)
    rows.append(("best_split_gradhess", t_nb, t_np))

    model = fit_cart(X[:2000], y[:2000], TreeParams(), np.random.default_rng(0))
    out_a = np.empty(n)
    out_b = np.empty(n)
    args = (model.feature, model.threshold, model.left, model.right, model.value, X)
    _kernels.predict_tree_numpy(*args, out_a)
    if _kernels.NUMBA_ENABLED:
        _kernels.predict_tree_numba(*args, out_b)
        assert np.array_equal(out_a, out_b), "prediction backends disagree"
        t_nb = time_call(lambda: _kernels.predict_tree_numba(*args, out_b), repeat)
    else:
        t_nb = None
    t_np = time_call(lambda: _kernels.predict_tree_numpy(*args, out_a), repeat)
    rows.append(("predict_tree", t_nb, t_np))
    return rows


def bench_forest(n, p, repeat, rng):
    X = np.ascontiguousarray(rng.normal(size=(n, p)))
    y = X[:, 0] + 0.5 * rng.normal(size=n)
    params = ForestParams(n_trees=20)
    t = time_call(lambda: fit_random_forest(X, y, params, seed=0, n_jobs=4), max(1, repeat // 2))
    return [("fit_random_forest(20 trees)", None, t)]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=20_000)
    ap.add_argument("--p", type=int, default=8)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    print(f"backend: {'numba' if _kernels.NUMBA_ENABLED else 'numpy only'}; n={args.n}, p={args.p}")
    print(f"{'kernel':30s} {'numba (s)':>12s} {'numpy (s)':>12s} {'speedup':>9s}")
    rows = bench_split_kernels(args.n, args.p, args.repeat, rng)
    rows += bench_forest(min(args.n, 4000), args.p, args.repeat, rng)
    for name, t_nb, t_np in rows:
        nb = f"{t_nb:.6f}" if t_nb is not None else "-"
        ratio = f"{t_np / t_nb:7.2f}x" if t_nb else "-"
        print(f"{name:30s} {nb:>12s} {t_np:>12.6f} {ratio:>9s}")


if __name__ == "__main__":
    main()
