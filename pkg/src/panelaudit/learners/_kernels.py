"""Hot inner loops for tree fitting and prediction.

Two interchangeable backends: numba @njit kernels and pure-numpy twins.
Set PANELAUDIT_DISABLE_NUMBA=1 to force the numpy path. Both backends are
written with identical operation order (sequential cumulative sums, strict
greater-than tie handling, mergesort ordering) so they return bit-identical
results; tests and benchmarks/bench_kernels.py compare them directly.

Split scores use the sum-of-squares proxy: maximizing
sum_left^2/n_left + sum_right^2/n_right minimizes both the variance
criterion (regression) and binary Gini impurity (classification).
"""

from __future__ import annotations

import os

import numpy as np

_H_EPS = 1e-12


def _best_split_impurity_py(X, y, feats, min_leaf):
    """Best (feature, threshold, score) by the sum-of-squares proxy.

    Candidate thresholds are midpoints between consecutive distinct sorted
    values; ties in score go to the lowest feature index, then the lowest
    threshold. Returns feature -1 when no candidate is feasible.
    """
    n = X.shape[0]
    best_f = np.int64(-1)
    best_thr = 0.0
    best_score = -np.inf
    for fi in range(len(feats)):
        f = feats[fi]
        order = np.argsort(X[:, f], kind="mergesort")
        xs = X[:, f][order]
        ys = y[order]
        total = 0.0
        for i in range(n):
            total += ys[i]
        run = 0.0
        for i in range(n - 1):
            run += ys[i]
            nl = i + 1
            nr = n - nl
            if nl < min_leaf:
                continue
            if nr < min_leaf:
                break
            if xs[i] == xs[i + 1]:
                continue
            score = run * run / nl + (total - run) * (total - run) / nr
            if score > best_score:
                best_score = score
                best_f = f
                best_thr = (xs[i] + xs[i + 1]) / 2.0
    return best_f, best_thr, best_score


def _best_split_impurity_np(X, y, feats, min_leaf):
    """Vectorized twin of _best_split_impurity_py; identical results."""
    n = X.shape[0]
    best_f = np.int64(-1)
    best_thr = 0.0
    best_score = -np.inf
    if n < 2:
        return best_f, best_thr, best_score
    nl = np.arange(1, n, dtype=np.float64)
    nr = n - nl
    for f in feats:
        order = np.argsort(X[:, f], kind="mergesort")
        xs = X[:, f][order]
        ys = y[order]
        cs = np.cumsum(ys)
        total = cs[-1]
        run = cs[:-1]
        score = run * run / nl + (total - run) * (total - run) / nr
        valid = (xs[:-1] != xs[1:]) & (nl >= min_leaf) & (nr >= min_leaf)
        if not valid.any():
            continue
        score = np.where(valid, score, -np.inf)
        i = int(np.argmax(score))
        if score[i] > best_score:
            best_score = float(score[i])
            best_f = f
            best_thr = (xs[i] + xs[i + 1]) / 2.0
    return best_f, best_thr, best_score


def _best_split_gradhess_py(X, g, h, feats, min_child_weight):
    """Best second-order split: maximize Gl^2/Hl + Gr^2/Hr.

    Children must each carry hessian sum >= min_child_weight (and > 0).
    Returns (feature, threshold, split_score, parent_score); the caller
    turns these into a gain and applies the minimum-gain threshold.
    """
    n = X.shape[0]
    best_f = np.int64(-1)
    best_thr = 0.0
    best_score = -np.inf
    parent_score = 0.0
    mcw = max(min_child_weight, _H_EPS)
    for fi in range(len(feats)):
        f = feats[fi]
        order = np.argsort(X[:, f], kind="mergesort")
        xs = X[:, f][order]
        gs = g[order]
        hs = h[order]
        total_g = 0.0
        total_h = 0.0
        for i in range(n):
            total_g += gs[i]
            total_h += hs[i]
        if fi == 0:
            parent_score = total_g * total_g / total_h if total_h > _H_EPS else 0.0
        run_g = 0.0
        run_h = 0.0
        for i in range(n - 1):
            run_g += gs[i]
            run_h += hs[i]
            if xs[i] == xs[i + 1]:
                continue
            hl = run_h
            hr = total_h - run_h
            if hl < mcw or hr < mcw:
                continue
            gl = run_g
            gr = total_g - run_g
            score = gl * gl / hl + gr * gr / hr
            if score > best_score:
                best_score = score
                best_f = f
                best_thr = (xs[i] + xs[i + 1]) / 2.0
    return best_f, best_thr, best_score, parent_score


def _best_split_gradhess_np(X, g, h, feats, min_child_weight):
    """Vectorized twin of _best_split_gradhess_py; identical results."""
    n = X.shape[0]
    best_f = np.int64(-1)
    best_thr = 0.0
    best_score = -np.inf
    parent_score = 0.0
    mcw = max(min_child_weight, _H_EPS)
    first = True
    for f in feats:
        order = np.argsort(X[:, f], kind="mergesort")
        xs = X[:, f][order]
        cg = np.cumsum(g[order])
        ch = np.cumsum(h[order])
        total_g = cg[-1]
        total_h = ch[-1]
        if first:
            parent_score = total_g * total_g / total_h if total_h > _H_EPS else 0.0
            first = False
        if n < 2:
            continue
        gl = cg[:-1]
        hl = ch[:-1]
        gr = total_g - gl
        hr = total_h - hl
        valid = (xs[:-1] != xs[1:]) & (hl >= mcw) & (hr >= mcw)
        if not valid.any():
            continue
        with np.errstate(divide="ignore", invalid="ignore"):
            score = gl * gl / hl + gr * gr / hr
        score = np.where(valid, score, -np.inf)
        i = int(np.argmax(score))
        if score[i] > best_score:
            best_score = float(score[i])
            best_f = f
            best_thr = (xs[i] + xs[i + 1]) / 2.0
    return best_f, best_thr, best_score, parent_score


def _predict_tree_py(feature, threshold, left, right, value, X, out):
    """Route every row from the root to a leaf; feature < 0 marks a leaf."""
    for i in range(X.shape[0]):
        node = 0
        while feature[node] >= 0:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = value[node]


def _predict_tree_np(feature, threshold, left, right, value, X, out):
    """Frontier-based twin of _predict_tree_py: route index sets level by level."""
    n = X.shape[0]
    frontier = [(0, np.arange(n, dtype=np.int64))]
    while frontier:
        node, idx = frontier.pop()
        if feature[node] < 0:
            out[idx] = value[node]
            continue
        go_left = X[idx, feature[node]] <= threshold[node]
        frontier.append((left[node], idx[go_left]))
        frontier.append((right[node], idx[~go_left]))


def _numba_disabled() -> bool:
    return os.environ.get("PANELAUDIT_DISABLE_NUMBA", "").strip() not in ("", "0")


NUMBA_ENABLED = False
best_split_impurity = _best_split_impurity_np
best_split_gradhess = _best_split_gradhess_np
predict_tree = _predict_tree_np
best_split_impurity_numba = None
best_split_gradhess_numba = None
predict_tree_numba = None

if not _numba_disabled():
    try:
        from numba import njit
    except ImportError:
        pass
    else:
        best_split_impurity_numba = njit(cache=True, nogil=True)(_best_split_impurity_py)
        best_split_gradhess_numba = njit(cache=True, nogil=True)(_best_split_gradhess_py)
        predict_tree_numba = njit(cache=True, nogil=True)(_predict_tree_py)
        best_split_impurity = best_split_impurity_numba
        best_split_gradhess = best_split_gradhess_numba
        predict_tree = predict_tree_numba
        NUMBA_ENABLED = True

# numpy twins under stable names, for tests and the backend benchmark
best_split_impurity_numpy = _best_split_impurity_np
best_split_gradhess_numpy = _best_split_gradhess_np
predict_tree_numpy = _predict_tree_np
