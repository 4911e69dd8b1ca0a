"""Greedy CART trees: variance reduction / binary Gini, depth and leaf limits.

Trees are stored as flat parallel arrays (feature < 0 marks a leaf) so the
prediction kernel can traverse them without Python objects.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ContractError
from . import _kernels

_MIN_GAIN = 1e-12


@dataclass(frozen=True)
class TreeParams:
    max_depth: int | None = None
    min_samples_leaf: int = 4
    min_samples_split: int = 10
    feature_subsample: str = "all"  # all | sqrt

    def __post_init__(self):
        if self.min_samples_split < 2:
            raise ContractError("min_samples_split must be >= 2")
        if self.min_samples_leaf < 1:
            raise ContractError("min_samples_leaf must be >= 1")
        if self.feature_subsample not in ("all", "sqrt"):
            raise ContractError(f"unknown feature_subsample rule {self.feature_subsample!r}")


class TreeModel:
    """Flat-array binary tree; leaf value is the mean of its training targets."""

    def __init__(self, feature, threshold, left, right, value, n_samples, n_features):
        self.feature = np.asarray(feature, dtype=np.int64)
        self.threshold = np.asarray(threshold, dtype=np.float64)
        self.left = np.asarray(left, dtype=np.int64)
        self.right = np.asarray(right, dtype=np.int64)
        self.value = np.asarray(value, dtype=np.float64)
        self.n_samples = np.asarray(n_samples, dtype=np.int64)
        self.n_features = n_features

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def predict(self, X) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise ContractError("feature count does not match training")
        out = np.empty(X.shape[0], dtype=np.float64)
        _kernels.predict_tree(self.feature, self.threshold, self.left, self.right, self.value, X, out)
        return out

    def depth(self) -> int:
        def walk(node):
            if self.feature[node] < 0:
                return 0
            return 1 + max(walk(self.left[node]), walk(self.right[node]))

        return walk(0)

    def leaf_sizes(self) -> list[int]:
        return [int(s) for f, s in zip(self.feature, self.n_samples) if f < 0]

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
            "n_samples": self.n_samples.tolist(),
            "n_features": self.n_features,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TreeModel":
        return cls(d["feature"], d["threshold"], d["left"], d["right"], d["value"], d["n_samples"], d["n_features"])


class _TreeBuilder:
    def __init__(self):
        self.feature = []
        self.threshold = []
        self.left = []
        self.right = []
        self.value = []
        self.n_samples = []

    def add(self, feature, threshold, value, n):
        self.feature.append(feature)
        self.threshold.append(threshold)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(value)
        self.n_samples.append(n)
        return len(self.feature) - 1

    def finish(self, n_features) -> TreeModel:
        return TreeModel(self.feature, self.threshold, self.left, self.right, self.value, self.n_samples, n_features)


def _candidate_features(n_features: int, rule: str, rng) -> np.ndarray:
    if rule == "sqrt":
        k = max(1, math.isqrt(n_features))
        return np.sort(rng.choice(n_features, size=k, replace=False)).astype(np.int64)
    return np.arange(n_features, dtype=np.int64)


def fit_cart(X, y, params: TreeParams, rng) -> TreeModel:
    """Grow a greedy binary tree on (X, y).

    The split criterion is the shared sum-of-squares proxy: variance
    reduction for regression targets and Gini impurity for 0/1 targets
    (they coincide for binary labels). `rng` drives the per-node feature
    subsample when feature_subsample="sqrt".
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if X.ndim != 2 or len(y) != X.shape[0]:
        raise ContractError("X must be 2-D and aligned with y")
    if len(y) == 0:
        raise ContractError("empty training data")
    n_features = X.shape[1]
    builder = _TreeBuilder()

    # explicit depth-first stack (children pushed right-then-left) keeps the
    # rng consumption order identical to a left-first recursive build
    root_idx = np.arange(len(y), dtype=np.int64)
    root = builder.add(-1, 0.0, float(np.mean(y)), len(y))
    stack = [(root, root_idx, 0)]
    while stack:
        node, idx, depth = stack.pop()
        y_node = y[idx]
        n = len(idx)
        if params.max_depth is not None and depth >= params.max_depth:
            continue
        if n < params.min_samples_split:
            continue
        if np.all(y_node == y_node[0]):
            continue
        feats = _candidate_features(n_features, params.feature_subsample, rng)
        X_node = np.ascontiguousarray(X[idx])
        f, thr, score = _kernels.best_split_impurity(X_node, y_node, feats, params.min_samples_leaf)
        if f < 0:
            continue
        total = float(np.sum(y_node))
        parent_score = total * total / n
        if score - parent_score <= _MIN_GAIN * max(1.0, abs(parent_score)):
            continue
        go_left = X_node[:, f] <= thr
        n_left = int(np.sum(go_left))
        if n_left < params.min_samples_leaf or n - n_left < params.min_samples_leaf:
            continue
        left_idx = idx[go_left]
        right_idx = idx[~go_left]
        left = builder.add(-1, 0.0, float(np.mean(y[left_idx])), len(left_idx))
        right = builder.add(-1, 0.0, float(np.mean(y[right_idx])), len(right_idx))
        builder.feature[node] = int(f)
        builder.threshold[node] = float(thr)
        builder.left[node] = left
        builder.right[node] = right
        stack.append((right, right_idx, depth + 1))
        stack.append((left, left_idx, depth + 1))
    return builder.finish(n_features)
