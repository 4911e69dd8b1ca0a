"""Gradient-boosted trees with second-order split gain.

Each round fits a depth-limited regression tree to the gradient/hessian
statistics of the loss, on a seeded row subsample, over a seeded column
subsample. Leaf weights are -G/H; gamma is the minimum gain to split and
min_child_weight the minimum hessian sum per child. Rounds are inherently
sequential; determinism comes from the master seed alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ContractError
from ..splitting import round_half_up
from . import _kernels
from .tree import TreeModel, _TreeBuilder

_H_EPS = 1e-12
_P_CLIP = 1e-12


@dataclass(frozen=True)
class BoostParams:
    learning_rate: float = 0.01
    max_depth: int = 2
    min_child_weight: float = 5.0
    gamma: float = 1.0
    subsample: float = 0.5
    colsample_per_tree: float = 0.8
    rounds: int = 500
    loss: str = "squared"  # squared | logistic

    def __post_init__(self):
        if not 0.0 < self.learning_rate <= 1.0:
            raise ContractError("learning_rate must lie in (0, 1]")
        if not 0.0 < self.subsample <= 1.0 or not 0.0 < self.colsample_per_tree <= 1.0:
            raise ContractError("subsample and colsample_per_tree must lie in (0, 1]")
        if self.rounds < 1:
            raise ContractError("rounds must be >= 1")
        if self.loss not in ("squared", "logistic"):
            raise ContractError(f"unknown loss {self.loss!r}")


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-np.clip(z, -500, 500)))


def _grad_hess(loss, y, raw):
    if loss == "squared":
        return raw - y, np.ones_like(y)
    p = _sigmoid(raw)
    return p - y, np.clip(p * (1.0 - p), _P_CLIP, None)


def _leaf_weight(g_sum: float, h_sum: float) -> float:
    if h_sum <= _H_EPS:
        return 0.0
    return -g_sum / h_sum


def _grow_boosted_tree(X, g, h, feats, params: BoostParams) -> TreeModel:
    builder = _TreeBuilder()
    root_idx = np.arange(len(g), dtype=np.int64)
    root = builder.add(-1, 0.0, _leaf_weight(float(np.sum(g)), float(np.sum(h))), len(g))
    stack = [(root, root_idx, 0)]
    while stack:
        node, idx, depth = stack.pop()
        if depth >= params.max_depth or len(idx) < 2:
            continue
        X_node = np.ascontiguousarray(X[idx])
        f, thr, score, parent_score = _kernels.best_split_gradhess(
            X_node, g[idx], h[idx], feats, params.min_child_weight
        )
        if f < 0:
            continue
        gain = 0.5 * (score - parent_score)
        if gain < params.gamma or gain <= 0.0:
            continue
        go_left = X_node[:, f] <= thr
        left_idx = idx[go_left]
        right_idx = idx[~go_left]
        if len(left_idx) == 0 or len(right_idx) == 0:
            continue
        left = builder.add(
            -1, 0.0, _leaf_weight(float(np.sum(g[left_idx])), float(np.sum(h[left_idx]))), len(left_idx)
        )
        right = builder.add(
            -1, 0.0, _leaf_weight(float(np.sum(g[right_idx])), float(np.sum(h[right_idx]))), len(right_idx)
        )
        builder.feature[node] = int(f)
        builder.threshold[node] = float(thr)
        builder.left[node] = left
        builder.right[node] = right
        stack.append((right, right_idx, depth + 1))
        stack.append((left, left_idx, depth + 1))
    return builder.finish(X.shape[1])


class BoostedModel:
    def __init__(self, trees: list[TreeModel], base_score: float, params: BoostParams, task: str, seed: int):
        self.trees = trees
        self.base_score = base_score
        self.params = params
        self.task = task
        self.seed = seed
        self.n_features = trees[0].n_features if trees else 0

    def raw_predict(self, X) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        raw = np.full(X.shape[0], self.base_score, dtype=np.float64)
        for tree in self.trees:
            raw += self.params.learning_rate * tree.predict(X)
        return raw

    def predict(self, X) -> np.ndarray:
        raw = self.raw_predict(X)
        if self.params.loss == "logistic":
            return _sigmoid(raw)
        return raw

    def to_dict(self) -> dict:
        return {
            "family": "gbt",
            "task": self.task,
            "seed": self.seed,
            "base_score": self.base_score,
            "params": {
                "learning_rate": self.params.learning_rate,
                "max_depth": self.params.max_depth,
                "min_child_weight": self.params.min_child_weight,
                "gamma": self.params.gamma,
                "subsample": self.params.subsample,
                "colsample_per_tree": self.params.colsample_per_tree,
                "rounds": self.params.rounds,
                "loss": self.params.loss,
            },
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BoostedModel":
        params = BoostParams(**d["params"])
        trees = [TreeModel.from_dict(t) for t in d["trees"]]
        return cls(trees, d["base_score"], params, d["task"], d["seed"])


def fit_gbt(X, y, params: BoostParams, seed: int, task: str = "regression") -> BoostedModel:
    """Fit an additive model of depth-limited trees over gradient statistics."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if task not in ("regression", "classification"):
        raise ContractError(f"unknown task {task!r}")
    if params.loss == "logistic":
        if not np.all((y == 0) | (y == 1)):
            raise ContractError("logistic loss needs 0/1 targets")
        prevalence = float(np.mean(y))
        prevalence = min(max(prevalence, _P_CLIP), 1.0 - _P_CLIP)
        base_score = math.log(prevalence / (1.0 - prevalence))
    else:
        base_score = float(np.mean(y))

    n, p = X.shape
    rng = np.random.default_rng(seed)
    n_sub = max(1, round_half_up(params.subsample * n))
    n_cols = max(1, round_half_up(params.colsample_per_tree * p))
    raw = np.full(n, base_score, dtype=np.float64)
    trees = []
    for _ in range(params.rounds):
        g, h = _grad_hess(params.loss, y, raw)
        rows = np.sort(rng.choice(n, size=n_sub, replace=False)) if n_sub < n else np.arange(n)
        feats = np.sort(rng.choice(p, size=n_cols, replace=False)).astype(np.int64) if n_cols < p else np.arange(p, dtype=np.int64)
        tree = _grow_boosted_tree(X[rows], g[rows], h[rows], feats, params)
        trees.append(tree)
        raw += params.learning_rate * tree.predict(X)
    return BoostedModel(trees, base_score, params, task, seed)
