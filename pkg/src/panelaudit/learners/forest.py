"""Random forest: bagged CART trees with per-node feature subsampling.

Per-tree RNG streams are derived from the master seed with SeedSequence, so
the fitted model is bit-identical for any number of worker threads.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..errors import ContractError
from .tree import TreeModel, TreeParams, fit_cart


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 500
    tree: TreeParams = field(
        default_factory=lambda: TreeParams(
            max_depth=None, min_samples_leaf=4, min_samples_split=10, feature_subsample="sqrt"
        )
    )
    bootstrap: bool = True

    def __post_init__(self):
        if self.n_trees < 1:
            raise ContractError("n_trees must be >= 1")


class ForestModel:
    def __init__(self, trees: list[TreeModel], task: str, params: ForestParams, seed: int):
        self.trees = trees
        self.task = task
        self.params = params
        self.seed = seed
        self.n_features = trees[0].n_features

    def predict(self, X) -> np.ndarray:
        """Mean of tree outputs: levels for regression, leaf one-fractions
        (probabilities) for classification."""
        X = np.ascontiguousarray(X, dtype=np.float64)
        acc = np.zeros(X.shape[0], dtype=np.float64)
        for tree in self.trees:
            acc += tree.predict(X)
        return acc / len(self.trees)

    def to_dict(self) -> dict:
        return {
            "family": "random_forest",
            "task": self.task,
            "seed": self.seed,
            "params": {
                "n_trees": self.params.n_trees,
                "bootstrap": self.params.bootstrap,
                "tree": {
                    "max_depth": self.params.tree.max_depth,
                    "min_samples_leaf": self.params.tree.min_samples_leaf,
                    "min_samples_split": self.params.tree.min_samples_split,
                    "feature_subsample": self.params.tree.feature_subsample,
                },
            },
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ForestModel":
        tp = TreeParams(**d["params"]["tree"])
        params = ForestParams(n_trees=d["params"]["n_trees"], tree=tp, bootstrap=d["params"]["bootstrap"])
        trees = [TreeModel.from_dict(t) for t in d["trees"]]
        return cls(trees, d["task"], params, d["seed"])


def fit_random_forest(X, y, params: ForestParams, seed: int, task: str = "regression", n_jobs: int = 1) -> ForestModel:
    """Fit n_trees CART trees on seeded bootstrap resamples."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if task not in ("regression", "classification"):
        raise ContractError(f"unknown task {task!r}")
    if task == "classification" and not np.all((y == 0) | (y == 1)):
        raise ContractError("classification targets must be 0/1")
    n = len(y)
    seeds = np.random.SeedSequence(seed).spawn(params.n_trees)

    def build(tree_seed) -> TreeModel:
        rng = np.random.default_rng(tree_seed)
        if params.bootstrap:
            idx = rng.integers(0, n, size=n)
            return fit_cart(X[idx], y[idx], params.tree, rng)
        return fit_cart(X, y, params.tree, rng)

    if n_jobs <= 1:
        trees = [build(s) for s in seeds]
    else:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            trees = list(pool.map(build, seeds))
    return ForestModel(trees, task, params, seed)
