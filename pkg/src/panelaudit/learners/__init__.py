"""Model families: OLS, logit, CART, random forest, and boosted trees."""

from __future__ import annotations

import json

import numpy as np

from ..errors import ContractError
from ._kernels import NUMBA_ENABLED
from .boosting import BoostedModel, BoostParams, fit_gbt
from .forest import ForestModel, ForestParams, fit_random_forest
from .linear import LinearModel, fit_logistic, fit_ols, logistic_gradient, logistic_negll
from .tree import TreeModel, TreeParams, fit_cart

__all__ = [
    "NUMBA_ENABLED",
    "BoostedModel",
    "BoostParams",
    "fit_gbt",
    "ForestModel",
    "ForestParams",
    "fit_random_forest",
    "LinearModel",
    "fit_logistic",
    "fit_ols",
    "logistic_gradient",
    "logistic_negll",
    "TreeModel",
    "TreeParams",
    "fit_cart",
    "predict",
    "save_model",
    "load_model",
]


def predict(model, X) -> np.ndarray:
    """Deterministic prediction; classification models return probabilities."""
    X = np.asarray(X, dtype=np.float64)
    return model.predict(X)


_FAMILIES = {
    "ols": LinearModel,
    "logit": LinearModel,
    "random_forest": ForestModel,
    "gbt": BoostedModel,
}


def save_model(model, target) -> None:
    """Write a model as self-describing JSON sufficient to reload and predict."""
    payload = model.to_dict()
    if hasattr(target, "write"):
        json.dump(payload, target)
    else:
        with open(target, "w", encoding="utf-8") as fh:
            json.dump(payload, fh)


def load_model(source):
    if hasattr(source, "read"):
        payload = json.load(source)
    else:
        with open(source, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    family = payload.get("family")
    if family not in _FAMILIES:
        raise ContractError(f"unknown model family {family!r}")
    return _FAMILIES[family].from_dict(payload)
