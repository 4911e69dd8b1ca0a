"""OLS via QR and logistic regression via iteratively reweighted least squares."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg
from scipy.special import expit

from ..errors import ContractError, RankDeficiencyError


@dataclass
class LinearModel:
    coefficients: np.ndarray
    intercept: float
    family: str  # gaussian | binomial
    converged: bool = True
    iterations: int = 0

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != len(self.coefficients):
            raise ContractError("feature count does not match training")
        eta = X @ self.coefficients + self.intercept
        if self.family == "binomial":
            return expit(eta)
        return eta

    def to_dict(self) -> dict:
        return {
            "family": "ols" if self.family == "gaussian" else "logit",
            "coefficients": self.coefficients.tolist(),
            "intercept": self.intercept,
            "converged": self.converged,
            "iterations": self.iterations,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LinearModel":
        family = "gaussian" if d["family"] == "ols" else "binomial"
        return cls(
            coefficients=np.asarray(d["coefficients"], dtype=np.float64),
            intercept=float(d["intercept"]),
            family=family,
            converged=d["converged"],
            iterations=d["iterations"],
        )


def _with_intercept(X) -> np.ndarray:
    return np.column_stack([np.ones(X.shape[0]), X])


def _check_rank(X1, column_names=None):
    """QR with column pivoting; names the dependent columns on deficiency."""
    _, r, piv = linalg.qr(X1, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    tol = max(X1.shape) * np.finfo(np.float64).eps * (diag[0] if len(diag) else 0.0)
    rank = int(np.sum(diag > tol))
    if rank < X1.shape[1]:
        dependent = sorted(piv[rank:])
        names = []
        for j in dependent:
            if j == 0:
                names.append("intercept")
            elif column_names is not None and j - 1 < len(column_names):
                names.append(column_names[j - 1])
            else:
                names.append(f"x{j - 1}")
        raise RankDeficiencyError(names)


def fit_ols(X, y, column_names=None) -> LinearModel:
    """Least squares through a QR factorization; intercept always included.

    Rank-deficient designs raise RankDeficiencyError naming the dependent
    columns rather than silently falling back to a pseudo-inverse.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or len(y) != X.shape[0]:
        raise ContractError("X must be 2-D and aligned with y")
    if X.shape[0] < X.shape[1] + 1:
        raise ContractError("need at least as many rows as fitted parameters")
    X1 = _with_intercept(X)
    _check_rank(X1, column_names)
    q, r = np.linalg.qr(X1)
    beta = linalg.solve_triangular(r, q.T @ y)
    return LinearModel(coefficients=beta[1:], intercept=float(beta[0]), family="gaussian")


def logistic_negll(X, y, coefficients, intercept) -> float:
    """Negative Bernoulli log-likelihood at the given parameters."""
    eta = np.asarray(X, dtype=np.float64) @ coefficients + intercept
    # log(1 + exp(eta)) - y*eta, computed stably
    return float(np.sum(np.logaddexp(0.0, eta) - y * eta))


def logistic_gradient(X, y, coefficients, intercept) -> np.ndarray:
    """Gradient of the negative log-likelihood, intercept first."""
    X = np.asarray(X, dtype=np.float64)
    X1 = _with_intercept(X)
    p = expit(X1 @ np.concatenate([[intercept], coefficients]))
    return X1.T @ (p - y)


def fit_logistic(X, y, tol: float = 1e-8, max_iter: int = 100) -> LinearModel:
    """Maximize the Bernoulli log-likelihood by IRLS.

    Stops when the gradient norm drops to tol; if the cap is reached first
    (e.g. separable data) the model is returned with converged=False and
    finite coefficients.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or len(y) != X.shape[0]:
        raise ContractError("X must be 2-D and aligned with y")
    if not np.all((y == 0) | (y == 1)):
        raise ContractError("targets must be 0/1")
    if y.min() == y.max():
        raise ContractError("targets contain a single class")
    X1 = _with_intercept(X)
    k = X1.shape[1]
    prevalence = float(np.mean(y))
    beta = np.zeros(k)
    beta[0] = math.log(prevalence / (1.0 - prevalence))
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        eta = X1 @ beta
        p = expit(eta)
        grad = X1.T @ (p - y)
        if np.linalg.norm(grad) <= tol:
            converged = True
            break
        w = np.clip(p * (1.0 - p), 1e-10, None)
        # weighted least squares on the working response
        z = eta + (y - p) / w
        sw = np.sqrt(w)
        beta, *_ = np.linalg.lstsq(X1 * sw[:, None], z * sw, rcond=None)
    return LinearModel(
        coefficients=beta[1:],
        intercept=float(beta[0]),
        family="binomial",
        converged=converged,
        iterations=iterations,
    )
