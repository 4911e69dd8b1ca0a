"""Hyperparameter-tuning fold plans that respect the panel structure.

Random k-fold is included only as the leaky anti-pattern baseline; its plans
carry kind="random_kfold" so downstream consumers can flag them. Temporal
plans are defined over periods, not rows, so all units move together, with
an optional gap of excluded periods between fit and evaluation.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import ContractError


@dataclass(frozen=True)
class FoldPlan:
    kind: str  # random_kfold | unit_kfold | group_kfold | temporal_expanding | temporal_rolling
    folds: tuple  # ordered (fit_indices, eval_indices) pairs
    k: int | None = None
    gap: int = 0
    seed: int | None = None

    def write(self, ds, target) -> None:
        """Serialize as fold-index, row-key, role rows."""
        if hasattr(target, "write"):
            stream, close = target, False
        else:
            stream, close = open(target, "w", newline="", encoding="utf-8"), True
        try:
            writer = csv.writer(stream)
            writer.writerow(["fold", "unit", "period", "role"])
            for fold_idx, (fit_idx, eval_idx) in enumerate(self.folds):
                for role, idx in (("fit", fit_idx), ("eval", eval_idx)):
                    for i in idx:
                        writer.writerow([fold_idx, ds.units[i], int(ds.periods[i]), role])
        finally:
            if close:
                stream.close()


def folds_random_kfold(ds, k: int, seed: int) -> FoldPlan:
    """Seeded partition into k near-equal folds at the row level (leaky on panels)."""
    n = ds.n_rows
    if k < 2:
        raise ContractError("k must be at least 2")
    if k > n:
        raise ContractError("k exceeds the number of rows")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    chunks = np.array_split(perm, k)
    folds = []
    for chunk in chunks:
        eval_idx = np.sort(chunk)
        fit_idx = np.sort(np.setdiff1d(perm, chunk, assume_unique=True))
        folds.append((fit_idx, eval_idx))
    return FoldPlan(kind="random_kfold", folds=tuple(folds), k=k, seed=seed)


def _entity_kfold(ds, entities, k, seed, kind):
    uniq = np.unique(entities.astype(str))
    if k < 2:
        raise ContractError("k must be at least 2")
    if k > len(uniq):
        raise ContractError(f"k={k} exceeds the number of distinct entities ({len(uniq)})")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(uniq)
    chunks = np.array_split(perm, k)
    ent = entities.astype(str)
    folds = []
    for chunk in chunks:
        mask = np.isin(ent, chunk)
        folds.append((np.flatnonzero(~mask), np.flatnonzero(mask)))
    return FoldPlan(kind=kind, folds=tuple(folds), k=k, seed=seed)


def folds_unit_kfold(ds, k: int, seed: int) -> FoldPlan:
    """Units partitioned into k folds; a fold evaluates on all rows of its units."""
    return _entity_kfold(ds, ds.units, k, seed, "unit_kfold")


def folds_group_kfold(ds, k: int, seed: int) -> FoldPlan:
    """Groups partitioned into k folds; a fold evaluates on all rows of its groups."""
    if ds.groups is None:
        raise ContractError("dataset has no group column")
    return _entity_kfold(ds, ds.groups, k, seed, "group_kfold")


def folds_temporal(
    ds,
    mode: str = "expanding",
    min_train_periods: int | None = None,
    horizon: int = 1,
    gap: int = 0,
    window_len: int | None = None,
) -> FoldPlan:
    """Expanding- or rolling-window temporal folds over periods.

    For each origin o from min_train_periods to T - horizon - gap: the fit
    set is every period <= o (expanding) or the last window_len periods
    <= o (rolling); evaluation covers periods in (o + gap, o + gap + horizon].
    """
    if mode not in ("expanding", "rolling"):
        raise ContractError(f"unknown temporal CV mode {mode!r}")
    if horizon < 1 or gap < 0:
        raise ContractError("horizon must be >= 1 and gap >= 0")
    periods = np.sort(ds.period_values)
    t = len(periods)
    if min_train_periods is None:
        min_train_periods = -(-t // 2)  # ceil(T/2)
    if min_train_periods < 1:
        raise ContractError("min_train_periods must be >= 1")
    if mode == "rolling":
        if window_len is None:
            window_len = min_train_periods
        if window_len < 1:
            raise ContractError("window_len must be >= 1")
    last_origin = t - horizon - gap
    if last_origin < min_train_periods:
        raise ContractError("not enough periods for a single temporal fold")
    period_index = {int(p): i for i, p in enumerate(periods)}
    row_period_pos = np.asarray([period_index[int(p)] for p in ds.periods])
    folds = []
    for o in range(min_train_periods, last_origin + 1):
        if mode == "expanding":
            fit_mask = row_period_pos < o
        else:
            fit_mask = (row_period_pos < o) & (row_period_pos >= o - window_len)
        eval_mask = (row_period_pos >= o + gap) & (row_period_pos < o + gap + horizon)
        folds.append((np.flatnonzero(fit_mask), np.flatnonzero(eval_mask)))
    kind = "temporal_expanding" if mode == "expanding" else "temporal_rolling"
    return FoldPlan(kind=kind, folds=tuple(folds), gap=gap)
