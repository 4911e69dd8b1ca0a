"""Train/test split strategies for panel data and leakage diagnosis.

Five strategies: random at the observation level, random at the unit level,
random at the group level, a non-random time holdout, and a combined
unit x time rule that keeps both dimensions disjoint at the cost of
discarded cells. `verify_assignment` checks mechanically, from the labels
alone, which leakage types a split permits.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError

TRAIN, TEST, EXCLUDED = 0, 1, 2
_LABEL_NAMES = {TRAIN: "train", TEST: "test", EXCLUDED: "excluded"}


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class SplitStrategy:
    kind: str  # observation_random | unit_random | group_random | time_holdout | combined
    test_fraction: float | None = None
    test_periods: tuple | None = None
    seed: int | None = None

    def __post_init__(self):
        if self.test_periods is not None:
            object.__setattr__(self, "test_periods", tuple(sorted(int(p) for p in self.test_periods)))


@dataclass
class SplitAssignment:
    """Per-row labels (train/test/excluded) plus the strategy that produced them."""

    labels: np.ndarray
    strategy: SplitStrategy

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int8)

    @property
    def train_idx(self) -> np.ndarray:
        return np.flatnonzero(self.labels == TRAIN)

    @property
    def test_idx(self) -> np.ndarray:
        return np.flatnonzero(self.labels == TEST)

    @property
    def train_size(self) -> int:
        return int(np.sum(self.labels == TRAIN))

    @property
    def test_size(self) -> int:
        return int(np.sum(self.labels == TEST))

    @property
    def excluded_size(self) -> int:
        return int(np.sum(self.labels == EXCLUDED))

    def write(self, ds, target) -> None:
        """Serialize as row-key, label rows: unit, period, {train,test,excluded}."""
        if hasattr(target, "write"):
            stream, close = target, False
        else:
            stream, close = open(target, "w", newline="", encoding="utf-8"), True
        try:
            writer = csv.writer(stream)
            writer.writerow(["unit", "period", "label"])
            for u, p, lab in zip(ds.units, ds.periods, self.labels):
                writer.writerow([u, int(p), _LABEL_NAMES[int(lab)]])
        finally:
            if close:
                stream.close()


@dataclass(frozen=True)
class LeakageDiagnosis:
    units_shared: bool
    periods_shared: bool
    groups_shared: bool | None
    future_in_train: bool

    @property
    def temporal_leakage_possible(self) -> bool:
        return self.periods_shared or self.future_in_train

    @property
    def cross_sectional_leakage_possible(self) -> bool:
        return self.units_shared


def _check_partitions(labels) -> None:
    if not np.any(labels == TRAIN) or not np.any(labels == TEST):
        raise ContractError("split produced an empty train or test partition")


def split_observation_random(ds, test_fraction: float, seed: int) -> SplitAssignment:
    """Random split at the observation (unit-time) level."""
    n = ds.n_rows
    if not 0.0 < test_fraction < 1.0:
        raise ContractError("test_fraction must lie in (0, 1)")
    if n < 2:
        raise ContractError("need at least 2 rows to split")
    n_test = round_half_up(test_fraction * n)
    if n_test == 0 or n_test == n:
        raise ContractError("test_fraction produces an empty partition")
    rng = np.random.default_rng(seed)
    test_rows = rng.choice(n, size=n_test, replace=False)
    labels = np.full(n, TRAIN, dtype=np.int8)
    labels[test_rows] = TEST
    return SplitAssignment(labels, SplitStrategy("observation_random", test_fraction=test_fraction, seed=seed))


def split_unit_random(ds, test_fraction: float, seed: int) -> SplitAssignment:
    """Random split at the unit level: whole units go to one side."""
    if not 0.0 < test_fraction < 1.0:
        raise ContractError("test_fraction must lie in (0, 1)")
    units = ds.unit_ids
    if len(units) < 2:
        raise ContractError("need at least 2 units for a unit-level split")
    n_test = round_half_up(test_fraction * len(units))
    if n_test == 0 or n_test == len(units):
        raise ContractError("test_fraction produces an empty partition")
    rng = np.random.default_rng(seed)
    test_units = set(rng.choice(units, size=n_test, replace=False))
    labels = np.where(np.isin(ds.units.astype(str), list(test_units)), TEST, TRAIN).astype(np.int8)
    _check_partitions(labels)
    return SplitAssignment(labels, SplitStrategy("unit_random", test_fraction=test_fraction, seed=seed))


def split_group_random(ds, test_fraction: float, seed: int) -> SplitAssignment:
    """Random split at the group level.

    Whole groups are moved to the test side, in seeded shuffle order, until
    the cumulative share of units first reaches test_fraction; the realized
    share may overshoot because groups are sampled whole.
    """
    if ds.groups is None:
        raise ContractError("dataset has no group column")
    if not 0.0 < test_fraction < 1.0:
        raise ContractError("test_fraction must lie in (0, 1)")
    group_of = ds.group_of
    groups = sorted({str(g) for g in group_of.values()})
    if len(groups) < 2:
        raise ContractError("need at least 2 groups for a group-level split")
    units_per_group = {}
    for u, g in group_of.items():
        units_per_group.setdefault(str(g), 0)
        units_per_group[str(g)] += 1
    n_units = sum(units_per_group.values())
    rng = np.random.default_rng(seed)
    order = list(rng.permutation(groups))
    test_groups = []
    share = 0.0
    for g in order:
        if share >= test_fraction:
            break
        test_groups.append(g)
        share += units_per_group[g] / n_units
    if len(test_groups) == len(groups):
        raise ContractError("test_fraction leaves no training groups")
    labels = np.where(np.isin(ds.groups.astype(str), test_groups), TEST, TRAIN).astype(np.int8)
    _check_partitions(labels)
    return SplitAssignment(labels, SplitStrategy("group_random", test_fraction=test_fraction, seed=seed))


def split_time_holdout(ds, test_periods) -> SplitAssignment:
    """Non-random split on time: the final periods form the test set."""
    observed = [int(p) for p in np.sort(ds.period_values)]
    test_periods = sorted(int(p) for p in test_periods)
    if not test_periods:
        raise ContractError("test_periods must be non-empty")
    if test_periods != observed[-len(test_periods):] or len(test_periods) >= len(observed):
        raise ContractError("test_periods must be a strict suffix of the observed periods")
    labels = np.where(np.isin(ds.periods, test_periods), TEST, TRAIN).astype(np.int8)
    _check_partitions(labels)
    return SplitAssignment(labels, SplitStrategy("time_holdout", test_periods=tuple(test_periods)))


def split_combined(ds, test_periods, test_fraction: float, seed: int) -> SplitAssignment:
    """Unit- and time-disjoint split.

    Test = sampled units x test periods; train = remaining units x pre-test
    periods. Rows in neither cell are excluded from both partitions.
    """
    observed = [int(p) for p in np.sort(ds.period_values)]
    test_periods = sorted(int(p) for p in test_periods)
    if not test_periods or test_periods != observed[-len(test_periods):] or len(test_periods) >= len(observed):
        raise ContractError("test_periods must be a strict suffix of the observed periods")
    if not 0.0 < test_fraction < 1.0:
        raise ContractError("test_fraction must lie in (0, 1)")
    units = ds.unit_ids
    if len(units) < 2:
        raise ContractError("need at least 2 units for a combined split")
    n_test = round_half_up(test_fraction * len(units))
    if n_test == 0 or n_test == len(units):
        raise ContractError("test_fraction produces an empty partition")
    rng = np.random.default_rng(seed)
    test_units = set(str(u) for u in rng.choice(units, size=n_test, replace=False))
    min_test_period = test_periods[0]
    in_test_unit = np.isin(ds.units.astype(str), list(test_units))
    in_test_period = np.isin(ds.periods, test_periods)
    labels = np.full(ds.n_rows, EXCLUDED, dtype=np.int8)
    labels[in_test_unit & in_test_period] = TEST
    labels[~in_test_unit & (ds.periods < min_test_period)] = TRAIN
    _check_partitions(labels)
    return SplitAssignment(
        labels,
        SplitStrategy("combined", test_fraction=test_fraction, test_periods=tuple(test_periods), seed=seed),
    )


def adjust_test_size(assignment: SplitAssignment, target_size: int, seed: int) -> SplitAssignment:
    """Keep a seeded uniform subsample of exactly target_size test rows.

    Surplus test rows become excluded, never train: moving them into
    training would change the model being evaluated.
    """
    test_idx = assignment.test_idx
    if target_size > len(test_idx):
        raise ContractError("target_size exceeds the current test size")
    if target_size == len(test_idx):
        return SplitAssignment(assignment.labels.copy(), assignment.strategy)
    rng = np.random.default_rng(seed)
    keep = set(rng.choice(test_idx, size=target_size, replace=False).tolist())
    labels = assignment.labels.copy()
    for i in test_idx:
        if int(i) not in keep:
            labels[i] = EXCLUDED
    _check_partitions(labels)
    return SplitAssignment(labels, assignment.strategy)


def verify_assignment(ds, assignment: SplitAssignment) -> LeakageDiagnosis:
    """Compute shared-unit/period/group sets and the future-in-train flag from labels."""
    labels = assignment.labels
    train = labels == TRAIN
    test = labels == TEST
    train_units = set(ds.units[train].astype(str))
    test_units = set(ds.units[test].astype(str))
    train_periods = set(int(p) for p in ds.periods[train])
    test_periods = set(int(p) for p in ds.periods[test])
    groups_shared = None
    if ds.groups is not None:
        groups_shared = bool(set(ds.groups[train].astype(str)) & set(ds.groups[test].astype(str)))
    future_in_train = bool(train_periods and test_periods and max(train_periods) >= min(test_periods))
    return LeakageDiagnosis(
        units_shared=bool(train_units & test_units),
        periods_shared=bool(train_periods & test_periods),
        groups_shared=groups_shared,
        future_in_train=future_in_train,
    )
