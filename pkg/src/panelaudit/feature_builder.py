"""Design-matrix construction with declared lag structure, plus a leakage linter.

Lag columns are built per unit: the value of column c at lag k for row (u, t)
is the value of c at (u, t - k). Rows without enough history are trimmed per
unit. The linter checks the feature plan itself (not the data) against the
leakage-prone patterns: contemporaneous predictors in forecasting tasks and
predictors that are direct derivations of the outcome.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, SchemaError
from .panel_core import PanelDataset

OUTCOME_TRANSFORMS = ("identity", "log", "growth")


@dataclass(frozen=True)
class DerivationTag:
    """Declares where a column comes from: its source column and transform."""

    source: str
    transform: str = "identity"  # identity | log | growth | other
    time_invariant: bool = False


@dataclass(frozen=True)
class FeatureSpec:
    """Declarative plan for the design matrix."""

    base_predictors: tuple[str, ...]
    outcome_column: str
    lags: tuple[int, ...] = (1, 2)
    include_contemporaneous: bool = False
    include_outcome_lags: bool = True
    outcome_lag_sources: tuple[str, ...] = ()
    task: str = "forecasting"  # forecasting | cross_sectional
    derivation_tags: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "base_predictors", tuple(self.base_predictors))
        object.__setattr__(self, "outcome_lag_sources", tuple(self.outcome_lag_sources))
        object.__setattr__(self, "lags", tuple(sorted(int(k) for k in self.lags)))
        if any(k < 1 for k in self.lags):
            raise ContractError("lags must all be >= 1")
        if self.outcome_column in self.base_predictors:
            raise ContractError("the outcome column cannot be a base predictor")
        if self.task not in ("forecasting", "cross_sectional"):
            raise ContractError(f"unknown task {self.task!r}")

    @property
    def max_lag(self) -> int:
        return max(self.lags) if self.lags else 0

    def n_columns(self) -> int:
        n = len(self.base_predictors) * len(self.lags)
        if self.include_contemporaneous:
            n += len(self.base_predictors)
        if self.include_outcome_lags:
            n += len(self.outcome_lag_sources) * len(self.lags)
        return n


@dataclass(frozen=True)
class ColumnMeta:
    name: str
    source: str
    offset: int


@dataclass
class DesignMatrix:
    """Materialized numeric matrix with per-column provenance and row keys.

    Carries the row unit/period/group arrays so split strategies can be
    applied directly to design rows.
    """

    X: np.ndarray
    y: np.ndarray
    units: np.ndarray
    periods: np.ndarray
    groups: np.ndarray | None
    column_meta: tuple[ColumnMeta, ...]

    @property
    def n_rows(self) -> int:
        return len(self.y)

    @property
    def unit_ids(self) -> np.ndarray:
        return np.unique(self.units.astype(str))

    @property
    def period_values(self) -> np.ndarray:
        return np.unique(self.periods)

    @property
    def group_of(self) -> dict:
        if self.groups is None:
            raise ContractError("design matrix has no group mapping")
        mapping = {}
        for u, g in zip(self.units, self.groups):
            mapping.setdefault(u, g)
        return mapping

    @property
    def column_names(self) -> list[str]:
        return [m.name for m in self.column_meta]

    def write(self, target) -> None:
        """Export as CSV with a provenance header line per column."""
        if hasattr(target, "write"):
            stream, close = target, False
        else:
            stream, close = open(target, "w", newline="", encoding="utf-8"), True
        try:
            writer = csv.writer(stream)
            for m in self.column_meta:
                writer.writerow(["#column", m.name, m.source, m.offset])
            writer.writerow(["unit", "period", "y"] + [m.name for m in self.column_meta])
            for i in range(self.n_rows):
                writer.writerow(
                    [self.units[i], int(self.periods[i]), repr(float(self.y[i]))]
                    + [repr(float(v)) for v in self.X[i]]
                )
        finally:
            if close:
                stream.close()


@dataclass(frozen=True)
class LintFinding:
    severity: str  # error | warning
    rule: str
    column: str
    message: str


def _lagged_lookup(ds: PanelDataset):
    """(unit, period) -> row index for O(1) lag resolution."""
    return {(str(u), int(p)): i for i, (u, p) in enumerate(zip(ds.units, ds.periods))}


def build_design(ds: PanelDataset, spec: FeatureSpec) -> DesignMatrix:
    """Materialize the lag/contemporaneous plan into a numeric matrix.

    A row (u, t) survives iff every required lagged period t - k exists for
    unit u; trimming is per unit, so unbalanced panels degrade gracefully.
    """
    needed = set(spec.base_predictors) | {spec.outcome_column}
    if spec.include_outcome_lags:
        needed |= set(spec.outcome_lag_sources)
    missing = [c for c in needed if c not in ds.columns]
    if missing:
        raise SchemaError(f"columns missing from dataset: {sorted(missing)}")

    lookup = _lagged_lookup(ds)
    plan: list[ColumnMeta] = []
    for c in spec.base_predictors:
        for k in spec.lags:
            plan.append(ColumnMeta(f"{c}_lag{k}", c, k))
    if spec.include_contemporaneous:
        for c in spec.base_predictors:
            plan.append(ColumnMeta(c, c, 0))
    if spec.include_outcome_lags:
        for c in spec.outcome_lag_sources:
            for k in spec.lags:
                plan.append(ColumnMeta(f"{c}_lag{k}", c, k))

    keep = []
    lag_rows = {k: [] for k in spec.lags}
    for i, (u, p) in enumerate(zip(ds.units, ds.periods)):
        sources = {}
        ok = True
        for k in spec.lags:
            j = lookup.get((str(u), int(p) - k))
            if j is None:
                ok = False
                break
            sources[k] = j
        if ok:
            keep.append(i)
            for k in spec.lags:
                lag_rows[k].append(sources[k])
    if not keep:
        raise ContractError("all rows trimmed: the panel is shorter than the maximum lag")
    keep = np.asarray(keep, dtype=np.int64)
    lag_rows = {k: np.asarray(v, dtype=np.int64) for k, v in lag_rows.items()}

    cols = []
    for m in plan:
        src = ds.columns[m.source]
        if m.offset == 0:
            cols.append(src[keep])
        else:
            cols.append(src[lag_rows[m.offset]])
    X = np.column_stack(cols) if cols else np.empty((len(keep), 0))
    return DesignMatrix(
        X=X,
        y=ds.columns[spec.outcome_column][keep].copy(),
        units=ds.units[keep],
        periods=ds.periods[keep],
        groups=None if ds.groups is None else ds.groups[keep],
        column_meta=tuple(plan),
    )


def make_recession_label(ds: PanelDataset, income_column: str, out_column: str = "recession") -> PanelDataset:
    """Add a binary drop-in-income label; each unit's first period is trimmed.

    label(u, t) = 1 iff income(u, t) < income(u, t - 1).
    """
    if income_column not in ds.columns:
        raise SchemaError(f"no column {income_column!r}")
    income = ds.columns[income_column]
    lookup = _lagged_lookup(ds)
    keep = []
    labels = []
    for i, (u, p) in enumerate(zip(ds.units, ds.periods)):
        j = lookup.get((str(u), int(p) - 1))
        if j is None:
            continue
        keep.append(i)
        labels.append(1.0 if income[i] < income[j] else 0.0)
    if not keep:
        raise ContractError("all rows trimmed: no unit has two consecutive periods")
    trimmed = ds.select_rows(np.asarray(keep, dtype=np.int64))
    return trimmed.with_columns({out_column: np.asarray(labels)})


def lint_features(spec: FeatureSpec) -> list[LintFinding]:
    """Check the feature plan against the leakage-prone patterns.

    Errors are emitted only for outright prohibitions; softer guidance comes
    back as warnings. Columns tagged time-invariant are exempt from the
    contemporaneous rule.
    """
    findings = []
    if spec.task == "forecasting" and spec.include_contemporaneous:
        offenders = [
            c
            for c in spec.base_predictors
            if not getattr(spec.derivation_tags.get(c), "time_invariant", False)
        ]
        for c in offenders:
            findings.append(
                LintFinding(
                    severity="error",
                    rule="no-contemporaneous-in-forecasting",
                    column=c,
                    message=f"forecasting task includes contemporaneous predictor {c!r}; "
                    "every predictor must be measured at t-1 or earlier",
                )
            )
    for c in spec.base_predictors:
        tag = spec.derivation_tags.get(c)
        if tag is None:
            continue
        if tag.source == spec.outcome_column and tag.transform in OUTCOME_TRANSFORMS:
            if spec.include_contemporaneous or spec.task == "cross_sectional":
                findings.append(
                    LintFinding(
                        severity="error",
                        rule="no-outcome-derivations",
                        column=c,
                        message=f"predictor {c!r} is a direct {tag.transform} derivation of the "
                        f"outcome {spec.outcome_column!r}",
                    )
                )
    if spec.task == "forecasting" and not spec.include_outcome_lags:
        findings.append(
            LintFinding(
                severity="warning",
                rule="consider-outcome-lags",
                column=spec.outcome_column,
                message="forecasting without lagged outcomes usually reduces accuracy",
            )
        )
    if spec.task == "forecasting" and any(k == 0 for k in spec.lags):
        findings.append(
            LintFinding(
                severity="warning",
                rule="zero-lag-in-forecasting",
                column="",
                message="lag 0 in a forecasting task behaves like a contemporaneous predictor",
            )
        )
    return findings
