"""Panel dataset model: schema, CSV ingestion, and structural validation.

A panel is a unit x time table. Rows are keyed by (unit, period); every unit
optionally belongs to a group (e.g. counties grouped into states). Periods
are plain integers (years); there is no calendar arithmetic.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import (
    ContractError,
    DuplicateKeyError,
    GroupConsistencyError,
    ParseError,
    SchemaError,
)


class ValidationPolicy(Enum):
    """How ingestion treats defective rows: reject the file or drop the rows."""

    STRICT = "strict"
    DROP = "drop"


@dataclass(frozen=True)
class PanelSchema:
    """Names the key columns and the numeric data columns of a panel file."""

    unit_column: str
    time_column: str
    outcome_columns: tuple[str, ...]
    predictor_columns: tuple[str, ...]
    group_column: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "outcome_columns", tuple(self.outcome_columns))
        object.__setattr__(self, "predictor_columns", tuple(self.predictor_columns))
        if not self.outcome_columns:
            raise SchemaError("schema needs at least one outcome column")
        if not self.predictor_columns:
            raise SchemaError("schema needs at least one predictor column")
        keys = [self.unit_column, self.time_column]
        if self.group_column is not None:
            keys.append(self.group_column)
        data = list(self.outcome_columns) + list(self.predictor_columns)
        if len(set(keys)) != len(keys):
            raise SchemaError("unit/group/time column names must be distinct")
        overlap = set(keys) & set(data)
        if overlap:
            raise SchemaError(f"key columns also declared as data columns: {sorted(overlap)}")
        if len(set(data)) != len(data):
            raise SchemaError("duplicate names among outcome/predictor columns")

    @property
    def data_columns(self) -> tuple[str, ...]:
        return self.outcome_columns + self.predictor_columns


@dataclass(frozen=True)
class ValidationReport:
    """Structural defects of a panel; all lists empty iff it passes strict validation."""

    balanced: bool
    duplicate_keys: list
    units_with_gaps: list
    missing_cells: int
    group_inconsistencies: list

    @property
    def ok(self) -> bool:
        return (
            not self.duplicate_keys
            and not self.units_with_gaps
            and self.missing_cells == 0
            and not self.group_inconsistencies
        )


class PanelDataset:
    """Immutable unit x time table with named numeric columns.

    Rows are kept sorted by (unit, period). All arrays are aligned to rows
    and marked read-only; mutation means constructing a new dataset.
    """

    def __init__(self, units, periods, columns, groups=None, schema=None, sort=True):
        units = np.asarray(units, dtype=object)
        periods = np.asarray(periods, dtype=np.int64)
        if units.shape != periods.shape:
            raise ContractError("units and periods must be equally long")
        if groups is not None:
            groups = np.asarray(groups, dtype=object)
            if groups.shape != units.shape:
                raise ContractError("groups must align with units")
        columns = {name: np.asarray(v, dtype=np.float64) for name, v in columns.items()}
        for name, v in columns.items():
            if v.shape != units.shape:
                raise ContractError(f"column {name!r} does not align with rows")
        if sort and len(units):
            order = np.lexsort((periods, units.astype(str)))
            units = units[order]
            periods = periods[order]
            if groups is not None:
                groups = groups[order]
            columns = {name: v[order] for name, v in columns.items()}
        self.units = units
        self.periods = periods
        self.groups = groups
        self.columns = columns
        self.schema = schema
        for arr in (self.units, self.periods, *columns.values()):
            arr.flags.writeable = False
        if groups is not None:
            groups.flags.writeable = False

    @property
    def n_rows(self) -> int:
        return len(self.units)

    @property
    def column_names(self) -> list[str]:
        return list(self.columns)

    @property
    def unit_ids(self) -> np.ndarray:
        return np.unique(self.units.astype(str))

    @property
    def period_values(self) -> np.ndarray:
        return np.unique(self.periods)

    @property
    def N(self) -> int:
        return len(self.unit_ids)

    @property
    def T(self) -> int:
        return len(self.period_values)

    @property
    def G(self) -> int:
        if self.groups is None:
            raise ContractError("dataset has no group column")
        return len(np.unique(self.groups.astype(str)))

    @property
    def group_of(self) -> dict:
        """unit-id -> group-id; first occurrence wins for inconsistent inputs."""
        if self.groups is None:
            raise ContractError("dataset has no group column")
        mapping = {}
        for u, g in zip(self.units, self.groups):
            mapping.setdefault(u, g)
        return mapping

    def row_keys(self) -> list[tuple]:
        return list(zip(self.units, self.periods))

    def select_rows(self, indices) -> "PanelDataset":
        """Subset by row indices, preserving column alignment and groups."""
        indices = np.asarray(indices, dtype=np.int64)
        if len(indices) and (indices.min() < 0 or indices.max() >= self.n_rows):
            raise ContractError("row index out of range")
        return PanelDataset(
            units=self.units[indices],
            periods=self.periods[indices],
            columns={name: v[indices] for name, v in self.columns.items()},
            groups=None if self.groups is None else self.groups[indices],
            schema=self.schema,
            sort=False,
        )

    def with_columns(self, new_columns: dict) -> "PanelDataset":
        merged = dict(self.columns)
        merged.update({k: np.asarray(v, dtype=np.float64) for k, v in new_columns.items()})
        return PanelDataset(self.units, self.periods, merged, self.groups, self.schema, sort=False)


def load_panel(source, schema: PanelSchema, policy: ValidationPolicy = ValidationPolicy.STRICT) -> PanelDataset:
    """Read a delimited-text panel into a validated PanelDataset.

    `source` is a path or a text stream. Under STRICT, defective rows
    (unparseable cells, missing values, duplicate keys, group conflicts)
    abort the load; under DROP, the offending rows are discarded.
    """
    if hasattr(source, "read"):
        stream = source
        close = False
    else:
        stream = open(source, "r", newline="", encoding="utf-8")
        close = True
    try:
        reader = csv.reader(stream)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty input: no header row")
        needed = [schema.unit_column, schema.time_column] + list(schema.data_columns)
        if schema.group_column is not None:
            needed.insert(2, schema.group_column)
        missing = [c for c in needed if c not in header]
        if missing:
            raise SchemaError(f"columns missing from header: {missing}")
        pos = {c: header.index(c) for c in needed}

        units, periods, groups = [], [], []
        data = {c: [] for c in schema.data_columns}
        strict = policy is ValidationPolicy.STRICT
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                unit = row[pos[schema.unit_column]]
                period = int(row[pos[schema.time_column]])
                values = []
                for c in schema.data_columns:
                    cell = row[pos[c]]
                    if cell == "":
                        raise ParseError(f"missing value at line {lineno}, column {c!r}", lineno, c)
                    try:
                        v = float(cell)
                    except ValueError:
                        raise ParseError(
                            f"non-numeric cell {cell!r} at line {lineno}, column {c!r}", lineno, c
                        )
                    if not np.isfinite(v):
                        raise ParseError(f"non-finite value at line {lineno}, column {c!r}", lineno, c)
                    values.append(v)
            except (ParseError, ValueError, IndexError) as exc:
                if strict:
                    if isinstance(exc, ParseError):
                        raise
                    raise ParseError(f"bad row at line {lineno}: {exc}", lineno, None)
                continue
            units.append(unit)
            periods.append(period)
            if schema.group_column is not None:
                groups.append(row[pos[schema.group_column]])
            for c, v in zip(schema.data_columns, values):
                data[c].append(v)
    finally:
        if close:
            stream.close()

    if not units:
        raise ParseError("no usable data rows")

    units_arr = np.asarray(units, dtype=object)
    periods_arr = np.asarray(periods, dtype=np.int64)
    keys = {}
    dup_rows = set()
    for i, key in enumerate(zip(units, periods)):
        if key in keys:
            if strict:
                raise DuplicateKeyError(f"duplicate (unit, period) key {key}")
            dup_rows.add(i)
        else:
            keys[key] = i
    if schema.group_column is not None:
        seen = {}
        for i, (u, g) in enumerate(zip(units, groups)):
            if u in seen and seen[u] != g:
                if strict:
                    raise GroupConsistencyError(
                        f"unit {u!r} appears in groups {seen[u]!r} and {g!r}"
                    )
                dup_rows.add(i)
            else:
                seen.setdefault(u, g)
    if dup_rows:
        keep = np.asarray([i for i in range(len(units)) if i not in dup_rows], dtype=np.int64)
        units_arr = units_arr[keep]
        periods_arr = periods_arr[keep]
        groups = [groups[i] for i in keep] if groups else groups
        data = {c: [vals[i] for i in keep] for c, vals in data.items()}

    return PanelDataset(
        units=units_arr,
        periods=periods_arr,
        columns=data,
        groups=np.asarray(groups, dtype=object) if schema.group_column is not None else None,
        schema=schema,
    )


def write_panel(ds: PanelDataset, target) -> None:
    """Write the dataset in the same CSV layout load_panel ingests.

    Floats are written with repr, which round-trips float64 exactly.
    """
    if hasattr(target, "write"):
        stream = target
        close = False
    else:
        stream = open(target, "w", newline="", encoding="utf-8")
        close = True
    try:
        writer = csv.writer(stream)
        schema = ds.schema
        unit_col = schema.unit_column if schema else "unit"
        time_col = schema.time_column if schema else "period"
        group_col = schema.group_column if schema else ("group" if ds.groups is not None else None)
        header = [unit_col, time_col]
        if ds.groups is not None and group_col is not None:
            header.append(group_col)
        header.extend(ds.column_names)
        writer.writerow(header)
        cols = [ds.columns[c] for c in ds.column_names]
        for i in range(ds.n_rows):
            row = [ds.units[i], int(ds.periods[i])]
            if ds.groups is not None and group_col is not None:
                row.append(ds.groups[i])
            row.extend(repr(float(col[i])) for col in cols)
            writer.writerow(row)
    finally:
        if close:
            stream.close()


def panel_to_csv_text(ds: PanelDataset) -> str:
    buf = io.StringIO()
    write_panel(ds, buf)
    return buf.getvalue()


def validate_panel(ds: PanelDataset) -> ValidationReport:
    """Report structural defects; pure function of the dataset, never raises."""
    keys = list(zip(ds.units, ds.periods))
    seen = set()
    duplicates = []
    for key in keys:
        if key in seen:
            duplicates.append(key)
        else:
            seen.add(key)

    units = ds.unit_ids
    periods = np.sort(ds.period_values)
    by_unit = {}
    for u, p in keys:
        by_unit.setdefault(str(u), set()).add(int(p))

    units_with_gaps = []
    missing_cells = 0
    full = set(int(p) for p in periods)
    for u in units:
        have = by_unit.get(str(u), set())
        missing_cells += len(full - have)
        if have:
            lo, hi = min(have), max(have)
            span = {p for p in full if lo <= p <= hi}
            if span - have:
                units_with_gaps.append(u)

    group_inconsistencies = []
    if ds.groups is not None:
        mapping = {}
        for u, g in zip(ds.units, ds.groups):
            if u in mapping and mapping[u] != g:
                if u not in group_inconsistencies:
                    group_inconsistencies.append(u)
            else:
                mapping.setdefault(u, g)

    balanced = (
        not duplicates
        and not units_with_gaps
        and missing_cells == 0
        and ds.n_rows == len(units) * len(periods)
    )
    return ValidationReport(
        balanced=balanced,
        duplicate_keys=duplicates,
        units_with_gaps=units_with_gaps,
        missing_cells=missing_cells,
        group_inconsistencies=group_inconsistencies,
    )
