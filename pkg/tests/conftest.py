import io

import numpy as np
import pytest

from panelaudit.panel_core import PanelDataset, PanelSchema


@pytest.fixture
def small_schema():
    return PanelSchema(
        unit_column="unit",
        time_column="year",
        group_column="state",
        outcome_columns=("income",),
        predictor_columns=("wage", "pop"),
    )


def make_panel(n_units=6, n_periods=4, n_groups=3, seed=0, with_groups=True):
    """Deterministic balanced panel with simple numeric columns."""
    rng = np.random.default_rng(seed)
    units = np.repeat([f"u{i}" for i in range(n_units)], n_periods)
    periods = np.tile(np.arange(1, n_periods + 1), n_units)
    groups = np.repeat([f"g{i % n_groups}" for i in range(n_units)], n_periods) if with_groups else None
    columns = {
        "income": 100.0 + rng.normal(0, 10, size=n_units * n_periods),
        "wage": rng.normal(50, 5, size=n_units * n_periods),
        "pop": rng.normal(1000, 100, size=n_units * n_periods),
    }
    return PanelDataset(units=units, periods=periods, columns=columns, groups=groups)


@pytest.fixture
def small_panel():
    return make_panel()


def csv_stream(text: str) -> io.StringIO:
    return io.StringIO(text)
