import io

import numpy as np
import pytest

from conftest import make_panel
from panelaudit.errors import ContractError, SchemaError
from panelaudit.feature_builder import (
    DerivationTag,
    FeatureSpec,
    build_design,
    lint_features,
    make_recession_label,
)


def spec_for(small=True, **kw):
    defaults = dict(
        base_predictors=("wage", "pop"),
        outcome_column="income",
        lags=(1, 2),
        include_outcome_lags=False,
    )
    defaults.update(kw)
    return FeatureSpec(**defaults)


class TestFeatureSpec:
    def test_lags_sorted_and_positive(self):
        s = spec_for(lags=(2, 1))
        assert s.lags == (1, 2)
        assert s.max_lag == 2
        with pytest.raises(ContractError):
            spec_for(lags=(0, 1))
        with pytest.raises(ContractError):
            spec_for(lags=(-1,))

    def test_outcome_cannot_be_predictor(self):
        with pytest.raises(ContractError):
            spec_for(base_predictors=("income", "wage"))

    def test_unknown_task(self):
        with pytest.raises(ContractError):
            spec_for(task="nowcasting")

    def test_column_count(self):
        s = spec_for()  # 2 predictors x 2 lags
        assert s.n_columns() == 4
        s = spec_for(include_contemporaneous=True)
        assert s.n_columns() == 6
        s = spec_for(include_outcome_lags=True, outcome_lag_sources=("income",))
        assert s.n_columns() == 6


class TestBuildDesign:
    def test_trimming_by_max_lag(self):
        ds = make_panel(n_units=3, n_periods=5)
        dm = build_design(ds, spec_for())
        # periods 1 and 2 lack the lag-2 source
        assert set(dm.periods) == {3, 4, 5}
        assert dm.n_rows == 3 * 3

    def test_published_shape_arithmetic(self):
        # lag set {1,2} on a balanced N x T panel keeps N * (T - 2) rows
        for n, t in [(4, 6), (3, 8)]:
            ds = make_panel(n_units=n, n_periods=t)
            dm = build_design(ds, spec_for())
            assert dm.n_rows == n * (t - 2)

    def test_lag_values_match_hand_lookup(self):
        ds = make_panel(n_units=2, n_periods=4, seed=11)
        dm = build_design(ds, spec_for(lags=(1,)))
        wage = {(u, int(p)): v for u, p, v in zip(ds.units, ds.periods, ds.columns["wage"])}
        names = dm.column_names
        j = names.index("wage_lag1")
        for i in range(dm.n_rows):
            u, p = dm.units[i], int(dm.periods[i])
            assert dm.X[i, j] == wage[(u, p - 1)]

    def test_contemporaneous_column_is_unlagged(self):
        ds = make_panel(n_units=2, n_periods=4, seed=3)
        dm = build_design(ds, spec_for(lags=(1,), include_contemporaneous=True))
        wage = {(u, int(p)): v for u, p, v in zip(ds.units, ds.periods, ds.columns["wage"])}
        j = dm.column_names.index("wage")
        for i in range(dm.n_rows):
            assert dm.X[i, j] == wage[(dm.units[i], int(dm.periods[i]))]

    def test_outcome_lags_appended(self):
        ds = make_panel(n_units=2, n_periods=5)
        dm = build_design(ds, spec_for(include_outcome_lags=True, outcome_lag_sources=("income",)))
        assert "income_lag1" in dm.column_names
        assert "income_lag2" in dm.column_names
        # y itself is the contemporaneous outcome, never a feature
        assert "income" not in dm.column_names

    def test_unbalanced_panel_trims_per_unit(self):
        ds = make_panel(n_units=3, n_periods=5)
        # remove u0's period 3 so u0 loses rows 4 (lag1 gap) wrt lag set {1}
        keep = [i for i in range(ds.n_rows) if not (ds.units[i] == "u0" and ds.periods[i] == 3)]
        sub = ds.select_rows(np.asarray(keep))
        dm = build_design(sub, spec_for(lags=(1,)))
        u0_periods = set(dm.periods[dm.units == "u0"])
        assert u0_periods == {2, 5}
        assert set(dm.periods[dm.units == "u1"]) == {2, 3, 4, 5}

    def test_missing_column_raises(self, small_panel):
        with pytest.raises(SchemaError):
            build_design(small_panel, spec_for(base_predictors=("wage", "ghost")))

    def test_over_trimming_raises(self):
        ds = make_panel(n_units=2, n_periods=3)
        with pytest.raises(ContractError):
            build_design(ds, spec_for(lags=(5,)))

    def test_write_carries_provenance(self):
        ds = make_panel(n_units=2, n_periods=4)
        dm = build_design(ds, spec_for(lags=(1,)))
        buf = io.StringIO()
        dm.write(buf)
        lines = buf.getvalue().splitlines()
        assert lines[0] == "#column,wage_lag1,wage,1"
        assert lines[1] == "#column,pop_lag1,pop,1"
        assert lines[2].startswith("unit,period,y,")


class TestRecessionLabel:
    def test_label_marks_income_drops(self):
        units = ["a"] * 4
        periods = [1, 2, 3, 4]
        income = [100.0, 90.0, 95.0, 95.0]
        from panelaudit.panel_core import PanelDataset

        ds = PanelDataset(units, periods, {"income": income})
        out = make_recession_label(ds, "income")
        assert list(out.periods) == [2, 3, 4]
        # drop at 2, rise at 3, flat at 4
        assert list(out.columns["recession"]) == [1.0, 0.0, 0.0]

    def test_first_period_trimmed_everywhere(self, small_panel):
        out = make_recession_label(small_panel, "income")
        assert 1 not in set(out.periods)
        assert out.n_rows == small_panel.N * (small_panel.T - 1)

    def test_missing_column(self, small_panel):
        with pytest.raises(SchemaError):
            make_recession_label(small_panel, "gdp")


class TestLint:
    def test_clean_forecasting_spec_passes(self):
        assert lint_features(spec_for(include_outcome_lags=True, outcome_lag_sources=("income",))) == []

    def test_contemporaneous_in_forecasting_is_error(self):
        findings = lint_features(spec_for(include_contemporaneous=True))
        errors = [f for f in findings if f.severity == "error"]
        assert {f.column for f in errors} == {"wage", "pop"}
        assert all(f.rule == "no-contemporaneous-in-forecasting" for f in errors)

    def test_time_invariant_columns_exempt(self):
        tags = {"wage": DerivationTag(source="wage", time_invariant=True)}
        findings = lint_features(spec_for(include_contemporaneous=True, derivation_tags=tags))
        errors = [f for f in findings if f.severity == "error"]
        assert {f.column for f in errors} == {"pop"}

    def test_outcome_derivation_flagged_cross_sectionally(self):
        tags = {"wage": DerivationTag(source="income", transform="growth")}
        findings = lint_features(spec_for(task="cross_sectional", derivation_tags=tags))
        assert any(f.rule == "no-outcome-derivations" and f.column == "wage" for f in findings)

    def test_outcome_derivation_ok_when_lagged_forecasting(self):
        tags = {"wage": DerivationTag(source="income", transform="growth")}
        findings = lint_features(
            spec_for(derivation_tags=tags, include_outcome_lags=True, outcome_lag_sources=("income",))
        )
        assert findings == []

    def test_missing_outcome_lags_warns(self):
        findings = lint_features(spec_for())
        assert [f.severity for f in findings] == ["warning"]
        assert findings[0].rule == "consider-outcome-lags"
