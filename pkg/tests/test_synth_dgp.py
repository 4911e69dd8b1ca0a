import numpy as np
import pytest

from panelaudit.errors import ContractError
from panelaudit.panel_core import validate_panel
from panelaudit.synth_dgp import MomentReport, SyntheticSpec, generate_panel, moment_report


def small_spec(**kw):
    defaults = dict(n_units=40, n_periods=10, n_groups=4, seed=0)
    defaults.update(kw)
    return SyntheticSpec(**defaults)


class TestGeneratePanel:
    def test_shape_and_balance(self):
        ds = generate_panel(small_spec())
        # T-1 periods survive the label construction
        assert ds.N == 40
        assert ds.T == 9
        assert ds.n_rows == 40 * 9
        assert validate_panel(ds).balanced
        assert ds.G == 4

    def test_deterministic_given_seed(self):
        a = generate_panel(small_spec(seed=7))
        b = generate_panel(small_spec(seed=7))
        c = generate_panel(small_spec(seed=8))
        assert np.array_equal(a.columns["income"], b.columns["income"])
        assert not np.array_equal(a.columns["income"], c.columns["income"])

    def test_seed_argument_overrides_spec(self):
        spec = small_spec(seed=1)
        a = generate_panel(spec)
        b = generate_panel(spec, seed=2)
        c = generate_panel(small_spec(seed=2))
        assert not np.array_equal(a.columns["income"], b.columns["income"])
        assert np.array_equal(b.columns["income"], c.columns["income"])

    def test_columns_and_schema(self):
        ds = generate_panel(small_spec(n_predictors=3))
        assert set(ds.column_names) == {"income", "x0", "x1", "x2", "recession"}
        assert ds.schema.group_column == "group"
        assert set(np.unique(ds.columns["recession"])) <= {0.0, 1.0}

    def test_label_matches_income_drops(self):
        ds = generate_panel(small_spec())
        income = {(u, int(p)): v for u, p, v in zip(ds.units, ds.periods, ds.columns["income"])}
        for u, p, lab in zip(ds.units, ds.periods, ds.columns["recession"]):
            prev = income.get((u, int(p) - 1))
            if prev is None:
                continue  # period 2 rows compare against the trimmed period 1 in the raw draw
            assert lab == (1.0 if income[(u, int(p))] < prev else 0.0)

    def test_trend_raises_income_over_time(self):
        ds = generate_panel(small_spec(common_trend=0.05, noise_sd=0.001))
        by_period = [ds.columns["income"][ds.periods == p].mean() for p in np.sort(ds.period_values)]
        assert all(a < b for a, b in zip(by_period[:-1], by_period[1:]))

    def test_break_shifts_income_level_down(self):
        ds = generate_panel(small_spec(break_period=6, break_shift=-0.2, noise_sd=0.001, common_trend=0.0))
        pre = ds.columns["income"][ds.periods == 5].mean()
        post = ds.columns["income"][ds.periods == 6].mean()
        assert post < pre * 0.85

    def test_break_year_has_elevated_prevalence(self):
        ds = generate_panel(small_spec(n_units=200, break_period=6, break_shift=-0.2))
        rec = ds.columns["recession"]
        at_break = rec[ds.periods == 6].mean()
        elsewhere = rec[ds.periods != 6].mean()
        assert at_break > 0.9
        assert elsewhere < 0.5

    def test_groups_move_together(self):
        # group effects shift whole groups; log-income group means must
        # spread more than within-group noise alone would allow
        ds = generate_panel(small_spec(n_units=200, n_groups=5, group_effect_sd=0.5, unit_effect_sd=0.01))
        log_income = np.log(ds.columns["income"])
        group_means = [log_income[ds.groups == g].mean() for g in np.unique(ds.groups.astype(str))]
        assert np.std(group_means) > 0.1

    def test_predictors_correlate_with_log_income(self):
        ds = generate_panel(small_spec(n_units=200))
        log_income = np.log(ds.columns["income"])
        for k in range(6):
            r = np.corrcoef(log_income, ds.columns[f"x{k}"])[0, 1]
            assert r > 0.2

    def test_spec_validation(self):
        with pytest.raises(ContractError):
            small_spec(ar_coefficient=1.0)
        with pytest.raises(ContractError):
            small_spec(n_periods=2)
        with pytest.raises(ContractError):
            small_spec(n_groups=60)
        with pytest.raises(ContractError):
            small_spec(break_period=11)

    def test_vector_trend(self):
        spec = small_spec(common_trend=[0.0] * 5 + [0.1] * 5, noise_sd=0.001)
        ds = generate_panel(spec)
        log_income = np.log(ds.columns["income"])
        early = log_income[ds.periods == 3].mean()
        mid = log_income[ds.periods == 5].mean()
        late = log_income[ds.periods == 7].mean()
        assert abs(mid - early) < 0.05
        assert late - mid > 0.15
        with pytest.raises(ContractError):
            generate_panel(small_spec(common_trend=[0.1, 0.2]))


class TestCalibration:
    def test_default_prevalence_near_published_level(self):
        # defaults aim at a recession share of about 0.15
        ds = generate_panel(SyntheticSpec(seed=0))
        prevalence = float(ds.columns["recession"].mean())
        assert 0.10 <= prevalence <= 0.20

    def test_default_income_centered_on_base(self):
        ds = generate_panel(SyntheticSpec(seed=0))
        mean_income = float(ds.columns["income"].mean())
        # trend lifts the level above the base over 20 periods
        assert 30_000 < mean_income < 60_000


class TestMomentReport:
    def test_fields(self):
        ds = generate_panel(small_spec())
        rep = moment_report(ds)
        assert isinstance(rep, MomentReport)
        assert rep.means["income"] == pytest.approx(float(ds.columns["income"].mean()))
        assert rep.sds["x0"] == pytest.approx(float(ds.columns["x0"].std()))
        assert rep.recession_prevalence == pytest.approx(float(ds.columns["recession"].mean()))
        assert set(rep.prevalence_per_period) == set(int(p) for p in ds.period_values)
