import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_panel
from panelaudit.errors import ContractError
from panelaudit.splitting import (
    EXCLUDED,
    TEST,
    TRAIN,
    adjust_test_size,
    round_half_up,
    split_combined,
    split_group_random,
    split_observation_random,
    split_time_holdout,
    split_unit_random,
    verify_assignment,
)


class TestRoundHalfUp:
    def test_halves_round_up(self):
        assert round_half_up(0.5) == 1
        assert round_half_up(1.5) == 2
        assert round_half_up(2.5) == 3
        assert round_half_up(-0.5) == 0

    def test_twenty_percent_of_3058(self):
        # published test-set head-count for the county panel
        assert round_half_up(0.2 * 3058) == 612

    @given(st.integers(min_value=-10**6, max_value=10**6))
    def test_integers_fixed(self, n):
        assert round_half_up(float(n)) == n


class TestObservationRandom:
    def test_sizes(self, small_panel):
        a = split_observation_random(small_panel, 0.25, seed=3)
        assert a.test_size == round_half_up(0.25 * small_panel.n_rows) == 6
        assert a.train_size == small_panel.n_rows - 6
        assert a.excluded_size == 0

    def test_deterministic_in_seed(self, small_panel):
        a = split_observation_random(small_panel, 0.3, seed=9)
        b = split_observation_random(small_panel, 0.3, seed=9)
        c = split_observation_random(small_panel, 0.3, seed=10)
        assert np.array_equal(a.labels, b.labels)
        assert not np.array_equal(a.labels, c.labels)

    def test_diagnosis_shows_both_leakages(self, small_panel):
        # with 24 rows and a 30% sample, sharing a unit and a period is certain
        a = split_observation_random(small_panel, 0.3, seed=0)
        d = verify_assignment(small_panel, a)
        assert d.temporal_leakage_possible
        assert d.cross_sectional_leakage_possible

    def test_bad_fraction(self, small_panel):
        with pytest.raises(ContractError):
            split_observation_random(small_panel, 0.0, seed=0)
        with pytest.raises(ContractError):
            split_observation_random(small_panel, 1.0, seed=0)
        with pytest.raises(ContractError):
            split_observation_random(small_panel, 0.001, seed=0)


class TestUnitRandom:
    def test_units_disjoint(self, small_panel):
        a = split_unit_random(small_panel, 0.34, seed=1)
        train_units = set(small_panel.units[a.train_idx])
        test_units = set(small_panel.units[a.test_idx])
        assert not train_units & test_units
        assert len(test_units) == round_half_up(0.34 * small_panel.N) == 2

    def test_whole_units_move(self, small_panel):
        a = split_unit_random(small_panel, 0.34, seed=1)
        # every unit's rows carry one label
        for u in small_panel.unit_ids:
            labs = set(a.labels[small_panel.units == u])
            assert len(labs) == 1

    def test_diagnosis(self, small_panel):
        a = split_unit_random(small_panel, 0.34, seed=1)
        d = verify_assignment(small_panel, a)
        assert not d.units_shared
        assert d.periods_shared  # all periods appear on both sides


class TestGroupRandom:
    def test_groups_disjoint(self, small_panel):
        a = split_group_random(small_panel, 0.3, seed=2)
        train_groups = set(small_panel.groups[a.train_idx])
        test_groups = set(small_panel.groups[a.test_idx])
        assert not train_groups & test_groups
        d = verify_assignment(small_panel, a)
        assert d.groups_shared is False
        assert not d.units_shared

    def test_share_reaches_fraction(self):
        ds = make_panel(n_units=10, n_periods=2, n_groups=5)
        a = split_group_random(ds, 0.3, seed=4)
        test_units = set(ds.units[a.test_idx])
        # each of 5 groups holds 2 of 10 units; 0.3 needs two groups
        assert len(test_units) == 4

    def test_requires_groups(self):
        ds = make_panel(with_groups=False)
        with pytest.raises(ContractError):
            split_group_random(ds, 0.3, seed=0)


class TestTimeHoldout:
    def test_suffix_split(self, small_panel):
        a = split_time_holdout(small_panel, [4])
        assert a.test_size == small_panel.N
        assert a.train_size == small_panel.N * 3
        d = verify_assignment(small_panel, a)
        assert not d.periods_shared
        assert not d.future_in_train
        assert not d.temporal_leakage_possible
        assert d.units_shared  # same units on both sides, by design

    def test_multi_period_suffix(self, small_panel):
        a = split_time_holdout(small_panel, [3, 4])
        assert a.test_size == small_panel.N * 2

    def test_non_suffix_rejected(self, small_panel):
        with pytest.raises(ContractError):
            split_time_holdout(small_panel, [2])
        with pytest.raises(ContractError):
            split_time_holdout(small_panel, [2, 4])
        with pytest.raises(ContractError):
            split_time_holdout(small_panel, [1, 2, 3, 4])
        with pytest.raises(ContractError):
            split_time_holdout(small_panel, [])


class TestCombined:
    def test_cells(self, small_panel):
        a = split_combined(small_panel, [4], test_fraction=0.34, seed=5)
        test_units = set(small_panel.units[a.test_idx])
        assert len(test_units) == 2
        assert set(small_panel.periods[a.test_idx]) == {4}
        assert set(small_panel.periods[a.train_idx]) == {1, 2, 3}
        assert not test_units & set(small_panel.units[a.train_idx])
        # excluded: test units before period 4 (2x3) plus train units at period 4 (4x1)
        assert a.excluded_size == 2 * 3 + 4 * 1

    def test_diagnosis_clean_on_both_axes(self, small_panel):
        a = split_combined(small_panel, [4], test_fraction=0.34, seed=5)
        d = verify_assignment(small_panel, a)
        assert not d.units_shared
        assert not d.periods_shared
        assert not d.future_in_train

    def test_partition_is_exhaustive(self, small_panel):
        a = split_combined(small_panel, [4], test_fraction=0.34, seed=5)
        assert a.train_size + a.test_size + a.excluded_size == small_panel.n_rows


class TestAdjustTestSize:
    def test_exact_target(self, small_panel):
        a = split_observation_random(small_panel, 0.5, seed=0)
        b = adjust_test_size(a, 3, seed=1)
        assert b.test_size == 3
        # surplus rows are excluded, never retrained on
        assert np.array_equal(a.train_idx, b.train_idx)
        assert b.excluded_size == a.test_size - 3
        assert set(b.test_idx) <= set(a.test_idx)

    def test_noop_at_current_size(self, small_panel):
        a = split_observation_random(small_panel, 0.5, seed=0)
        b = adjust_test_size(a, a.test_size, seed=1)
        assert np.array_equal(a.labels, b.labels)

    def test_overshoot_rejected(self, small_panel):
        a = split_observation_random(small_panel, 0.25, seed=0)
        with pytest.raises(ContractError):
            adjust_test_size(a, a.test_size + 1, seed=0)

    def test_original_untouched(self, small_panel):
        a = split_observation_random(small_panel, 0.5, seed=0)
        before = a.labels.copy()
        adjust_test_size(a, 2, seed=7)
        assert np.array_equal(a.labels, before)


class TestWrite:
    def test_label_csv(self, small_panel):
        a = split_time_holdout(small_panel, [4])
        buf = io.StringIO()
        a.write(small_panel, buf)
        lines = buf.getvalue().strip().splitlines()
        assert lines[0] == "unit,period,label"
        assert len(lines) == small_panel.n_rows + 1
        labels = [ln.rsplit(",", 1)[1] for ln in lines[1:]]
        assert labels.count("test") == a.test_size
        assert set(labels) <= {"train", "test", "excluded"}


@settings(max_examples=40, deadline=None)
@given(
    frac=st.floats(min_value=0.15, max_value=0.85),
    seed=st.integers(min_value=0, max_value=2**31 - 1),
)
def test_observation_split_is_a_partition(frac, seed):
    ds = make_panel(n_units=5, n_periods=4, seed=3)
    a = split_observation_random(ds, frac, seed)
    assert a.train_size + a.test_size == ds.n_rows
    assert a.test_size == round_half_up(frac * ds.n_rows)
    assert set(np.unique(a.labels)) <= {TRAIN, TEST, EXCLUDED}


@settings(max_examples=25, deadline=None)
@given(
    frac=st.floats(min_value=0.2, max_value=0.8),
    seed=st.integers(min_value=0, max_value=2**31 - 1),
)
def test_unit_split_never_shares_units(frac, seed):
    ds = make_panel(n_units=7, n_periods=3, seed=5)
    a = split_unit_random(ds, frac, seed)
    assert not set(ds.units[a.train_idx]) & set(ds.units[a.test_idx])
