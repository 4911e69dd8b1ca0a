import numpy as np
import pytest

from panelaudit.errors import ContractError
from panelaudit.learners import load_model, save_model
from panelaudit.learners.boosting import BoostedModel, BoostParams, fit_gbt


def full_sample(**kw):
    """Deterministic single-path params: no row/column subsampling."""
    defaults = dict(subsample=1.0, colsample_per_tree=1.0, gamma=0.0, min_child_weight=1e-9)
    defaults.update(kw)
    return BoostParams(**defaults)


def regression_data(seed=0, n=120):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 3))
    y = np.where(X[:, 0] > 0, 3.0, -2.0) + 0.3 * rng.normal(size=n)
    return X, y


class TestSquaredLoss:
    def test_one_stump_equals_shrunk_child_means(self):
        # squared loss, h = 1: the leaf weight is the mean residual of the
        # leaf, so one depth-1 round moves each side lr * residual-mean
        X, y = regression_data(seed=1)
        params = full_sample(rounds=1, max_depth=1, learning_rate=0.4)
        model = fit_gbt(X, y, params, seed=0)
        tree = model.trees[0]
        f, thr = int(tree.feature[0]), float(tree.threshold[0])
        left = X[:, f] <= thr
        base = y.mean()
        pred = model.predict(X)
        expect_left = base + 0.4 * (y[left] - base).mean()
        expect_right = base + 0.4 * (y[~left] - base).mean()
        assert pred[left][0] == pytest.approx(expect_left, abs=1e-10)
        assert pred[~left][0] == pytest.approx(expect_right, abs=1e-10)

    def test_training_loss_decreases_with_rounds(self):
        X, y = regression_data(seed=2)
        losses = []
        for rounds in (1, 10, 60):
            model = fit_gbt(X, y, full_sample(rounds=rounds, learning_rate=0.1), seed=0)
            losses.append(np.mean((model.predict(X) - y) ** 2))
        assert losses[0] > losses[1] > losses[2]

    def test_prohibitive_gamma_yields_constant_model(self):
        X, y = regression_data(seed=3)
        model = fit_gbt(X, y, full_sample(rounds=5, gamma=1e12), seed=0)
        np.testing.assert_allclose(model.predict(X), y.mean(), atol=1e-12)

    def test_min_child_weight_is_min_child_size_under_squared_loss(self):
        # with unit hessians the child hessian sum is the child row count
        X, y = regression_data(seed=4, n=50)
        model = fit_gbt(X, y, full_sample(rounds=1, max_depth=1, min_child_weight=20.0), seed=0)
        tree = model.trees[0]
        if tree.feature[0] >= 0:
            left = int(np.sum(X[:, int(tree.feature[0])] <= tree.threshold[0]))
            assert 20 <= left <= 30


class TestLogisticLoss:
    def test_base_score_is_log_odds(self):
        rng = np.random.default_rng(5)
        X = rng.normal(size=(100, 2))
        y = (rng.random(100) < 0.3).astype(np.float64)
        model = fit_gbt(X, y, full_sample(rounds=1, loss="logistic", gamma=1e12), seed=0, task="classification")
        p = y.mean()
        assert model.base_score == pytest.approx(np.log(p / (1 - p)))
        # constant model predicts the prevalence
        np.testing.assert_allclose(model.predict(X), p, atol=1e-12)

    def test_probabilities_and_signal(self):
        rng = np.random.default_rng(6)
        X = rng.normal(size=(300, 3))
        y = (X[:, 0] > 0).astype(np.float64)
        model = fit_gbt(
            X, y, full_sample(rounds=100, loss="logistic", learning_rate=0.2), seed=0, task="classification"
        )
        p = model.predict(X)
        assert np.all((p > 0) & (p < 1))
        assert p[y == 1].mean() > 0.8
        assert p[y == 0].mean() < 0.2

    def test_binary_targets_enforced(self):
        X, y = regression_data(seed=7)
        with pytest.raises(ContractError):
            fit_gbt(X, y, full_sample(loss="logistic"), seed=0)


class TestStochasticAxes:
    def test_deterministic_in_seed(self):
        X, y = regression_data(seed=8)
        params = BoostParams(rounds=20, subsample=0.5, colsample_per_tree=0.8)
        a = fit_gbt(X, y, params, seed=4)
        b = fit_gbt(X, y, params, seed=4)
        c = fit_gbt(X, y, params, seed=5)
        assert np.array_equal(a.predict(X), b.predict(X))
        assert not np.array_equal(a.predict(X), c.predict(X))

    def test_column_subsample_limits_features_used(self):
        rng = np.random.default_rng(9)
        X = rng.normal(size=(80, 10))
        y = X[:, 0] + rng.normal(scale=0.1, size=80)
        model = fit_gbt(X, y, BoostParams(rounds=5, subsample=1.0, colsample_per_tree=0.3, gamma=0.0), seed=0)
        for tree in model.trees:
            used = set(int(f) for f in tree.feature if f >= 0)
            assert len(used) <= 3

    def test_param_validation(self):
        with pytest.raises(ContractError):
            BoostParams(learning_rate=0.0)
        with pytest.raises(ContractError):
            BoostParams(subsample=0.0)
        with pytest.raises(ContractError):
            BoostParams(rounds=0)
        with pytest.raises(ContractError):
            BoostParams(loss="huber")


class TestSerialization:
    def test_json_round_trip(self, tmp_path):
        X, y = regression_data(seed=10, n=60)
        model = fit_gbt(X, y, BoostParams(rounds=8), seed=3)
        path = tmp_path / "gbt.json"
        save_model(model, path)
        again = load_model(path)
        assert isinstance(again, BoostedModel)
        assert np.array_equal(model.predict(X), again.predict(X))
        assert again.params.loss == "squared"
        assert again.base_score == model.base_score
