"""Synthetic balanced panels with tunable leakage mechanisms.

Log income is additive in a unit effect, a group effect, a common trend, an
optional level shift at a break period, and an AR(1) disturbance. Predictors
load on the same latent components plus independent noise, so that:
autocorrelation rewards temporal leakage, unit/group effects reward
cross-sectional leakage, and the break produces a distribution shift.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError
from .feature_builder import make_recession_label
from .panel_core import PanelDataset, PanelSchema


@dataclass(frozen=True)
class SyntheticSpec:
    n_units: int = 300
    n_periods: int = 20
    n_groups: int = 10
    n_predictors: int = 6
    income_base: float = 34_089.0
    ar_coefficient: float = 0.85
    unit_effect_sd: float = 0.15
    group_effect_sd: float = 0.10
    common_trend: float = 0.03  # per-period log growth, or a length-T vector
    break_period: int | None = None
    break_shift: float = 0.0  # level shock to log income from the break on
    noise_sd: float = 0.028
    predictor_loading: float = 0.8
    predictor_noise_sd: float = 0.3
    # fraction of the static unit and group effects that leaks into the
    # predictors; below 1.0 the covariates no longer fully mediate those
    # effects, leaving a persistent residual that models can only pick up
    # by having seen the same unit (or group) during training
    predictor_effect_share: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.predictor_effect_share <= 1.0:
            raise ContractError("predictor_effect_share must lie in [0, 1]")
        if not 0.0 <= abs(self.ar_coefficient) < 1.0:
            raise ContractError("ar_coefficient must satisfy |rho| < 1")
        if self.n_periods < 3:
            raise ContractError("need at least 3 periods")
        if not self.n_units >= self.n_groups >= 1:
            raise ContractError("need n_units >= n_groups >= 1")
        if self.break_period is not None and not 1 <= self.break_period <= self.n_periods:
            raise ContractError("break_period out of range")


@dataclass(frozen=True)
class MomentReport:
    means: dict
    sds: dict
    recession_prevalence: float
    prevalence_per_period: dict


def _trend_vector(spec: SyntheticSpec) -> np.ndarray:
    ct = spec.common_trend
    if np.isscalar(ct):
        return float(ct) * np.arange(spec.n_periods, dtype=np.float64)
    ct = np.asarray(ct, dtype=np.float64)
    if len(ct) != spec.n_periods:
        raise ContractError("per-period trend vector must have length T")
    return np.cumsum(ct)


def generate_panel(spec: SyntheticSpec, seed: int | None = None) -> PanelDataset:
    """Simulate the balanced panel; deterministic given (spec, seed).

    Columns: income (levels), the recession label derived from drops in
    income, and n_predictors columns x0..x{k-1} loading on the latent
    components. The first period is trimmed by the label construction.
    """
    if seed is None:
        seed = spec.seed
    rng = np.random.default_rng(seed)
    n, t, g = spec.n_units, spec.n_periods, spec.n_groups

    unit_effects = rng.normal(0.0, spec.unit_effect_sd, size=n)
    group_effects = rng.normal(0.0, spec.group_effect_sd, size=g)
    group_index = np.arange(n) % g  # units dealt round-robin into groups
    trend = _trend_vector(spec)

    rho = spec.ar_coefficient
    innovations = rng.normal(0.0, spec.noise_sd, size=(n, t))
    disturbance = np.empty((n, t))
    stationary_sd = spec.noise_sd / math.sqrt(1.0 - rho**2) if rho != 0.0 else spec.noise_sd
    disturbance[:, 0] = (innovations[:, 0] / spec.noise_sd) * stationary_sd if spec.noise_sd > 0 else 0.0
    for j in range(1, t):
        disturbance[:, j] = rho * disturbance[:, j - 1] + innovations[:, j]

    break_term = np.zeros(t)
    if spec.break_period is not None:
        break_term[spec.break_period - 1 :] = spec.break_shift

    latent = (
        unit_effects[:, None]
        + group_effects[group_index][:, None]
        + trend[None, :]
        + break_term[None, :]
        + disturbance
    )
    log_income = math.log(spec.income_base) + latent

    static_effects = unit_effects[:, None] + group_effects[group_index][:, None]
    observed_latent = latent - (1.0 - spec.predictor_effect_share) * static_effects

    pred_noise = rng.normal(0.0, spec.predictor_noise_sd, size=(spec.n_predictors, n, t))
    loadings = spec.predictor_loading * (0.5 + rng.random(spec.n_predictors))
    predictors = loadings[:, None, None] * observed_latent[None, :, :] + pred_noise

    width = len(str(n - 1))
    units = np.repeat([f"u{i:0{width}d}" for i in range(n)], t)
    groups = np.repeat([f"g{int(gi):03d}" for gi in group_index], t)
    periods = np.tile(np.arange(1, t + 1), n)

    columns = {"income": np.exp(log_income).ravel()}
    for k in range(spec.n_predictors):
        columns[f"x{k}"] = predictors[k].ravel()

    schema = PanelSchema(
        unit_column="unit",
        time_column="period",
        group_column="group",
        outcome_columns=("income",),
        predictor_columns=tuple(f"x{k}" for k in range(spec.n_predictors)),
    )
    ds = PanelDataset(units=units, periods=periods, columns=columns, groups=groups, schema=schema)
    return make_recession_label(ds, "income", out_column="recession")


def moment_report(ds: PanelDataset) -> MomentReport:
    """Exact sample moments per column plus recession prevalence per period."""
    means = {c: float(np.mean(v)) for c, v in ds.columns.items()}
    sds = {c: float(np.std(v)) for c, v in ds.columns.items()}
    prevalence = float(np.mean(ds.columns["recession"])) if "recession" in ds.columns else float("nan")
    per_period = {}
    if "recession" in ds.columns:
        rec = ds.columns["recession"]
        for p in ds.period_values:
            mask = ds.periods == p
            per_period[int(p)] = float(np.mean(rec[mask]))
    return MomentReport(
        means=means, sds=sds, recession_prevalence=prevalence, prevalence_per_period=per_period
    )
