"""End-to-end leakage audit: enumerate a model grid, run it, summarize inflation.

Each grid cell pairs a predictive problem (forecasting / cross-sectional x
binary / continuous, plus break-year variants) with an algorithm, a split
strategy, feature toggles, and a test-size adjustment flag. Every cell is
classified leaked or clean from its configuration alone, run end to end,
and the summary contrasts the two groups.
"""

from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import metrics as _metrics
from . import splitting
from .errors import ContractError, ExecutionError
from .feature_builder import FeatureSpec, build_design, make_recession_label
from .learners import (
    BoostParams,
    ForestParams,
    TreeParams,
    fit_gbt,
    fit_logistic,
    fit_ols,
    fit_random_forest,
)
from .panel_core import PanelDataset
from .splitting import round_half_up

FORECAST_PROBLEMS = ("forecast_binary", "forecast_continuous")
BREAK_PROBLEMS = ("forecast_binary_break_year", "forecast_continuous_break_year")
CROSS_SECTIONAL_PROBLEMS = ("cross_sectional_binary", "cross_sectional_continuous")
ALL_PROBLEMS = FORECAST_PROBLEMS + CROSS_SECTIONAL_PROBLEMS + BREAK_PROBLEMS

_BINARY = {p for p in ALL_PROBLEMS if "binary" in p}


@dataclass(frozen=True)
class PredictiveProblem:
    id: str
    break_period: int | None = None

    def __post_init__(self):
        if self.id not in ALL_PROBLEMS:
            raise ContractError(f"unknown problem {self.id!r}")
        if self.id in BREAK_PROBLEMS and self.break_period is None:
            raise ContractError(f"problem {self.id!r} needs a break_period")

    @property
    def binary(self) -> bool:
        return self.id in _BINARY

    @property
    def forecasting(self) -> bool:
        return self.id in FORECAST_PROBLEMS or self.id in BREAK_PROBLEMS


@dataclass(frozen=True)
class ModelConfig:
    problem: PredictiveProblem
    algorithm: str  # ols | logit | random_forest | gbt
    contemporaneous: bool
    outcome_lags: bool
    split: str  # observation_random | unit_random | group_random | time_holdout
    adjust_test_size: bool
    seed: int = 0

    def __post_init__(self):
        if self.algorithm not in ("ols", "logit", "random_forest", "gbt"):
            raise ContractError(f"unknown algorithm {self.algorithm!r}")
        if self.algorithm == "logit" and not self.problem.binary:
            raise ContractError("logit applies only to binary problems")
        if self.algorithm == "ols" and self.problem.binary:
            raise ContractError("ols applies only to continuous problems")
        if self.split not in ("observation_random", "unit_random", "group_random", "time_holdout"):
            raise ContractError(f"unknown split {self.split!r}")


@dataclass(frozen=True)
class LeakageFlags:
    temporal_leaked: bool
    cross_sectional_leaked: bool


def classify_leakage(config: ModelConfig) -> LeakageFlags:
    """Leaked/clean classification from the configuration alone.

    Forecasting problems: temporally leaked iff contemporaneous predictors
    are used or the split is not time-based. Cross-sectional problems:
    cross-sectionally leaked iff the split is not at the group level.
    """
    if config.problem.forecasting:
        temporal = config.contemporaneous or config.split != "time_holdout"
    else:
        temporal = False
    cross = config.split not in ("group_random",)
    if config.problem.forecasting:
        return LeakageFlags(temporal_leaked=temporal, cross_sectional_leaked=config.split != "group_random")
    return LeakageFlags(temporal_leaked=False, cross_sectional_leaked=cross)


@dataclass
class ResultRecord:
    config: ModelConfig
    flags: LeakageFlags
    metric_name: str  # auc | mse
    metric: float | None
    sensitivity: float | None = None
    specificity: float | None = None
    train_size: int = 0
    test_size: int = 0
    error: str | None = None

    @property
    def leaked(self) -> bool:
        if self.config.problem.forecasting:
            return self.flags.temporal_leaked
        return self.flags.cross_sectional_leaked


@dataclass(frozen=True)
class AuditSettings:
    """Dataset-level knobs shared by all grid cells."""

    income_column: str = "income"
    label_column: str = "recession"
    base_predictors: tuple[str, ...] = ()
    lags: tuple[int, ...] = (1, 2)
    test_fraction: float = 0.2
    n_test_periods: int = 4  # time-holdout suffix length for all-years problems
    break_period: int | None = None
    regression_outcome: str = "log_income"  # log_income | income_growth
    rf_trees: int = 500
    gbt_rounds: int = 500
    parallelism: int = 1


def enumerate_grid(problems, settings: AuditSettings, full: bool = False) -> list[ModelConfig]:
    """Cartesian product of the enabled axes per problem.

    The default grid reproduces the published table row sets: 48 cells per
    forecasting problem, 18 per cross-sectional problem. `full=True` also
    adds unit/group splits to forecasting problems.
    """
    configs = []
    for problem in problems:
        if isinstance(problem, str):
            bp = settings.break_period if problem in BREAK_PROBLEMS else None
            problem = PredictiveProblem(problem, break_period=bp)
        linear = "logit" if problem.binary else "ols"
        algorithms = (linear, "random_forest", "gbt")
        if problem.forecasting:
            splits = ["time_holdout", "observation_random"]
            if full:
                splits += ["unit_random", "group_random"]
            for algorithm in algorithms:
                for contemporaneous in (False, True):
                    for outcome_lags in (False, True):
                        for split in splits:
                            for adjust in (False, True):
                                configs.append(
                                    ModelConfig(
                                        problem=problem,
                                        algorithm=algorithm,
                                        contemporaneous=contemporaneous,
                                        outcome_lags=outcome_lags,
                                        split=split,
                                        adjust_test_size=adjust,
                                    )
                                )
        else:
            # cross-sectional problems predict from current covariates; the
            # contested axis is the split level, so the feature plan is fixed
            # (contemporaneous predictors, no outcome-derived features)
            for algorithm in algorithms:
                for split in ("observation_random", "unit_random", "group_random"):
                    for adjust in (False, True):
                        configs.append(
                            ModelConfig(
                                problem=problem,
                                algorithm=algorithm,
                                contemporaneous=True,
                                outcome_lags=False,
                                split=split,
                                adjust_test_size=adjust,
                            )
                        )
    if not configs:
        raise ContractError("empty grid")
    return configs


def prepare_dataset(ds: PanelDataset, settings: AuditSettings) -> PanelDataset:
    """Attach the recession label and log-income columns used as outcomes."""
    if settings.label_column not in ds.columns:
        ds = make_recession_label(ds, settings.income_column, out_column=settings.label_column)
    income = ds.columns[settings.income_column]
    if np.any(income <= 0):
        raise ContractError("income must be strictly positive for the log outcome")
    return ds.with_columns({"log_income": np.log(income)})


def _outcome_column(problem: PredictiveProblem, settings: AuditSettings) -> str:
    if problem.binary:
        return settings.label_column
    return "log_income" if settings.regression_outcome == "log_income" else settings.income_column


def _feature_spec(config: ModelConfig, settings: AuditSettings) -> FeatureSpec:
    problem = config.problem
    outcome = _outcome_column(problem, settings)
    # outcome-derived lag sources: the label and log income (the paper's Group b)
    sources = tuple(dict.fromkeys([settings.label_column, "log_income"]))
    return FeatureSpec(
        base_predictors=settings.base_predictors,
        outcome_column=outcome,
        lags=settings.lags,
        include_contemporaneous=config.contemporaneous,
        include_outcome_lags=config.outcome_lags,
        outcome_lag_sources=sources,
        task="forecasting" if problem.forecasting else "cross_sectional",
    )


def _apply_split(design, config: ModelConfig, settings: AuditSettings, split_seed: int):
    periods = np.sort(design.period_values)
    if config.problem.id in BREAK_PROBLEMS:
        test_periods = [int(periods[-1])]  # design already truncated at the break
    else:
        test_periods = [int(p) for p in periods[-settings.n_test_periods :]]
    if config.split == "time_holdout":
        return splitting.split_time_holdout(design, test_periods)
    if config.split == "observation_random":
        return splitting.split_observation_random(design, settings.test_fraction, split_seed)
    if config.split == "unit_random":
        return splitting.split_unit_random(design, settings.test_fraction, split_seed)
    return splitting.split_group_random(design, settings.test_fraction, split_seed)


def _adjust_target(design, config: ModelConfig, settings: AuditSettings) -> int:
    n_periods = 1 if config.problem.id in BREAK_PROBLEMS else settings.n_test_periods
    return round_half_up(settings.test_fraction * len(design.unit_ids)) * n_periods


def _fit_and_score(config, settings, X_train, y_train, X_test, y_test, learner_seed):
    binary = config.problem.binary
    if config.algorithm == "logit":
        model = fit_logistic(X_train, y_train)
    elif config.algorithm == "ols":
        model = fit_ols(X_train, y_train)
    elif config.algorithm == "random_forest":
        params = ForestParams(
            n_trees=settings.rf_trees,
            tree=TreeParams(max_depth=None, min_samples_leaf=4, min_samples_split=10, feature_subsample="sqrt"),
        )
        model = fit_random_forest(
            X_train, y_train, params, learner_seed, task="classification" if binary else "regression"
        )
    else:
        params = BoostParams(rounds=settings.gbt_rounds, loss="logistic" if binary else "squared")
        model = fit_gbt(X_train, y_train, params, learner_seed, task="classification" if binary else "regression")
    scores = model.predict(X_test)
    if binary:
        report = _metrics.classification_report(scores, y_test)
        return "auc", report.auc, report.sensitivity, report.specificity
    return "mse", _metrics.mse(scores, y_test), None, None


def run_config(ds: PanelDataset, config: ModelConfig, settings: AuditSettings) -> ResultRecord:
    """Execute one grid cell end to end; deterministic given config.seed.

    Component failures (e.g. a single-class test set on a tiny panel) are
    recorded in the result instead of aborting the grid.
    """
    flags = classify_leakage(config)
    record = ResultRecord(
        config=config,
        flags=flags,
        metric_name="auc" if config.problem.binary else "mse",
        metric=None,
    )
    try:
        work = ds
        if config.problem.id in BREAK_PROBLEMS:
            bp = config.problem.break_period
            keep = np.flatnonzero(ds.periods <= bp)
            work = ds.select_rows(keep)
        design = build_design(work, _feature_spec(config, settings))

        seeds = np.random.SeedSequence(config.seed).generate_state(3)
        assignment = _apply_split(design, config, settings, int(seeds[0]))
        if config.adjust_test_size:
            target = min(_adjust_target(design, config, settings), assignment.test_size)
            assignment = splitting.adjust_test_size(assignment, target, int(seeds[1]))

        if config.split == "time_holdout" and config.problem.forecasting:
            diag = splitting.verify_assignment(design, assignment)
            if diag.future_in_train or diag.periods_shared:
                raise ExecutionError("time holdout produced temporal overlap")

        train_idx = assignment.train_idx
        test_idx = assignment.test_idx
        record.train_size = len(train_idx)
        record.test_size = len(test_idx)
        name, value, sens, spec_ = _fit_and_score(
            config,
            settings,
            design.X[train_idx],
            design.y[train_idx],
            design.X[test_idx],
            design.y[test_idx],
            int(seeds[2]),
        )
        record.metric_name = name
        record.metric = value
        record.sensitivity = sens
        record.specificity = spec_
    except Exception as exc:  # noqa: BLE001 - per-cell failures become records
        record.error = f"{type(exc).__name__}: {exc}"
    return record


def run_grid(ds: PanelDataset, configs, settings: AuditSettings, master_seed: int = 0) -> list[ResultRecord]:
    """Run every config with a per-cell seed derived from (master_seed, index).

    Results are ordered by config index whatever the parallelism degree.
    """
    seeded = [
        replace(config, seed=int(np.random.SeedSequence((master_seed, i)).generate_state(1)[0]))
        for i, config in enumerate(configs)
    ]
    if settings.parallelism <= 1:
        return [run_config(ds, config, settings) for config in seeded]
    with ThreadPoolExecutor(max_workers=settings.parallelism) as pool:
        return list(pool.map(lambda c: run_config(ds, c, settings), seeded))


@dataclass
class GroupSummary:
    problem: str
    algorithm: str
    metric_name: str
    n_leaked: int
    n_clean: int
    mean_leaked: float | None
    mean_clean: float | None
    gap: float | None
    ratio: float | None


@dataclass
class SummaryReport:
    groups: list[GroupSummary]
    ordered: list[ResultRecord]  # worst-to-best within each problem


def _orientation(metric_name: str) -> str:
    return "higher_is_better" if metric_name == "auc" else "lower_is_better"


def summarize(results) -> SummaryReport:
    """Partition by the problem-relevant leakage flag and contrast group means."""
    results = list(results)
    if not results:
        raise ContractError("no results to summarize")
    groups = []
    keys = []
    for r in results:
        key = (r.config.problem.id, r.config.algorithm)
        if key not in keys:
            keys.append(key)
    for problem_id, algorithm in keys:
        cell = [
            r
            for r in results
            if r.config.problem.id == problem_id and r.config.algorithm == algorithm and r.error is None
        ]
        if not cell:
            continue
        metric_name = cell[0].metric_name
        leaked = [r.metric for r in cell if r.leaked]
        clean = [r.metric for r in cell if not r.leaked]
        mean_leaked = float(np.mean(leaked)) if leaked else None
        mean_clean = float(np.mean(clean)) if clean else None
        gap = ratio = None
        if leaked and clean:
            if metric_name == "auc":
                gap = mean_leaked - mean_clean
            else:
                gap = mean_clean - mean_leaked
            if mean_clean != 0:
                ratio = _metrics.leakage_ratio(mean_clean, mean_leaked, _orientation(metric_name))
        groups.append(
            GroupSummary(
                problem=problem_id,
                algorithm=algorithm,
                metric_name=metric_name,
                n_leaked=len(leaked),
                n_clean=len(clean),
                mean_leaked=mean_leaked,
                mean_clean=mean_clean,
                gap=gap,
                ratio=ratio,
            )
        )

    def sort_key(r):
        if r.error is not None or r.metric is None:
            return (r.config.problem.id, 1, 0.0)
        worst_first = -r.metric if r.metric_name == "mse" else r.metric
        return (r.config.problem.id, 0, worst_first)

    ordered = sorted(results, key=sort_key)
    return SummaryReport(groups=groups, ordered=ordered)


RESULT_COLUMNS = [
    "problem",
    "model",
    "contemporaneous",
    "outcome_lags",
    "split_type",
    "metric_name",
    "metric",
    "adj_test_size",
    "sensitivity",
    "specificity",
    "train_size",
    "test_size",
    "temporal_leaked",
    "cross_sectional_leaked",
    "error",
]


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "yes" if v else "no"
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def write_results(results, target) -> None:
    """Serialize records in the published-table column layout plus flags."""
    if hasattr(target, "write"):
        stream, close = target, False
    else:
        stream, close = open(target, "w", newline="", encoding="utf-8"), True
    try:
        writer = csv.writer(stream)
        writer.writerow(RESULT_COLUMNS)
        for r in results:
            writer.writerow(
                [
                    r.config.problem.id,
                    r.config.algorithm,
                    _fmt(r.config.contemporaneous),
                    _fmt(r.config.outcome_lags),
                    r.config.split,
                    r.metric_name,
                    _fmt(r.metric),
                    _fmt(r.config.adjust_test_size),
                    _fmt(r.sensitivity),
                    _fmt(r.specificity),
                    r.train_size,
                    r.test_size,
                    _fmt(r.flags.temporal_leaked),
                    _fmt(r.flags.cross_sectional_leaked),
                    _fmt(r.error),
                ]
            )
    finally:
        if close:
            stream.close()


def read_results(source) -> list[ResultRecord]:
    """Reload records serialized by write_results."""
    if hasattr(source, "read"):
        stream, close = source, False
    else:
        stream, close = open(source, "r", newline="", encoding="utf-8"), True
    try:
        reader = csv.DictReader(stream)
        records = []
        for row in reader:
            problem_id = row["problem"]
            problem = PredictiveProblem(
                problem_id, break_period=0 if problem_id in BREAK_PROBLEMS else None
            )
            config = ModelConfig(
                problem=problem,
                algorithm=row["model"],
                contemporaneous=row["contemporaneous"] == "yes",
                outcome_lags=row["outcome_lags"] == "yes",
                split=row["split_type"],
                adjust_test_size=row["adj_test_size"] == "yes",
            )
            records.append(
                ResultRecord(
                    config=config,
                    flags=LeakageFlags(
                        temporal_leaked=row["temporal_leaked"] == "yes",
                        cross_sectional_leaked=row["cross_sectional_leaked"] == "yes",
                    ),
                    metric_name=row["metric_name"],
                    metric=float(row["metric"]) if row["metric"] else None,
                    sensitivity=float(row["sensitivity"]) if row["sensitivity"] else None,
                    specificity=float(row["specificity"]) if row["specificity"] else None,
                    train_size=int(row["train_size"]),
                    test_size=int(row["test_size"]),
                    error=row["error"] or None,
                )
            )
        return records
    finally:
        if close:
            stream.close()


def render_summary(report: SummaryReport) -> str:
    """Human-readable plain-text summary table."""
    lines = []
    header = f"{'problem':<32} {'model':<14} {'metric':<7} {'leaked':>8} {'clean':>8} {'gap':>8} {'ratio':>8}"
    lines.append(header)
    lines.append("-" * len(header))
    for g in report.groups:
        lines.append(
            f"{g.problem:<32} {g.algorithm:<14} {g.metric_name:<7} "
            f"{_fmt3(g.mean_leaked):>8} {_fmt3(g.mean_clean):>8} {_fmt3(g.gap):>8} {_fmt3(g.ratio):>8}"
        )
    return "\n".join(lines) + "\n"


def _fmt3(v):
    return "-" if v is None else f"{v:.3f}"


def write_plot_data(report: SummaryReport, target) -> None:
    """Plot-data CSV: x = worst-to-best rank per problem, y = metric, leak flags."""
    if hasattr(target, "write"):
        stream, close = target, False
    else:
        stream, close = open(target, "w", newline="", encoding="utf-8"), True
    try:
        writer = csv.writer(stream)
        writer.writerow(
            ["problem", "model", "rank", "metric_name", "metric", "temporal_leaked", "cross_sectional_leaked"]
        )
        rank = 0
        current = None
        for r in report.ordered:
            if r.error is not None or r.metric is None:
                continue
            if r.config.problem.id != current:
                current = r.config.problem.id
                rank = 0
            rank += 1
            writer.writerow(
                [
                    r.config.problem.id,
                    r.config.algorithm,
                    rank,
                    r.metric_name,
                    f"{r.metric:.6g}",
                    _fmt(r.flags.temporal_leaked),
                    _fmt(r.flags.cross_sectional_leaked),
                ]
            )
    finally:
        if close:
            stream.close()
