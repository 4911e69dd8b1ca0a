"""Command-line front end: synth, split, cv-plan, lint, audit, report.

All commands read a single YAML config (flags override config keys), write
their outputs under the config's output directory, and echo the effective
seed. Exit codes: 0 success, 1 usage/config error, 2 data error,
3 execution error.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click
import yaml

from . import audit as audit_mod
from . import cross_validation as cv_mod
from . import splitting
from .errors import ConfigError, DataError, PanelAuditError
from .feature_builder import DerivationTag, FeatureSpec, lint_features
from .panel_core import PanelSchema, ValidationPolicy, load_panel, write_panel
from .synth_dgp import SyntheticSpec, generate_panel

click.UsageError.exit_code = 1

_TOP_KEYS = {"seed", "output_dir", "data", "schema", "features", "split", "cv", "audit"}
_DATA_KEYS = {"path", "synthetic"}
_SYNTH_KEYS = {
    "n_units", "n_periods", "n_groups", "n_predictors", "income_base", "ar_coefficient",
    "unit_effect_sd", "group_effect_sd", "common_trend", "break_period", "break_shift",
    "noise_sd", "predictor_loading", "predictor_noise_sd", "predictor_effect_share",
}
_SCHEMA_KEYS = {"unit_column", "time_column", "group_column", "outcome_columns", "predictor_columns", "policy"}
_FEATURE_KEYS = {
    "base_predictors", "outcome_column", "lags", "contemporaneous", "outcome_lags",
    "outcome_lag_sources", "task", "derivation_tags",
}
_SPLIT_KEYS = {"kind", "test_fraction", "test_periods", "adjust_to"}
_CV_KEYS = {"kind", "k", "min_train_periods", "horizon", "gap", "window_len"}
_AUDIT_KEYS = {
    "problems", "grid", "test_fraction", "n_test_periods", "break_period",
    "rf_trees", "gbt_rounds", "parallelism", "regression_outcome",
}


def _check_keys(section: dict, allowed: set, where: str) -> None:
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")


def _load_config(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = yaml.safe_load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML in {path}: {exc}")
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a mapping")
    _check_keys(cfg, _TOP_KEYS, "config")
    if "seed" not in cfg:
        raise ConfigError("config must set an explicit seed (no wall-clock defaults)")
    return cfg


def _out_dir(cfg: dict) -> Path:
    out = Path(cfg.get("output_dir", "."))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _schema_from(cfg: dict) -> PanelSchema:
    section = cfg.get("schema")
    if section is None:
        raise ConfigError("config needs a schema section for file-based data")
    _check_keys(section, _SCHEMA_KEYS, "schema")
    return PanelSchema(
        unit_column=section["unit_column"],
        time_column=section["time_column"],
        group_column=section.get("group_column"),
        outcome_columns=tuple(section["outcome_columns"]),
        predictor_columns=tuple(section["predictor_columns"]),
    )


def _synth_spec(cfg: dict) -> SyntheticSpec:
    data = cfg.get("data") or {}
    _check_keys(data, _DATA_KEYS, "data")
    synth = data.get("synthetic")
    if synth is None:
        raise ConfigError("data.synthetic section required")
    _check_keys(synth, _SYNTH_KEYS, "data.synthetic")
    return SyntheticSpec(seed=int(cfg["seed"]), **synth)


def _load_dataset(cfg: dict):
    data = cfg.get("data") or {}
    _check_keys(data, _DATA_KEYS, "data")
    if "synthetic" in data:
        return generate_panel(_synth_spec(cfg))
    if "path" in data:
        schema = _schema_from(cfg)
        policy = ValidationPolicy(cfg.get("schema", {}).get("policy", "strict"))
        return load_panel(data["path"], schema, policy)
    raise ConfigError("data section must provide either a path or a synthetic spec")


def _feature_spec_from(cfg: dict) -> FeatureSpec:
    section = cfg.get("features")
    if section is None:
        raise ConfigError("config needs a features section")
    _check_keys(section, _FEATURE_KEYS, "features")
    tags = {}
    for col, tag in (section.get("derivation_tags") or {}).items():
        tags[col] = DerivationTag(
            source=tag["source"],
            transform=tag.get("transform", "identity"),
            time_invariant=tag.get("time_invariant", False),
        )
    return FeatureSpec(
        base_predictors=tuple(section["base_predictors"]),
        outcome_column=section["outcome_column"],
        lags=tuple(section.get("lags", (1, 2))),
        include_contemporaneous=section.get("contemporaneous", False),
        include_outcome_lags=section.get("outcome_lags", True),
        outcome_lag_sources=tuple(section.get("outcome_lag_sources", ())),
        task=section.get("task", "forecasting"),
        derivation_tags=tags,
    )


def _echo_seed(cfg: dict) -> None:
    click.echo(f"seed: {cfg['seed']}")


def _run(fn):
    try:
        fn()
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(1)
    except DataError as exc:
        click.echo(f"data error: {exc}", err=True)
        sys.exit(2)
    except (PanelAuditError, Exception) as exc:  # noqa: BLE001
        click.echo(f"error: {exc}", err=True)
        sys.exit(3)


@click.group()
def main():
    """Leakage-safe machine learning on panel data."""


@main.command()
@click.argument("config_path", type=click.Path())
def synth(config_path):
    """Generate the synthetic panel CSV."""

    def go():
        cfg = _load_config(config_path)
        _echo_seed(cfg)
        ds = generate_panel(_synth_spec(cfg))
        out = _out_dir(cfg) / "panel.csv"
        write_panel(ds, out)
        click.echo(f"wrote {out} ({ds.n_rows} rows, N={ds.N}, T={ds.T})")

    _run(go)


@main.command()
@click.argument("config_path", type=click.Path())
def split(config_path):
    """Apply the configured split strategy and write the assignment."""

    def go():
        cfg = _load_config(config_path)
        _echo_seed(cfg)
        section = cfg.get("split")
        if section is None:
            raise ConfigError("config needs a split section")
        _check_keys(section, _SPLIT_KEYS, "split")
        ds = _load_dataset(cfg)
        kind = section.get("kind")
        seed = int(cfg["seed"])
        fraction = section.get("test_fraction", 0.2)
        if kind == "observation_random":
            assignment = splitting.split_observation_random(ds, fraction, seed)
        elif kind == "unit_random":
            assignment = splitting.split_unit_random(ds, fraction, seed)
        elif kind == "group_random":
            assignment = splitting.split_group_random(ds, fraction, seed)
        elif kind == "time_holdout":
            assignment = splitting.split_time_holdout(ds, section["test_periods"])
        elif kind == "combined":
            assignment = splitting.split_combined(ds, section["test_periods"], fraction, seed)
        else:
            raise ConfigError(f"unknown split kind {kind!r}")
        if "adjust_to" in section:
            assignment = splitting.adjust_test_size(assignment, int(section["adjust_to"]), seed)
        out = _out_dir(cfg) / "split.csv"
        assignment.write(ds, out)
        diag = splitting.verify_assignment(ds, assignment)
        click.echo(f"wrote {out} (train {assignment.train_size}, test {assignment.test_size})")
        click.echo(
            f"temporal leakage possible: {diag.temporal_leakage_possible}; "
            f"cross-sectional leakage possible: {diag.cross_sectional_leakage_possible}"
        )

    _run(go)


@main.command(name="cv-plan")
@click.argument("config_path", type=click.Path())
def cv_plan(config_path):
    """Generate the configured fold plan and write it."""

    def go():
        cfg = _load_config(config_path)
        _echo_seed(cfg)
        section = cfg.get("cv")
        if section is None:
            raise ConfigError("config needs a cv section")
        _check_keys(section, _CV_KEYS, "cv")
        ds = _load_dataset(cfg)
        kind = section.get("kind")
        seed = int(cfg["seed"])
        if kind == "random_kfold":
            plan = cv_mod.folds_random_kfold(ds, int(section["k"]), seed)
        elif kind == "unit_kfold":
            plan = cv_mod.folds_unit_kfold(ds, int(section["k"]), seed)
        elif kind == "group_kfold":
            plan = cv_mod.folds_group_kfold(ds, int(section["k"]), seed)
        elif kind in ("temporal_expanding", "temporal_rolling"):
            plan = cv_mod.folds_temporal(
                ds,
                mode="expanding" if kind == "temporal_expanding" else "rolling",
                min_train_periods=section.get("min_train_periods"),
                horizon=section.get("horizon", 1),
                gap=section.get("gap", 0),
                window_len=section.get("window_len"),
            )
        else:
            raise ConfigError(f"unknown cv kind {kind!r}")
        out = _out_dir(cfg) / "cvplan.csv"
        plan.write(ds, out)
        click.echo(f"wrote {out} ({len(plan.folds)} folds, kind {plan.kind})")
        if plan.kind == "random_kfold":
            click.echo("warning: random k-fold leaks future periods into fit sets on panel data")

    _run(go)


@main.command()
@click.argument("config_path", type=click.Path())
def lint(config_path):
    """Lint the feature plan; nonzero exit iff any error-severity finding."""

    def go():
        cfg = _load_config(config_path)
        spec = _feature_spec_from(cfg)
        findings = lint_features(spec)
        for f in findings:
            click.echo(f"{f.severity}: [{f.rule}] {f.column}: {f.message}")
        if any(f.severity == "error" for f in findings):
            sys.exit(3)

    try:
        go()
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(1)


@main.command(name="audit")
@click.argument("config_path", type=click.Path())
@click.option("--parallelism", type=int, default=None, help="Override audit.parallelism.")
def audit_cmd(config_path, parallelism):
    """Run the configured model grid and write the result table."""

    def go():
        cfg = _load_config(config_path)
        _echo_seed(cfg)
        section = cfg.get("audit") or {}
        _check_keys(section, _AUDIT_KEYS, "audit")
        ds = _load_dataset(cfg)
        base = [c for c in ds.column_names if c not in ("income", "recession", "log_income")]
        settings = audit_mod.AuditSettings(
            base_predictors=tuple(base),
            test_fraction=section.get("test_fraction", 0.2),
            n_test_periods=section.get("n_test_periods", 4),
            break_period=section.get("break_period"),
            regression_outcome=section.get("regression_outcome", "log_income"),
            rf_trees=section.get("rf_trees", 500),
            gbt_rounds=section.get("gbt_rounds", 500),
            parallelism=parallelism if parallelism is not None else section.get("parallelism", 1),
        )
        prepared = audit_mod.prepare_dataset(ds, settings)
        problems = section.get("problems", list(audit_mod.ALL_PROBLEMS))
        configs = audit_mod.enumerate_grid(problems, settings, full=section.get("grid", "default") == "full")
        results = audit_mod.run_grid(prepared, configs, settings, master_seed=int(cfg["seed"]))
        out = _out_dir(cfg) / "results.csv"
        audit_mod.write_results(results, out)
        n_err = sum(1 for r in results if r.error is not None)
        click.echo(f"wrote {out} ({len(results)} configs, {n_err} failed)")

    _run(go)


@main.command()
@click.argument("config_path", type=click.Path())
@click.option("--results", "results_path", type=click.Path(), default=None, help="Result file to summarize.")
def report(config_path, results_path):
    """Summarize an audit result file into a text table and plot data."""

    def go():
        cfg = _load_config(config_path)
        _echo_seed(cfg)
        out_dir = _out_dir(cfg)
        path = Path(results_path) if results_path else out_dir / "results.csv"
        if not path.exists():
            raise DataError(f"result file not found: {path}")
        results = audit_mod.read_results(path)
        summary = audit_mod.summarize(results)
        text = audit_mod.render_summary(summary)
        (out_dir / "summary.txt").write_text(text, encoding="utf-8")
        audit_mod.write_plot_data(summary, out_dir / "plot_data.csv")
        click.echo(text, nl=False)
        for g in summary.groups:
            if g.gap is not None:
                click.echo(f"{g.problem}/{g.algorithm}: gap {g.gap:.3f}")

    _run(go)


if __name__ == "__main__":
    main()
