"""End-to-end day-ahead pipeline: ingest, clean, featurise, tune, train, evaluate, export."""

from __future__ import annotations

import json
import logging
import time
import warnings
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import jsonschema
import numpy as np
import pandas as pd

from . import __version__, gbt, synth
from .baselines import arima as arima_mod
from .baselines import svr as svr_mod
from .config import PipelineConfig, derive_seed, fragment_yaml, load_schema, synthetic_args
from .dataio import read_records_csv, write_hourly_csv, write_records_csv
from .features import FeatureMatrix, ScalerStats, apply_scaler, build_supervised, chrono_split, fit_scaler
from .metrics import METRICS, MetricBundle, evaluate, rank_models
from .plots import export_plots
from .preprocess import detect_outliers, impute, replace_outliers, split_seasons
from .timeseries import HourlySeries, resample_to_hourly
from .tuning import TuningResult, final_fit, grid_search, gbt_trainer

logger = logging.getLogger(__name__)

MODEL_FILES = {"gbt": "gbt.json", "svr": "svr.json", "arima": "arima.json", "arimax": "arimax.json"}
VOLATILE_KEYS = ("generated_at", "timing")


class StepError(RuntimeError):
    def __init__(self, step: str, where: str, cause: Exception):
        super().__init__(f"{where}: step '{step}' failed: {type(cause).__name__}: {cause}")
        self.step = step
        self.where = where


@dataclass
class DatasetData:
    name: str
    hourly: HourlySeries
    clean: HourlySeries
    summary: dict
    injections: synth.InjectionLog | None = None


@dataclass
class Scenario:
    id: str
    dataset: str
    name: str
    series: HourlySeries
    train: FeatureMatrix
    test: FeatureMatrix
    scaler: ScalerStats
    test_start: int  # index of the first test hour within ``series``

    @property
    def train_scaled(self) -> FeatureMatrix:
        return apply_scaler(self.scaler, self.train)

    @property
    def test_scaled(self) -> FeatureMatrix:
        return apply_scaler(self.scaler, self.test)


@dataclass
class ScenarioResult:
    metrics: dict[str, MetricBundle] = field(default_factory=dict)
    predictions: dict[str, np.ndarray] = field(default_factory=dict)
    models: dict = field(default_factory=dict)
    tuning: TuningResult | None = None
    timing: dict[str, float] = field(default_factory=dict)


def _step(step: str, where: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except StepError:
        raise
    except Exception as exc:  # noqa: BLE001 - re-raised with step context
        raise StepError(step, where, exc) from exc


# ---------------------------------------------------------------- ingestion / cleaning


def load_raw(cfg: PipelineConfig, ds):
    """Raw records for one dataset plus the injection log for synthetic sources."""
    if ds.synthetic is not None:
        return synth.generate(**synthetic_args(ds.synthetic), seed=derive_seed(cfg.seed, "synth", ds.name))
    return read_records_csv(cfg.resolve(ds.source["csv"]), ds.source.get("unit")), None


def prepare_dataset(cfg: PipelineConfig, ds) -> DatasetData:
    records, log = _step("ingest", ds.name, load_raw, cfg, ds)
    hourly = _step("resample", ds.name, resample_to_hourly, records)
    mask = _step("outliers", ds.name, detect_outliers, hourly, ds.outlier)
    replaced = replace_outliers(hourly, mask, ds.outlier)
    missing_load = int(np.isnan(hourly.load).sum())
    missing_temp = int(np.isnan(hourly.temperature).sum())
    clean = _step("impute", ds.name, impute, replaced, cfg.short_gap_max)
    summary = {
        "start": hourly.start.isoformat(),
        "end": hourly.end.isoformat(),
        "hours": len(hourly),
        "raw_records": len(records),
        "unit": records.unit,
        "partial_hours": int(np.sum((hourly.coverage > 0) & (hourly.coverage < 1))),
        "outliers_replaced": int(mask.sum()),
        "outlier_policy": asdict(ds.outlier),
        "missing_load_filled": missing_load,
        "missing_temperature_filled": missing_temp,
        "short_gap_max": cfg.short_gap_max,
    }
    return DatasetData(ds.name, hourly, clean, summary, log)


def make_scenario(cfg: PipelineConfig, dataset: str, name: str, series: HourlySeries) -> Scenario:
    sid = f"{dataset}/{name}"
    matrix = _step("features", sid, build_supervised, series, cfg.lags, cfg.horizon)
    train, test = _step("split", sid, chrono_split, matrix, cfg.train_fraction)
    scaler = fit_scaler(train)
    first = test.timestamps[0]
    test_start = int((first - series.hours[0]).astype(np.int64))
    return Scenario(sid, dataset, name, series, train, test, scaler, test_start)


def scenario_matches(sid: str, wanted: str | None) -> bool:
    if wanted is None:
        return True
    dataset, season = sid.split("/")
    return wanted in (sid, dataset, season)


def prepare(cfg: PipelineConfig, scenario: str | None = None):
    """Datasets, scenarios and per-scenario errors for every selected scenario."""
    datasets, scenarios, errors = {}, {}, {}
    for ds in cfg.datasets:
        sids = [f"{ds.name}/{s}" for s in ds.scenario_names()]
        if not any(scenario_matches(s, scenario) for s in sids):
            continue
        try:
            data = prepare_dataset(cfg, ds)
        except StepError as exc:
            for s in sids:
                errors[s] = {"step": exc.step, "message": str(exc)}
            continue
        datasets[ds.name] = data
        slices = {}
        if ds.full_scenario:
            slices["full"] = data.clean
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            slices.update(split_seasons(data.clean, ds.seasons))
        for name, series in slices.items():
            sid = f"{ds.name}/{name}"
            if not scenario_matches(sid, scenario):
                continue
            try:
                if len(series) == 0:
                    raise StepError("seasons", sid, ValueError("season range does not overlap the data"))
                scenarios[sid] = make_scenario(cfg, ds.name, name, series)
            except StepError as exc:
                errors[sid] = {"step": exc.step, "message": str(exc)}
    return datasets, scenarios, errors


# ---------------------------------------------------------------- models


def tune_scenario(cfg: PipelineConfig, sc: Scenario) -> TuningResult | None:
    if not cfg.gbt.enabled or not cfg.gbt.grid:
        return None
    base = cfg.gbt.base_params(derive_seed(cfg.seed, "gbt", sc.id))
    return _step(
        "tune", sc.id, grid_search, sc.train_scaled, cfg.gbt.grid, cfg.cv_folds, gbt_trainer(base), cfg.n_jobs
    )


def gbt_params(cfg: PipelineConfig, sc: Scenario, tuned: dict | None) -> gbt.GbtHyperParams:
    base = cfg.gbt.base_params(derive_seed(cfg.seed, "gbt", sc.id))
    return base.replace(**tuned) if tuned else base


def train_scenario(cfg: PipelineConfig, sc: Scenario, tuned: dict | None = None) -> dict:
    models = {}
    if cfg.gbt.enabled:
        params = gbt_params(cfg, sc, tuned)
        models["gbt"], _ = _step(
            "train:gbt", sc.id, final_fit, sc.train_scaled, sc.test_scaled, params,
            cfg.gbt.early_stopping_patience, cfg.gbt.validation_fraction, cfg.mape_floor,
        )
    history = sc.series.load[: sc.test_start]
    if cfg.arima.enabled:
        models["arima"] = _step(
            "train:arima", sc.id, arima_mod.fit_arima, history, cfg.arima.order,
            include_intercept=cfg.arima.include_intercept,
        )
    if cfg.arimax.enabled:
        models["arimax"] = _step(
            "train:arimax", sc.id, arima_mod.fit_arimax, history, sc.series.temperature[: sc.test_start],
            cfg.arimax.order, include_intercept=cfg.arimax.include_intercept,
        )
    if cfg.svr.enabled:
        s = cfg.svr
        models["svr"] = _step(
            "train:svr", sc.id, svr_mod.fit_svr, sc.train_scaled, s.kernel, s.C, s.epsilon, s.gamma
        )
    return models


def predict_scenario(cfg: PipelineConfig, sc: Scenario, models: dict) -> dict[str, np.ndarray]:
    preds = {}
    for name in ("gbt", "arima", "arimax", "svr"):
        if name not in models:
            continue
        model = models[name]
        if name == "gbt":
            preds[name] = _step("evaluate:gbt", sc.id, model.predict, sc.test_scaled)
        elif name == "svr":
            preds[name] = _step("evaluate:svr", sc.id, model.predict, sc.test_scaled)
        else:
            exog = sc.series.temperature if model.has_exog else None
            preds[name] = _step(
                f"evaluate:{name}", sc.id, arima_mod.walk_forward, model, sc.series.load,
                sc.test_start, len(sc.series), cfg.horizon, exog,
            )
    return preds


def evaluate_predictions(cfg: PipelineConfig, sc: Scenario, preds: dict) -> dict[str, MetricBundle]:
    return {m: evaluate(sc.test.y, p, cfg.mape_floor) for m, p in preds.items()}


def model_info(name: str, model) -> dict:
    if name == "gbt":
        return {
            "params": asdict(model.params),
            "base_score": model.base_score,
            "trees": len(model.trees),
            "best_iteration": model.best_iteration,
        }
    if name == "svr":
        return {"kernel": model.kernel, "gamma": model.gamma, "C": model.C, "epsilon": model.epsilon,
                "n_support": model.n_support, "bias": model.bias}
    return {"order": [model.order.p, model.order.d, model.order.q], "intercept": model.intercept,
            "phi": list(map(float, model.phi)), "theta": list(map(float, model.theta)),
            "beta": model.beta, "sigma2": model.sigma2}


def run_scenario(cfg: PipelineConfig, sc: Scenario) -> ScenarioResult:
    res = ScenarioResult()
    t0 = time.perf_counter()
    res.tuning = tune_scenario(cfg, sc)
    res.timing["tune"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    res.models = train_scenario(cfg, sc, res.tuning.best_params if res.tuning else None)
    res.timing["train"] = time.perf_counter() - t0
    res.predictions = predict_scenario(cfg, sc, res.models)
    res.metrics = evaluate_predictions(cfg, sc, res.predictions)
    return res


# ---------------------------------------------------------------- artifacts


def scenario_dir(cfg: PipelineConfig, sid: str) -> Path:
    dataset, name = sid.split("/")
    return Path(cfg.output_dir) / "scenarios" / dataset / name


def save_models(directory: Path, sc: Scenario, models: dict) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    for name, model in models.items():
        model.save(directory / MODEL_FILES[name])
    (directory / "scaler.json").write_text(
        json.dumps({"feature_names": list(sc.train.feature_names), "mean": sc.scaler.mean.tolist(),
                    "std": sc.scaler.std.tolist()}, indent=1)
    )


def load_models(directory: Path) -> dict:
    loaders = {
        "gbt": gbt.GbtModel.load,
        "svr": lambda p: svr_mod.SvrModel.loads(Path(p).read_text()),
        "arima": lambda p: arima_mod.ArimaModel.loads(Path(p).read_text()),
        "arimax": lambda p: arima_mod.ArimaModel.loads(Path(p).read_text()),
    }
    return {name: loaders[name](directory / f) for name, f in MODEL_FILES.items() if (directory / f).exists()}


def save_tuning(directory: Path, result: TuningResult, base_params: dict | None = None) -> None:
    """Search log plus a config fragment holding the configured params overlaid with the winner."""
    directory.mkdir(parents=True, exist_ok=True)
    (directory / "tuning.json").write_text(json.dumps(result.to_dict(), indent=1))
    params = {**(base_params or {}), **result.best_params}
    (directory / "best_gbt_params.yaml").write_text(fragment_yaml(params))


def load_tuning(directory: Path) -> TuningResult | None:
    path = directory / "tuning.json"
    return TuningResult.from_dict(json.loads(path.read_text())) if path.exists() else None


def save_predictions(directory: Path, sc: Scenario, preds: dict) -> None:
    frame = pd.DataFrame({"timestamp": np.datetime_as_string(sc.test.timestamps, unit="s"), "actual": sc.test.y})
    frame["timestamp"] = frame["timestamp"] + "Z"
    for name, p in preds.items():
        frame[name] = p
    frame.to_csv(directory / "predictions.csv", index=False)


# ---------------------------------------------------------------- report


def build_report(cfg, datasets, scenarios, results, errors, timing) -> dict:
    report = {
        "tool": {"name": "dayahead", "version": __version__},
        "seed": cfg.seed,
        "config": cfg.echo(),
        "datasets": {name: d.summary for name, d in datasets.items()},
        "scenarios": {},
        "errors": {sid: errors[sid] for sid in sorted(errors)},
    }
    for sid in cfg.scenario_ids():
        if sid not in results:
            continue
        sc, res = scenarios[sid], results[sid]
        entry = {
            "data": {
                "rows": len(sc.train) + len(sc.test),
                "train_rows": len(sc.train),
                "test_rows": len(sc.test),
                "test_window": [str(sc.test.timestamps[0]) + ":00Z", str(sc.test.timestamps[-1]) + ":00Z"],
                "metric_window": "test",
                "features": list(sc.train.feature_names),
            },
            "metrics": {m: b.to_dict() for m, b in res.metrics.items()},
            "ranking": {},
            "models": {m: model_info(m, model) for m, model in res.models.items()},
        }
        for key in METRICS:
            try:
                entry["ranking"][key] = rank_models(res.metrics, key)
            except ValueError:
                entry["ranking"][key] = None
        if res.tuning is not None:
            t = res.tuning
            entry["tuning"] = {
                "candidates": len(t.candidates),
                "infeasible": len(t.errors),
                "best_index": t.best_index,
                "best_params": t.best_params,
                "best_mean_mae": t.best_mae,
            }
        report["scenarios"][sid] = entry
    report["timing"] = timing
    report["generated_at"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
    return report


def dumps_report(report: dict) -> str:
    return json.dumps(report, indent=1, allow_nan=False) + "\n"


def validate_report(report: dict) -> None:
    jsonschema.validate(report, load_schema("report.schema.json"))


def strip_volatile(report: dict) -> dict:
    return {k: v for k, v in report.items() if k not in VOLATILE_KEYS}


def _fmt(v, pct=False):
    if v is None:
        return "n/a"
    return f"{v:.2f}%" if pct else f"{v:.4f}"


def summary_table(report: dict) -> str:
    lines = []
    for sid, entry in report["scenarios"].items():
        models = list(entry["metrics"])
        lines.append(f"Day-ahead load forecasting performance: {sid} (test window)")
        lines.append("metric".ljust(8) + "".join(m.upper().rjust(12) for m in models))
        for key, label in (("mae", "MAE"), ("mse", "MSE"), ("rmse", "RMSE"), ("mape", "MAPE"), ("r2", "R2")):
            row = label.ljust(8)
            for m in models:
                row += _fmt(entry["metrics"][m][key], pct=key == "mape").rjust(12)
            lines.append(row)
        if entry["ranking"].get("mae"):
            lines.append("ranking by MAE: " + " < ".join(entry["ranking"]["mae"]))
        lines.append("")
    for sid, err in report["errors"].items():
        lines.append(f"FAILED {sid} at {err['step']}: {err['message']}")
    return "\n".join(lines).rstrip() + "\n"


# ---------------------------------------------------------------- commands


def run(cfg: PipelineConfig, scenario: str | None = None, write: bool = True) -> dict:
    """Every step for every selected scenario; returns the report."""
    t_start = time.perf_counter()
    datasets, scenarios, errors = prepare(cfg, scenario)
    results, timing = {}, {}
    for sid, sc in scenarios.items():
        t0 = time.perf_counter()
        try:
            results[sid] = run_scenario(cfg, sc)
        except StepError as exc:
            logger.error("%s", exc)
            errors[sid] = {"step": exc.step, "message": str(exc)}
            continue
        timing[sid] = {**results[sid].timing, "total": time.perf_counter() - t0}
        if write:
            d = scenario_dir(cfg, sid)
            save_models(d, sc, results[sid].models)
            if results[sid].tuning is not None:
                save_tuning(d, results[sid].tuning, cfg.gbt.params)
            save_predictions(d, sc, results[sid].predictions)
            if cfg.plots:
                export_plots(sc.test.y, results[sid].predictions, d / "plots", sid)
    timing["total"] = time.perf_counter() - t_start
    report = build_report(cfg, datasets, scenarios, results, errors, timing)
    if write:
        write_report(cfg, report)
    return report


def write_report(cfg: PipelineConfig, report: dict) -> None:
    validate_report(report)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(dumps_report(report))
    (out / "summary.txt").write_text(summary_table(report))


def cmd_generate(cfg: PipelineConfig) -> list[Path]:
    out = Path(cfg.output_dir) / "data"
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for ds in cfg.datasets:
        if ds.synthetic is None:
            continue
        records, log = load_raw(cfg, ds)
        path = out / f"{ds.name}.csv"
        write_records_csv(records, path)
        log.save(out / f"{ds.name}.injections.json")
        written.append(path)
    return written


def cmd_preprocess(cfg: PipelineConfig, scenario: str | None = None) -> dict:
    out = Path(cfg.output_dir) / "data"
    out.mkdir(parents=True, exist_ok=True)
    datasets, _, errors = prepare(cfg, scenario)
    for name, d in datasets.items():
        write_hourly_csv(d.clean, out / f"{name}.hourly.csv")
        (out / f"{name}.preprocess.json").write_text(json.dumps(d.summary, indent=1))
    return {"datasets": {n: d.summary for n, d in datasets.items()}, "errors": errors}


def cmd_tune(cfg: PipelineConfig, scenario: str | None = None) -> dict:
    _, scenarios, errors = prepare(cfg, scenario)
    best = {}
    for sid, sc in scenarios.items():
        try:
            result = tune_scenario(cfg, sc)
        except StepError as exc:
            errors[sid] = {"step": exc.step, "message": str(exc)}
            continue
        if result is not None:
            save_tuning(scenario_dir(cfg, sid), result, cfg.gbt.params)
            best[sid] = result.best_params
    return {"best_params": best, "errors": errors}


def cmd_train(cfg: PipelineConfig, scenario: str | None = None) -> dict:
    _, scenarios, errors = prepare(cfg, scenario)
    trained = {}
    for sid, sc in scenarios.items():
        d = scenario_dir(cfg, sid)
        tuning = load_tuning(d)
        try:
            models = train_scenario(cfg, sc, tuning.best_params if tuning else None)
        except StepError as exc:
            errors[sid] = {"step": exc.step, "message": str(exc)}
            continue
        save_models(d, sc, models)
        trained[sid] = sorted(models)
    return {"trained": trained, "errors": errors}


def cmd_evaluate(cfg: PipelineConfig, scenario: str | None = None) -> dict:
    t_start = time.perf_counter()
    datasets, scenarios, errors = prepare(cfg, scenario)
    results = {}
    for sid, sc in scenarios.items():
        d = scenario_dir(cfg, sid)
        models = load_models(d)
        if not models:
            errors[sid] = {"step": "evaluate", "message": f"{sid}: no trained models under {d}"}
            continue
        res = ScenarioResult(models=models, tuning=load_tuning(d))
        try:
            res.predictions = predict_scenario(cfg, sc, models)
        except StepError as exc:
            errors[sid] = {"step": exc.step, "message": str(exc)}
            continue
        res.metrics = evaluate_predictions(cfg, sc, res.predictions)
        results[sid] = res
        save_predictions(d, sc, res.predictions)
        if cfg.plots:
            export_plots(sc.test.y, res.predictions, d / "plots", sid)
    report = build_report(cfg, datasets, scenarios, results, errors, {"total": time.perf_counter() - t_start})
    write_report(cfg, report)
    return report
