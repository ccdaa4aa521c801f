"""Pipeline configuration: YAML document validated against a bundled JSON Schema."""

from __future__ import annotations

import copy
import json
import zlib
from dataclasses import asdict, dataclass, field, replace
from datetime import date
from importlib import resources
from pathlib import Path
from typing import Any

import jsonschema
import numpy as np
import yaml

from . import gbt, synth
from .features import DEFAULT_LAGS
from .preprocess import OutlierPolicy, SeasonRange
from .tuning import FULL_GRID


def load_schema(name: str = "pipeline.schema.json") -> dict:
    return json.loads(resources.files("dayahead").joinpath(name).read_text())


def derive_seed(seed: int, *labels: str) -> int:
    """Stable per-module seed derived from the top-level seed and string labels."""
    words = [seed] + [zlib.crc32(label.encode()) for label in labels]
    return int(np.random.SeedSequence(words).generate_state(1, dtype=np.uint32)[0])


@dataclass(frozen=True)
class DatasetConfig:
    name: str
    source: dict
    outlier: OutlierPolicy
    seasons: tuple[SeasonRange, ...] = ()
    full_scenario: bool = True

    @property
    def synthetic(self) -> dict | None:
        return self.source.get("synthetic")

    def scenario_names(self) -> list[str]:
        names = ["full"] if self.full_scenario else []
        return names + [s.name for s in self.seasons]


@dataclass(frozen=True)
class GbtConfig:
    enabled: bool = True
    params: dict = field(default_factory=dict)
    grid: dict | None = None
    early_stopping_patience: int | None = 20
    validation_fraction: float = 0.1

    def base_params(self, seed: int) -> gbt.GbtHyperParams:
        return gbt.GbtHyperParams.from_dict({**self.params, "seed": seed})


@dataclass(frozen=True)
class ArimaConfig:
    enabled: bool = False
    order: tuple[int, int, int] = (2, 1, 2)
    include_intercept: bool | None = None


@dataclass(frozen=True)
class SvrConfig:
    enabled: bool = False
    kernel: str = "rbf"
    C: float = 1.0
    epsilon: float | None = None
    gamma: float | None = None


@dataclass(frozen=True)
class PipelineConfig:
    datasets: tuple[DatasetConfig, ...]
    gbt: GbtConfig = GbtConfig()
    arima: ArimaConfig = ArimaConfig()
    arimax: ArimaConfig = ArimaConfig()
    svr: SvrConfig = SvrConfig()
    seed: int = 0
    output_dir: str = "out"
    horizon: int = 24
    lags: tuple[int, ...] = DEFAULT_LAGS
    train_fraction: float = 0.8
    cv_folds: int = 5
    mape_floor: float = 0.01
    short_gap_max: int = 2
    plots: bool = True
    n_jobs: int = 1
    raw: dict = field(default_factory=dict, compare=False, repr=False)
    base_dir: Path = field(default=Path("."), compare=False, repr=False)

    def __post_init__(self):
        if self.horizon != 24:
            raise ValueError("the shipped pipeline forecasts 24 hours ahead")
        if min(self.lags) < self.horizon:
            raise ValueError("every lag must be >= horizon")
        if not self.enabled_models():
            raise ValueError("enable at least one model")
        names = [d.name for d in self.datasets]
        if len(set(names)) != len(names):
            raise ValueError("dataset names must be unique")

    def enabled_models(self) -> list[str]:
        return [m for m in ("gbt", "arima", "arimax", "svr") if getattr(self, m).enabled]

    def scenario_ids(self) -> list[str]:
        return [f"{d.name}/{s}" for d in self.datasets for s in d.scenario_names()]

    def with_overrides(self, seed: int | None = None, output_dir: str | None = None, full_grid: bool = False):
        cfg = self
        raw = copy.deepcopy(self.raw)
        if seed is not None:
            cfg = replace(cfg, seed=seed)
            raw["seed"] = seed
        if output_dir is not None:
            cfg = replace(cfg, output_dir=output_dir)
            raw["output_dir"] = output_dir
        if full_grid:
            cfg = replace(cfg, gbt=replace(cfg.gbt, grid=dict(FULL_GRID)))
            raw.setdefault("models", {}).setdefault("gbt", {})["grid"] = FULL_GRID
        return replace(cfg, raw=raw)

    def resolve(self, path: str) -> Path:
        p = Path(path)
        return p if p.is_absolute() else self.base_dir / p

    def echo(self) -> dict:
        """Normalised config for the report (all defaults filled in)."""
        return {
            "seed": self.seed,
            "horizon": self.horizon,
            "lags": list(self.lags),
            "train_fraction": self.train_fraction,
            "cv_folds": self.cv_folds,
            "mape_floor": self.mape_floor,
            "short_gap_max": self.short_gap_max,
            "direct_strategy": "one model over all 24 target hours; hour of day is a feature",
            "datasets": [
                {
                    "name": d.name,
                    "source": d.source,
                    "outlier": asdict(d.outlier),
                    "seasons": [
                        {"name": s.name, "start": s.start_date.isoformat(), "end": s.end_date.isoformat()}
                        for s in d.seasons
                    ],
                    "full_scenario": d.full_scenario,
                }
                for d in self.datasets
            ],
            "models": {
                "gbt": {**asdict(self.gbt)},
                "arima": {**asdict(self.arima), "order": list(self.arima.order)},
                "arimax": {**asdict(self.arimax), "order": list(self.arimax.order)},
                "svr": asdict(self.svr),
            },
        }


def _date(value) -> date:
    return value if isinstance(value, date) else date.fromisoformat(str(value))


def _stringify_dates(obj):
    if isinstance(obj, dict):
        return {k: _stringify_dates(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_stringify_dates(v) for v in obj]
    if isinstance(obj, date):
        return obj.isoformat()
    return obj


def from_dict(raw: dict, base_dir: Path = Path(".")) -> PipelineConfig:
    raw = _stringify_dates(copy.deepcopy(raw))
    jsonschema.validate(raw, load_schema())
    default_outlier = OutlierPolicy(**raw.get("outlier", {}))
    datasets = []
    for d in raw["datasets"]:
        outlier = replace(default_outlier, **d["outlier"]) if "outlier" in d else default_outlier
        seasons = tuple(SeasonRange(s["name"], _date(s["start"]), _date(s["end"])) for s in d.get("seasons", []))
        if "full" in {s.name for s in seasons}:
            raise ValueError("season name 'full' is reserved")
        datasets.append(DatasetConfig(d["name"], d["source"], outlier, seasons, d.get("full_scenario", True)))

    models = raw["models"]
    g = models.get("gbt", {"enabled": False})
    gbt_cfg = GbtConfig(
        enabled=g.get("enabled", True),
        params=dict(g.get("params", {})),
        grid=dict(g["grid"]) if g.get("grid") else None,
        early_stopping_patience=g.get("early_stopping_patience", 20),
        validation_fraction=g.get("validation_fraction", 0.1),
    )
    gbt.GbtHyperParams.from_dict(gbt_cfg.params)  # fail early on bad names/values
    if gbt_cfg.grid:
        unknown = set(gbt_cfg.grid) - set(asdict(gbt.GbtHyperParams()))
        if unknown:
            raise ValueError(f"unknown grid parameters: {sorted(unknown)}")

    def arima_cfg(key):
        a = models.get(key)
        if a is None:
            return ArimaConfig(enabled=False)
        return ArimaConfig(a.get("enabled", True), tuple(a.get("order", (2, 1, 2))), a.get("include_intercept"))

    s = models.get("svr")
    svr_cfg = SvrConfig(enabled=False) if s is None else SvrConfig(
        s.get("enabled", True), s.get("kernel", "rbf"), s.get("C", 1.0), s.get("epsilon"), s.get("gamma")
    )
    return PipelineConfig(
        datasets=tuple(datasets),
        gbt=gbt_cfg,
        arima=arima_cfg("arima"),
        arimax=arima_cfg("arimax"),
        svr=svr_cfg,
        seed=raw.get("seed", 0),
        output_dir=raw.get("output_dir", "out"),
        horizon=raw.get("horizon", 24),
        lags=tuple(raw.get("lags", DEFAULT_LAGS)),
        train_fraction=raw.get("train_fraction", 0.8),
        cv_folds=raw.get("cv_folds", 5),
        mape_floor=raw.get("mape_floor", 0.01),
        short_gap_max=raw.get("imputation", {}).get("short_gap_max", 2),
        plots=raw.get("plots", True),
        n_jobs=raw.get("n_jobs", 1),
        raw=raw,
        base_dir=base_dir,
    )


def load_config(path: str | Path) -> PipelineConfig:
    path = Path(path)
    raw = yaml.safe_load(path.read_text())
    return from_dict(raw, base_dir=path.parent)


def synthetic_profile(spec: dict) -> synth.ClimateProfile:
    profile = synth.PROFILES[spec["profile"]]
    overrides = spec.get("overrides") or {}
    return replace(profile, **overrides) if overrides else profile


def synthetic_args(spec: dict) -> dict[str, Any]:
    return {
        "profile": synthetic_profile(spec),
        "start": _date(spec.get("start", synth.DEFAULT_START)),
        "end": _date(spec.get("end", synth.DEFAULT_END)),
        "resolution": spec.get("resolution", "1min"),
        "injection": synth.Injection(**spec.get("injection", {})),
    }


def fragment_yaml(params: dict) -> str:
    """Stand-alone config fragment holding tuned boosted-tree parameters."""
    return yaml.safe_dump({"models": {"gbt": {"params": params}}}, sort_keys=False)
