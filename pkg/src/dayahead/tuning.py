"""Exhaustive grid search over expanding-window CV folds, selected by mean MAE."""

from __future__ import annotations

import itertools
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from . import gbt
from .features import FeatureMatrix, ts_cv_folds
from .metrics import MetricBundle, evaluate

logger = logging.getLogger(__name__)

# Search space for the boosted-tree forecaster: 4 values for each of 8 knobs
FULL_GRID: dict[str, list] = {
    "n_estimators": [50, 100, 150, 200],
    "learning_rate": [0.01, 0.05, 0.1, 0.2],
    "max_depth": [3, 5, 7, 10],
    "min_child_weight": [1, 3, 5, 7],
    "subsample": [0.7, 0.8, 0.9, 1.0],
    "colsample_bytree": [0.7, 0.8, 0.9, 1.0],
    "reg_lambda": [0, 0.1, 1, 10],
    "reg_alpha": [0, 0.1, 1, 10],
}

# Best settings reported per scenario (alpha 0 and colsample 1.0 throughout)
REFERENCE_PARAMS: dict[str, dict[str, Any]] = {
    "irish_summer": {"reg_lambda": 0.1, "learning_rate": 0.1, "max_depth": 7, "min_child_weight": 5},
    "irish_winter": {"reg_lambda": 0.1, "learning_rate": 0.1, "max_depth": 10, "min_child_weight": 7},
    "vietnam_dry": {"reg_lambda": 0.1, "learning_rate": 0.05, "max_depth": 10, "min_child_weight": 7},
    "vietnam_wet": {"reg_lambda": 0.0, "learning_rate": 0.05, "max_depth": 10, "min_child_weight": 7},
    "irish_full": {"reg_lambda": 1.0, "learning_rate": 0.05, "max_depth": 10, "min_child_weight": 7},
    "vietnam_full": {"reg_lambda": 0.1, "learning_rate": 0.05, "max_depth": 10, "min_child_weight": 7},
}
for _p in REFERENCE_PARAMS.values():
    _p.update(reg_alpha=0.0, colsample_bytree=1.0, n_estimators=200, subsample=0.7)

Trainer = Callable[[FeatureMatrix, dict], Callable[[np.ndarray], np.ndarray]]


def enumerate_grid(grid: Mapping[str, Sequence]) -> list[dict]:
    """Cartesian product; the last declared parameter varies fastest."""
    names = list(grid)
    for name in names:
        if len(grid[name]) == 0:
            raise ValueError(f"grid entry {name!r} is empty")
    return [dict(zip(names, combo)) for combo in itertools.product(*(grid[n] for n in names))]


def grid_size(grid: Mapping[str, Sequence]) -> int:
    return math.prod(len(v) for v in grid.values())


def gbt_trainer(base: gbt.GbtHyperParams = gbt.GbtHyperParams()) -> Trainer:
    """Trainer that overlays candidate values on ``base`` and fits a boosted model."""

    def train(matrix: FeatureMatrix, candidate: dict):
        model = gbt.fit(matrix, base.replace(**candidate, early_stopping_patience=None))
        return model.predict

    return train


@dataclass
class TuningResult:
    candidates: list[dict]
    mean_mae: list[float | None]  # None marks an infeasible candidate
    fold_mae: list[list[float] | None]
    seconds: list[float]
    errors: dict[int, str] = field(default_factory=dict)
    best_index: int = -1

    @property
    def best_params(self) -> dict:
        return dict(self.candidates[self.best_index])

    @property
    def best_mae(self) -> float:
        return self.mean_mae[self.best_index]

    def to_dict(self, include_timing: bool = True) -> dict:
        d = {
            "best_index": self.best_index,
            "best_params": self.best_params,
            "best_mean_mae": self.best_mae,
            "candidates": [
                {"params": c, "mean_mae": m, "fold_mae": f}
                for c, m, f in zip(self.candidates, self.mean_mae, self.fold_mae)
            ],
            "errors": {str(k): v for k, v in self.errors.items()},
        }
        if include_timing:
            d["seconds"] = self.seconds
        return d

    @classmethod
    def from_dict(cls, d: dict) -> TuningResult:
        cands = d["candidates"]
        return cls(
            candidates=[c["params"] for c in cands],
            mean_mae=[c["mean_mae"] for c in cands],
            fold_mae=[c["fold_mae"] for c in cands],
            seconds=d.get("seconds", [0.0] * len(cands)),
            errors={int(k): v for k, v in d.get("errors", {}).items()},
            best_index=int(d["best_index"]),
        )


def _score_candidate(train: FeatureMatrix, folds, trainer: Trainer, candidate: dict):
    t0 = time.perf_counter()
    maes = []
    for fold in folds:
        fit_rows = train.rows(fold.train.start, fold.train.stop)
        val_rows = train.rows(fold.validation.start, fold.validation.stop)
        predict = trainer(fit_rows, candidate)
        maes.append(float(np.mean(np.abs(val_rows.y - predict(val_rows.X)))))
    return maes, time.perf_counter() - t0


def grid_search(
    train: FeatureMatrix,
    grid: Mapping[str, Sequence] | Sequence[dict],
    k: int = 5,
    trainer: Trainer | None = None,
    n_jobs: int = 1,
) -> TuningResult:
    """Score every candidate by mean validation MAE over ``k`` expanding folds.

    Only ``train`` is seen; the caller keeps the test rows out. A candidate whose
    fit raises is recorded as infeasible. Ties go to the earliest candidate.
    """
    candidates = enumerate_grid(grid) if isinstance(grid, Mapping) else [dict(c) for c in grid]
    if not candidates:
        raise ValueError("no candidates to search")
    trainer = trainer or gbt_trainer()
    folds = ts_cv_folds(len(train), k)

    def run(idx):
        try:
            return idx, *_score_candidate(train, folds, trainer, candidates[idx]), None
        except Exception as exc:  # noqa: BLE001 - any trainer failure makes the candidate infeasible
            logger.warning("candidate %d failed: %s", idx, exc)
            return idx, None, 0.0, f"{type(exc).__name__}: {exc}"

    if n_jobs > 1:
        with ThreadPoolExecutor(n_jobs) as pool:
            outcomes = list(pool.map(run, range(len(candidates))))
    else:
        outcomes = [run(i) for i in range(len(candidates))]
    outcomes.sort(key=lambda o: o[0])

    result = TuningResult(candidates, [], [], [])
    for idx, maes, secs, err in outcomes:
        result.fold_mae.append(maes)
        result.mean_mae.append(None if maes is None else float(np.mean(maes)))
        result.seconds.append(secs)
        if err is not None:
            result.errors[idx] = err
    feasible = [i for i, m in enumerate(result.mean_mae) if m is not None]
    if not feasible:
        raise RuntimeError("every candidate failed")
    result.best_index = min(feasible, key=lambda i: (result.mean_mae[i], i))
    return result


def final_fit(
    train: FeatureMatrix,
    test: FeatureMatrix,
    params: gbt.GbtHyperParams,
    early_stopping_patience: int | None = 20,
    validation_fraction: float = 0.1,
    mape_floor: float = 0.01,
) -> tuple[gbt.GbtModel, MetricBundle]:
    """Refit with early stopping on the trailing slice of ``train``, then score on ``test``."""
    params = params.replace(early_stopping_patience=early_stopping_patience)
    if early_stopping_patience is None:
        model = gbt.fit(train, params)
    else:
        cut = len(train) - max(1, int(round(validation_fraction * len(train))))
        if cut < 1:
            raise ValueError("training window too short to hold out a validation tail")
        model = gbt.fit(train.rows(0, cut), params, validation=train.rows(cut, len(train)))
    return model, evaluate(test.y, model.predict(test), mape_floor)
