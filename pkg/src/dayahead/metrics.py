"""Forecast error metrics: MAE, MSE, RMSE, MAPE and R²."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Mapping

import numpy as np

ERROR_METRICS = ("mae", "mse", "rmse", "mape")
METRICS = ERROR_METRICS + ("r2",)


@dataclass(frozen=True)
class MetricBundle:
    """Metric values; ``mape`` (percent) and ``r2`` are None when undefined."""

    mae: float
    mse: float
    rmse: float
    mape: float | None
    r2: float | None
    n: int
    mape_excluded: int = 0

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: Mapping) -> MetricBundle:
        return cls(**d)

    def get(self, key: str) -> float | None:
        if key not in METRICS:
            raise ValueError(f"unknown metric {key!r}")
        return getattr(self, key)


def evaluate(y, yhat, mape_floor: float = 0.01) -> MetricBundle:
    y = np.asarray(y, dtype=float)
    yhat = np.asarray(yhat, dtype=float)
    if y.shape != yhat.shape or y.ndim != 1:
        raise ValueError("y and yhat must be 1-D arrays of equal length")
    n = len(y)
    if n == 0:
        raise ValueError("cannot evaluate zero samples")
    e = yhat - y
    mae = math.fsum(np.abs(e)) / n
    sse = math.fsum(e * e)
    mse = sse / n
    rmse = math.sqrt(mse)

    keep = np.abs(y) > mape_floor
    mape = None
    if keep.any():
        mape = 100.0 * math.fsum(np.abs(e[keep] / y[keep])) / int(keep.sum())

    ybar = math.fsum(y) / n
    sst = math.fsum((y - ybar) ** 2)
    r2 = None if sst == 0 else 1.0 - sse / sst
    return MetricBundle(mae, mse, rmse, mape, r2, n, int(n - keep.sum()))


def rank_models(reports: Mapping[str, MetricBundle], key: str = "mae") -> list[str]:
    """Best first: ascending for error metrics, descending for r2; ties alphabetical."""
    if key not in METRICS:
        raise ValueError(f"unknown metric {key!r}")
    values = {}
    for name, bundle in reports.items():
        v = bundle.get(key)
        if v is None:
            raise ValueError(f"{key} undefined for model {name!r}")
        values[name] = v
    sign = -1.0 if key == "r2" else 1.0
    return sorted(values, key=lambda m: (sign * values[m], m))
