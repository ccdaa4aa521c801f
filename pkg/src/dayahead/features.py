"""Supervised matrix construction, standard scaling, chronological splits and CV folds."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .timeseries import HourlySeries, calendar_arrays

DEFAULT_LAGS = (24, 25, 26, 48, 72, 168)
CALENDAR_NAMES = ("hour_of_day", "day_of_week", "day_of_year", "is_weekend")


@dataclass(frozen=True)
class FeatureMatrix:
    X: np.ndarray
    y: np.ndarray
    feature_names: tuple[str, ...]
    timestamps: np.ndarray  # datetime64[h] of each target hour

    def __post_init__(self):
        X = np.array(self.X, dtype=float)
        y = np.array(self.y, dtype=float)
        ts = np.array(self.timestamps, dtype="datetime64[h]")
        if X.ndim != 2 or X.shape[0] != len(y) or len(ts) != len(y):
            raise ValueError("X, y and timestamps disagree in row count")
        if X.shape[1] != len(self.feature_names):
            raise ValueError("feature name count does not match X columns")
        if len(ts) > 1 and np.any(np.diff(ts.astype(np.int64)) <= 0):
            raise ValueError("row timestamps must be strictly increasing")
        for name, arr in (("X", X), ("y", y), ("timestamps", ts)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))

    def __len__(self) -> int:
        return len(self.y)

    def rows(self, lo: int, hi: int) -> FeatureMatrix:
        return FeatureMatrix(self.X[lo:hi], self.y[lo:hi], self.feature_names, self.timestamps[lo:hi])

    def with_X(self, X: np.ndarray) -> FeatureMatrix:
        return FeatureMatrix(X, self.y, self.feature_names, self.timestamps)


def build_supervised(
    series: HourlySeries, lags: Iterable[int] = DEFAULT_LAGS, horizon: int = 24
) -> FeatureMatrix:
    """One row per target hour t with every lag available.

    Columns: ``load_lag_<l>`` for each lag in ascending order, the four calendar
    fields of t, then the temperature at t (treated as a day-ahead forecast).
    """
    lags = sorted(set(int(l) for l in lags))
    if not lags:
        raise ValueError("at least one lag is required")
    if lags[0] < horizon:
        raise ValueError(f"lag {lags[0]} < horizon {horizon} would leak future data")
    max_lag = lags[-1]
    n = len(series)
    if n < max_lag + 1:
        raise ValueError(f"series of {n} hours is shorter than max lag + 1 = {max_lag + 1}")
    if np.isnan(series.load).any() or np.isnan(series.temperature).any():
        raise ValueError("series must be fully imputed")

    target = np.arange(max_lag, n)
    cols = [series.load[target - l] for l in lags]
    names = [f"load_lag_{l}" for l in lags]
    hours = series.hours[target]
    cal = calendar_arrays(hours)
    for name in CALENDAR_NAMES:
        cols.append(cal[name].astype(float))
        names.append(name)
    cols.append(series.temperature[target])
    names.append("temperature")
    return FeatureMatrix(np.column_stack(cols), series.load[target], tuple(names), hours)


@dataclass(frozen=True)
class ScalerStats:
    mean: np.ndarray
    std: np.ndarray

    @property
    def divisor(self) -> np.ndarray:
        return np.where(self.std > 0, self.std, 1.0)


def fit_scaler(train: FeatureMatrix) -> ScalerStats:
    return ScalerStats(train.X.mean(axis=0), train.X.std(axis=0))


def apply_scaler(stats: ScalerStats, matrix: FeatureMatrix) -> FeatureMatrix:
    return matrix.with_X((matrix.X - stats.mean) / stats.divisor)


def invert_scaler(stats: ScalerStats, matrix: FeatureMatrix) -> FeatureMatrix:
    return matrix.with_X(matrix.X * stats.divisor + stats.mean)


def chrono_split(matrix: FeatureMatrix, train_fraction: float = 0.8) -> tuple[FeatureMatrix, FeatureMatrix]:
    n = len(matrix)
    if n < 5:
        raise ValueError(f"need at least 5 rows to split, got {n}")
    if not 0 < train_fraction < 1:
        raise ValueError("train_fraction must lie in (0, 1)")
    a = int(np.floor(train_fraction * n))
    return matrix.rows(0, a), matrix.rows(a, n)


@dataclass(frozen=True)
class CvFold:
    train: range
    validation: range


def ts_cv_folds(n: int, k: int = 5) -> list[CvFold]:
    """Expanding-window folds.

    With ``t = n // (k + 1)``, fold i trains on ``[0, i*t)`` and validates on
    ``[i*t, (i+1)*t)``; the last validation window also absorbs the ``n mod (k+1)``
    leftover rows so the validation windows tile ``[t, n)``.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if n < k + 1:
        raise ValueError(f"need n >= k + 1 rows, got n={n}, k={k}")
    t = n // (k + 1)
    folds = []
    for i in range(1, k + 1):
        hi = n if i == k else (i + 1) * t
        folds.append(CvFold(range(0, i * t), range(i * t, hi)))
    return folds
