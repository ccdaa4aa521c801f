"""Outlier handling, gap imputation and season slicing for hourly series."""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass
from datetime import date
from typing import Literal, Sequence

import numpy as np

from .timeseries import HourlySeries

logger = logging.getLogger(__name__)

WEEK = 168


class UnfillableGapError(ValueError):
    def __init__(self, index: int):
        super().__init__(f"gap at index {index} has no earlier value to fill from")
        self.index = index


@dataclass(frozen=True)
class OutlierPolicy:
    z_threshold: float = 3.0
    replacement: Literal["missing", "median"] = "median"

    def __post_init__(self):
        if not self.z_threshold > 0:
            raise ValueError("z_threshold must be positive")
        if self.replacement not in ("missing", "median"):
            raise ValueError(f"unknown replacement {self.replacement!r}")


@dataclass(frozen=True)
class SeasonRange:
    name: str
    start_date: date
    end_date: date

    def __post_init__(self):
        if self.start_date > self.end_date:
            raise ValueError(f"season {self.name!r}: start after end")


def zscores(values: np.ndarray) -> np.ndarray:
    """Global z-scores over the non-missing entries (population std). NaN stays NaN."""
    values = np.asarray(values, dtype=float)
    ok = ~np.isnan(values)
    if not ok.any():
        raise ValueError("series has no non-missing values")
    mu = values[ok].mean()
    sd = values[ok].std()
    if sd == 0:
        return np.where(ok, 0.0, np.nan)
    return (values - mu) / sd


def detect_outliers(series: HourlySeries, policy: OutlierPolicy = OutlierPolicy()) -> np.ndarray:
    z = zscores(series.load)
    with np.errstate(invalid="ignore"):
        return np.abs(z) > policy.z_threshold


def replace_outliers(
    series: HourlySeries, mask: np.ndarray, policy: OutlierPolicy = OutlierPolicy()
) -> HourlySeries:
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != series.load.shape:
        raise ValueError("mask length must equal series length")
    if not mask.any():
        return series
    load = series.load.copy()
    if policy.replacement == "median":
        load[mask] = np.nanmedian(series.load)
    else:
        load[mask] = np.nan
    return series.with_values(load=load)


def _fill(values: np.ndarray, short_gap_max: int) -> np.ndarray:
    out = np.array(values, dtype=float)
    missing = np.isnan(out)
    if not missing.any():
        return out
    n = len(out)
    i = 0
    while i < n:
        if not missing[i]:
            i += 1
            continue
        j = i
        while j < n and missing[j]:
            j += 1
        if i == 0:
            raise UnfillableGapError(0)
        if j - i <= short_gap_max:
            out[i:j] = out[i - 1]
        else:
            for t in range(i, j):
                # out[t - 1] is always filled by now, so chaining never fails
                src = out[t - WEEK] if t >= WEEK else np.nan
                out[t] = src if not np.isnan(src) else out[t - 1]
        i = j
    return out


def impute(series: HourlySeries, short_gap_max: int = 2) -> HourlySeries:
    """Fill missing hours.

    Runs of at most ``short_gap_max`` hours carry the previous hour forward; longer
    runs copy the same hour one week earlier and fall back to the previous hour
    where that is missing too. Temperature follows the same rules.
    """
    if short_gap_max < 0:
        raise ValueError("short_gap_max must be >= 0")
    load = _fill(series.load, short_gap_max)
    temp = series.temperature
    if np.isnan(temp).any():
        if np.isnan(temp).all():
            raise ValueError("temperature is entirely missing")
        try:
            temp = _fill(temp, short_gap_max)
        except UnfillableGapError:
            # leading temperature gap: back-fill from the first reading
            first = int(np.flatnonzero(~np.isnan(temp))[0])
            temp = np.array(temp)
            temp[:first] = temp[first]
            temp = _fill(temp, short_gap_max)
    return series.with_values(load=load, temperature=temp)


def split_seasons(
    series: HourlySeries, ranges: Sequence[SeasonRange]
) -> dict[str, HourlySeries]:
    days = series.hours.astype("datetime64[D]")
    out = {}
    for r in ranges:
        lo = np.datetime64(r.start_date, "D")
        hi = np.datetime64(r.end_date, "D")
        sel = np.flatnonzero((days >= lo) & (days <= hi))
        if len(sel) == 0:
            warnings.warn(f"season {r.name!r} does not overlap the series", stacklevel=2)
            out[r.name] = series.slice(0, 0)
        else:
            out[r.name] = series.slice(int(sel[0]), int(sel[-1]) + 1)
    return out
