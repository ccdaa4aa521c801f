"""Hourly time-series container, resampling from meter resolution, calendar features."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from typing import Iterable, Literal, Sequence

import numpy as np

logger = logging.getLogger(__name__)

Unit = Literal["Wh", "kW"]
Policy = Literal["sum", "mean"]

HOUR = 3600
_EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)


def to_utc(ts: datetime) -> datetime:
    if ts.tzinfo is None:
        return ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def epoch_seconds(ts: datetime) -> int:
    return int((to_utc(ts) - _EPOCH).total_seconds())


def from_epoch(seconds: int) -> datetime:
    return _EPOCH + timedelta(seconds=int(seconds))


@dataclass(frozen=True)
class RawRecord:
    timestamp: datetime
    value: float
    unit: Unit
    temperature: float | None = None


@dataclass(frozen=True)
class RawRecords:
    """Columnar batch of meter readings from one source.

    ``timestamps`` are integer seconds since the Unix epoch (UTC). ``values`` are
    interval energy in Wh or instantaneous power in kW depending on ``unit``.
    Missing readings are NaN.
    """

    timestamps: np.ndarray
    values: np.ndarray
    temperature: np.ndarray
    unit: Unit
    interval_s: int | None = None

    def __post_init__(self):
        if self.unit not in ("Wh", "kW"):
            raise ValueError(f"unknown unit {self.unit!r}")
        ts = np.asarray(self.timestamps, dtype=np.int64)
        vals = np.asarray(self.values, dtype=float)
        temp = np.asarray(self.temperature, dtype=float)
        if not (len(ts) == len(vals) == len(temp)):
            raise ValueError("timestamps, values and temperature must have equal length")
        for name, arr in (("timestamps", ts), ("values", vals), ("temperature", temp)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def __len__(self) -> int:
        return len(self.timestamps)

    def __getitem__(self, i: int) -> RawRecord:
        temp = float(self.temperature[i])
        return RawRecord(
            timestamp=from_epoch(self.timestamps[i]),
            value=float(self.values[i]),
            unit=self.unit,
            temperature=None if np.isnan(temp) else temp,
        )

    @classmethod
    def from_records(cls, records: Iterable[RawRecord]) -> RawRecords:
        records = list(records)
        units = {r.unit for r in records}
        if len(units) > 1:
            raise ValueError(f"mixed value units in one source: {sorted(units)}")
        unit = units.pop() if units else "kW"
        return cls(
            timestamps=np.array([epoch_seconds(r.timestamp) for r in records], dtype=np.int64),
            values=np.array([r.value for r in records], dtype=float),
            temperature=np.array(
                [np.nan if r.temperature is None else r.temperature for r in records], dtype=float
            ),
            unit=unit,
        )


@dataclass(frozen=True)
class CalendarFeatures:
    hour_of_day: int
    day_of_week: int
    day_of_year: int
    is_weekend: bool


def calendar_of(timestamp: datetime) -> CalendarFeatures:
    ts = to_utc(timestamp)
    dow = ts.weekday()
    return CalendarFeatures(
        hour_of_day=ts.hour,
        day_of_week=dow,
        day_of_year=ts.timetuple().tm_yday,
        is_weekend=dow >= 5,
    )


def calendar_arrays(hours: np.ndarray) -> dict[str, np.ndarray]:
    """Vectorised ``calendar_of`` over ``datetime64[h]`` values."""
    hours = np.asarray(hours, dtype="datetime64[h]")
    days = hours.astype("datetime64[D]")
    hour_of_day = (hours - days).astype(np.int64)
    # 1970-01-01 was a Thursday (weekday 3)
    day_of_week = (days.astype(np.int64) + 3) % 7
    years = days.astype("datetime64[Y]")
    day_of_year = (days - years.astype("datetime64[D]")).astype(np.int64) + 1
    return {
        "hour_of_day": hour_of_day,
        "day_of_week": day_of_week,
        "day_of_year": day_of_year,
        "is_weekend": (day_of_week >= 5).astype(np.int64),
    }


@dataclass(frozen=True, eq=False)
class HourlySeries:
    """Gap-free hourly index starting at ``start``; missing values are NaN.

    ``load`` is average kW over each hour, ``temperature`` the hourly mean in °C.
    ``coverage`` is the fraction of expected source readings seen in each hour and
    is kept for diagnostics only.
    """

    start: datetime
    load: np.ndarray
    temperature: np.ndarray
    coverage: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        start = to_utc(self.start)
        if start.minute or start.second or start.microsecond:
            raise ValueError("start must lie on an hour boundary")
        object.__setattr__(self, "start", start)
        load = np.array(self.load, dtype=float)
        temp = np.array(self.temperature, dtype=float)
        if load.shape != temp.shape or load.ndim != 1:
            raise ValueError("load and temperature must be 1-D and of equal length")
        cov = np.ones_like(load) if self.coverage is None else np.array(self.coverage, dtype=float)
        for name, arr in (("load", load), ("temperature", temp), ("coverage", cov)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def __len__(self) -> int:
        return len(self.load)

    def __eq__(self, other) -> bool:
        # value equality; NaN markers compare equal, coverage is diagnostic only
        if not isinstance(other, HourlySeries):
            return NotImplemented
        return (
            self.start == other.start
            and np.array_equal(self.load, other.load, equal_nan=True)
            and np.array_equal(self.temperature, other.temperature, equal_nan=True)
        )

    __hash__ = None

    @property
    def hours(self) -> np.ndarray:
        base = np.datetime64(self.start.replace(tzinfo=None), "h")
        return base + np.arange(len(self), dtype=np.int64)

    def timestamp(self, i: int) -> datetime:
        return self.start + timedelta(hours=int(i))

    @property
    def end(self) -> datetime:
        """Timestamp of the last hour (inclusive)."""
        return self.timestamp(len(self) - 1)

    def with_values(self, load=None, temperature=None) -> HourlySeries:
        return HourlySeries(
            start=self.start,
            load=self.load if load is None else load,
            temperature=self.temperature if temperature is None else temperature,
            coverage=self.coverage,
        )

    def slice(self, lo: int, hi: int) -> HourlySeries:
        lo = max(0, lo)
        hi = min(len(self), hi)
        hi = max(lo, hi)
        return HourlySeries(
            start=self.timestamp(lo),
            load=self.load[lo:hi],
            temperature=self.temperature[lo:hi],
            coverage=self.coverage[lo:hi],
        )

    def to_records(self) -> RawRecords:
        """Hourly power records; resampling these again is the identity."""
        ts = epoch_seconds(self.start) + HOUR * np.arange(len(self), dtype=np.int64)
        return RawRecords(ts, self.load, self.temperature, unit="kW", interval_s=HOUR)


def _infer_interval(ts: np.ndarray) -> int:
    if len(ts) < 2:
        return HOUR
    return max(1, int(np.median(np.diff(ts))))


def resample_to_hourly(
    records: RawRecords | Sequence[RawRecord], policy: Policy | None = None
) -> HourlySeries:
    """Aggregate meter readings into an hourly series.

    Energy readings (Wh) are summed per hour and divided by 1000 to give average kW;
    power readings (kW) are averaged. Temperature is always the in-hour mean. Hours
    without any reading come out as NaN, never zero.
    """
    if not isinstance(records, RawRecords):
        records = RawRecords.from_records(records)
    expected = "sum" if records.unit == "Wh" else "mean"
    if policy is None:
        policy = expected
    if policy != expected:
        raise ValueError(f"policy {policy!r} does not match unit {records.unit!r}")
    if len(records) == 0:
        raise ValueError("no records to resample")
    ts = records.timestamps
    if np.any(np.diff(ts) <= 0):
        raise ValueError("records must be strictly increasing in time")

    first_hour = (ts[0] // HOUR) * HOUR
    idx = (ts - first_hour) // HOUR
    n_hours = int(idx[-1]) + 1

    vals = records.values
    ok = ~np.isnan(vals)
    count = np.bincount(idx[ok], minlength=n_hours)
    total = np.bincount(idx[ok], weights=vals[ok], minlength=n_hours)
    with np.errstate(invalid="ignore", divide="ignore"):
        if policy == "sum":
            load = total / 1000.0
        else:
            load = total / count
    load[count == 0] = np.nan

    temp = records.temperature
    tok = ~np.isnan(temp)
    tcount = np.bincount(idx[tok], minlength=n_hours)
    tsum = np.bincount(idx[tok], weights=temp[tok], minlength=n_hours)
    with np.errstate(invalid="ignore", divide="ignore"):
        temperature = tsum / tcount
    temperature[tcount == 0] = np.nan

    interval = records.interval_s or _infer_interval(ts)
    per_hour = max(1, HOUR // interval)
    coverage = np.minimum(count / per_hour, 1.0)
    partial = np.flatnonzero((coverage < 1.0) & (count > 0))
    if len(partial):
        logger.debug("%d hours with partial coverage", len(partial))

    return HourlySeries(from_epoch(first_hour), load, temperature, coverage)
