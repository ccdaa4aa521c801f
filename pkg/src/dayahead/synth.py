"""Seeded two-climate residential load generator with injection logs for tests."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace
from datetime import date, datetime, timezone
from pathlib import Path
from typing import Literal

import numpy as np

from .timeseries import HOUR, HourlySeries, RawRecords, epoch_seconds

Resolution = Literal["1min", "30min"]
RESOLUTION_SECONDS = {"1min": 60, "30min": 1800}
LOAD_FLOOR = 0.01

# hourly multipliers, midnight first
_MARITIME_SHAPE = (
    0.55, 0.50, 0.48, 0.47, 0.47, 0.50, 0.65, 0.95, 1.10, 0.95, 0.85, 0.85,
    0.90, 0.85, 0.82, 0.85, 0.95, 1.25, 1.55, 1.60, 1.45, 1.25, 0.95, 0.70,
)
_TROPICAL_SHAPE = (
    0.85, 0.80, 0.78, 0.76, 0.75, 0.78, 0.90, 1.00, 0.90, 0.80, 0.78, 0.85,
    0.95, 0.95, 0.88, 0.85, 0.92, 1.10, 1.40, 1.60, 1.65, 1.55, 1.30, 1.05,
)


@dataclass(frozen=True)
class ClimateProfile:
    name: str
    base_load: float  # kW
    daily_shape: tuple[float, ...]
    weekend_multiplier: float
    temp_mean: float  # °C
    temp_annual_amplitude: float
    temp_peak_day: int  # day of year of the annual maximum
    temp_diurnal_amplitude: float
    temp_noise: float
    coupling: float  # kW per °C beyond comfort_temp; <0 heats below it, >0 cools above it
    noise_std: float  # marginal std of the AR(1) load noise, kW
    comfort_temp: float | None = None  # defaults to temp_mean
    occupied_hours: tuple[int, ...] = tuple(range(24))  # hours when heating/cooling runs
    noise_ar: float = 0.7
    volatility: float = 0.0  # probability per hour of a burst hour (innovation x3)
    weekend_shift: int = 0  # weekend routine runs this many hours later
    thermal_cap: float | None = None  # °C beyond comfort at which heating/cooling saturates

    def __post_init__(self):
        if not self.base_load > 0:
            raise ValueError("base_load must be positive")
        if self.noise_std < 0 or self.temp_noise < 0:
            raise ValueError("noise levels must be >= 0")
        if len(self.daily_shape) != 24:
            raise ValueError("daily_shape needs 24 factors")
        if not 0 <= self.volatility <= 1:
            raise ValueError("volatility is a probability")
        object.__setattr__(self, "daily_shape", tuple(float(v) for v in self.daily_shape))


MARITIME = ClimateProfile(
    name="maritime",
    base_load=0.55,
    daily_shape=_MARITIME_SHAPE,
    weekend_multiplier=1.15,
    temp_mean=10.0,
    temp_annual_amplitude=5.0,
    temp_peak_day=200,
    temp_diurnal_amplitude=3.0,
    temp_noise=2.5,
    coupling=-0.08,
    noise_std=0.07,
    comfort_temp=14.0,
    occupied_hours=(6, 7, 8, 9, 16, 17, 18, 19, 20, 21, 22),
    volatility=0.05,
)

TROPICAL = ClimateProfile(
    name="tropical",
    base_load=0.60,
    daily_shape=_TROPICAL_SHAPE,
    weekend_multiplier=1.08,
    temp_mean=28.0,
    temp_annual_amplitude=1.8,
    temp_peak_day=110,
    temp_diurnal_amplitude=4.0,
    temp_noise=0.6,
    coupling=0.4,
    noise_std=0.03,
    comfort_temp=28.0,
    occupied_hours=(0, 1, 2, 3, 4, 5, 18, 19, 20, 21, 22, 23),
    volatility=0.0,
    thermal_cap=0.8,
)

PROFILES = {"maritime": MARITIME, "tropical": TROPICAL}

DEFAULT_START = date(2023, 9, 23)
DEFAULT_END = date(2024, 7, 6)


@dataclass(frozen=True)
class Injection:
    n_spikes: int = 0
    spike_sigma: float = 8.0
    n_short_gaps: int = 0
    short_gap_max: int = 2
    n_long_gaps: int = 0
    long_gap_hours: int = 30


@dataclass
class InjectionLog:
    """Hour indices (relative to the series start) of injected defects."""

    start: str
    n_hours: int
    outlier_indices: list[int] = field(default_factory=list)
    outlier_magnitudes: list[float] = field(default_factory=list)
    gaps: list[tuple[int, int]] = field(default_factory=list)  # half-open [lo, hi)

    def gap_mask(self) -> np.ndarray:
        mask = np.zeros(self.n_hours, dtype=bool)
        for lo, hi in self.gaps:
            mask[lo:hi] = True
        return mask

    def outlier_mask(self) -> np.ndarray:
        mask = np.zeros(self.n_hours, dtype=bool)
        mask[self.outlier_indices] = True
        return mask

    def to_dict(self) -> dict:
        d = asdict(self)
        d["gaps"] = [list(g) for g in self.gaps]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> InjectionLog:
        return cls(
            start=d["start"],
            n_hours=int(d["n_hours"]),
            outlier_indices=[int(i) for i in d["outlier_indices"]],
            outlier_magnitudes=[float(m) for m in d["outlier_magnitudes"]],
            gaps=[(int(lo), int(hi)) for lo, hi in d["gaps"]],
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1))

    @classmethod
    def load(cls, path: str | Path) -> InjectionLog:
        return cls.from_dict(json.loads(Path(path).read_text()))


def thermal_load(profile: ClimateProfile, temp: np.ndarray, hour_of_day: np.ndarray) -> np.ndarray:
    """Degree-hour response: |coupling| kW per °C on the heating or cooling side of comfort."""
    comfort = profile.temp_mean if profile.comfort_temp is None else profile.comfort_temp
    excess = np.maximum(0.0, np.sign(profile.coupling) * (temp - comfort))
    if profile.thermal_cap is not None:
        excess = np.minimum(excess, profile.thermal_cap)
    occupied = np.isin(hour_of_day, profile.occupied_hours)
    return abs(profile.coupling) * excess * occupied


def _ar1(rng: np.random.Generator, n: int, phi: float, std: float, burst_rate: float = 0.0) -> np.ndarray:
    if std == 0 or n == 0:
        return np.zeros(n)
    innov = rng.normal(0.0, std * np.sqrt(1.0 - phi * phi), n)
    if burst_rate > 0:
        innov = innov * np.where(rng.random(n) < burst_rate, 3.0, 1.0)
    out = np.empty(n)
    out[0] = rng.normal(0.0, std)
    for t in range(1, n):
        out[t] = phi * out[t - 1] + innov[t]
    return out


def hourly_profile(
    profile: ClimateProfile, start: date, end: date, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Clean hourly (hours, load kW, temperature °C) for dates ``start..end`` inclusive."""
    hours = np.arange(
        np.datetime64(start, "h"), np.datetime64(end, "h") + 24, dtype="datetime64[h]"
    )
    n = len(hours)
    days = hours.astype("datetime64[D]")
    hod = (hours - days).astype(np.int64)
    doy = (days - days.astype("datetime64[Y]").astype("datetime64[D]")).astype(np.int64) + 1
    dow = (days.astype(np.int64) + 3) % 7

    temp = (
        profile.temp_mean
        + profile.temp_annual_amplitude * np.cos(2 * np.pi * (doy - profile.temp_peak_day) / 365.25)
        + profile.temp_diurnal_amplitude * np.cos(2 * np.pi * (hod - 15) / 24)
        + _ar1(rng, n, 0.95, profile.temp_noise)
    )
    is_weekend = dow >= 5
    shape = np.asarray(profile.daily_shape)[np.where(is_weekend, (hod - profile.weekend_shift) % 24, hod)]
    weekend = np.where(is_weekend, profile.weekend_multiplier, 1.0)
    load = (
        profile.base_load * shape * weekend
        + thermal_load(profile, temp, hod)
        + _ar1(rng, n, profile.noise_ar, profile.noise_std, profile.volatility)
    )
    return hours, np.maximum(load, LOAD_FLOOR), temp


def _place(rng, n, length, count, taken, lo_min):
    """Pick ``count`` non-overlapping windows of ``length`` hours, 2 h clear of ``taken``."""
    out = []
    tries = 0
    while len(out) < count:
        tries += 1
        if tries > 10_000:
            raise RuntimeError("could not place injected defects; series too short")
        s = int(rng.integers(lo_min, n - length - 1))
        if taken[max(0, s - 2) : s + length + 2].any():
            continue
        taken[s : s + length] = True
        out.append(s)
    return out


def generate(
    profile: ClimateProfile | str,
    start: date = DEFAULT_START,
    end: date = DEFAULT_END,
    resolution: Resolution = "1min",
    seed: int = 0,
    injection: Injection = Injection(),
) -> tuple[RawRecords, InjectionLog]:
    """Raw meter records at ``resolution`` plus the log of injected spikes and gaps.

    ``1min`` emits interval energy in Wh, ``30min`` emits power in kW; both aggregate
    back to the underlying hourly profile.
    """
    if isinstance(profile, str):
        profile = PROFILES[profile]
    if not start < end:
        raise ValueError("start must precede end")
    if resolution not in RESOLUTION_SECONDS:
        raise ValueError(f"unknown resolution {resolution!r}")
    rng = np.random.default_rng(seed)
    hours, load, temp = hourly_profile(profile, start, end, rng)
    n = len(hours)
    log = InjectionLog(start=str(hours[0]) + ":00:00Z", n_hours=n)

    taken = np.zeros(n, dtype=bool)
    # defects start after the first week so same-hour-last-week fills exist
    lo_min = 168 + 1
    for s in _place(rng, n, injection.long_gap_hours, injection.n_long_gaps, taken, lo_min):
        log.gaps.append((s, s + injection.long_gap_hours))
    for _ in range(injection.n_short_gaps):
        length = int(rng.integers(1, injection.short_gap_max + 1))
        (s,) = _place(rng, n, length, 1, taken, lo_min)
        log.gaps.append((s, s + length))
    log.gaps.sort()
    if injection.n_spikes:
        sigma = float(np.std(load))
        for s in sorted(_place(rng, n, 1, injection.n_spikes, taken, lo_min)):
            mag = injection.spike_sigma * sigma
            load[s] += mag
            log.outlier_indices.append(s)
            log.outlier_magnitudes.append(mag)

    step = RESOLUTION_SECONDS[resolution]
    per_hour = HOUR // step
    keep_hour = ~log.gap_mask()
    jitter = np.clip(1.0 + 0.2 * rng.standard_normal((n, per_hour)), 0.05, None)
    jitter /= jitter.mean(axis=1, keepdims=True)
    tjit = 0.3 * rng.standard_normal((n, per_hour))
    tjit -= tjit.mean(axis=1, keepdims=True)

    t0 = epoch_seconds(datetime(start.year, start.month, start.day, tzinfo=timezone.utc))
    ts = t0 + HOUR * np.arange(n)[:, None] + step * np.arange(per_hour)[None, :]
    if resolution == "1min":
        values = (load * 1000.0 / per_hour)[:, None] * jitter
        unit = "Wh"
    else:
        values = load[:, None] * jitter
        unit = "kW"
    temps = temp[:, None] + tjit
    records = RawRecords(
        timestamps=ts[keep_hour].ravel(),
        values=values[keep_hour].ravel(),
        temperature=temps[keep_hour].ravel(),
        unit=unit,
        interval_s=step,
    )
    return records, log


def generate_hourly(
    profile: ClimateProfile | str,
    start: date = DEFAULT_START,
    end: date = DEFAULT_END,
    seed: int = 0,
) -> HourlySeries:
    """Clean hourly series without going through raw records."""
    if isinstance(profile, str):
        profile = PROFILES[profile]
    rng = np.random.default_rng(seed)
    hours, load, temp = hourly_profile(profile, start, end, rng)
    return HourlySeries(datetime(start.year, start.month, start.day, tzinfo=timezone.utc), load, temp)


def flat_profile(base_load: float = 1.0) -> ClimateProfile:
    """Degenerate profile: constant load, no noise, no temperature coupling."""
    return replace(
        MARITIME, name="flat", base_load=base_load, daily_shape=(1.0,) * 24,
        weekend_multiplier=1.0, coupling=0.0, noise_std=0.0, volatility=0.0,
    )


def calm_profile(noise_std: float = 0.01) -> ClimateProfile:
    """Daily cycle plus faint noise and no weather response.

    Every clean hour sits within about 2.7 standard deviations of the mean, so
    a 3σ detector should flag only defects injected on top of it.
    """
    return replace(
        TROPICAL, name="calm", weekend_multiplier=1.0, coupling=0.0,
        noise_std=noise_std, volatility=0.0,
    )
