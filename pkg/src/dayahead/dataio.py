"""CSV ingestion/export.

Source files carry the header ``timestamp,load,temperature`` with RFC 3339 UTC
timestamps and empty cells for missing values. The load unit lives in a JSON
sidecar ``<file>.meta.json`` (``{"unit": "Wh" | "kW", "interval_s": ...}``) or is
passed explicitly; it is never inferred from the numbers.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pandas as pd

from .timeseries import HOUR, HourlySeries, RawRecords, from_epoch

COLUMNS = ["timestamp", "load", "temperature"]


def sidecar_path(path: str | Path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".meta.json")


def _format_ts(seconds: np.ndarray) -> np.ndarray:
    return np.char.add(np.datetime_as_string(seconds.astype("datetime64[s]"), unit="s"), "Z")


def _parse_ts(col: pd.Series) -> np.ndarray:
    ts = pd.to_datetime(col, utc=True, format="ISO8601")
    return (ts.astype("int64") // 10**9).to_numpy()


def write_records_csv(records: RawRecords, path: str | Path) -> None:
    path = Path(path)
    frame = pd.DataFrame(
        {"timestamp": _format_ts(records.timestamps), "load": records.values, "temperature": records.temperature}
    )
    frame.to_csv(path, index=False, na_rep="")
    sidecar_path(path).write_text(json.dumps({"unit": records.unit, "interval_s": records.interval_s}))


def read_records_csv(path: str | Path, unit: str | None = None) -> RawRecords:
    path = Path(path)
    meta = {}
    if sidecar_path(path).exists():
        meta = json.loads(sidecar_path(path).read_text())
    unit = unit or meta.get("unit")
    if unit is None:
        raise ValueError(f"no load unit for {path}: pass one or provide {sidecar_path(path).name}")
    frame = pd.read_csv(path, dtype={"load": float, "temperature": float})
    if list(frame.columns) != COLUMNS:
        raise ValueError(f"{path}: expected header {','.join(COLUMNS)}, got {','.join(frame.columns)}")
    return RawRecords(
        timestamps=_parse_ts(frame["timestamp"]),
        values=frame["load"].to_numpy(dtype=float),
        temperature=frame["temperature"].to_numpy(dtype=float),
        unit=unit,
        interval_s=meta.get("interval_s"),
    )


def write_hourly_csv(series: HourlySeries, path: str | Path) -> None:
    write_records_csv(series.to_records(), path)


def read_hourly_csv(path: str | Path) -> HourlySeries:
    rec = read_records_csv(path, unit="kW")
    ts = rec.timestamps
    if len(ts) == 0:
        raise ValueError(f"{path}: empty series")
    if np.any(np.diff(ts) != HOUR) or ts[0] % HOUR:
        raise ValueError(f"{path}: not a gap-free hourly index")
    return HourlySeries(from_epoch(ts[0]), rec.values, rec.temperature)
