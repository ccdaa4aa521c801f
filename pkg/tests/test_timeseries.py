from datetime import datetime, timedelta, timezone

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dayahead.timeseries import (
    HOUR,
    HourlySeries,
    RawRecord,
    RawRecords,
    calendar_arrays,
    calendar_of,
    resample_to_hourly,
)

T0 = datetime(2024, 1, 1, tzinfo=timezone.utc)


def minute_records(wh_per_minute, start=T0):
    return [RawRecord(start + timedelta(minutes=i), v, "Wh") for i, v in enumerate(wh_per_minute)]


def test_sixty_minutes_of_ten_wh_is_point_six_kw():
    s = resample_to_hourly(minute_records([10.0] * 60))
    assert len(s) == 1
    assert s.load[0] == pytest.approx(0.6)


def test_half_hour_power_readings_are_averaged():
    recs = [RawRecord(T0, 1.0, "kW", 5.0), RawRecord(T0 + timedelta(minutes=30), 2.0, "kW", 7.0)]
    s = resample_to_hourly(recs)
    assert s.load[0] == 1.5
    assert s.temperature[0] == 6.0


def test_hour_without_records_is_missing_not_zero():
    recs = [RawRecord(T0, 1.0, "kW"), RawRecord(T0 + timedelta(hours=2), 3.0, "kW")]
    s = resample_to_hourly(recs)
    assert len(s) == 3
    assert np.isnan(s.load[1])
    assert s.load[0] == 1.0 and s.load[2] == 3.0


def test_mixed_units_and_unsorted_input_are_rejected():
    with pytest.raises(ValueError):
        resample_to_hourly([RawRecord(T0, 1.0, "kW"), RawRecord(T0 + timedelta(hours=1), 1.0, "Wh")])
    with pytest.raises(ValueError):
        resample_to_hourly([RawRecord(T0 + timedelta(hours=1), 1.0, "kW"), RawRecord(T0, 1.0, "kW")])
    with pytest.raises(ValueError):
        resample_to_hourly(minute_records([1.0, 2.0]), policy="mean")


def test_partial_boundary_hours_are_kept_with_coverage():
    # 90 minutes starting at 00:30 half-covers hour 0 and fully covers hour 1
    recs = minute_records([60.0] * 90, start=T0 + timedelta(minutes=30))
    s = resample_to_hourly(RawRecords.from_records(recs))
    assert len(s) == 2
    assert s.coverage[0] == pytest.approx(0.5)
    assert s.coverage[1] == pytest.approx(1.0)


def test_calendar_facts():
    c = calendar_of(datetime(2024, 1, 1, tzinfo=timezone.utc))
    assert (c.hour_of_day, c.day_of_week, c.is_weekend) == (0, 0, False)
    c = calendar_of(datetime(2024, 7, 6, 13, tzinfo=timezone.utc))
    assert (c.hour_of_day, c.is_weekend) == (13, True)


@given(st.integers(0, 20 * 365 * 24))
def test_calendar_is_daily_periodic_and_matches_vectorised(offset):
    t = datetime(2015, 1, 1, tzinfo=timezone.utc) + timedelta(hours=offset)
    a, b = calendar_of(t), calendar_of(t + timedelta(hours=24))
    assert a.hour_of_day == b.hour_of_day
    arr = calendar_arrays(np.array([np.datetime64(t.replace(tzinfo=None), "h")]))
    assert arr["hour_of_day"][0] == a.hour_of_day
    assert arr["day_of_week"][0] == a.day_of_week
    assert arr["day_of_year"][0] == a.day_of_year
    assert bool(arr["is_weekend"][0]) == a.is_weekend


@settings(max_examples=40)
@given(st.lists(st.floats(0.0, 500.0), min_size=1, max_size=400), st.integers(0, 59))
def test_energy_is_conserved(values, offset):
    recs = minute_records(values, start=T0 + timedelta(minutes=offset))
    s = resample_to_hourly(recs)
    assert np.nansum(s.load) == pytest.approx(sum(values) / 1000.0, rel=1e-9, abs=1e-12)
    first = (T0 + timedelta(minutes=offset)).replace(minute=0)
    last = (T0 + timedelta(minutes=offset + len(values) - 1)).replace(minute=0)
    assert len(s) == int((last - first).total_seconds() // HOUR) + 1


@given(st.lists(st.floats(0.0, 10.0), min_size=1, max_size=50))
def test_resampling_hourly_power_is_idempotent(values):
    s = HourlySeries(T0, values, np.zeros(len(values)))
    again = resample_to_hourly(s.to_records())
    np.testing.assert_allclose(again.load, s.load)
    np.testing.assert_allclose(again.temperature, s.temperature)


def test_series_index_maps_to_hours():
    s = HourlySeries(T0, [1.0, 2.0, 3.0], [0.0, 0.0, 0.0])
    assert s.timestamp(2) == T0 + timedelta(hours=2)
    assert s.end == T0 + timedelta(hours=2)
    with pytest.raises(ValueError):
        HourlySeries(T0 + timedelta(minutes=5), [1.0], [1.0])
    with pytest.raises(ValueError):
        HourlySeries(T0, [1.0, 2.0], [1.0])
