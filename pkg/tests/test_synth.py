from dataclasses import replace
from datetime import date

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dayahead import synth
from dayahead.preprocess import detect_outliers, impute
from dayahead.timeseries import resample_to_hourly

SHORT = (date(2024, 1, 1), date(2024, 1, 31))


def lag_autocorr(x, lag):
    x = x - x.mean()
    return float(np.dot(x[lag:], x[:-lag]) / np.dot(x, x))


def test_same_seed_same_bytes():
    a, la = synth.generate("maritime", *SHORT, seed=5, injection=synth.Injection(n_spikes=2, n_short_gaps=2))
    b, lb = synth.generate("maritime", *SHORT, seed=5, injection=synth.Injection(n_spikes=2, n_short_gaps=2))
    assert a.timestamps.tobytes() == b.timestamps.tobytes()
    assert a.values.tobytes() == b.values.tobytes()
    assert a.temperature.tobytes() == b.temperature.tobytes()
    assert la == lb
    c, _ = synth.generate("maritime", *SHORT, seed=6)
    assert c.values.tobytes() != a.values.tobytes()


def test_maritime_load_falls_as_temperature_rises():
    s = synth.generate_hourly("maritime", seed=0)
    assert np.corrcoef(s.load, s.temperature)[0, 1] < 0


def test_flat_profile_is_constant():
    s = synth.generate_hourly(synth.flat_profile(0.8), *SHORT)
    np.testing.assert_allclose(s.load, 0.8)


def test_tropical_is_more_regular_day_to_day():
    for seed in range(3):
        trop = synth.generate_hourly("tropical", seed=seed).load
        mari = synth.generate_hourly("maritime", seed=seed).load
        assert lag_autocorr(trop, 24) > lag_autocorr(mari, 24)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(["maritime", "tropical"]))
def test_load_respects_floor(seed, name):
    profile = replace(synth.PROFILES[name], noise_std=1.0)
    s = synth.generate_hourly(profile, *SHORT, seed=seed)
    assert s.load.min() >= synth.LOAD_FLOOR


@pytest.mark.parametrize("resolution,unit", [("1min", "Wh"), ("30min", "kW")])
def test_raw_records_aggregate_back_to_hourly(resolution, unit):
    recs, _ = synth.generate("tropical", *SHORT, resolution=resolution, seed=1)
    assert recs.unit == unit
    hourly = resample_to_hourly(recs)
    clean = synth.generate_hourly("tropical", *SHORT, seed=1)
    # jitter uses extra draws, so only the shape of the aggregate is comparable
    assert len(hourly) == len(clean) == 31 * 24
    assert not np.isnan(hourly.load).any()


@settings(max_examples=8, deadline=None)
@given(st.integers(0, 10_000))
def test_preprocessing_recovers_the_injection_log(seed):
    inj = synth.Injection(n_spikes=8, n_short_gaps=6, short_gap_max=2, n_long_gaps=2, long_gap_hours=30)
    recs, log = synth.generate(synth.calm_profile(), date(2024, 1, 1), date(2024, 4, 30),
                               resolution="30min", seed=seed, injection=inj)
    s = resample_to_hourly(recs)
    np.testing.assert_array_equal(np.isnan(s.load), log.gap_mask())
    np.testing.assert_array_equal(detect_outliers(s), log.outlier_mask())
    filled = impute(s, short_gap_max=2)
    present = ~log.gap_mask()
    np.testing.assert_array_equal(filled.load[present], s.load[present])
    assert not np.isnan(filled.load).any()


def test_injection_log_round_trip(tmp_path):
    _, log = synth.generate("maritime", *SHORT, seed=2,
                            injection=synth.Injection(n_spikes=3, n_long_gaps=1, long_gap_hours=10))
    path = tmp_path / "log.json"
    log.save(path)
    assert synth.InjectionLog.load(path) == log
    assert all(0 <= i < log.n_hours for i in log.outlier_indices)
    assert all(0 <= lo < hi <= log.n_hours for lo, hi in log.gaps)
    assert len(log.gaps) == 1 and log.gaps[0][1] - log.gaps[0][0] == 10


def test_spike_magnitude_is_in_series_sigmas():
    _, log = synth.generate("tropical", *SHORT, seed=3, injection=synth.Injection(n_spikes=2, spike_sigma=8))
    clean = synth.generate_hourly("tropical", *SHORT, seed=3)
    assert log.outlier_magnitudes[0] == pytest.approx(8 * np.std(clean.load))


def test_profile_validation():
    with pytest.raises(ValueError):
        replace(synth.MARITIME, base_load=0.0)
    with pytest.raises(ValueError):
        replace(synth.MARITIME, noise_std=-1.0)
    with pytest.raises(ValueError):
        synth.generate("maritime", date(2024, 2, 1), date(2024, 1, 1))
