import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dayahead.metrics import MetricBundle, evaluate, rank_models

from oracles import metrics_by_hand


def test_hand_computed_example():
    m = evaluate([1, 2, 3], [2, 2, 2])
    # |e| = 1, 0, 1; squared the same; relative 1, 0, 1/3; SST = 2
    assert m.mae == pytest.approx(2 / 3, abs=1e-12)
    assert m.mse == pytest.approx(2 / 3, abs=1e-12)
    assert m.rmse == pytest.approx(math.sqrt(2 / 3), abs=1e-12)
    assert m.mape == pytest.approx(400 / 9, abs=1e-12)
    assert m.r2 == 0.0
    assert m.n == 3


def test_perfect_fit_is_exact():
    m = evaluate([1.5, 2.0, 7.0], [1.5, 2.0, 7.0])
    assert (m.mae, m.mse, m.rmse, m.mape, m.r2) == (0.0, 0.0, 0.0, 0.0, 1.0)


def test_mape_skips_near_zero_actuals():
    m = evaluate([0.0, 0.005, 2.0], [1.0, 1.0, 1.0], mape_floor=0.01)
    assert m.mape == 50.0
    assert m.mape_excluded == 2
    assert evaluate([0.0, 0.0], [1.0, 2.0]).mape is None


def test_constant_actuals_leave_r2_undefined():
    assert evaluate([2.0, 2.0, 2.0], [1.0, 2.0, 3.0]).r2 is None


def test_rejects_bad_shapes():
    with pytest.raises(ValueError):
        evaluate([1.0, 2.0], [1.0])
    with pytest.raises(ValueError):
        evaluate([], [])


values = st.floats(0.1, 100.0, allow_nan=False)


@settings(max_examples=60)
@given(st.lists(st.tuples(values, values), min_size=2, max_size=40))
def test_matches_plain_python_reference(pairs):
    y = [a for a, _ in pairs]
    yhat = [b for _, b in pairs]
    m = evaluate(y, yhat, mape_floor=0.0)
    if len(set(y)) == 1:
        assert m.r2 is None
        return
    mae, mse, rmse, mape, r2 = metrics_by_hand(y, yhat)
    assert m.mae == pytest.approx(mae, rel=1e-9)
    assert m.mse == pytest.approx(mse, rel=1e-9)
    assert m.rmse == pytest.approx(rmse, rel=1e-9)
    assert m.mape == pytest.approx(mape, rel=1e-9)
    assert m.r2 == pytest.approx(r2, rel=1e-6, abs=1e-6)


@given(st.lists(st.tuples(values, values), min_size=1, max_size=40))
def test_error_metric_relations(pairs):
    y, yhat = zip(*pairs)
    m = evaluate(y, yhat)
    assert m.mae >= 0 and m.mse >= 0
    assert m.rmse == pytest.approx(math.sqrt(m.mse))
    # RMSE dominates MAE
    assert m.rmse >= m.mae * (1 - 1e-12)
    if m.r2 is not None:
        assert m.r2 <= 1.0


@given(st.lists(values, min_size=2, max_size=30), st.floats(-5, 5))
def test_order_invariance(y, shift):
    y = np.array(y)
    yhat = y + shift
    perm = np.random.default_rng(0).permutation(len(y))
    a, b = evaluate(y, yhat), evaluate(y[perm], yhat[perm])
    assert a.mae == pytest.approx(b.mae) and a.mse == pytest.approx(b.mse)


def test_ranking_direction_and_ties():
    bundles = {
        "svr": MetricBundle(0.2, 0.1, 0.3, 5.0, 0.9, 10),
        "gbt": MetricBundle(0.1, 0.1, 0.3, 4.0, 0.95, 10),
        "arima": MetricBundle(0.2, 0.3, 0.5, 9.0, 0.5, 10),
    }
    assert rank_models(bundles, "mae") == ["gbt", "arima", "svr"]
    assert rank_models(bundles, "r2") == ["gbt", "svr", "arima"]
    assert rank_models(bundles, "mse") == ["gbt", "svr", "arima"]
    bundles["x"] = MetricBundle(0.1, 0.1, 0.3, None, None, 10)
    with pytest.raises(ValueError):
        rank_models(bundles, "mape")


def test_bundle_dict_round_trip():
    m = evaluate([1, 2, 3], [1, 2, 4])
    assert MetricBundle.from_dict(m.to_dict()) == m
