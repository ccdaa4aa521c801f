import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dayahead.baselines import arima, svr
from dayahead.baselines.arima import ArimaModel, ArimaOrder

from oracles import simulate_ar1


def ar_model(phi, d=0, intercept=0.0, theta=(), beta=None):
    return ArimaModel(ArimaOrder(len(phi), d, len(theta)), intercept, np.array(phi, float),
                      np.array(theta, float), beta, 1.0, 0.0, 0)


# ---- differencing -------------------------------------------------------------

def test_difference_examples():
    np.testing.assert_array_equal(arima.difference([1, 2, 4], 1), [1, 2])
    np.testing.assert_array_equal(arima.undifference([1, 2], [4]), [5, 7])
    with pytest.raises(ValueError):
        arima.difference([1, 2], 2)


@settings(max_examples=60)
@given(st.lists(st.integers(-1000, 1000), min_size=5, max_size=40), st.integers(0, 3), st.integers(1, 4))
def test_undifference_inverts_difference(values, d, k):
    # integers keep the cumulative sums exact
    x = np.array(values, dtype=float)
    split = max(d, len(x) - k)
    z = arima.difference(x, d)
    rebuilt = arima.undifference(z[split - d:], x[split - d:split]) if d else z[split:]
    np.testing.assert_array_equal(rebuilt, x[split:])


# ---- estimation ---------------------------------------------------------------

def test_ar1_recovery():
    x = simulate_ar1(0.7, 2000, seed=1)
    model = arima.fit_arima(x, (1, 0, 0))
    assert 0.6 <= model.phi[0] <= 0.8


def test_white_noise_gives_small_phi():
    x = np.random.default_rng(2).standard_normal(2000)
    assert abs(arima.fit_arima(x, (1, 0, 0)).phi[0]) < 0.1


def test_arimax_recovers_beta():
    rng = np.random.default_rng(3)
    temp = 10 + 5 * np.sin(np.arange(2000) * 2 * np.pi / 24) + rng.normal(0, 2, 2000)
    y = 2.0 * temp + simulate_ar1(0.5, 2000, seed=4)
    model = arima.fit_arimax(y, temp, (1, 0, 0))
    assert 1.8 <= model.beta <= 2.2


def test_zero_exog_matches_plain_fit():
    x = simulate_ar1(0.6, 1000, seed=5)
    plain = arima.fit_arima(x, (1, 0, 1))
    with_zero = arima.fit_arimax(x, np.zeros(1000), (1, 0, 1))
    np.testing.assert_allclose(with_zero.phi, plain.phi, atol=1e-3)
    np.testing.assert_allclose(with_zero.theta, plain.theta, atol=1e-3)
    assert abs(with_zero.beta) < 1e-3


def test_constant_exog_still_converges():
    x = simulate_ar1(0.6, 1000, seed=6) + 3
    model = arima.fit_arimax(x, np.full(1000, 20.0), (1, 0, 0))
    assert np.isfinite(model.beta) and np.isfinite(model.intercept)
    # the intercept and beta trade off; their combined level is what is identified
    assert model.intercept + 20.0 * model.beta == pytest.approx(3 * (1 - model.phi[0]), abs=0.15)


def test_css_at_optimum_beats_least_squares_start():
    x = np.cumsum(simulate_ar1(0.5, 1500, seed=7))
    model = arima.fit_arima(x, (2, 1, 2))
    z = np.diff(x)
    A = np.column_stack([z[1:-1], z[:-2]])
    phi0, *_ = np.linalg.lstsq(A, z[2:], rcond=None)
    start = ar_model(phi0, d=1, theta=(0.0, 0.0))
    assert arima.css_objective(model, x) <= arima.css_objective(start, x)


def test_iteration_cap_raises_with_diagnostics():
    x = simulate_ar1(0.5, 500, seed=8)
    with pytest.raises(arima.ConvergenceError) as err:
        arima.fit_arima(x, (2, 0, 2), max_iter=3)
    assert err.value.n_iter > 0 and np.isfinite(err.value.objective)


def test_model_round_trip():
    model = arima.fit_arima(simulate_ar1(0.5, 600, seed=9), (1, 0, 1))
    again = ArimaModel.loads(model.dumps())
    assert again.dumps() == model.dumps()


# ---- forecasting ---------------------------------------------------------------

def test_ar1_forecast_halves_each_step():
    out = arima.forecast(ar_model([0.5]), [3.0, 8.0], steps=5)
    np.testing.assert_allclose(out, [4, 2, 1, 0.5, 0.25])


def test_random_walk_repeats_last_level():
    model = arima.fit_arima(np.cumsum(np.random.default_rng(0).normal(size=300)), (0, 1, 0))
    hist = np.array([1.0, 4.0, 2.5])
    np.testing.assert_array_equal(arima.forecast(model, hist, 24), np.full(24, 2.5))


def test_arimax_forecast_matches_hand_recursion():
    rng = np.random.default_rng(1)
    hist = rng.normal(size=50)
    xh = rng.normal(size=50)
    xf = rng.normal(size=24)
    model = ar_model([0.5], beta=1.0)
    out = arima.forecast(model, hist, 24, exog_history=xh, exog_future=xf)
    expected, prev = [], hist[-1]
    for t in xf:
        prev = 0.5 * prev + 1.0 * t
        expected.append(prev)
    np.testing.assert_allclose(out, expected, rtol=0, atol=1e-12)


@given(st.floats(-0.95, 0.95), st.floats(-5, 5), st.floats(-20, 20))
def test_ar1_forecasts_decay_towards_the_mean(phi, c, last):
    out = arima.forecast(ar_model([phi], intercept=c), [0.0, last], steps=30)
    mean = c / (1 - phi)
    gaps = np.abs(np.r_[last, out] - mean)
    assert np.all(gaps[1:] <= gaps[:-1] + 1e-9)


def test_walk_forward_uses_only_data_up_to_each_issue_time():
    x = simulate_ar1(0.8, 300, seed=2)
    model = ar_model([0.8])
    preds = arima.walk_forward(model, x, 200, 272, 24)
    for issue in (200, 224, 248):
        np.testing.assert_array_equal(preds[issue - 200:issue - 176], arima.forecast(model, x[:issue], 24))
    # changing the future never changes earlier forecasts
    y = x.copy()
    y[250:] += 100
    np.testing.assert_array_equal(arima.walk_forward(model, y, 200, 272, 24)[:48], preds[:48])


def test_order_validation():
    with pytest.raises(ValueError):
        ArimaOrder(0, 0, 0)
    with pytest.raises(ValueError):
        ArimaOrder(-1, 0, 1)


# ---- support vector regression ------------------------------------------------

def smooth_problem(n=300, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 3))
    y = np.sin(X[:, 0]) + 0.5 * X[:, 1] + 0.1 * rng.normal(size=n)
    return X, y


@pytest.mark.parametrize("C", [0.1, 1.0, 10.0])
def test_duals_are_feasible(C):
    X, y = smooth_problem()
    model = svr.fit_svr((X, y), C=C)
    assert np.all(np.abs(model.dual_coef) <= C + 1e-9)
    assert abs(model.dual_coef.sum()) <= 1e-6


def test_linear_target_is_recovered():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(200, 2))
    y = 3 * X[:, 0] + 1
    model = svr.fit_svr((X, y), kernel="linear", C=1000.0, epsilon=0.01)
    assert np.max(np.abs(model.predict(X) - y)) <= 0.05


def test_free_support_vectors_sit_on_the_tube():
    X, y = smooth_problem(seed=2)
    model = svr.fit_svr((X, y), C=1.0, epsilon=0.05, tol=1e-6)
    free = np.abs(model.dual_coef) < model.C - 1e-8
    resid = np.abs(model.predict(model.support_vectors[free]) - y[_rows_of(X, model.support_vectors[free])])
    assert free.any()
    assert np.all(resid <= model.epsilon + 1e-4)


def _rows_of(X, rows):
    lookup = {tuple(r): i for i, r in enumerate(X)}
    return np.array([lookup[tuple(r)] for r in rows])


def test_targets_inside_tube_give_no_support_vectors():
    X = np.random.default_rng(3).normal(size=(40, 2))
    y = 5.0 + 0.01 * np.sin(np.arange(40))
    model = svr.fit_svr((X, y), epsilon=0.1)
    assert model.n_support == 0
    np.testing.assert_allclose(model.predict(X), model.bias)
    assert model.bias == pytest.approx(5.0, abs=0.1)


def test_very_wide_kernel_acts_like_a_constant():
    X, y = smooth_problem(seed=4)
    model = svr.fit_svr((X, y), gamma=1e-6)
    assert np.all(np.abs(svr.kernel_matrix(X[:10], X[:10], "rbf", 1e-6) - 1.0) < 1e-4)
    pred = model.predict(X)
    assert pred.max() - pred.min() < 1e-2


def test_predict_rejects_wrong_width_and_round_trips():
    X, y = smooth_problem(100)
    model = svr.fit_svr((X, y))
    with pytest.raises(ValueError):
        model.predict(np.ones((2, 4)))
    again = svr.SvrModel.loads(model.dumps())
    np.testing.assert_array_equal(again.predict(X), model.predict(X))


def test_svr_iteration_cap():
    X, y = smooth_problem(200)
    with pytest.raises(svr.SvrConvergenceError):
        svr.fit_svr((X, y), max_iter=2)


def test_default_width_and_tube():
    X, y = smooth_problem(150)
    model = svr.fit_svr((X, y))
    assert model.gamma == pytest.approx(1 / 3)
    assert model.epsilon == pytest.approx(0.1 * np.std(y))
