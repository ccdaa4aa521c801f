"""ARIMA / ARIMAX by conditional sum of squares, with walk-forward forecasting.

The one-step predictor on the d-times differenced series ``z`` is

    z_t = c + sum_i phi_i z_{t-i} + beta x_t + sum_j theta_j e_{t-j}

where ``x`` is the exogenous series differenced the same number of times. Residuals
before ``max(p, q)`` are taken as zero.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.optimize import minimize
from scipy.signal import lfilter

FORMAT = "dayahead.arima"
FORMAT_VERSION = 1

BETA_RIDGE = 1e-6


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, params: np.ndarray, objective: float, n_iter: int):
        super().__init__(message)
        self.params = params
        self.objective = objective
        self.n_iter = n_iter


@dataclass(frozen=True)
class ArimaOrder:
    p: int
    d: int
    q: int

    def __post_init__(self):
        if min(self.p, self.d, self.q) < 0:
            raise ValueError("ARIMA orders must be non-negative")
        if self.p + self.q < 1 and self.d < 1:
            raise ValueError("order needs p + q >= 1 or d >= 1")


@dataclass(frozen=True)
class ArimaModel:
    order: ArimaOrder
    intercept: float
    phi: np.ndarray
    theta: np.ndarray
    beta: float | None
    sigma2: float
    css: float
    n_obs: int

    @property
    def has_exog(self) -> bool:
        return self.beta is not None

    def to_dict(self) -> dict:
        return {
            "format": FORMAT,
            "version": FORMAT_VERSION,
            "order": [self.order.p, self.order.d, self.order.q],
            "intercept": self.intercept,
            "phi": list(map(float, self.phi)),
            "theta": list(map(float, self.theta)),
            "beta": self.beta,
            "sigma2": self.sigma2,
            "css": self.css,
            "n_obs": self.n_obs,
        }

    @classmethod
    def from_dict(cls, d: dict) -> ArimaModel:
        if d.get("format") != FORMAT or d.get("version") != FORMAT_VERSION:
            raise ValueError(f"not a {FORMAT} v{FORMAT_VERSION} document")
        return cls(
            order=ArimaOrder(*d["order"]),
            intercept=float(d["intercept"]),
            phi=np.asarray(d["phi"], dtype=float),
            theta=np.asarray(d["theta"], dtype=float),
            beta=None if d["beta"] is None else float(d["beta"]),
            sigma2=float(d["sigma2"]),
            css=float(d["css"]),
            n_obs=int(d["n_obs"]),
        )

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=1, allow_nan=False)

    @classmethod
    def loads(cls, text: str) -> ArimaModel:
        return cls.from_dict(json.loads(text))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps())


def difference(series, d: int) -> np.ndarray:
    x = np.asarray(series, dtype=float)
    if len(x) <= d:
        raise ValueError(f"series of length {len(x)} cannot be differenced {d} times")
    return np.diff(x, n=d) if d else x.copy()


def undifference(deltas, anchors) -> np.ndarray:
    """Integrate d-th differences back to levels given the last d observed levels."""
    out = np.asarray(deltas, dtype=float)
    anchors = np.atleast_1d(np.asarray(anchors, dtype=float))
    d = len(anchors)
    for k in reversed(range(d)):
        last = np.diff(anchors, n=k)[-1]
        out = last + np.cumsum(out)
    return out


def _residuals(z, x, c, phi, theta, beta) -> np.ndarray:
    p, q = len(phi), len(theta)
    m = max(p, q)
    N = len(z)
    w = z[m:] - c
    for i in range(1, p + 1):
        w = w - phi[i - 1] * z[m - i : N - i]
    if x is not None:
        w = w - beta * x[m:]
    if q == 0:
        return w
    return lfilter([1.0], np.r_[1.0, theta], w)


def _unpack(params, p, q, intercept, exog):
    k = 0
    c = 0.0
    if intercept:
        c = params[0]
        k = 1
    phi = params[k : k + p]
    theta = params[k + p : k + p + q]
    beta = params[k + p + q] if exog else 0.0
    return c, phi, theta, beta


def _ols_start(z, x, p, m, intercept):
    N = len(z)
    cols = []
    if intercept:
        cols.append(np.ones(N - m))
    for i in range(1, p + 1):
        cols.append(z[m - i : N - i])
    if x is not None:
        cols.append(x[m:])
    if not cols:
        return np.zeros(0)
    A = np.column_stack(cols)
    coef, *_ = np.linalg.lstsq(A, z[m:], rcond=None)
    return coef


def fit_arima(
    series,
    order: ArimaOrder | tuple[int, int, int],
    exog=None,
    include_intercept: bool | None = None,
    max_iter: int | None = None,
) -> ArimaModel:
    """Conditional-sum-of-squares fit via a Nelder-Mead simplex.

    The search starts from a least-squares AR fit (MA terms at zero). The intercept
    defaults to on for d == 0 and off otherwise. With ``exog`` the coefficient on
    the exogenous regressor carries a tiny ridge penalty so collinear inputs still
    converge.
    """
    if not isinstance(order, ArimaOrder):
        order = ArimaOrder(*order)
    p, d, q = order.p, order.d, order.q
    if include_intercept is None:
        include_intercept = d == 0
    z = difference(series, d)
    x = None
    if exog is not None:
        exog = np.asarray(exog, dtype=float)
        if len(exog) != len(np.asarray(series)):
            raise ValueError("exog must be aligned with series")
        x = difference(exog, d)
    if len(z) < 10 * (p + q + 1):
        raise ValueError(f"{len(z)} observations after differencing; need >= {10 * (p + q + 1)}")
    m = max(p, q)
    n_eff = len(z) - m

    ols = _ols_start(z, x, p, m, include_intercept)
    k_head = int(include_intercept) + p
    x0 = np.r_[ols[:k_head], np.zeros(q), ols[k_head:]]

    def objective(params):
        c, phi, theta, beta = _unpack(params, p, q, include_intercept, x is not None)
        e = _residuals(z, x, c, phi, theta, beta)
        val = float(np.dot(e, e)) / n_eff
        if x is not None:
            val += BETA_RIDGE * beta * beta
        return val if np.isfinite(val) else 1e300

    if len(x0) == 0:
        params = x0
    else:
        k = len(x0)
        step = np.maximum(0.1 * np.abs(x0), 0.05)
        simplex = np.vstack([x0, x0 + np.diag(step)])
        max_iter = max_iter or 1000 * k
        res = minimize(
            objective, x0, method="Nelder-Mead",
            options={"initial_simplex": simplex, "maxiter": max_iter, "maxfev": 2 * max_iter,
                     "xatol": 1e-7, "fatol": 1e-12, "adaptive": k > 3},
        )
        if not res.success:
            raise ConvergenceError(
                f"Nelder-Mead did not converge: {res.message}", res.x, float(res.fun), int(res.nit)
            )
        params = res.x

    c, phi, theta, beta = _unpack(params, p, q, include_intercept, x is not None)
    e = _residuals(z, x, c, phi, theta, beta)
    css = float(np.dot(e, e))
    return ArimaModel(
        order=order,
        intercept=float(c),
        phi=np.array(phi, dtype=float),
        theta=np.array(theta, dtype=float),
        beta=float(beta) if x is not None else None,
        sigma2=css / n_eff,
        css=css,
        n_obs=len(z),
    )


def fit_arimax(series, exog, order, **kwargs) -> ArimaModel:
    if exog is None:
        raise ValueError("ARIMAX requires an exogenous series")
    return fit_arima(series, order, exog=exog, **kwargs)


def css_objective(model: ArimaModel, series, exog=None) -> float:
    """Conditional sum of squares of ``model`` on ``series``."""
    d = model.order.d
    z = difference(series, d)
    x = None if exog is None else difference(exog, d)
    e = _residuals(z, x, model.intercept, model.phi, model.theta, model.beta or 0.0)
    return float(np.dot(e, e))


def forecast(
    model: ArimaModel,
    history,
    steps: int = 24,
    exog_history=None,
    exog_future=None,
) -> np.ndarray:
    """Iterated one-step forecasts in levels.

    Each prediction is fed back as the next lagged observation; future shocks are
    zero. ARIMAX models need the exogenous history and its ``steps`` future values.
    """
    p, d, q = model.order.p, model.order.d, model.order.q
    history = np.asarray(history, dtype=float)
    z = difference(history, d)
    if model.has_exog:
        if exog_history is None or exog_future is None:
            raise ValueError("ARIMAX forecast needs exogenous history and future values")
        exog_history = np.asarray(exog_history, dtype=float)
        exog_future = np.asarray(exog_future, dtype=float)
        if len(exog_future) < steps or len(exog_history) != len(history):
            raise ValueError("exogenous inputs misaligned with history/steps")
        full = np.r_[exog_history, exog_future[:steps]]
        xd = difference(full, d)
        x_hist, x_fut = xd[: len(z)], xd[len(z) :]
        beta = model.beta
    else:
        x_hist, x_fut, beta = None, np.zeros(steps), 0.0

    e = _residuals(z, x_hist, model.intercept, model.phi, model.theta, beta) if len(z) > max(p, q) else np.zeros(0)
    zs = list(z[-p:]) if p else []
    es = list(e[-q:]) if q else []
    # pad when history is shorter than the lag orders
    zs = [0.0] * (p - len(zs)) + zs
    es = [0.0] * (q - len(es)) + es
    out = np.empty(steps)
    for h in range(steps):
        val = model.intercept + beta * x_fut[h]
        for i in range(1, p + 1):
            val += model.phi[i - 1] * zs[-i]
        for j in range(1, q + 1):
            val += model.theta[j - 1] * es[-j]
        out[h] = val
        if p:
            zs.append(val)
        if q:
            es.append(0.0)
    if d == 0:
        return out
    return undifference(out, history[-d:])


def walk_forward(
    model: ArimaModel,
    series,
    start: int,
    stop: int | None = None,
    horizon: int = 24,
    exog=None,
) -> np.ndarray:
    """Day-ahead forecasts for hours ``[start, stop)``.

    A forecast is issued at ``start`` and every ``horizon`` hours after, each using the
    observed series up to the issue time.
    """
    series = np.asarray(series, dtype=float)
    stop = len(series) if stop is None else stop
    preds = np.empty(stop - start)
    for issue in range(start, stop, horizon):
        steps = min(horizon, stop - issue)
        kwargs = {}
        if model.has_exog:
            kwargs = {"exog_history": exog[:issue], "exog_future": exog[issue : issue + steps]}
        preds[issue - start : issue - start + steps] = forecast(model, series[:issue], steps, **kwargs)
    return preds
