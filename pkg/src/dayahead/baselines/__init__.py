"""Benchmark forecasters: ARIMA/ARIMAX and support vector regression."""

from .arima import (
    ArimaModel,
    ArimaOrder,
    ConvergenceError,
    difference,
    fit_arima,
    fit_arimax,
    forecast,
    undifference,
    walk_forward,
)
from .svr import SvrModel, fit_svr, predict_svr

__all__ = [
    "ArimaModel",
    "ArimaOrder",
    "ConvergenceError",
    "SvrModel",
    "difference",
    "fit_arima",
    "fit_arimax",
    "fit_svr",
    "forecast",
    "predict_svr",
    "undifference",
    "walk_forward",
]
