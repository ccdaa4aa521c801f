"""Epsilon-insensitive support vector regression solved by SMO.

The dual over 2n variables (``a`` for points above the tube, ``a*`` below) is
optimised two coordinates at a time with second-order working-set selection,
until the maximal KKT violation drops below ``tol``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Literal

import numpy as np
from numba import njit

from ..features import FeatureMatrix

FORMAT = "dayahead.svr"
FORMAT_VERSION = 1
TAU = 1e-12

Kernel = Literal["rbf", "linear"]


class SvrConvergenceError(RuntimeError):
    def __init__(self, message: str, max_violation: float):
        super().__init__(message)
        self.max_violation = max_violation


def kernel_matrix(A: np.ndarray, B: np.ndarray, kernel: Kernel = "rbf", gamma: float = 1.0) -> np.ndarray:
    """``exp(-gamma * |a - b|^2)`` for rbf, ``a . b`` for linear."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if kernel == "linear":
        return A @ B.T
    if kernel != "rbf":
        raise ValueError(f"unknown kernel {kernel!r}")
    d2 = (A * A).sum(1)[:, None] + (B * B).sum(1)[None, :] - 2.0 * (A @ B.T)
    np.maximum(d2, 0.0, out=d2)
    return np.exp(-gamma * d2)


@njit(cache=True, nogil=True)
def _smo(K, y, C, eps, tol, max_iter):
    n = y.shape[0]
    l = 2 * n
    s = np.empty(l)
    G = np.empty(l)
    for t in range(n):
        s[t] = 1.0
        s[t + n] = -1.0
        G[t] = eps - y[t]
        G[t + n] = eps + y[t]
    a = np.zeros(l)
    it = 0
    gap = np.inf
    while it < max_iter:
        # i: maximal violator in the "up" set
        Gmax = -np.inf
        i = -1
        for t in range(l):
            if s[t] > 0:
                if a[t] < C and -G[t] >= Gmax:
                    Gmax = -G[t]
                    i = t
            else:
                if a[t] > 0 and G[t] >= Gmax:
                    Gmax = G[t]
                    i = t
        Gmax2 = -np.inf
        j = -1
        obj_min = np.inf
        if i >= 0:
            ii = i % n
            Kii = K[ii, ii]
            for t in range(l):
                tt = t % n
                Qit = s[i] * s[t] * K[ii, tt]
                if s[t] > 0:
                    if a[t] > 0:
                        diff = Gmax + G[t]
                        if G[t] >= Gmax2:
                            Gmax2 = G[t]
                        if diff > 0:
                            quad = Kii + K[tt, tt] - 2.0 * s[i] * Qit
                            if quad <= 0:
                                quad = TAU
                            obj = -(diff * diff) / quad
                            if obj <= obj_min:
                                j = t
                                obj_min = obj
                else:
                    if a[t] < C:
                        diff = Gmax - G[t]
                        if -G[t] >= Gmax2:
                            Gmax2 = -G[t]
                        if diff > 0:
                            quad = Kii + K[tt, tt] + 2.0 * s[i] * Qit
                            if quad <= 0:
                                quad = TAU
                            obj = -(diff * diff) / quad
                            if obj <= obj_min:
                                j = t
                                obj_min = obj
        gap = Gmax + Gmax2
        if i < 0 or j < 0 or gap < tol:
            break
        it += 1

        ii = i % n
        jj = j % n
        Qij = s[i] * s[j] * K[ii, jj]
        ai_old = a[i]
        aj_old = a[j]
        if s[i] != s[j]:
            quad = K[ii, ii] + K[jj, jj] + 2.0 * Qij
            if quad <= 0:
                quad = TAU
            delta = (-G[i] - G[j]) / quad
            diff = a[i] - a[j]
            a[i] += delta
            a[j] += delta
            if diff > 0:
                if a[j] < 0:
                    a[j] = 0.0
                    a[i] = diff
            else:
                if a[i] < 0:
                    a[i] = 0.0
                    a[j] = -diff
            if diff > 0:
                if a[i] > C:
                    a[i] = C
                    a[j] = C - diff
            else:
                if a[j] > C:
                    a[j] = C
                    a[i] = C + diff
        else:
            quad = K[ii, ii] + K[jj, jj] - 2.0 * Qij
            if quad <= 0:
                quad = TAU
            delta = (G[i] - G[j]) / quad
            total = a[i] + a[j]
            a[i] -= delta
            a[j] += delta
            if total > C:
                if a[i] > C:
                    a[i] = C
                    a[j] = total - C
            else:
                if a[j] < 0:
                    a[j] = 0.0
                    a[i] = total
            if total > C:
                if a[j] > C:
                    a[j] = C
                    a[i] = total - C
            else:
                if a[i] < 0:
                    a[i] = 0.0
                    a[j] = total
        dai = a[i] - ai_old
        daj = a[j] - aj_old
        for t in range(l):
            tt = t % n
            G[t] += s[t] * (s[i] * K[ii, tt] * dai + s[j] * K[jj, tt] * daj)

    # offset from free variables, else midpoint of the feasible interval
    ub = np.inf
    lb = -np.inf
    nfree = 0
    sfree = 0.0
    for t in range(l):
        yG = s[t] * G[t]
        if a[t] >= C:
            if s[t] < 0:
                ub = min(ub, yG)
            else:
                lb = max(lb, yG)
        elif a[t] <= 0:
            if s[t] > 0:
                ub = min(ub, yG)
            else:
                lb = max(lb, yG)
        else:
            nfree += 1
            sfree += yG
    rho = sfree / nfree if nfree > 0 else 0.5 * (ub + lb)
    coef = a[:n] - a[n:]
    return coef, -rho, it, gap


@dataclass(frozen=True)
class SvrModel:
    kernel: Kernel
    gamma: float
    C: float
    epsilon: float
    dual_coef: np.ndarray
    bias: float
    support_vectors: np.ndarray
    n_iter: int = 0

    @property
    def n_support(self) -> int:
        return len(self.dual_coef)

    def predict(self, X) -> np.ndarray:
        if isinstance(X, FeatureMatrix):
            X = X.X
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.n_support == 0:
            return np.full(X.shape[0], self.bias)
        if X.shape[1] != self.support_vectors.shape[1]:
            raise ValueError(
                f"expected {self.support_vectors.shape[1]} features, got {X.shape[1]}"
            )
        out = np.empty(X.shape[0])
        # chunked to bound the kernel block size
        for lo in range(0, X.shape[0], 2048):
            Kb = kernel_matrix(X[lo : lo + 2048], self.support_vectors, self.kernel, self.gamma)
            out[lo : lo + 2048] = Kb @ self.dual_coef + self.bias
        return out

    def to_dict(self) -> dict:
        return {
            "format": FORMAT,
            "version": FORMAT_VERSION,
            "kernel": self.kernel,
            "gamma": self.gamma,
            "C": self.C,
            "epsilon": self.epsilon,
            "bias": self.bias,
            "n_iter": self.n_iter,
            "dual_coef": self.dual_coef.tolist(),
            "support_vectors": self.support_vectors.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> SvrModel:
        if d.get("format") != FORMAT or d.get("version") != FORMAT_VERSION:
            raise ValueError(f"not a {FORMAT} v{FORMAT_VERSION} document")
        sv = np.asarray(d["support_vectors"], dtype=float)
        return cls(
            kernel=d["kernel"],
            gamma=float(d["gamma"]),
            C=float(d["C"]),
            epsilon=float(d["epsilon"]),
            dual_coef=np.asarray(d["dual_coef"], dtype=float),
            bias=float(d["bias"]),
            support_vectors=sv.reshape(len(d["dual_coef"]), -1) if sv.size else sv.reshape(0, 0),
            n_iter=int(d["n_iter"]),
        )

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), allow_nan=False)

    @classmethod
    def loads(cls, text: str) -> SvrModel:
        return cls.from_dict(json.loads(text))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps())


def fit_svr(
    train: FeatureMatrix | tuple[np.ndarray, np.ndarray],
    kernel: Kernel = "rbf",
    C: float = 1.0,
    epsilon: float | None = None,
    gamma: float | None = None,
    tol: float = 1e-3,
    max_iter: int | None = None,
) -> SvrModel:
    """Fit on standardised features.

    Defaults: ``gamma = 1 / n_features`` and ``epsilon = 0.1 * std(y)``.
    """
    if isinstance(train, FeatureMatrix):
        X, y = train.X, train.y
    else:
        X, y = train
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or len(y) != X.shape[0] or len(y) == 0:
        raise ValueError("X must be (n, F) with n matching y")
    if not C > 0:
        raise ValueError("C must be positive")
    if epsilon is None:
        epsilon = 0.1 * float(np.std(y))
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    if gamma is None:
        gamma = 1.0 / X.shape[1]
    n = len(y)
    if max_iter is None:
        max_iter = max(1_000_000, 100 * n)
    K = np.ascontiguousarray(kernel_matrix(X, X, kernel, gamma))
    coef, bias, n_iter, gap = _smo(K, y, float(C), float(epsilon), float(tol), int(max_iter))
    if n_iter >= max_iter and gap >= tol:
        raise SvrConvergenceError(f"SMO hit {max_iter} iterations; max KKT violation {gap:.3g}", float(gap))
    sv = coef != 0
    return SvrModel(
        kernel=kernel,
        gamma=float(gamma),
        C=float(C),
        epsilon=float(epsilon),
        dual_coef=coef[sv],
        bias=float(bias),
        support_vectors=X[sv].copy(),
        n_iter=int(n_iter),
    )


def predict_svr(model: SvrModel, X) -> np.ndarray:
    return model.predict(X)
