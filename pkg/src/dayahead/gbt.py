"""Gradient-boosted regression trees with a second-order regularised objective.

Each round fits a tree to the gradient/hessian of the current predictions, with
leaf weights ``-soft(G, alpha) / (H + lambda)`` and split gain

    0.5 * [S(G_L, H_L) + S(G_R, H_R) - S(G, H)] - gamma,   S(G, H) = soft(G, alpha)^2 / (H + lambda)

Splits are found by exact enumeration of midpoints between consecutive distinct
feature values. Equal gains resolve to the lowest feature index, then the lowest
threshold.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Literal, NamedTuple, Sequence

import numpy as np

from . import _treekern
from .features import FeatureMatrix

FORMAT = "dayahead.gbt"
FORMAT_VERSION = 1

Loss = Literal["squared", "absolute"]


@dataclass(frozen=True)
class GbtHyperParams:
    n_estimators: int = 100
    learning_rate: float = 0.1
    max_depth: int = 6
    min_child_weight: float = 1.0
    subsample: float = 1.0
    colsample_bytree: float = 1.0
    reg_lambda: float = 1.0
    reg_alpha: float = 0.0
    gamma: float = 0.0
    early_stopping_patience: int | None = None
    seed: int = 0
    loss: Loss = "squared"

    def __post_init__(self):
        if self.n_estimators < 1:
            raise ValueError("n_estimators must be >= 1")
        if not 0 < self.learning_rate <= 1:
            raise ValueError("learning_rate must lie in (0, 1]")
        if self.max_depth < 0:
            raise ValueError("max_depth must be >= 0")
        if not 0 < self.subsample <= 1 or not 0 < self.colsample_bytree <= 1:
            raise ValueError("subsample and colsample_bytree must lie in (0, 1]")
        if min(self.reg_lambda, self.reg_alpha, self.gamma, self.min_child_weight) < 0:
            raise ValueError("regularisation terms and min_child_weight must be >= 0")
        if self.early_stopping_patience is not None and self.early_stopping_patience < 1:
            raise ValueError("early_stopping_patience must be >= 1")
        if self.loss not in ("squared", "absolute"):
            raise ValueError(f"unknown loss {self.loss!r}")

    def replace(self, **changes) -> GbtHyperParams:
        return GbtHyperParams(**{**asdict(self), **changes})

    @classmethod
    def from_dict(cls, d: dict) -> GbtHyperParams:
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown hyperparameters: {sorted(unknown)}")
        return cls(**d)


def gradients(y: np.ndarray, pred: np.ndarray, loss: Loss = "squared") -> tuple[np.ndarray, np.ndarray]:
    y = np.asarray(y, dtype=float)
    pred = np.asarray(pred, dtype=float)
    if y.shape != pred.shape:
        raise ValueError("y and pred must have equal length")
    if loss == "squared":
        g = pred - y
    elif loss == "absolute":
        g = np.sign(pred - y)
    else:
        raise ValueError(f"unknown loss {loss!r}")
    return g, np.ones_like(g)


def soft_threshold(G: float, alpha: float) -> float:
    return float(_treekern.soft_threshold(float(G), float(alpha)))


def leaf_weight(G: float, H: float, reg_lambda: float = 0.0, reg_alpha: float = 0.0) -> float:
    if not H + reg_lambda > 0:
        raise ValueError("H + lambda must be positive")
    return -soft_threshold(G, reg_alpha) / (H + reg_lambda)


class Split(NamedTuple):
    feature: int
    threshold: float
    gain: float
    default_left: bool


def _presort(X: np.ndarray) -> np.ndarray:
    # numpy sorts NaN to the end, which the kernels rely on
    return np.argsort(X, axis=0, kind="stable")


def best_split(
    X: np.ndarray,
    g: np.ndarray,
    h: np.ndarray,
    reg_lambda: float = 0.0,
    gamma: float = 0.0,
    min_child_weight: float = 0.0,
    reg_alpha: float = 0.0,
) -> Split | None:
    """Best single split over all rows and features, or None when no gain is positive."""
    X = np.ascontiguousarray(X, dtype=float)
    if X.shape[0] < 2:
        return None
    order = np.ascontiguousarray(_presort(X).T)
    feats = np.arange(X.shape[1], dtype=np.int64)
    fi, thr, gain, dl = _treekern.node_best_split(
        X, np.asarray(g, float), np.asarray(h, float), order, feats, 0, X.shape[0],
        float(reg_lambda), float(reg_alpha), float(gamma), float(min_child_weight),
    )
    if fi < 0:
        return None
    return Split(int(feats[fi]), float(thr), float(gain), bool(dl))


@dataclass(frozen=True)
class Tree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    default_left: np.ndarray
    value: np.ndarray
    gain: np.ndarray
    cover: np.ndarray

    @property
    def n_leaves(self) -> int:
        return int(np.sum(self.left < 0))

    @property
    def depth(self) -> int:
        depth = np.zeros(len(self.feature), dtype=int)
        for node in range(len(self.feature)):
            if self.left[node] >= 0:
                depth[self.left[node]] = depth[self.right[node]] = depth[node] + 1
        return int(depth.max())

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf node id reached by each row."""
        return _treekern.apply_tree(
            np.ascontiguousarray(X, dtype=float), self.feature, self.threshold,
            self.left, self.right, self.default_left,
        )

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]

    def leaves(self) -> np.ndarray:
        return np.flatnonzero(self.left < 0)

    def to_dict(self) -> dict:
        internal = self.left >= 0
        return {
            "feature": self.feature.tolist(),
            "threshold": np.where(internal, self.threshold, 0.0).tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "default_left": self.default_left.tolist(),
            "value": self.value.tolist(),
            "gain": np.where(internal, self.gain, 0.0).tolist(),
            "cover": self.cover.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> Tree:
        return cls(
            feature=np.asarray(d["feature"], dtype=np.int64),
            threshold=np.asarray(d["threshold"], dtype=float),
            left=np.asarray(d["left"], dtype=np.int64),
            right=np.asarray(d["right"], dtype=np.int64),
            default_left=np.asarray(d["default_left"], dtype=bool),
            value=np.asarray(d["value"], dtype=float),
            gain=np.asarray(d["gain"], dtype=float),
            cover=np.asarray(d["cover"], dtype=float),
        )


def grow_tree(
    X: np.ndarray,
    g: np.ndarray,
    h: np.ndarray,
    max_depth: int,
    reg_lambda: float = 0.0,
    reg_alpha: float = 0.0,
    gamma: float = 0.0,
    min_child_weight: float = 0.0,
    rows: np.ndarray | None = None,
    features: Sequence[int] | None = None,
    presorted: np.ndarray | None = None,
) -> Tree:
    """Grow one tree on ``rows`` (default all) using ``features`` (default all)."""
    X = np.ascontiguousarray(X, dtype=float)
    n, F = X.shape
    if presorted is None:
        presorted = _presort(X)
    feats = np.arange(F, dtype=np.int64) if features is None else np.asarray(features, dtype=np.int64)
    if rows is None:
        order = presorted[:, feats].T
    else:
        member = np.zeros(n, dtype=bool)
        member[rows] = True
        order = np.stack([col[member[col]] for col in presorted[:, feats].T])
    order = np.ascontiguousarray(order, dtype=np.int64)
    arrays = _treekern.grow_tree(
        X, np.asarray(g, float), np.asarray(h, float), order, feats, int(max_depth),
        float(reg_lambda), float(reg_alpha), float(gamma), float(min_child_weight),
    )
    return Tree(*arrays)


@dataclass(frozen=True)
class GbtModel:
    base_score: float
    learning_rate: float
    trees: tuple[Tree, ...]
    feature_names: tuple[str, ...]
    params: GbtHyperParams
    best_iteration: int
    eval_history: tuple[float, ...] = ()

    def predict(self, X: np.ndarray | FeatureMatrix, n_trees: int | None = None) -> np.ndarray:
        if isinstance(X, FeatureMatrix):
            if X.feature_names != self.feature_names:
                raise ValueError("feature names/order differ from training")
            X = X.X
        X = np.ascontiguousarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != len(self.feature_names):
            raise ValueError(f"expected {len(self.feature_names)} feature columns, got {X.shape}")
        k = self.best_iteration if n_trees is None else n_trees
        total = np.zeros(X.shape[0])
        for tree in self.trees[:k]:
            total += tree.predict(X)
        return self.base_score + self.learning_rate * total

    def to_dict(self) -> dict:
        return {
            "format": FORMAT,
            "version": FORMAT_VERSION,
            "params": asdict(self.params),
            "feature_names": list(self.feature_names),
            "base_score": self.base_score,
            "learning_rate": self.learning_rate,
            "best_iteration": self.best_iteration,
            "eval_history": list(self.eval_history),
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, d: dict) -> GbtModel:
        if d.get("format") != FORMAT or d.get("version") != FORMAT_VERSION:
            raise ValueError(f"not a {FORMAT} v{FORMAT_VERSION} document")
        return cls(
            base_score=float(d["base_score"]),
            learning_rate=float(d["learning_rate"]),
            trees=tuple(Tree.from_dict(t) for t in d["trees"]),
            feature_names=tuple(d["feature_names"]),
            params=GbtHyperParams.from_dict(d["params"]),
            best_iteration=int(d["best_iteration"]),
            eval_history=tuple(float(v) for v in d["eval_history"]),
        )

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=1, allow_nan=False)

    @classmethod
    def loads(cls, text: str) -> GbtModel:
        return cls.from_dict(json.loads(text))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps())

    @classmethod
    def load(cls, path: str | Path) -> GbtModel:
        return cls.loads(Path(path).read_text())


def fit(
    train: FeatureMatrix,
    params: GbtHyperParams = GbtHyperParams(),
    validation: FeatureMatrix | None = None,
    base_score: float | None = None,
) -> GbtModel:
    """Boost ``params.n_estimators`` trees on ``train``.

    Validation MAE is recorded every round when ``validation`` is given. With
    ``early_stopping_patience`` set, training halts once the best round is that many
    rounds old, and prediction uses only the trees up to the best round.
    """
    n = len(train)
    if n == 0:
        raise ValueError("empty training set")
    if params.early_stopping_patience is not None and validation is None:
        raise ValueError("early stopping needs a validation matrix")
    if validation is not None and validation.feature_names != train.feature_names:
        raise ValueError("validation features differ from training")

    X = np.ascontiguousarray(train.X, dtype=float)
    y = train.y
    F = X.shape[1]
    base = float(np.mean(y)) if base_score is None else float(base_score)
    pred = np.full(n, base)
    presorted = _presort(X)
    rng = np.random.default_rng(params.seed)
    n_rows = max(1, int(math.floor(params.subsample * n)))
    n_cols = max(1, int(math.floor(params.colsample_bytree * F)))

    if validation is not None:
        Xv = np.ascontiguousarray(validation.X, dtype=float)
        vpred = np.full(len(validation), base)

    trees = []
    history = []
    best_mae = math.inf
    best_round = 0
    for k in range(1, params.n_estimators + 1):
        g, h = gradients(y, pred, params.loss)
        rows = None if n_rows == n else np.sort(rng.choice(n, n_rows, replace=False))
        feats = None if n_cols == F else np.sort(rng.choice(F, n_cols, replace=False))
        tree = grow_tree(
            X, g, h, params.max_depth, params.reg_lambda, params.reg_alpha, params.gamma,
            params.min_child_weight, rows=rows, features=feats, presorted=presorted,
        )
        trees.append(tree)
        pred = pred + params.learning_rate * tree.predict(X)
        if validation is None:
            continue
        vpred = vpred + params.learning_rate * tree.predict(Xv)
        mae = float(np.mean(np.abs(validation.y - vpred)))
        history.append(mae)
        if mae < best_mae:
            best_mae = mae
            best_round = k
        elif params.early_stopping_patience is not None and k - best_round >= params.early_stopping_patience:
            break

    best_iteration = best_round if params.early_stopping_patience is not None else len(trees)
    return GbtModel(
        base_score=base,
        learning_rate=params.learning_rate,
        trees=tuple(trees),
        feature_names=train.feature_names,
        params=params,
        best_iteration=best_iteration,
        eval_history=tuple(history),
    )


def predict(model: GbtModel, X: np.ndarray | FeatureMatrix) -> np.ndarray:
    return model.predict(X)
