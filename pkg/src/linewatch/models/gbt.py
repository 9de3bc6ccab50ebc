"""Gradient boosted trees for binomial log-loss.

Each stage fits a shallow squared-error tree to the current negative
gradient; leaf values are single Newton steps, shrunk by the learning rate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .tree import DecisionTree, train_regression_tree


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-np.clip(z, -500, 500)))


@dataclass
class GbtModel:
    f0: float
    trees: list[DecisionTree]
    learning_rate: float
    max_depth: int
    class_weight: tuple[float, float]
    train_logloss_trace: list[float] = field(default_factory=list)

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        f = np.full(len(X), self.f0)
        for tree in self.trees:
            f += self.learning_rate * tree.predict_value(X)
        return f

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return _sigmoid(self.decision_function(X))


def _logloss(y, p, w) -> float:
    p = np.clip(p, 1e-12, 1.0 - 1e-12)
    return float(-(w * (y * np.log(p) + (1 - y) * np.log(1 - p))).sum() / w.sum())


def train_gbt(
    X: np.ndarray,
    y: np.ndarray,
    n_stages: int = 100,
    learning_rate: float = 0.1,
    max_depth: int = 3,
    class_weight: tuple[float, float] = (1.0, 1.0),
) -> GbtModel:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    w = np.where(y == 1, class_weight[1], class_weight[0]).astype(float)
    base = float((w * y).sum() / w.sum())
    base = min(max(base, 1e-12), 1.0 - 1e-12)
    f0 = math.log(base / (1.0 - base))
    f = np.full(len(X), f0)
    trees: list[DecisionTree] = []
    trace: list[float] = []
    for _ in range(n_stages):
        p = _sigmoid(f)
        residual = y - p
        tree = train_regression_tree(
            X,
            targets=residual,
            grad=w * residual,
            hess=w * p * (1.0 - p),
            max_depth=max_depth,
        )
        trees.append(tree)
        f = f + learning_rate * tree.predict_value(X)
        trace.append(_logloss(y, _sigmoid(f), w))
    return GbtModel(
        f0=f0,
        trees=trees,
        learning_rate=learning_rate,
        max_depth=max_depth,
        class_weight=class_weight,
        train_logloss_trace=trace,
    )
