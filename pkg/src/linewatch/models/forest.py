"""Random forest: bootstrapped, feature-subsampled CART trees with vote-fraction output."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .tree import DecisionTree, train_tree


@dataclass
class ForestModel:
    trees: list[DecisionTree]
    seed: int
    m_features: int
    n_trees: int
    max_depth: int | None
    min_leaf: int
    class_weight: tuple[float, float]

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        votes = np.zeros(len(X))
        for tree in self.trees:
            votes += tree.predict_value(X) >= 0.5
        return votes / len(self.trees)


def _fit_one(args):
    X, y, t, seed, m_features, max_depth, min_leaf, class_weight = args
    # The per-tree stream is seeded by seed+index; schedule cannot change results.
    rng = np.random.default_rng(seed + t)
    idx = rng.integers(0, len(X), len(X))
    return train_tree(
        X[idx],
        y[idx],
        max_depth=max_depth,
        min_leaf=min_leaf,
        class_weight=class_weight,
        m_features=m_features,
        rng=rng,
    )


def train_forest(
    X: np.ndarray,
    y: np.ndarray,
    n_trees: int = 100,
    m_features: int | None = None,
    max_depth: int | None = None,
    min_leaf: int = 1,
    class_weight: tuple[float, float] = (1.0, 1.0),
    seed: int = 0,
    workers: int = 1,
) -> ForestModel:
    if n_trees < 1:
        raise ValueError("n_trees must be >= 1")
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    if m_features is None:
        m_features = max(1, math.ceil(math.sqrt(X.shape[1])))
    jobs = [
        (X, y, t, seed, m_features, max_depth, min_leaf, class_weight)
        for t in range(n_trees)
    ]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            trees = list(pool.map(_fit_one, jobs))
    else:
        trees = [_fit_one(job) for job in jobs]
    return ForestModel(
        trees=trees,
        seed=seed,
        m_features=m_features,
        n_trees=n_trees,
        max_depth=max_depth,
        min_leaf=min_leaf,
        class_weight=class_weight,
    )
