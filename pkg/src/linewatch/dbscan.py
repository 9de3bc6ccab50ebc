"""Density clustering with deterministic first-discovery cluster numbering."""

from __future__ import annotations

from collections import deque

import numpy as np

NOISE = -1


def dbscan(points: np.ndarray, eps: float, min_samples: int) -> np.ndarray:
    """Euclidean DBSCAN labels; -1 marks noise.

    A point's neighborhood includes the point itself. Clusters are numbered
    in first-discovery order scanning from the lowest point index, so labels
    are a pure function of the input.
    """
    points = np.asarray(points, dtype=float)
    if eps <= 0:
        raise ValueError("eps must be positive")
    if min_samples < 1:
        raise ValueError("min_samples must be >= 1")
    n = len(points)
    labels = np.full(n, NOISE, dtype=int)
    if n == 0:
        return labels
    sq = (points**2).sum(axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (points @ points.T)
    np.maximum(d2, 0.0, out=d2)
    within = d2 <= eps * eps
    neighbor_counts = within.sum(axis=1)
    core = neighbor_counts >= min_samples

    cluster = 0
    for start in range(n):
        if not core[start] or labels[start] != NOISE:
            continue
        labels[start] = cluster
        queue = deque([start])
        while queue:
            p = queue.popleft()
            for q in np.nonzero(within[p])[0]:
                if labels[q] != NOISE:
                    continue
                labels[q] = cluster
                if core[q]:
                    queue.append(q)
        cluster += 1
    return labels
