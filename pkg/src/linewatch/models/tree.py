"""CART trees grown greedily on Gini impurity (classification) or SSE (regression).

Split thresholds are midpoints of adjacent observed values; ties break to the
lowest feature index, then the lowest threshold, so a grown tree is a pure
function of its inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

LEAF = -1
_NO_IMPROVEMENT = 1e-12


def gini(n0: float, n1: float) -> float:
    """Impurity of a node holding n0 negatives and n1 positives (may be weighted)."""
    total = n0 + n1
    if total <= 0:
        return 0.0
    p1 = n1 / total
    return 1.0 - p1 * p1 - (1.0 - p1) * (1.0 - p1)


def _best_split_gini(x, y, sample_w, min_leaf):
    """Best (threshold, weighted child impurity) on one feature, or None."""
    order = np.argsort(x, kind="stable")
    xs = x[order]
    if xs[0] == xs[-1]:
        return None
    ws = sample_w[order]
    wpos = np.where(y[order] == 1, ws, 0.0)
    cw = np.cumsum(ws)
    cwp = np.cumsum(wpos)
    w_total, wp_total = cw[-1], cwp[-1]
    cut = np.nonzero(xs[1:] > xs[:-1])[0]
    if min_leaf > 1:
        n = len(xs)
        cut = cut[(cut + 1 >= min_leaf) & (n - cut - 1 >= min_leaf)]
    if cut.size == 0:
        return None
    wl, wpl = cw[cut], cwp[cut]
    wr, wpr = w_total - wl, wp_total - wpl
    gl = 1.0 - (wpl / wl) ** 2 - ((wl - wpl) / wl) ** 2
    gr = 1.0 - (wpr / wr) ** 2 - ((wr - wpr) / wr) ** 2
    score = (wl * gl + wr * gr) / w_total
    j = int(np.argmin(score))
    threshold = 0.5 * (xs[cut[j]] + xs[cut[j] + 1])
    return float(threshold), float(score[j])


def _best_split_sse(x, t, sample_w, min_leaf):
    order = np.argsort(x, kind="stable")
    xs = x[order]
    if xs[0] == xs[-1]:
        return None
    ws = sample_w[order]
    ts = t[order]
    cw = np.cumsum(ws)
    cwt = np.cumsum(ws * ts)
    cwt2 = np.cumsum(ws * ts * ts)
    cut = np.nonzero(xs[1:] > xs[:-1])[0]
    if min_leaf > 1:
        n = len(xs)
        cut = cut[(cut + 1 >= min_leaf) & (n - cut - 1 >= min_leaf)]
    if cut.size == 0:
        return None
    wl = cw[cut]
    wr = cw[-1] - wl
    sl, sr = cwt[cut], cwt[-1] - cwt[cut]
    ql, qr = cwt2[cut], cwt2[-1] - cwt2[cut]
    score = (ql - sl * sl / wl) + (qr - sr * sr / wr)
    j = int(np.argmin(score))
    threshold = 0.5 * (xs[cut[j]] + xs[cut[j] + 1])
    return float(threshold), float(score[j])


@dataclass
class DecisionTree:
    feature: np.ndarray  # LEAF at leaves
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray  # leaf P(class 1) or leaf regression value
    n0: np.ndarray  # class counts per node (zeros for regression trees)
    n1: np.ndarray
    max_depth: int | None = None
    min_leaf: int = 1

    def predict_value(self, X: np.ndarray) -> np.ndarray:
        """Vectorized root-to-leaf routing; `x <= threshold` goes left."""
        node = np.zeros(len(X), dtype=np.int32)
        while True:
            feats = self.feature[node]
            active = feats != LEAF
            if not active.any():
                return self.value[node]
            rows = np.nonzero(active)[0]
            xv = X[rows, feats[rows]]
            go_left = xv <= self.threshold[node[rows]]
            node[rows] = np.where(go_left, self.left[node[rows]], self.right[node[rows]])

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return self.predict_value(X)

    def node_count(self) -> int:
        return len(self.feature)

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
            "n0": self.n0.tolist(),
            "n1": self.n1.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DecisionTree":
        return cls(
            feature=np.asarray(d["feature"], dtype=np.int32),
            threshold=np.asarray(d["threshold"], dtype=float),
            left=np.asarray(d["left"], dtype=np.int32),
            right=np.asarray(d["right"], dtype=np.int32),
            value=np.asarray(d["value"], dtype=float),
            n0=np.asarray(d["n0"], dtype=float),
            n1=np.asarray(d["n1"], dtype=float),
        )


class _Builder:
    def __init__(self):
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.value: list[float] = []
        self.n0: list[float] = []
        self.n1: list[float] = []

    def add(self) -> int:
        for arr, fill in (
            (self.feature, LEAF),
            (self.threshold, 0.0),
            (self.left, -1),
            (self.right, -1),
            (self.value, 0.0),
            (self.n0, 0.0),
            (self.n1, 0.0),
        ):
            arr.append(fill)
        return len(self.feature) - 1

    def finish(self, max_depth, min_leaf) -> DecisionTree:
        return DecisionTree(
            feature=np.asarray(self.feature, dtype=np.int32),
            threshold=np.asarray(self.threshold, dtype=float),
            left=np.asarray(self.left, dtype=np.int32),
            right=np.asarray(self.right, dtype=np.int32),
            value=np.asarray(self.value, dtype=float),
            n0=np.asarray(self.n0, dtype=float),
            n1=np.asarray(self.n1, dtype=float),
            max_depth=max_depth,
            min_leaf=min_leaf,
        )


def _candidate_features(d, m_features, rng):
    if m_features is None or m_features >= d or rng is None:
        return range(d)
    return np.sort(rng.choice(d, size=m_features, replace=False))


def train_tree(
    X: np.ndarray,
    y: np.ndarray,
    max_depth: int | None = None,
    min_leaf: int = 1,
    class_weight: tuple[float, float] = (1.0, 1.0),
    m_features: int | None = None,
    rng: np.random.Generator | None = None,
) -> DecisionTree:
    """Grow a binary classification tree; leaf value is positives/total at the leaf."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    if len(X) < 2 * min_leaf and len(np.unique(y)) > 1:
        raise ValueError(f"need at least {2 * min_leaf} rows to honor min_leaf={min_leaf}")
    w = np.where(y == 1, class_weight[1], class_weight[0]).astype(float)
    builder = _Builder()
    root = builder.add()
    # Stack keeps (node_id, row_indices, depth); children processed left-first.
    stack = [(root, np.arange(len(X)), 0)]
    while stack:
        node, idx, depth = stack.pop()
        ysub = y[idx]
        n1 = int((ysub == 1).sum())
        n0 = len(idx) - n1
        builder.n0[node] = float(n0)
        builder.n1[node] = float(n1)
        builder.value[node] = n1 / len(idx)
        if n0 == 0 or n1 == 0:
            continue
        if max_depth is not None and depth >= max_depth:
            continue
        if len(idx) < 2 * min_leaf:
            continue
        wsub = w[idx]
        parent = gini(float(wsub[ysub == 0].sum()), float(wsub[ysub == 1].sum()))
        best = None
        for f in _candidate_features(X.shape[1], m_features, rng):
            found = _best_split_gini(X[idx, f], ysub, wsub, min_leaf)
            if found is None:
                continue
            threshold, score = found
            if best is None or score < best[0]:
                best = (score, int(f), threshold)
        if best is None or best[0] >= parent - _NO_IMPROVEMENT:
            continue
        _, f, threshold = best
        go_left = X[idx, f] <= threshold
        left_id = builder.add()
        right_id = builder.add()
        builder.feature[node] = f
        builder.threshold[node] = threshold
        builder.left[node] = left_id
        builder.right[node] = right_id
        # Push right first so the left child is processed (and numbered) first.
        stack.append((right_id, idx[~go_left], depth + 1))
        stack.append((left_id, idx[go_left], depth + 1))
    return builder.finish(max_depth, min_leaf)


def train_regression_tree(
    X: np.ndarray,
    targets: np.ndarray,
    grad: np.ndarray,
    hess: np.ndarray,
    max_depth: int,
    min_leaf: int = 1,
    leaf_clip: float = 8.0,
) -> DecisionTree:
    """Squared-error tree on `targets`; leaves carry the Newton step sum(grad)/sum(hess)."""
    X = np.asarray(X, dtype=float)
    targets = np.asarray(targets, dtype=float)
    ones = np.ones(len(X))
    builder = _Builder()
    root = builder.add()
    stack = [(root, np.arange(len(X)), 0)]
    while stack:
        node, idx, depth = stack.pop()
        g = float(grad[idx].sum())
        h = float(hess[idx].sum())
        builder.value[node] = float(np.clip(g / max(h, 1e-12), -leaf_clip, leaf_clip))
        if depth >= max_depth or len(idx) < 2 * min_leaf:
            continue
        tsub = targets[idx]
        if tsub.max() == tsub.min():
            continue
        best = None
        for f in range(X.shape[1]):
            found = _best_split_sse(X[idx, f], tsub, ones[idx], min_leaf)
            if found is None:
                continue
            threshold, score = found
            if best is None or score < best[0]:
                best = (score, int(f), threshold)
        if best is None:
            continue
        _, f, threshold = best
        go_left = X[idx, f] <= threshold
        left_id = builder.add()
        right_id = builder.add()
        builder.feature[node] = f
        builder.threshold[node] = threshold
        builder.left[node] = left_id
        builder.right[node] = right_id
        stack.append((right_id, idx[~go_left], depth + 1))
        stack.append((left_id, idx[go_left], depth + 1))
    return builder.finish(max_depth, min_leaf)
