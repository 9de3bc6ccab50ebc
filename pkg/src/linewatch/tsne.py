"""Exact t-SNE for small case-level matrices.

Gaussian affinities with per-point precision found by bisection against the
target perplexity; Student-t low-dimensional kernel; gradient descent with
early exaggeration, a momentum switch, and per-parameter gain adaptation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

EARLY_EXAGGERATION = 12.0
EXAGGERATION_ITERS = 250
MOMENTUM_SWITCH_ITER = 250
MOMENTUM_EARLY = 0.5
MOMENTUM_LATE = 0.8
PERPLEXITY_TOL = 1e-5
MAX_BISECTION_STEPS = 50
KL_RECORD_EVERY = 100
_EPS = 1e-12


class TsneError(ValueError):
    pass


@dataclass
class TsneResult:
    coords: np.ndarray  # (N, 2)
    kl_divergence: float
    kl_trace: list[tuple[int, float]] = field(default_factory=list)


def squared_distances(x: np.ndarray) -> np.ndarray:
    sq = (x**2).sum(axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (x @ x.T)
    np.maximum(d2, 0.0, out=d2)
    np.fill_diagonal(d2, 0.0)
    return d2


def _row_probs(d2_row: np.ndarray, beta: float, i: int) -> np.ndarray:
    p = np.exp(-d2_row * beta)
    p[i] = 0.0
    s = p.sum()
    if s <= 0:
        p[:] = 0.0
        p[np.arange(len(p)) != i] = 1.0 / (len(p) - 1)
        return p
    return p / s


def _row_perplexity(p: np.ndarray) -> float:
    nz = p[p > 0]
    h = -(nz * np.log2(nz)).sum()
    return float(2.0**h)


def conditional_probabilities(d2: np.ndarray, perplexity: float) -> np.ndarray:
    """Per-row Gaussian conditionals whose perplexity matches the target.

    The precision of each row is located by bisection (bounds grown by
    doubling) for at most MAX_BISECTION_STEPS steps.
    """
    n = d2.shape[0]
    p_cond = np.zeros((n, n))
    for i in range(n):
        beta, lo, hi = 1.0, 0.0, np.inf
        row = d2[i]
        p = _row_probs(row, beta, i)
        for _ in range(MAX_BISECTION_STEPS):
            perp = _row_perplexity(p)
            if abs(perp - perplexity) <= PERPLEXITY_TOL:
                break
            if perp > perplexity:  # too diffuse -> raise precision
                lo = beta
                beta = beta * 2.0 if not np.isfinite(hi) else 0.5 * (beta + hi)
            else:
                hi = beta
                beta = beta / 2.0 if lo == 0.0 else 0.5 * (beta + lo)
            p = _row_probs(row, beta, i)
        p_cond[i] = p
    return p_cond


def joint_probabilities(d2: np.ndarray, perplexity: float) -> np.ndarray:
    p_cond = conditional_probabilities(d2, perplexity)
    p = (p_cond + p_cond.T) / (2.0 * d2.shape[0])
    return np.maximum(p, _EPS)


def _kl(p: np.ndarray, q: np.ndarray) -> float:
    mask = ~np.eye(p.shape[0], dtype=bool)
    pm, qm = p[mask], q[mask]
    return float((pm * np.log(pm / qm)).sum())


def pca_init(scores: np.ndarray, scale: float = 1e-4) -> np.ndarray:
    centered = scores - scores.mean(axis=0)
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    y = centered @ vt[: 2].T
    if y.shape[1] < 2:
        y = np.column_stack([y, np.zeros(len(y))])
    sd = y.std(axis=0)
    sd[sd <= 0] = 1.0
    return y / sd * scale


def tsne_embed(
    scores: np.ndarray,
    perplexity: float = 25.0,
    learning_rate: float = 50.0,
    iterations: int = 10000,
    init: str = "pca",
    seed: int = 0,
) -> TsneResult:
    """Embed rows of `scores` into the plane; deterministic for a fixed seed."""
    x = np.asarray(scores, dtype=float)
    n = x.shape[0]
    if n <= 3 * perplexity:
        raise TsneError(f"perplexity {perplexity} infeasible for {n} points (need N > 3*perplexity)")
    p = joint_probabilities(squared_distances(x), perplexity)

    if init == "pca":
        y = pca_init(x)
    elif init == "random":
        y = np.random.default_rng(seed).normal(0.0, 1e-4, size=(n, 2))
    else:
        raise TsneError(f"unknown init {init!r}")

    update = np.zeros_like(y)
    gains = np.ones_like(y)
    trace: list[tuple[int, float]] = []
    kl = np.nan
    for it in range(iterations):
        p_eff = p * EARLY_EXAGGERATION if it < EXAGGERATION_ITERS else p
        d2 = squared_distances(y)
        w = 1.0 / (1.0 + d2)
        np.fill_diagonal(w, 0.0)
        q = np.maximum(w / w.sum(), _EPS)
        pq = (p_eff - q) * w
        grad = 4.0 * ((np.diag(pq.sum(axis=1)) - pq) @ y)

        momentum = MOMENTUM_EARLY if it < MOMENTUM_SWITCH_ITER else MOMENTUM_LATE
        inc = (update * grad) < 0.0
        gains[inc] += 0.2
        gains[~inc] *= 0.8
        np.maximum(gains, 0.01, out=gains)
        update = momentum * update - learning_rate * gains * grad
        y = y + update
        y = y - y.mean(axis=0)

        if (it + 1) % KL_RECORD_EVERY == 0 or it == iterations - 1:
            d2 = squared_distances(y)
            w = 1.0 / (1.0 + d2)
            np.fill_diagonal(w, 0.0)
            q = np.maximum(w / w.sum(), _EPS)
            kl = _kl(p, q)
            if not trace or trace[-1][0] != it + 1:
                trace.append((it + 1, kl))
    return TsneResult(coords=y, kl_divergence=float(kl), kl_trace=trace)
