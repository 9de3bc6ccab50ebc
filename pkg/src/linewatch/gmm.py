"""Gaussian mixture over charge geometry, fit with expectation-maximization.

Separates billing modes (hourly vs. lump-sum patterns) from the
(log rate, log total) plane. Full covariances; k-means++ seeding.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

CONVERGENCE_TOL = 1e-6  # absolute per-point log-likelihood improvement
MAX_ITER = 200
COV_REG = 1e-6


class GmmError(ValueError):
    pass


@dataclass
class BillingModeModel:
    weights: np.ndarray  # (K,)
    means: np.ndarray  # (K, d)
    covariances: np.ndarray  # (K, d, d)
    seed: int
    log_likelihood_trace: list[float] = field(default_factory=list)
    converged: bool = True

    @property
    def k(self) -> int:
        return len(self.weights)


def _log_gauss(points: np.ndarray, mean: np.ndarray, cov: np.ndarray) -> np.ndarray:
    d = points.shape[1]
    sign, logdet = np.linalg.slogdet(cov)
    if sign <= 0:
        raise GmmError("covariance must be positive definite")
    diff = points - mean
    solved = np.linalg.solve(cov, diff.T).T
    maha = np.einsum("ij,ij->i", diff, solved)
    return -0.5 * (d * np.log(2.0 * np.pi) + logdet + maha)


def _log_joint(points: np.ndarray, weights, means, covs) -> np.ndarray:
    cols = [
        np.log(max(weights[k], 1e-300)) + _log_gauss(points, means[k], covs[k])
        for k in range(len(weights))
    ]
    return np.column_stack(cols)


def _logsumexp(a: np.ndarray) -> np.ndarray:
    m = a.max(axis=1, keepdims=True)
    return (m + np.log(np.exp(a - m).sum(axis=1, keepdims=True))).ravel()


def responsibilities(model: BillingModeModel, points: np.ndarray) -> np.ndarray:
    lj = _log_joint(points, model.weights, model.means, model.covariances)
    return np.exp(lj - _logsumexp(lj)[:, None])


def log_likelihood(points, weights, means, covs) -> float:
    return float(_logsumexp(_log_joint(points, weights, means, covs)).sum())


def _m_step(points: np.ndarray, resp: np.ndarray, reg: float):
    n, d = points.shape
    nk = np.maximum(resp.sum(axis=0), 1e-32)
    weights = nk / n
    means = (resp.T @ points) / nk[:, None]
    covs = np.empty((resp.shape[1], d, d))
    for k in range(resp.shape[1]):
        diff = points - means[k]
        covs[k] = (resp[:, k, None] * diff).T @ diff / nk[k] + reg * np.eye(d)
    return weights, means, covs


def run_em(
    points: np.ndarray,
    resp: np.ndarray,
    max_iter: int = MAX_ITER,
    tol: float = CONVERGENCE_TOL,
    reg: float = COV_REG,
):
    """EM from an initial responsibility matrix; returns params, trace, converged."""
    n = points.shape[0]
    trace: list[float] = []
    converged = False
    weights, means, covs = _m_step(points, resp, reg)
    prev = -np.inf
    for _ in range(max_iter):
        lj = _log_joint(points, weights, means, covs)
        norm = _logsumexp(lj)
        ll = float(norm.sum())
        trace.append(ll)
        if abs(ll - prev) < tol * n:
            converged = True
            break
        prev = ll
        resp = np.exp(lj - norm[:, None])
        weights, means, covs = _m_step(points, resp, reg)
    return weights, means, covs, trace, converged


def _kmeans_pp(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = points.shape[0]
    centers = np.empty((k, points.shape[1]))
    centers[0] = points[rng.integers(n)]
    d2 = ((points - centers[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total <= 0:
            centers[j] = points[rng.integers(n)]
        else:
            centers[j] = points[rng.choice(n, p=d2 / total)]
        d2 = np.minimum(d2, ((points - centers[j]) ** 2).sum(axis=1))
    return centers


def fit_billing_mode_gmm(
    points: np.ndarray,
    k: int = 2,
    seed: int = 0,
    max_iter: int = MAX_ITER,
    tol: float = CONVERGENCE_TOL,
    reg: float = COV_REG,
) -> BillingModeModel:
    """Fit a K-component full-covariance mixture to (log rate, log total) points."""
    points = np.asarray(points, dtype=float)
    if points.ndim != 2:
        raise GmmError("points must be a 2-D array")
    n = points.shape[0]
    if k < 1:
        raise GmmError("component count must be >= 1")
    if k > n:
        raise GmmError(f"component count {k} exceeds point count {n}")
    if not np.isfinite(points).all():
        raise GmmError("points must be finite")
    rng = np.random.default_rng(seed)
    centers = _kmeans_pp(points, k, rng)
    # Hard assignment to the nearest seed center forms the initial responsibilities.
    d2 = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    resp = np.zeros((n, k))
    resp[np.arange(n), d2.argmin(axis=1)] = 1.0
    weights, means, covs, trace, converged = run_em(points, resp, max_iter, tol, reg)
    return BillingModeModel(
        weights=weights,
        means=means,
        covariances=covs,
        seed=seed,
        log_likelihood_trace=trace,
        converged=converged,
    )


def billing_mode(model: BillingModeModel, point: np.ndarray) -> int:
    """Most responsible component for one point; ties go to the lower index."""
    point = np.asarray(point, dtype=float)
    if not np.isfinite(point).all():
        raise GmmError("point must be finite")
    lj = _log_joint(point.reshape(1, -1), model.weights, model.means, model.covariances)
    return int(np.argmax(lj[0]))


def billing_modes(model: BillingModeModel, points: np.ndarray) -> np.ndarray:
    points = np.asarray(points, dtype=float)
    if not np.isfinite(points).all():
        raise GmmError("points must be finite")
    lj = _log_joint(points, model.weights, model.means, model.covariances)
    return lj.argmax(axis=1)


def model_to_json(model: BillingModeModel) -> str:
    return json.dumps(
        {
            "format": 1,
            "k": model.k,
            "seed": model.seed,
            "weights": model.weights.tolist(),
            "means": model.means.tolist(),
            "covariances": model.covariances.tolist(),
            "log_likelihood_trace": model.log_likelihood_trace,
            "converged": model.converged,
        },
        indent=2,
        sort_keys=True,
    )


def model_from_json(text: str) -> BillingModeModel:
    doc = json.loads(text)
    return BillingModeModel(
        weights=np.asarray(doc["weights"]),
        means=np.asarray(doc["means"]),
        covariances=np.asarray(doc["covariances"]),
        seed=doc["seed"],
        log_likelihood_trace=list(doc["log_likelihood_trace"]),
        converged=doc["converged"],
    )
