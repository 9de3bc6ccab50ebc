"""Soft-margin SVM trained by sequential minimal optimization.

Pair updates are the analytic two-variable solutions, so the dual objective
never decreases; the optimizer stops when no KKT violation beyond tolerance
remains or the sweep budget runs out. Probabilities come from a Platt sigmoid
fitted on out-of-fold decision values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

KKT_TOL = 1e-3
ALPHA_KEEP = 1e-8
_STEP_EPS = 1e-12


class SvmError(ValueError):
    pass


def _kernel(kind: str, gamma: float | None, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if kind == "linear":
        return a @ b.T
    if kind == "rbf":
        if gamma is None or gamma <= 0:
            raise SvmError("rbf kernel needs gamma > 0")
        d2 = (a**2).sum(axis=1)[:, None] + (b**2).sum(axis=1)[None, :] - 2.0 * (a @ b.T)
        np.maximum(d2, 0.0, out=d2)
        return np.exp(-gamma * d2)
    raise SvmError(f"unknown kernel {kind!r}")


def _dual_objective(alpha, ypm, K) -> float:
    v = alpha * ypm
    return float(alpha.sum() - 0.5 * v @ K @ v)


def _kkt_residual(alpha, b, F, ypm, C, keep=ALPHA_KEEP) -> float:
    margin = ypm * (F + b)
    viol = np.zeros(len(alpha))
    at_zero = alpha <= keep
    at_c = alpha >= C - keep
    interior = ~(at_zero | at_c)
    viol[at_zero] = np.maximum(0.0, 1.0 - margin[at_zero])
    viol[at_c] = np.maximum(0.0, margin[at_c] - 1.0)
    viol[interior] = np.abs(margin[interior] - 1.0)
    return float(viol.max()) if len(viol) else 0.0


class _Smo:
    def __init__(self, K, ypm, C, tol):
        self.K = K
        self.y = ypm
        self.C = C
        self.tol = tol
        n = len(ypm)
        self.alpha = np.zeros(n)
        self.b = 0.0
        self.F = np.zeros(n)  # sum_j alpha_j y_j K_ij, bias excluded

    def _take_step(self, i: int, j: int) -> bool:
        if i == j:
            return False
        ai, aj = self.alpha[i], self.alpha[j]
        yi, yj = self.y[i], self.y[j]
        ei = self.F[i] + self.b - yi
        ej = self.F[j] + self.b - yj
        s = yi * yj
        if s > 0:
            lo, hi = max(0.0, ai + aj - self.C), min(self.C, ai + aj)
        else:
            lo, hi = max(0.0, aj - ai), min(self.C, self.C + aj - ai)
        if lo >= hi:
            return False
        kii, kjj, kij = self.K[i, i], self.K[j, j], self.K[i, j]
        eta = kii + kjj - 2.0 * kij
        if eta > 0:
            aj_new = aj + yj * (ei - ej) / eta
            aj_new = min(max(aj_new, lo), hi)
        else:
            # Flat direction: evaluate the dual at both box ends and keep the better.
            f1 = yi * (ei + self.b) - ai * kii - s * aj * kij
            f2 = yj * (ej + self.b) - s * ai * kij - aj * kjj
            l1 = ai + s * (aj - lo)
            h1 = ai + s * (aj - hi)
            obj_lo = l1 * f1 + lo * f2 + 0.5 * l1 * l1 * kii + 0.5 * lo * lo * kjj + s * lo * l1 * kij
            obj_hi = h1 * f1 + hi * f2 + 0.5 * h1 * h1 * kii + 0.5 * hi * hi * kjj + s * hi * h1 * kij
            if obj_lo < obj_hi - 1e-12:
                aj_new = lo
            elif obj_lo > obj_hi + 1e-12:
                aj_new = hi
            else:
                return False
        if abs(aj_new - aj) < _STEP_EPS * (aj_new + aj + _STEP_EPS):
            return False
        ai_new = ai + s * (aj - aj_new)

        b1 = self.b - ei - yi * (ai_new - ai) * kii - yj * (aj_new - aj) * kij
        b2 = self.b - ej - yi * (ai_new - ai) * kij - yj * (aj_new - aj) * kjj
        if ALPHA_KEEP < ai_new < self.C - ALPHA_KEEP:
            self.b = b1
        elif ALPHA_KEEP < aj_new < self.C - ALPHA_KEEP:
            self.b = b2
        else:
            self.b = 0.5 * (b1 + b2)
        self.F += self.y[i] * (ai_new - ai) * self.K[:, i] + self.y[j] * (aj_new - aj) * self.K[:, j]
        self.alpha[i] = ai_new
        self.alpha[j] = aj_new
        return True

    def _examine(self, i: int) -> bool:
        ei = self.F[i] + self.b - self.y[i]
        r = ei * self.y[i]
        if not ((r < -self.tol and self.alpha[i] < self.C) or (r > self.tol and self.alpha[i] > 0)):
            return False
        nb = np.nonzero((self.alpha > ALPHA_KEEP) & (self.alpha < self.C - ALPHA_KEEP))[0]
        if nb.size > 1:
            errors = self.F[nb] + self.b - self.y[nb]
            j = int(nb[np.argmax(np.abs(ei - errors))])
            if self._take_step(i, j):
                return True
        for j in nb:
            if self._take_step(i, int(j)):
                return True
        for j in range(len(self.alpha)):
            if self._take_step(i, j):
                return True
        return False

    def solve(self, max_sweeps: int):
        trace = []
        examine_all = True
        sweeps = 0
        while sweeps < max_sweeps:
            sweeps += 1
            changed = 0
            if examine_all:
                targets = range(len(self.alpha))
            else:
                targets = np.nonzero((self.alpha > ALPHA_KEEP) & (self.alpha < self.C - ALPHA_KEEP))[0]
            for i in targets:
                changed += self._examine(int(i))
            trace.append(_dual_objective(self.alpha, self.y, self.K))
            if examine_all:
                if changed == 0:
                    break
                examine_all = False
            elif changed == 0:
                examine_all = True
        residual = _kkt_residual(self.alpha, self.b, self.F, self.y, self.C)
        return trace, residual, residual <= self.tol


@dataclass
class SvmModel:
    kernel: str
    gamma: float | None
    C: float
    sv_x: np.ndarray  # support vectors, standardized space
    dual_coef: np.ndarray  # alpha_i * y_i
    b: float
    platt_a: float
    platt_b: float
    mean: np.ndarray
    sd: np.ndarray
    seed: int
    converged: bool = True
    kkt_residual: float = 0.0
    dual_trace: list[float] = field(default_factory=list)

    def _standardize(self, X: np.ndarray) -> np.ndarray:
        return (np.asarray(X, dtype=float) - self.mean) / self.sd

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        xs = self._standardize(X)
        if len(self.sv_x) == 0:
            return np.full(len(xs), self.b)
        return _kernel(self.kernel, self.gamma, xs, self.sv_x) @ self.dual_coef + self.b

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        f = self.decision_function(X)
        return _platt_prob(f, self.platt_a, self.platt_b)


def _platt_prob(f: np.ndarray, a: float, b: float) -> np.ndarray:
    z = a * f + b
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = np.exp(-z[pos]) / (1.0 + np.exp(-z[pos]))
    out[~pos] = 1.0 / (1.0 + np.exp(z[~pos]))
    return out


def _platt_fit(f: np.ndarray, y01: np.ndarray, max_iter: int = 100) -> tuple[float, float]:
    """Sigmoid parameters minimizing calibration NLL (Newton with backtracking)."""
    prior1 = float((y01 == 1).sum())
    prior0 = float(len(y01) - prior1)
    hi = (prior1 + 1.0) / (prior1 + 2.0)
    lo = 1.0 / (prior0 + 2.0)
    t = np.where(y01 == 1, hi, lo)
    a, b = 0.0, math.log((prior0 + 1.0) / (prior1 + 1.0))
    sigma = 1e-12

    def nll(av, bv):
        z = av * f + bv
        return float(np.sum(np.where(z >= 0, t * z + np.log1p(np.exp(-z)), (t - 1.0) * z + np.log1p(np.exp(z)))))

    fval = nll(a, b)
    for _ in range(max_iter):
        z = a * f + b
        p = _platt_prob(f, a, b)
        d1 = t - p
        d2 = p * (1.0 - p)
        g1 = float(-(f * d1).sum())
        g2 = float(-d1.sum())
        if max(abs(g1), abs(g2)) < 1e-5:
            break
        h11 = float((f * f * d2).sum()) + sigma
        h22 = float(d2.sum()) + sigma
        h12 = float((f * d2).sum())
        det = h11 * h22 - h12 * h12
        da = -(h22 * g1 - h12 * g2) / det
        db = -(-h12 * g1 + h11 * g2) / det
        step = 1.0
        g_d = g1 * da + g2 * db
        while step >= 1e-10:
            new_f = nll(a + step * da, b + step * db)
            if new_f < fval + 1e-4 * step * g_d:
                a, b, fval = a + step * da, b + step * db, new_f
                break
            step /= 2.0
        else:
            break
    return a, b


def _stratified_folds(y01: np.ndarray, n_folds: int, rng: np.random.Generator) -> np.ndarray:
    fold = np.zeros(len(y01), dtype=int)
    for cls in (0, 1):
        idx = np.nonzero(y01 == cls)[0]
        idx = idx[rng.permutation(len(idx))]
        fold[idx] = np.arange(len(idx)) % n_folds
    return fold


def train_svm(
    X: np.ndarray,
    y: np.ndarray,
    kernel: str = "rbf",
    C: float = 1.0,
    gamma: float | None = 0.1,
    seed: int = 0,
    numeric_cols: list[int] | None = None,
    standardize: bool = True,
    tol: float = KKT_TOL,
    max_sweeps: int = 2000,
    platt_folds: int = 3,
) -> SvmModel:
    """Fit the soft-margin dual by SMO and calibrate with out-of-fold Platt scaling.

    `numeric_cols=None` standardizes every column; pass the numeric subset to
    leave one-hot indicator columns untouched.
    """
    X = np.asarray(X, dtype=float)
    y01 = np.asarray(y)
    if len(np.unique(y01)) < 2:
        raise SvmError("both classes must be present")
    mean = np.zeros(X.shape[1])
    sd = np.ones(X.shape[1])
    if standardize:
        cols = list(range(X.shape[1])) if numeric_cols is None else numeric_cols
        mean[cols] = X[:, cols].mean(axis=0)
        col_sd = X[:, cols].std(axis=0)
        col_sd[col_sd < 1e-12] = 1.0
        sd[cols] = col_sd
    xs = (X - mean) / sd
    ypm = np.where(y01 == 1, 1.0, -1.0)

    rng = np.random.default_rng(seed)
    n = len(xs)
    # Out-of-fold decision values for the calibration sigmoid.
    if n >= 6 * platt_folds and (y01 == 1).sum() >= platt_folds and (y01 == 0).sum() >= platt_folds:
        fold = _stratified_folds(y01, platt_folds, rng)
        oof = np.zeros(n)
        for k in range(platt_folds):
            hold = fold == k
            keep = ~hold
            Kf = _kernel(kernel, gamma, xs[keep], xs[keep])
            smo = _Smo(Kf, ypm[keep], C, tol)
            smo.solve(max_sweeps)
            cross = _kernel(kernel, gamma, xs[hold], xs[keep])
            oof[hold] = cross @ (smo.alpha * ypm[keep]) + smo.b
        platt_a, platt_b = _platt_fit(oof, y01)
    else:
        platt_a, platt_b = None, None  # fit in-sample below

    K = _kernel(kernel, gamma, xs, xs)
    smo = _Smo(K, ypm, C, tol)
    trace, residual, converged = smo.solve(max_sweeps)
    decision = K @ (smo.alpha * ypm) + smo.b
    if platt_a is None:
        platt_a, platt_b = _platt_fit(decision, y01)

    keep = smo.alpha > ALPHA_KEEP
    return SvmModel(
        kernel=kernel,
        gamma=gamma,
        C=C,
        sv_x=xs[keep],
        dual_coef=(smo.alpha * ypm)[keep],
        b=float(smo.b),
        platt_a=float(platt_a),
        platt_b=float(platt_b),
        mean=mean,
        sd=sd,
        seed=seed,
        converged=converged,
        kkt_residual=float(residual),
        dual_trace=trace,
    )
