"""Prediction combination: RMSE loss, static weights and the dynamic
weight-fitting solver.

The dynamic fitter minimizes the RMSE of a convex combination of k
prediction vectors against the truth, over the probability simplex
(weights in [0,1] summing to 1). It is a projected-gradient descent with an
adaptive Armijo step; the combined-prediction MSE is convex in the weights,
so for k=2 the minimizer is unique up to the degenerate identical-
predictions case, where the initial guess is returned.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SIMPLEX_ATOL = 1e-9


@dataclass(frozen=True)
class WeightVector:
    """Simplex-constrained combination weights, ordered [speed, batch] for k=2."""

    weights: np.ndarray
    origin: str = "static"  # "static" | "dynamic"
    window_index: int = -1

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 1 or w.size < 1:
            raise ValueError("weights must be a non-empty vector")
        if np.any(w < -SIMPLEX_ATOL) or np.any(w > 1.0 + SIMPLEX_ATOL):
            raise ValueError(f"weights outside [0,1]: {w}")
        if abs(float(w.sum()) - 1.0) > SIMPLEX_ATOL:
            raise ValueError(f"weights must sum to 1, got {w.sum()!r}")
        if self.origin not in ("static", "dynamic"):
            raise ValueError(f"unknown origin {self.origin!r}")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def speed(self) -> float:
        return float(self.weights[0])

    @property
    def batch(self) -> float:
        return float(self.weights[1])


@dataclass(frozen=True)
class DwaInput:
    """Per-model prediction vectors plus truth for the fitting window."""

    predictions: np.ndarray  # (k, n)
    truth: np.ndarray  # (n,)
    initial_guess: np.ndarray | None = None

    def __post_init__(self) -> None:
        preds = np.atleast_2d(np.asarray(self.predictions, dtype=np.float64))
        truth = np.asarray(self.truth, dtype=np.float64)
        if truth.ndim != 1 or truth.size < 1:
            raise ValueError("truth must be a non-empty vector")
        if preds.shape[1] != truth.size:
            raise ValueError("prediction vectors and truth must share a length")
        if not (np.all(np.isfinite(preds)) and np.all(np.isfinite(truth))):
            raise ValueError("non-finite inputs")
        object.__setattr__(self, "predictions", preds)
        object.__setattr__(self, "truth", truth)

    @property
    def k(self) -> int:
        return int(self.predictions.shape[0])

    def guess(self) -> np.ndarray:
        if self.initial_guess is not None:
            return np.asarray(self.initial_guess, dtype=np.float64)
        return np.full(self.k, 0.5)


@dataclass(frozen=True)
class DwaSolution:
    weights: WeightVector
    rmse: float
    converged: bool
    iterations: int


def rmse(truth: np.ndarray, pred: np.ndarray) -> float:
    """Root mean squared error between equal-length non-empty vectors."""
    truth = np.asarray(truth, dtype=np.float64)
    pred = np.asarray(pred, dtype=np.float64)
    if truth.shape != pred.shape or truth.ndim != 1:
        raise ValueError(f"shape mismatch: {truth.shape} vs {pred.shape}")
    if truth.size == 0:
        raise ValueError("rmse of empty vectors is undefined")
    return float(np.sqrt(np.mean((truth - pred) ** 2)))


def combine(preds: np.ndarray, w: WeightVector) -> np.ndarray:
    """Elementwise convex combination of k prediction vectors."""
    preds = np.atleast_2d(np.asarray(preds, dtype=np.float64))
    if preds.shape[0] != w.weights.size:
        raise ValueError("weight count does not match prediction vector count")
    return w.weights @ preds


def static_weights(ws: float, wb: float) -> WeightVector:
    """Validated fixed [speed, batch] weights, identical for every window."""
    return WeightVector(weights=np.array([ws, wb]), origin="static")


def closed_form_two_model(p_b: np.ndarray, p_s: np.ndarray, truth: np.ndarray) -> float:
    """Exact MSE-minimizing speed weight for the two-model case:
    clamp_[0,1](<p_s - p_b, y - p_b> / ||p_s - p_b||^2). Identical
    predictions are degenerate and return 0.5."""
    p_b = np.asarray(p_b, dtype=np.float64)
    p_s = np.asarray(p_s, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    diff = p_s - p_b
    denom = float(diff @ diff)
    if denom == 0.0:
        return 0.5
    w = float(diff @ (truth - p_b)) / denom
    return min(1.0, max(0.0, w))


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sort-based)."""
    v = np.asarray(v, dtype=np.float64)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, v.size + 1)
    cond = u - css / idx > 0
    rho = int(idx[cond][-1])
    theta = css[rho - 1] / rho
    return np.maximum(v - theta, 0.0)


def fit_dynamic_weights(
    inp: DwaInput,
    *,
    window_index: int = -1,
    tol: float = 1e-10,
    max_iter: int = 10_000,
    armijo: float = 0.25,
    growth: float = 1.3,
) -> DwaSolution:
    """Projected-gradient minimization of combination RMSE on the simplex.

    The step adapts by Armijo backtracking with geometric growth between
    iterations; iteration stops when the iterate moves less than ``tol`` in
    the sup norm or the cap is hit (the best feasible iterate is returned
    and flagged as non-converged).
    """
    p = inp.predictions  # (k, n)
    y = inp.truth
    n = y.size
    w = project_simplex(inp.guess())

    def mse(wv: np.ndarray) -> float:
        r = wv @ p - y
        return float(r @ r) / n

    f_w = mse(w)
    lipschitz = 2.0 * float(np.sum(p * p)) / n  # Frobenius bound on the Hessian norm
    step = 1.0 / max(lipschitz, 1e-300)
    converged = False
    iterations = 0

    for iterations in range(1, max_iter + 1):
        grad = 2.0 / n * (p @ (w @ p - y))
        s = step * growth
        w_new, f_new = w, f_w
        while s > 1e-18:
            candidate = project_simplex(w - s * grad)
            move = candidate - w
            f_cand = mse(candidate)
            if f_cand <= f_w - (armijo / s) * float(move @ move):
                w_new, f_new = candidate, f_cand
                break
            s *= 0.5
        step = s
        shift = float(np.max(np.abs(w_new - w)))
        w, f_w = w_new, f_new
        if shift <= tol:
            converged = True
            break

    weights = WeightVector(weights=project_simplex(w), origin="dynamic", window_index=window_index)
    return DwaSolution(weights=weights, rmse=float(np.sqrt(f_w)), converged=converged, iterations=iterations)


def dwa(inp: DwaInput, window_index: int = -1) -> WeightVector:
    """Dynamic weights for one window (see :func:`fit_dynamic_weights`)."""
    return fit_dynamic_weights(inp, window_index=window_index).weights
