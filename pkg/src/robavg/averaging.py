"""Mallows-type weight criteria and the model-averaged predictor.

Residuals of the averaged fit are linear in the weights,
``e(w) = E @ w`` with ``E`` the n x M residual matrix, so every criterion
below is evaluated for a whole batch of weight vectors with one matrix
product.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import ZeroCurvature
from .losses import LossKind, LossSpec, c_rho_fixed, mean_curvature
from .regression import FitBundle
from .simplex import (
    SimplexOptions,
    SimplexResult,
    check_simplex,
    minimize_over_simplex,
    project_simplex,
    renormalize,
)

__all__ = [
    "CriterionMethod",
    "CriterionReport",
    "FixedCriterion",
    "RandomCriterion",
    "average_predict",
    "criterion_fixed",
    "criterion_mma",
    "criterion_random",
    "fit_weights",
    "minimize_over_simplex",
    "project_simplex",
    "renormalize",
]


class CriterionMethod(str, enum.Enum):
    MTC_FIXED = "MTC_Fixed"
    MTC_RANDOM = "MTC_Random"
    MMA = "MMA"


def _as_columns(w, M):
    W = np.asarray(w, dtype=float)
    single = W.ndim == 1
    if single:
        W = W[:, None]
    if W.shape[0] != M:
        raise ValueError(f"weight vector has {W.shape[0]} entries, expected {M}")
    return W, single


class FixedCriterion:
    """``sum_i rho(e_i(w)) + c_rho * sum_m w_m k_m``."""

    vectorized = True

    def __init__(self, residual_matrix, k, spec: LossSpec, c_rho: float):
        self.E = np.asarray(residual_matrix, dtype=float)
        self.k = np.asarray(k, dtype=float)
        self.spec = spec
        self.c_rho = float(c_rho)
        if self.E.shape[1] != self.k.size:
            raise ValueError("residual matrix and model sizes disagree")

    @property
    def M(self) -> int:
        return self.k.size

    def terms(self, w):
        W, single = _as_columns(w, self.M)
        loss = self.spec.rho(self.E @ W).sum(axis=0)
        pen = self.c_rho * (self.k @ W)
        if single:
            return float(loss[0]), float(pen[0])
        return loss, pen

    def __call__(self, w):
        loss, pen = self.terms(w)
        return loss + pen


class RandomCriterion:
    """``sum_i rho(e_i(w)) + sum_m w_m k_m C_m(w)``.

    ``C_m(w) = mean_i rho1(e_im) rho1(e_i(w)) / mean_i R2(e_im)``; the
    denominators do not depend on ``w`` and are computed once.
    """

    vectorized = True

    def __init__(self, residual_matrix, k, spec: LossSpec, full_model_residuals,
                 sigma2: float | None = None, fallback: bool = False):
        self.E = np.asarray(residual_matrix, dtype=float)
        self.k = np.asarray(k, dtype=float)
        self.spec = spec
        n, M = self.E.shape
        if spec.kind is LossKind.SQUARE:
            if sigma2 is None:
                raise ValueError("square loss needs sigma2")
            self.constant = 2.0 * float(sigma2)
            self.curvature = np.full(M, 2.0)
            self.score = None
        else:
            self.constant = None
            self.curvature = mean_curvature(spec, self.E, full_model_residuals, fallback=fallback)
            bad = np.flatnonzero(~(self.curvature > 0))
            if bad.size:
                raise ZeroCurvature(f"averaged curvature not positive for model {bad[0]}",
                                    model_id=int(bad[0]))
            # (M, n) scaled so that score @ rho1(e(w)) gives C_m(w)
            self.score = spec.rho1(self.E).T / (n * self.curvature[:, None])

    @property
    def M(self) -> int:
        return self.k.size

    def penalties(self, w):
        """Per-model constants ``C_m(w)``; shape (M,) or (M, K)."""
        W, single = _as_columns(w, self.M)
        if self.score is None:
            C = np.full((self.M, W.shape[1]), self.constant)
        else:
            C = self.score @ self.spec.rho1(self.E @ W)
        return C[:, 0] if single else C

    def terms(self, w):
        W, single = _as_columns(w, self.M)
        ew = self.E @ W
        loss = self.spec.rho(ew).sum(axis=0)
        if self.score is None:
            pen = self.constant * (self.k @ W)
        else:
            C = self.score @ self.spec.rho1(ew)
            pen = np.sum(W * self.k[:, None] * C, axis=0)
        if single:
            return float(loss[0]), float(pen[0])
        return loss, pen

    def __call__(self, w):
        loss, pen = self.terms(w)
        return loss + pen


def default_c_rho(bundle: FitBundle, spec: LossSpec, fallback: bool = False) -> float:
    """Fixed-design constant from the largest model's residuals."""
    if spec.kind is LossKind.SQUARE:
        return 2.0 * bundle.sigma2_hat
    return c_rho_fixed(spec, bundle.full_residuals, fallback=fallback)


def criterion_fixed(bundle: FitBundle, spec: LossSpec, w, c_rho: float):
    """Return ``(value, loss_term, penalty_term)`` of the fixed-design criterion."""
    crit = FixedCriterion(bundle.residual_matrix, bundle.k, spec, c_rho)
    loss, pen = crit.terms(np.asarray(w, dtype=float))
    return loss + pen, loss, pen


def criterion_random(bundle: FitBundle, spec: LossSpec, w, fallback: bool = False):
    """Return ``(value, loss_term, penalty_term, per_model_penalties)``."""
    crit = RandomCriterion(bundle.residual_matrix, bundle.k, spec, bundle.full_residuals,
                           sigma2=bundle.sigma2_hat, fallback=fallback)
    w = np.asarray(w, dtype=float)
    loss, pen = crit.terms(w)
    return loss + pen, loss, pen, crit.penalties(w)


def criterion_mma(bundle: FitBundle, w):
    """Least-squares Mallows criterion ``RSS(w) + 2 sigma2 sum w_m k_m``.

    Uses the bundle's residual matrix, so the bundle should hold
    least-squares fits.
    """
    crit = FixedCriterion(bundle.residual_matrix, bundle.k, LossSpec.square(),
                          2.0 * bundle.sigma2_hat)
    loss, pen = crit.terms(np.asarray(w, dtype=float))
    return loss + pen


@dataclass
class CriterionReport:
    method: CriterionMethod
    loss: LossSpec
    weights: np.ndarray
    criterion_value: float
    loss_term: float
    penalty_term: float
    optimizer_iterations: int
    restarts_used: int
    c_rho: float | None = None
    per_model_penalties: np.ndarray | None = None
    from_grid: bool = False
    converged: bool = True


def fit_weights(bundle: FitBundle, method: CriterionMethod | str,
                opts: SimplexOptions | None = None, fallback: bool = False) -> CriterionReport:
    """Minimise the requested criterion for the bundle's loss."""
    method = CriterionMethod(method)
    spec = bundle.spec
    c_rho = None
    if method is CriterionMethod.MMA:
        if spec.kind is not LossKind.SQUARE:
            raise ValueError("MMA needs a least-squares bundle")
        c_rho = 2.0 * bundle.sigma2_hat
        crit = FixedCriterion(bundle.residual_matrix, bundle.k, spec, c_rho)
    elif method is CriterionMethod.MTC_FIXED:
        c_rho = default_c_rho(bundle, spec, fallback=fallback)
        crit = FixedCriterion(bundle.residual_matrix, bundle.k, spec, c_rho)
    else:
        crit = RandomCriterion(bundle.residual_matrix, bundle.k, spec, bundle.full_residuals,
                               sigma2=bundle.sigma2_hat, fallback=fallback)
    res: SimplexResult = minimize_over_simplex(crit, crit.M, opts)
    w = check_simplex(res.weights)
    loss, pen = crit.terms(w)
    per_model = crit.penalties(w) if isinstance(crit, RandomCriterion) else None
    return CriterionReport(method, spec, w, loss + pen, loss, pen, res.iterations,
                           res.restarts_used, c_rho, per_model, res.from_grid, res.converged)


def average_predict(bundle: FitBundle, w, new_design) -> np.ndarray:
    """``sum_m w_m x_(m)' theta_m`` for every row of ``new_design``."""
    X = np.atleast_2d(np.asarray(new_design, dtype=float))
    p_needed = max(m.columns[-1] for m in bundle.candidates) + 1
    if X.shape[1] < p_needed:
        raise ValueError(f"new rows have {X.shape[1]} columns, models need {p_needed}")
    W, single = _as_columns(w, bundle.candidates.M)
    out = bundle.prediction_matrix(X) @ W
    return out[:, 0] if single else out
