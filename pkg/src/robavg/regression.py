"""M-estimation of candidate models.

Square loss is solved in closed form; absolute and Huber losses by
iteratively reweighted least squares started at the least-squares solution.
Absolute-loss fits finish with a vertex polish: the basic solution through
the ``k`` rows with the smallest residuals replaces the IRLS iterate when it
is at least as good, and a subgradient certificate decides ``converged``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .candidates import CandidateModel, CandidateSet
from .errors import ModelFitError, NoConvergence, RankDeficient
from .losses import LossKind, LossSpec, sigma2_hat

RANK_RTOL = 1e-10


@dataclass(frozen=True)
class Dataset:
    """Design matrix (n x p) and response (n,)."""

    design: np.ndarray
    response: np.ndarray
    column_names: tuple[str, ...] | None = None

    def __post_init__(self):
        X = np.array(self.design, dtype=float)
        y = np.array(self.response, dtype=float).ravel()
        if X.ndim == 1:
            X = X[:, None]
        if X.ndim != 2:
            raise ValueError("design must be a 2-D matrix")
        n, p = X.shape
        if y.size != n:
            raise ValueError(f"response has {y.size} entries but design has {n} rows")
        if p < 1 or n < p:
            raise ValueError(f"need n >= p >= 1, got n={n}, p={p}")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise ValueError("dataset contains non-finite entries")
        if self.column_names is not None and len(self.column_names) != p:
            raise ValueError("column_names must have one label per design column")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "design", X)
        object.__setattr__(self, "response", y)
        if self.column_names is not None:
            object.__setattr__(self, "column_names", tuple(self.column_names))

    @property
    def n(self) -> int:
        return self.design.shape[0]

    @property
    def p(self) -> int:
        return self.design.shape[1]

    def subset(self, rows) -> Dataset:
        rows = np.asarray(rows)
        return Dataset(self.design[rows], self.response[rows], self.column_names)

    def with_intercept(self) -> Dataset:
        names = None if self.column_names is None else ("(Intercept)", *self.column_names)
        X = np.column_stack([np.ones(self.n), self.design])
        return Dataset(X, self.response, names)


@dataclass(frozen=True)
class SolverOptions:
    tol: float = 1e-8
    max_iter: int = 200
    strict: bool = False  # raise NoConvergence instead of flagging
    lad_delta: float = 1e-6  # relative to the scale of y
    polish_lad: bool = True


@dataclass
class FitResult:
    model: CandidateModel
    theta: np.ndarray
    residuals: np.ndarray
    objective: float
    iterations: int
    converged: bool
    history: list[float] = field(default_factory=list, repr=False)

    def predict(self, design) -> np.ndarray:
        X = np.atleast_2d(np.asarray(design, dtype=float))
        return X[:, list(self.model.columns)] @ self.theta


@dataclass
class FitBundle:
    fits: list[FitResult]
    candidates: CandidateSet
    spec: LossSpec
    residual_matrix: np.ndarray
    sigma2_hat: float
    response: np.ndarray

    @property
    def k(self) -> np.ndarray:
        return np.array(self.candidates.sizes, dtype=float)

    @property
    def full_fit(self) -> FitResult:
        return self.fits[self.candidates.largest_index]

    @property
    def full_residuals(self) -> np.ndarray:
        return self.full_fit.residuals

    @property
    def objectives(self) -> np.ndarray:
        return np.array([f.objective for f in self.fits])

    def prediction_matrix(self, design) -> np.ndarray:
        """Column m holds model m's predictions for the rows of ``design``."""
        X = np.atleast_2d(np.asarray(design, dtype=float))
        return np.column_stack([f.predict(X) for f in self.fits])


def check_rank(X: np.ndarray, rtol: float = RANK_RTOL) -> None:
    if X.shape[0] < X.shape[1]:
        raise RankDeficient(f"{X.shape[0]} rows cannot identify {X.shape[1]} coefficients")
    R = sla.qr(X, mode="r", pivoting=True)[0]
    d = np.abs(np.diag(R))
    if d.size == 0 or d[0] == 0 or d[-1] <= rtol * d[0]:
        raise RankDeficient("design submatrix is rank deficient")


def _scale(y: np.ndarray) -> float:
    s = float(np.median(np.abs(y - np.median(y))))
    if s <= 0:
        s = float(np.std(y))
    return s if s > 0 else 1.0


def _wls(X, y, w):
    sw = np.sqrt(w)
    return np.linalg.lstsq(X * sw[:, None], y * sw, rcond=None)[0]


def _lad_polish(X, y, theta, w, spec):
    """Basic solution through the k smallest residuals plus optimality check."""
    k = X.shape[1]
    r = y - X @ theta
    best = theta
    best_obj = float(np.sum(w * np.abs(r)))
    basis = np.argsort(np.abs(r), kind="stable")[:k]
    XB = X[basis]
    try:
        cand = np.linalg.solve(XB, y[basis])
    except np.linalg.LinAlgError:
        return best, False
    rc = y - X @ cand
    obj = float(np.sum(w * np.abs(rc)))
    if obj <= best_obj * (1 + 1e-12) + 1e-300:
        best, best_obj = cand, obj
        rc[basis] = 0.0
        out = np.ones(y.size, dtype=bool)
        out[basis] = False
        g = X[out].T @ (w[out] * spec.rho1(rc[out]))
        try:
            u = np.linalg.solve(XB.T, g)
        except np.linalg.LinAlgError:
            return best, False
        return best, bool(np.all(np.abs(u) <= w[basis] * (1 + 1e-9)))
    return best, False


def irls(X, y, spec: LossSpec, opts: SolverOptions | None = None, sample_weight=None):
    """Minimise ``sum_i s_i rho(y_i - x_i' theta)`` by reweighted least squares.

    Returns ``(theta, iterations, converged, history)``; ``history`` holds the
    objective before the first update and after every update.
    """
    opts = opts or SolverOptions()
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    s = np.ones(y.size) if sample_weight is None else np.asarray(sample_weight, dtype=float)
    theta = _wls(X, y, s)
    if spec.kind is LossKind.SQUARE:
        obj = float(np.sum(s * spec.rho(y - X @ theta)))
        return theta, 0, True, [obj]
    delta = opts.lad_delta * _scale(y)
    r = y - X @ theta
    history = [float(np.sum(s * spec.rho(r)))]
    converged = False
    it = 0
    for it in range(1, opts.max_iter + 1):
        new = _wls(X, y, s * spec.irls_weight(r, delta))
        step = float(np.max(np.abs(new - theta)))
        theta = new
        r = y - X @ theta
        history.append(float(np.sum(s * spec.rho(r))))
        if step < opts.tol:
            converged = True
            break
    if spec.kind is LossKind.ABSOLUTE and opts.polish_lad:
        theta, certified = _lad_polish(X, y, theta, s, spec)
        converged = converged or certified
        history.append(float(np.sum(s * spec.rho(y - X @ theta))))
    return theta, it, converged, history


def fit_m_estimator(data: Dataset, model: CandidateModel, spec: LossSpec,
                    opts: SolverOptions | None = None) -> FitResult:
    opts = opts or SolverOptions()
    if model.columns[-1] >= data.p:
        raise ValueError(f"model {model.id} references column {model.columns[-1]}")
    X = data.design[:, list(model.columns)]
    y = data.response
    if data.n <= model.k:
        raise RankDeficient(f"n={data.n} must exceed k={model.k}", model.id)
    try:
        check_rank(X)
    except RankDeficient as exc:
        raise RankDeficient(f"model {model.id}: {exc}", model.id) from None
    theta, iters, converged, history = irls(X, y, spec, opts)
    resid = y - X @ theta
    fit = FitResult(model, theta, resid, float(np.sum(spec.rho(resid))), iters, converged, history)
    if not converged and opts.strict:
        raise NoConvergence(f"model {model.id}: no convergence in {opts.max_iter} iterations", fit)
    return fit


def fit_all(data: Dataset, candidates: CandidateSet, spec: LossSpec,
            opts: SolverOptions | None = None) -> FitBundle:
    candidates.check_bounds(data.p)
    fits = []
    for model in candidates:
        try:
            fits.append(fit_m_estimator(data, model, spec, opts))
        except (RankDeficient, NoConvergence) as exc:
            raise ModelFitError(f"model {model.id}: {exc}", model_id=model.id) from exc
    E = np.column_stack([f.residuals for f in fits])
    largest = candidates[candidates.largest_index]
    if spec.kind is LossKind.SQUARE:
        full_ls = fits[candidates.largest_index].residuals
    else:
        Xf = data.design[:, list(largest.columns)]
        full_ls = data.response - Xf @ np.linalg.lstsq(Xf, data.response, rcond=None)[0]
    s2 = sigma2_hat(full_ls, largest.k)
    return FitBundle(fits, candidates, spec, E, s2, data.response)
