"""Robust model-selection competitors.

* robust Mallows Cp from Huber-type (HCp) or Mallows-type (MCp) M-estimators,
* the Akaike-type criterion ``sum rho(e_m) + C_rho k_m`` (MS_A / MS_H),
* the weighted-likelihood Cp (WCp) with Hellinger residual adjustment.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .candidates import CandidateModel, CandidateSet
from .errors import ModelFitError, SingularNormalizer
from .losses import HUBER_C, LossKind, LossSpec
from .regression import Dataset, FitBundle, SolverOptions, check_rank, irls

MAD_SCALE = 1.4826
WL_BANDWIDTH = 0.032


class SelectionMethod(str, enum.Enum):
    HCP = "HCp"
    MCP = "MCp"
    MS_A = "MS_A"
    MS_H = "MS_H"
    WCP = "WCp"
    MMA_SELECT = "MMA_select"


class Weighting(str, enum.Enum):
    HUBER = "huber"
    MALLOWS = "mallows"


@dataclass
class SelectionReport:
    method: SelectionMethod
    scores: np.ndarray
    chosen: int
    candidates: CandidateSet
    thetas: list[np.ndarray]
    auxiliary: dict = field(default_factory=dict)

    @property
    def chosen_model(self) -> CandidateModel:
        return self.candidates[self.chosen]

    def predict(self, design) -> np.ndarray:
        X = np.atleast_2d(np.asarray(design, dtype=float))
        return X[:, list(self.chosen_model.columns)] @ self.thetas[self.chosen]


def robust_scale(residuals) -> float:
    """Normalised median absolute deviation, falling back to the sd."""
    r = np.asarray(residuals, dtype=float)
    s = MAD_SCALE * float(np.median(np.abs(r - np.median(r))))
    if not s > 0:
        s = float(np.std(r))
    return s if s > 0 else 1.0


def _psi(u, c):
    return np.clip(u, -c, c)


def mallows_leverage(X) -> np.ndarray:
    """``v(x) = min(1, kappa / |x|^2)`` with ``kappa`` the median squared row norm."""
    X = np.asarray(X, dtype=float)
    nrm = np.einsum("ij,ij->i", X, X)
    kappa = float(np.median(nrm))
    return np.minimum(1.0, kappa / np.maximum(nrm, 1e-300))


def _rcp_constants(X, u_full, v, c):
    """``(U - V, V)`` from sample moments at the full-model standardized residuals."""
    n = X.shape[0]
    psi = _psi(u_full, c)
    eta = v * psi
    deta = v * (np.abs(u_full) <= c)
    with np.errstate(divide="ignore", invalid="ignore"):
        varpi = v * np.where(u_full != 0, psi / u_full, 1.0)

    def moment(g):
        return (X * g[:, None]).T @ X / n

    Mn = moment(deta)
    Q = moment(eta**2)
    N = moment(eta**2 * deta)
    L = moment(deta**2 + 2 * deta * varpi - 3 * varpi**2)
    R = moment(varpi**2)
    try:
        Minv = np.linalg.inv(Mn)
    except np.linalg.LinAlgError:
        raise SingularNormalizer("normalizing matrix is singular") from None
    if not np.all(np.isfinite(Minv)) or np.linalg.cond(Mn) > 1e12:
        raise SingularNormalizer("normalizing matrix is singular")
    MQM = Minv @ Q @ Minv
    u_minus_v = float(np.sum(eta**2)) - 2 * np.trace(N @ Minv) + np.trace(L @ MQM)
    return u_minus_v, float(np.trace(R @ MQM))


def rcp_scores(data: Dataset, candidates: CandidateSet, weighting: Weighting | str = "huber",
               c: float = HUBER_C, leverage=None, opts: SolverOptions | None = None) -> SelectionReport:
    """Robust Mallows Cp for every candidate.

    Residuals are standardized by the normalised MAD of the full-model LAD
    fit.  ``leverage`` overrides the Mallows-type factor ``v(x)``.  Among
    models with ``RCp <= V`` the smallest one is chosen (ties by ``RCp - V``);
    the full model always qualifies since ``RCp_M = V_M`` by construction.
    """
    weighting = Weighting(weighting)
    method = SelectionMethod.HCP if weighting is Weighting.HUBER else SelectionMethod.MCP
    leverage = leverage or mallows_leverage
    spec = LossSpec.huber(c)
    y = data.response
    full = candidates[candidates.largest_index]
    Xf = data.design[:, list(full.columns)]
    lad = irls(Xf, y, LossSpec.absolute(), opts)[0]
    s = robust_scale(y - Xf @ lad)

    def weights_for(X):
        return np.ones(X.shape[0]) if weighting is Weighting.HUBER else leverage(X)

    thetas, W, v_by_model = [], [], []
    for model in candidates:
        X = data.design[:, list(model.columns)]
        check_rank(X)
        v = weights_for(X)
        theta = irls(X, y / s, spec, opts, sample_weight=v)[0] * s
        u = (y - X @ theta) / s
        thetas.append(theta)
        W.append(float(np.sum((v * _psi(u, c)) ** 2)))
        v_by_model.append(v)
    W = np.array(W)
    u_full = (y - Xf @ thetas[candidates.largest_index]) / s
    umv, V = np.empty(len(candidates)), np.empty(len(candidates))
    for m, model in enumerate(candidates):
        X = data.design[:, list(model.columns)]
        try:
            umv[m], V[m] = _rcp_constants(X, u_full, v_by_model[m], c)
        except SingularNormalizer as exc:
            raise SingularNormalizer(f"model {model.id}: {exc}") from None
    big = candidates.largest_index
    sigma2 = W[big] / (umv[big] + V[big])
    scores = W / sigma2 - umv
    gap = scores - V
    ok = np.flatnonzero(gap <= 1e-9 * np.maximum(1.0, np.abs(V)))
    k = np.array(candidates.sizes)
    if ok.size:
        order = np.lexsort((gap[ok], k[ok]))
        chosen = int(ok[order[0]])
    else:
        chosen = int(np.argmin(gap))
    aux = {"V": V, "U_minus_V": umv, "W": W, "sigma2": float(sigma2), "scale": s}
    return SelectionReport(method, scores, chosen, candidates, thetas, aux)


def akaike_type_scores(bundle: FitBundle, spec: LossSpec, c_rho: float) -> SelectionReport:
    """``sum_i rho(e_im) + c_rho k_m``; the minimiser is chosen."""
    scores = bundle.objectives + c_rho * bundle.k
    method = {LossKind.ABSOLUTE: SelectionMethod.MS_A,
              LossKind.HUBER: SelectionMethod.MS_H}.get(spec.kind, SelectionMethod.MMA_SELECT)
    return SelectionReport(method, scores, int(np.argmin(scores)), bundle.candidates,
                           [f.theta for f in bundle.fits], {"c_rho": c_rho})


@dataclass
class WLWeights:
    phi: np.ndarray
    pearson: np.ndarray
    theta_w: np.ndarray
    sigma_w: float
    iterations: int = 0
    converged: bool = True


@dataclass(frozen=True)
class WLOptions:
    tol: float = 1e-8
    max_iter: int = 100
    bandwidth: float = WL_BANDWIDTH


def hellinger_raf(delta):
    return 2.0 * (np.sqrt(np.asarray(delta, dtype=float) + 1.0) - 1.0)


def _log_ratio(z, sigma2, h):
    """log of smoothed empirical over smoothed normal model density at each z."""
    d = z[:, None] - z[None, :]
    emp = np.exp(-0.5 * d * d / h).mean(axis=1) / np.sqrt(2 * np.pi * h)
    s2 = sigma2 + h
    log_model = -0.5 * np.log(2 * np.pi * s2) - 0.5 * z * z / s2
    return np.log(emp) - log_model


def wl_weights(z, sigma2: float, bandwidth: float = WL_BANDWIDTH):
    """Pearson residuals and Hellinger weights of residuals ``z`` under N(0, sigma2).

    Returns ``(phi, delta)``.  The kernel variance is ``bandwidth * sigma2``.
    """
    z = np.asarray(z, dtype=float)
    lr = np.clip(_log_ratio(z, sigma2, bandwidth * sigma2), -600.0, 600.0)
    root = np.exp(0.5 * lr)  # sqrt(delta + 1)
    delta = root**2 - 1.0
    phi = np.minimum(1.0, np.maximum(2.0 * root - 1.0, 0.0) / root**2)
    return phi, delta


def _wl_iterate(X, y, opts: WLOptions):
    theta = irls(X, y, LossSpec.absolute())[0]
    z = y - X @ theta
    sigma2 = robust_scale(z) ** 2
    converged = False
    it = 0
    for it in range(1, opts.max_iter + 1):
        phi, _ = wl_weights(z, sigma2, opts.bandwidth)
        if phi.sum() <= 0:
            break
        new = np.linalg.lstsq(X * np.sqrt(phi)[:, None], y * np.sqrt(phi), rcond=None)[0]
        z = y - X @ new
        s2_new = float(np.sum(phi * z * z) / np.sum(phi))
        step = float(np.max(np.abs(new - theta)))
        dsig = abs(np.sqrt(s2_new) - np.sqrt(sigma2))
        theta, sigma2 = new, s2_new
        if step < opts.tol * (1 + np.max(np.abs(theta))) and dsig < opts.tol * (1 + np.sqrt(sigma2)):
            converged = True
            break
        if not sigma2 > 0:
            break
    phi, delta = wl_weights(z, sigma2, opts.bandwidth)
    return WLWeights(phi, delta, theta, float(np.sqrt(sigma2)), it, converged)


def wl_fit(data: Dataset, model: CandidateModel, opts: WLOptions | None = None) -> WLWeights:
    """Weighted-likelihood fit of one model under a normal working model.

    Starts at the LAD fit with the normalised MAD as scale and alternates
    Hellinger weights with weighted least squares for the coefficients and
    the weighted second moment for the scale.
    """
    X = data.design[:, list(model.columns)]
    check_rank(X)
    return _wl_iterate(X, data.response, opts or WLOptions())


def weighted_cp(phi, z, sigma2: float, k_m: int) -> float:
    phi = np.asarray(phi, dtype=float)
    z = np.asarray(z, dtype=float)
    return float(np.sum(phi * z * z) / sigma2 - np.sum(phi) + 2 * k_m)


def wcp_scores(data: Dataset, candidates: CandidateSet, opts: WLOptions | None = None) -> SelectionReport:
    """Weighted Cp: weights and scale from the largest model, residuals from each model's own fit."""
    opts = opts or WLOptions()
    y = data.response
    big = candidates.largest_index
    try:
        anchor = wl_fit(data, candidates[big], opts)
    except Exception as exc:
        raise ModelFitError(f"anchor model {big}: {exc}", model_id=big) from exc
    sigma2 = anchor.sigma_w**2
    scores, thetas, flags = [], [], []
    for model in candidates:
        try:
            fit = anchor if model.id == big else wl_fit(data, model, opts)
        except Exception as exc:
            raise ModelFitError(f"model {model.id}: {exc}", model_id=model.id) from exc
        z = y - data.design[:, list(model.columns)] @ fit.theta_w
        scores.append(weighted_cp(anchor.phi, z, sigma2, model.k))
        thetas.append(fit.theta_w)
        flags.append(fit.converged)
    scores = np.array(scores)
    aux = {"phi": anchor.phi, "sigma": anchor.sigma_w, "converged": np.array(flags)}
    return SelectionReport(SelectionMethod.WCP, scores, int(np.argmin(scores)), candidates, thetas, aux)
