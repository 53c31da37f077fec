"""Loss functions, their derivatives and the penalty constants built on them.

Three losses are supported: square, absolute and Huber.  Each exposes the
loss ``rho``, its derivative ``rho1`` and, through the module functions, the
curvature proxies used by the fixed-design constant :func:`c_rho_fixed` and
the random-design per-model constant :func:`c_rho_m_random`.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateBandwidth, EmptyAcceptRegion, ZeroCurvature

HUBER_C = 1.345


class LossKind(str, enum.Enum):
    SQUARE = "square"
    ABSOLUTE = "absolute"
    HUBER = "huber"


@dataclass(frozen=True)
class LossSpec:
    """Which loss to use; ``huber_c`` only matters for Huber."""

    kind: LossKind
    huber_c: float = HUBER_C

    def __post_init__(self):
        object.__setattr__(self, "kind", LossKind(self.kind))
        if self.kind is LossKind.HUBER and not self.huber_c > 0:
            raise ValueError(f"huber_c must be positive, got {self.huber_c}")

    @classmethod
    def square(cls) -> LossSpec:
        return cls(LossKind.SQUARE)

    @classmethod
    def absolute(cls) -> LossSpec:
        return cls(LossKind.ABSOLUTE)

    @classmethod
    def huber(cls, c: float = HUBER_C) -> LossSpec:
        return cls(LossKind.HUBER, c)

    def rho(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind is LossKind.SQUARE:
            return t * t
        if self.kind is LossKind.ABSOLUTE:
            return np.abs(t)
        a = np.abs(t)
        m = np.minimum(a, self.huber_c)
        return m * (2.0 * a - m)

    def rho1(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind is LossKind.SQUARE:
            return 2.0 * t
        if self.kind is LossKind.ABSOLUTE:
            # rho1(0) = +1 by convention
            return np.where(t >= 0, 1.0, -1.0)
        c = self.huber_c
        return 2.0 * np.clip(t, -c, c)

    def irls_weight(self, r, delta: float = 1e-6):
        """IRLS weights ``rho1(r) / (2 r)`` with their limits at ``r = 0``.

        For the absolute loss the weight is capped at ``1 / (2 delta)``.
        """
        r = np.asarray(r, dtype=float)
        a = np.abs(r)
        if self.kind is LossKind.SQUARE:
            return np.ones_like(r)
        if self.kind is LossKind.ABSOLUTE:
            return 0.5 / np.maximum(a, delta)
        c = self.huber_c
        return np.where(a <= c, 1.0, c / np.maximum(a, c))

    @property
    def label(self) -> str:
        if self.kind is LossKind.HUBER:
            return f"huber(c={self.huber_c:g})"
        return self.kind.value


def rho(spec: LossSpec, t):
    return spec.rho(t)


def rho1(spec: LossSpec, t):
    return spec.rho1(t)


@dataclass(frozen=True)
class DensityEstimate:
    eval_points: np.ndarray
    bandwidth: float
    values: np.ndarray


def semi_iqr(x) -> float:
    q1, q3 = np.percentile(np.asarray(x, dtype=float), [25.0, 75.0])
    return 0.5 * float(q3 - q1)


def epanechnikov_bandwidth(residuals, fallback: bool = False) -> float:
    """Semi-interquartile range of ``residuals`` (linear-interpolation quartiles).

    With ``fallback=True`` a zero range is replaced by the normal-reference
    rule ``1.06 sd n^(-1/5)`` instead of raising.
    """
    r = np.asarray(residuals, dtype=float)
    if r.size < 2:
        raise ValueError("need at least two residuals for a density estimate")
    h = semi_iqr(r)
    if h > 0:
        return h
    if fallback:
        h = 1.06 * float(np.std(r, ddof=1)) * r.size ** (-0.2)
        if h > 0:
            return h
    raise DegenerateBandwidth("semi-interquartile range of residuals is zero")


def epanechnikov_kde(residuals, points, fallback: bool = False) -> DensityEstimate:
    r = np.asarray(residuals, dtype=float).ravel()
    pts = np.atleast_1d(np.asarray(points, dtype=float))
    h = epanechnikov_bandwidth(r, fallback=fallback)
    u = (pts.ravel()[:, None] - r[None, :]) / h
    k = np.where(np.abs(u) <= 1.0, 0.75 * (1.0 - u * u), 0.0)
    values = k.sum(axis=1) / (r.size * h)
    return DensityEstimate(pts, h, values.reshape(pts.shape))


def epanechnikov_density(residuals, at, fallback: bool = False):
    """Epanechnikov kernel density of ``residuals`` evaluated at ``at``."""
    est = epanechnikov_kde(residuals, at, fallback=fallback)
    if np.ndim(at) == 0:
        return float(est.values[0])
    return est.values


def sigma2_hat(full_model_residuals, k_full: int) -> float:
    r = np.asarray(full_model_residuals, dtype=float)
    n = r.size
    if n <= k_full:
        raise ValueError(f"need n > k_full (n={n}, k_full={k_full})")
    return float(r @ r) / (n - k_full)


def c_rho_fixed(spec: LossSpec, full_model_residuals, n: int | None = None,
                k_full: int = 0, fallback: bool = False) -> float:
    """Loss-specific penalty constant for the fixed-design criterion.

    Square: ``2 sigma2``.  Absolute: ``1 / (2 f(0))`` with an Epanechnikov
    density of the residuals.  Huber: the ratio of the clipped second
    moment to the fraction of residuals inside ``c``.
    """
    r = np.asarray(full_model_residuals, dtype=float)
    if n is not None and n != r.size:
        raise ValueError(f"n={n} does not match {r.size} residuals")
    if spec.kind is LossKind.SQUARE:
        return 2.0 * sigma2_hat(r, k_full)
    if spec.kind is LossKind.ABSOLUTE:
        return 1.0 / (2.0 * epanechnikov_density(r, 0.0, fallback=fallback))
    c = spec.huber_c
    inside = np.abs(r) <= c
    count = int(inside.sum())
    if count == 0:
        raise EmptyAcceptRegion(f"no residual has |r| <= c = {c}")
    num = 2.0 * float(np.sum(r[inside] ** 2)) + 2.0 * c * c * (r.size - count)
    return num / count


def mean_curvature(spec: LossSpec, residual_matrix, full_model_residuals,
                   fallback: bool = False) -> np.ndarray:
    """Per-model averaged curvature ``(1/n) sum_i R2(e_im)``.

    ``residual_matrix`` is n x M (or a single length-n vector).  Absolute loss
    uses the density of the full-model residuals evaluated at each model's
    residuals; Huber uses the empirical probability that the full-model
    residuals shifted by ``e_im`` stay within ``c``; square gives 2.
    """
    E = np.asarray(residual_matrix, dtype=float)
    single = E.ndim == 1
    if single:
        E = E[:, None]
    full = np.asarray(full_model_residuals, dtype=float).ravel()
    if spec.kind is LossKind.SQUARE:
        out = np.full(E.shape[1], 2.0)
    elif spec.kind is LossKind.ABSOLUTE:
        dens = epanechnikov_kde(full, E, fallback=fallback).values
        out = dens.mean(axis=0)
    else:
        c = spec.huber_c
        s = np.sort(full)
        n = s.size
        # count of j with -c - e <= full_j <= c - e, for every entry e of E
        hi = np.searchsorted(s, c - E, side="right")
        lo = np.searchsorted(s, -c - E, side="left")
        out = (2.0 / n) * (hi - lo).mean(axis=0)
    return out[0:1] if single else out


def c_rho_m_random(spec: LossSpec, residuals_m, averaged_residuals,
                   full_model_residuals, k_full: int | None = None,
                   fallback: bool = False) -> float:
    """Per-model penalty constant of the random-design criterion.

    ``mean(rho1(e_m) * rho1(e_avg)) / mean(R2(e_m))``.  For square loss the
    constant is ``2 sigma2`` computed from the full-model residuals, which
    needs ``k_full``.
    """
    em = np.asarray(residuals_m, dtype=float)
    ew = np.asarray(averaged_residuals, dtype=float)
    full = np.asarray(full_model_residuals, dtype=float)
    if not em.shape == ew.shape == full.shape:
        raise ValueError("residual vectors must share length n")
    if spec.kind is LossKind.SQUARE:
        if k_full is None:
            raise ValueError("square loss needs k_full to estimate sigma^2")
        return 2.0 * sigma2_hat(full, k_full)
    denom = float(mean_curvature(spec, em, full, fallback=fallback)[0])
    if not denom > 0:
        raise ZeroCurvature(f"averaged curvature is {denom}")
    return float(np.mean(spec.rho1(em) * spec.rho1(ew))) / denom
