"""Black-box minimisation over the probability simplex.

Projected gradient descent with forward finite-difference gradients,
Barzilai-Borwein trial steps and Armijo backtracking along the projected
direction.  All restarts advance in lock step so that one objective call
evaluates every trial point of every restart at once.

Objectives are either plain callables on a length-M vector or *vectorized*
callables (attribute ``vectorized = True``) that accept an ``(M, K)`` array
of column points and return ``K`` values.  They must be defined in an
``fd_step`` neighbourhood of the simplex.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from .errors import NonFiniteObjective


@dataclass(frozen=True)
class SimplexOptions:
    fd_step: float = 1e-6
    max_iter: int = 500
    tol: float = 1e-6
    armijo: float = 1e-4
    max_backtracks: int = 30
    grid_check: bool = True
    grid_spacing: float = 0.1
    grid_max_models: int = 8
    grid_seeds: int = 8  # best lattice points added as polish starts
    polish_random: int = 16  # random directions in the polish
    polish_starts: int = 4  # lowest-valued points that get polished
    starts: np.ndarray | None = None  # (M, R) custom restart points
    max_vertex_starts: int | None = 8  # best-scoring vertices kept as restarts
    polish: bool = True  # derivative-free exchange search after descent
    polish_step: float = 0.25
    polish_min_step: float = 1e-4


@dataclass
class SimplexResult:
    weights: np.ndarray
    value: float
    iterations: int
    restarts_used: int
    best_restart: int
    from_grid: bool
    converged: bool


def project_simplex(V):
    """Euclidean projection of each column of ``V`` onto the unit simplex."""
    V = np.asarray(V, dtype=float)
    single = V.ndim == 1
    if single:
        V = V[:, None]
    M = V.shape[0]
    U = -np.sort(-V, axis=0)
    css = np.cumsum(U, axis=0) - 1.0
    ind = np.arange(1, M + 1)[:, None]
    cond = U - css / ind > 0
    rho_idx = M - 1 - np.argmax(cond[::-1], axis=0)
    tau = css[rho_idx, np.arange(V.shape[1])] / (rho_idx + 1)
    W = np.maximum(V - tau, 0.0)
    return W[:, 0] if single else W


def renormalize(w) -> np.ndarray:
    w = np.clip(np.asarray(w, dtype=float), 0.0, None)
    s = w.sum()
    if not s > 0:
        raise ValueError("cannot renormalize a zero weight vector")
    return w / s


def check_simplex(w, atol: float = 1e-10) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if w.ndim != 1 or np.any(w < -atol) or np.any(w > 1 + atol) or abs(w.sum() - 1) > atol:
        raise ValueError("weights must lie in the unit simplex")
    return w


@functools.lru_cache(maxsize=32)
def simplex_lattice(M: int, spacing: float) -> np.ndarray:
    """All simplex points whose coordinates are multiples of ``spacing``; (M, K)."""
    steps = int(round(1.0 / spacing))
    if abs(steps * spacing - 1.0) > 1e-9:
        raise ValueError("spacing must divide 1")
    # stars and bars: choose M-1 bar positions among steps+M-1 slots
    from itertools import combinations

    pts = []
    for bars in combinations(range(steps + M - 1), M - 1):
        prev = -1
        parts = []
        for b in bars:
            parts.append(b - prev - 1)
            prev = b
        parts.append(steps + M - 2 - prev)
        pts.append(parts)
    out = np.array(pts, dtype=float).T / steps
    out.setflags(write=False)
    return out


def _batched(objective):
    if getattr(objective, "vectorized", False):
        return objective

    def f(W):
        return np.array([float(objective(W[:, j])) for j in range(W.shape[1])])

    return f


def _evaluate(f, W, chunk: int = 4096) -> np.ndarray:
    if W.shape[1] <= chunk:
        return np.asarray(f(W), dtype=float)
    return np.concatenate([np.asarray(f(W[:, i:i + chunk]), dtype=float)
                           for i in range(0, W.shape[1], chunk)])


def fd_gradient(f, W, h: float, F=None) -> np.ndarray:
    """Forward differences of a vectorized objective at each column of ``W``.

    ``F`` holds the objective at ``W`` when already known.
    """
    M, R = W.shape
    if F is None:
        F = _evaluate(f, W)
    P = W[:, :, None] + (np.eye(M) * h)[:, None, :]
    vals = _evaluate(f, P.reshape(M, R * M)).reshape(R, M)
    return ((vals - F[:, None]) / h).T


def exchange_polish(f, W, F, step: float, min_step: float, n_random: int = 0):
    """Pattern search over moves ``w + s (e_i - e_j)`` for each column of ``W``.

    Needs no gradient, so it also makes progress on objectives with jumps,
    where finite differences are useless.  ``n_random`` extra zero-sum
    directions (fixed seed) help along ridges that no pair move follows.
    The best improving move is taken; without one the step is halved until
    it drops below ``min_step``.
    """
    M, R = W.shape
    ii, jj = np.nonzero(~np.eye(M, dtype=bool))
    E = np.zeros((M, ii.size))
    E[ii, np.arange(ii.size)] = 1.0
    E[jj, np.arange(ii.size)] -= 1.0
    if n_random:
        Z = np.random.default_rng(0).standard_normal((M, n_random))
        Z -= Z.mean(axis=0)
        Z /= np.abs(Z).max(axis=0)
        E = np.hstack([E, Z])
    nd = E.shape[1]
    W, F = W.copy(), F.copy()
    s = np.full(R, float(step))
    live = s >= min_step
    while np.any(live):
        idx = np.flatnonzero(live)
        # a move may not push any weight below zero
        neg = np.where(E < 0, -E, 0.0)
        ratio = W[:, None, idx] / np.where(neg > 0, neg, 1.0)[:, :, None]
        cap = np.min(np.where(neg[:, :, None] > 0, ratio, np.inf), axis=0)
        S = np.minimum(s[idx][None, :], cap)
        T = W[:, idx][:, None, :] + E[:, :, None] * S[None, :, :]
        vals = _evaluate(f, T.reshape(M, -1)).reshape(nd, idx.size)
        vals = np.where(S > 0, vals, np.inf)
        k = np.argmin(vals, axis=0)
        better = vals[k, np.arange(idx.size)] < F[idx]
        for c in np.flatnonzero(better):
            r = idx[c]
            W[:, r] = T[:, k[c], c]
            F[r] = vals[k[c], c]
        s[idx[~better]] *= 0.5
        live = s >= min_step
    return project_simplex(W), F


def default_starts(M: int, vertex_values=None, keep: int | None = None) -> np.ndarray:
    """Vertices plus the barycentre; with ``keep`` only the lowest-valued vertices."""
    idx = np.arange(M)
    if keep is not None and vertex_values is not None and keep < M:
        idx = np.sort(np.argsort(vertex_values, kind="stable")[:keep])
    return np.column_stack([np.eye(M)[:, idx], np.full(M, 1.0 / M)])


def minimize_over_simplex(objective, M: int, opts: SimplexOptions | None = None) -> SimplexResult:
    """Minimise ``objective`` over the unit simplex in R^M.

    Restarts default to the barycentre and the ``max_vertex_starts``
    lowest-valued vertices, so the result is never worse than the best
    single vertex.  For small ``M`` a lattice scan
    is compared against the descent result and the lower point wins.
    """
    opts = opts or SimplexOptions()
    f = _batched(objective)
    if M < 1:
        raise ValueError("need at least one candidate model")
    if M == 1:
        v = _evaluate(f, np.ones((1, 1)))[0]
        if not np.isfinite(v):
            raise NonFiniteObjective("objective is not finite at w = (1)")
        return SimplexResult(np.ones(1), float(v), 0, 1, 0, False, True)

    if opts.starts is not None:
        W = project_simplex(np.asarray(opts.starts, float))
    else:
        W = default_starts(M)
        if opts.max_vertex_starts is not None and opts.max_vertex_starts < M:
            F0 = _evaluate(f, W)
            W = default_starts(M, F0[:M], opts.max_vertex_starts)
    R = W.shape[1]
    F = _evaluate(f, W)
    if not np.all(np.isfinite(F)):
        raise NonFiniteObjective(f"objective not finite at restart points {np.flatnonzero(~np.isfinite(F))}")
    h = opts.fd_step
    G = fd_gradient(f, W, h, F)
    gscale = np.max(np.abs(G), axis=0)
    alpha = np.where(gscale > 0, 1.0 / np.maximum(gscale, 1e-300), 1.0)
    active = np.ones(R, dtype=bool)
    converged = np.zeros(R, dtype=bool)
    iters = 0
    for iters in range(1, opts.max_iter + 1):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        Wa, Ga, Fa = W[:, idx], G[:, idx], F[idx]
        pg = np.linalg.norm(Wa - project_simplex(Wa - Ga), axis=0)
        done = pg < opts.tol * (1.0 + np.abs(Fa))
        converged[idx[done]] = True
        active[idx[done]] = False
        keep = ~done
        idx, Wa, Ga, Fa = idx[keep], Wa[:, keep], Ga[:, keep], Fa[keep]
        if idx.size == 0:
            break
        D = project_simplex(Wa - alpha[idx] * Ga) - Wa
        slope = np.sum(Ga * D, axis=0)
        t = np.ones(idx.size)
        accepted = np.zeros(idx.size, dtype=bool)
        Fnew = Fa.copy()
        for _ in range(opts.max_backtracks):
            pend = np.flatnonzero(~accepted)
            if pend.size == 0:
                break
            trial = Wa[:, pend] + t[pend] * D[:, pend]
            Ft = _evaluate(f, trial)
            ok = np.isfinite(Ft) & (Ft <= Fa[pend] + opts.armijo * t[pend] * slope[pend])
            ok &= Ft <= Fa[pend]
            accepted[pend[ok]] = True
            Fnew[pend[ok]] = Ft[ok]
            t[pend[~ok]] *= 0.5
        stalled = ~accepted
        active[idx[stalled]] = False
        moved = idx[accepted]
        if moved.size == 0:
            continue
        acc = np.flatnonzero(accepted)
        Wn = Wa[:, acc] + t[acc] * D[:, acc]
        Gn = fd_gradient(f, Wn, h, Fnew[acc])
        s = Wn - W[:, moved]
        yv = Gn - G[:, moved]
        sy = np.sum(s * yv, axis=0)
        ss = np.sum(s * s, axis=0)
        alpha[moved] = np.where(sy > 0, ss / np.where(sy > 0, sy, 1.0), 1e6)
        alpha[moved] = np.clip(alpha[moved], 1e-12, 1e12)
        W[:, moved], G[:, moved], F[moved] = Wn, Gn, Fnew[acc]

    from_grid = False
    if opts.grid_check and M <= opts.grid_max_models:
        L = np.asarray(simplex_lattice(M, opts.grid_spacing))
        vals = _evaluate(f, L)
        top = np.argsort(vals, kind="stable")[:opts.grid_seeds]
        from_grid = bool(vals[top[0]] < F.min())
        W, F = np.column_stack([W, L[:, top]]), np.concatenate([F, vals[top]])
    if opts.polish:
        sel = np.argsort(F, kind="stable")[:opts.polish_starts]
        Wp, Fp = exchange_polish(f, W[:, sel], F[sel], opts.polish_step, opts.polish_min_step,
                                 opts.polish_random)
        W[:, sel], F[sel] = Wp, _evaluate(f, Wp)
    best = int(np.argmin(F))  # first index wins ties
    from_grid = from_grid and best >= R
    best_restart = min(best, R - 1)
    w = renormalize(W[:, best])
    value = float(_evaluate(f, w[:, None])[0])
    if not np.isfinite(value):
        raise NonFiniteObjective("objective not finite at the returned point")
    return SimplexResult(w, value, iters, R, best_restart, from_grid, bool(converged[best_restart]))
