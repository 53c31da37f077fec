"""Monte-Carlo data generators and the replication driver.

Every replication ``r`` (1-based) draws from its own PCG64 stream seeded
with ``base_seed + r``, so tables are reproducible bit for bit and
independent of worker count or scheduling.
"""

from __future__ import annotations

import enum
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .candidates import CandidateSet, all_nonempty_subsets, all_subsets_with_intercept
from .errors import RobAvgError
from .evaluation import ApeReport, prediction_error
from .methods import MethodConfig, run_methods, validate_methods
from .regression import Dataset

RNG_NAME = "PCG64"
THETA_A = (1.0, 0.1, 0.0, 0.0, 0.5, 0.0)
THREADS_ENV = "ROBAVG_THREADS"


class Case(enum.IntEnum):
    CLEAN = 1
    VARIANCE_CONTAM = 2
    MEAN_CONTAM = 3


# (mean, sd) of the contaminating normal component per case
_CONTAM = {Case.VARIANCE_CONTAM: (0.0, 25.0), Case.MEAN_CONTAM: (30.0, 1.0)}


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed)))


@dataclass(frozen=True)
class SettingAConfig:
    n: int = 100
    r_squared: float = 0.5
    case: Case = Case.CLEAN
    contam_fraction: float = 0.07
    seed: int = 0
    calibration: str = "clean"  # or "mixture"

    def __post_init__(self):
        object.__setattr__(self, "case", Case(self.case))
        if self.n < len(THETA_A) + 1:
            raise ValueError(f"n must exceed {len(THETA_A)}, got {self.n}")
        if not 0 < self.r_squared < 1:
            raise ValueError(f"r_squared must lie in (0, 1), got {self.r_squared}")
        if not 0 <= self.contam_fraction < 1:
            raise ValueError(f"contam_fraction must lie in [0, 1), got {self.contam_fraction}")
        if self.calibration not in ("clean", "mixture"):
            raise ValueError("calibration must be 'clean' or 'mixture'")

    @property
    def n_contaminated(self) -> int:
        if self.case is Case.CLEAN:
            return 0
        # round half up
        return int(np.floor(self.contam_fraction * self.n + 0.5))

    def error_variance(self) -> float:
        """Error variance that the signal scale is calibrated against."""
        if self.case is Case.CLEAN or self.calibration == "clean":
            return 1.0
        return mixture_variance(self.contam_fraction, *_CONTAM[self.case])

    def candidates(self) -> CandidateSet:
        return all_subsets_with_intercept(len(THETA_A) - 1)

    def with_seed(self, seed: int) -> SettingAConfig:
        return SettingAConfig(self.n, self.r_squared, self.case, self.contam_fraction, seed,
                              self.calibration)

    def describe(self) -> dict:
        return {"setting": "A", "n": self.n, "r2": self.r_squared, "case": int(self.case),
                "contam_fraction": self.contam_fraction if self.case is not Case.CLEAN else 0.0,
                "calibration": self.calibration}


@dataclass(frozen=True)
class SettingBConfig:
    sigma: float = 1.0
    with_gross_error: bool = False
    seed: int = 0
    n: int = 20

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if self.n < 4:
            raise ValueError("setting B needs n >= 4")

    def candidates(self) -> CandidateSet:
        return all_nonempty_subsets(3)

    def with_seed(self, seed: int) -> SettingBConfig:
        return SettingBConfig(self.sigma, self.with_gross_error, seed, self.n)

    def describe(self) -> dict:
        return {"setting": "B", "n": self.n, "sigma": self.sigma,
                "gross_error": int(self.with_gross_error)}


def mixture_variance(fraction: float, mean: float, sd: float) -> float:
    """Variance of ``(1 - fraction) N(0, 1) + fraction N(mean, sd^2)``."""
    m1 = fraction * mean
    m2 = (1 - fraction) * 1.0 + fraction * (sd * sd + mean * mean)
    return m2 - m1 * m1


def calibrate_nu(theta, r_squared: float, error_variance: float = 1.0) -> float:
    """Signal scale giving population R^2 = ``r_squared`` for U(-5, 5) slopes.

    ``theta[0]`` is the intercept and adds no variance.
    """
    if not 0 < r_squared < 1:
        raise ValueError(f"r_squared must lie in (0, 1), got {r_squared}")
    if not error_variance > 0:
        raise ValueError("error_variance must be positive")
    slopes = np.asarray(theta, dtype=float)[1:]
    var_signal = (25.0 / 3.0) * float(slopes @ slopes)
    if var_signal <= 0:
        raise ValueError("theta has no nonzero slope")
    return float(np.sqrt(error_variance * r_squared / ((1 - r_squared) * var_signal)))


def _design_a(rng, n):
    return np.column_stack([np.ones(n), rng.uniform(-5.0, 5.0, size=(n, len(THETA_A) - 1))])


def generate_setting_a(cfg: SettingAConfig, rng=None) -> tuple[Dataset, Dataset]:
    """Training and clean test sets, both of size ``n``; column 0 is the intercept."""
    rng = make_rng(cfg.seed) if rng is None else rng
    theta = np.asarray(THETA_A) * calibrate_nu(THETA_A, cfg.r_squared, cfg.error_variance())
    X = _design_a(rng, cfg.n)
    eps = rng.standard_normal(cfg.n)
    k = cfg.n_contaminated
    if k:
        mean, sd = _CONTAM[cfg.case]
        rows = rng.choice(cfg.n, size=k, replace=False)
        eps[rows] = rng.normal(mean, sd, size=k)
    Xs = _design_a(rng, cfg.n)
    ys = Xs @ theta + rng.standard_normal(cfg.n)
    names = ("x1", "x2", "x3", "x4", "x5", "x6")
    return Dataset(X, X @ theta + eps, names), Dataset(Xs, ys, names)


def _design_b(rng, n):
    return rng.uniform(-1.0, 1.0, size=(n, 3))


def generate_setting_b(cfg: SettingBConfig, rng=None) -> tuple[Dataset, Dataset]:
    """``y = x1 + x2 + eps`` with a spurious ``x3``; the last response becomes 10 on request."""
    rng = make_rng(cfg.seed) if rng is None else rng
    X = _design_b(rng, cfg.n)
    y = X[:, 0] + X[:, 1] + cfg.sigma * rng.standard_normal(cfg.n)
    if cfg.with_gross_error:
        y[cfg.n - 1] = 10.0
    Xs = _design_b(rng, cfg.n)
    ys = Xs[:, 0] + Xs[:, 1] + cfg.sigma * rng.standard_normal(cfg.n)
    names = ("x1", "x2", "x3")
    return Dataset(X, y, names), Dataset(Xs, ys, names)


def generate(cfg, rng=None):
    if isinstance(cfg, SettingAConfig):
        return generate_setting_a(cfg, rng)
    if isinstance(cfg, SettingBConfig):
        return generate_setting_b(cfg, rng)
    raise TypeError(f"unknown setting config {type(cfg).__name__}")


@dataclass
class SimulationTable:
    config: SettingAConfig | SettingBConfig
    methods: tuple[str, ...]
    reports: dict[str, ApeReport]
    replications: int
    base_seed: int
    failures: list[tuple[int, str]] = field(default_factory=list)

    @property
    def n_failed(self) -> int:
        return len(self.failures)


def _one_replication(cfg, labels, r, base_seed, config):
    train, test = generate(cfg, make_rng(base_seed + r))
    try:
        fitted = run_methods(labels, train, cfg.candidates(), config)
    except (RobAvgError, np.linalg.LinAlgError) as exc:
        return r, None, f"{type(exc).__name__}: {exc}"
    pe = {lab: prediction_error(test.response, fitted[lab].predict(test.design)) for lab in labels}
    return r, pe, None


def _workers(threads: int | None) -> int:
    if threads is None:
        raw = os.environ.get(THREADS_ENV, "1")
        try:
            threads = int(raw)
        except ValueError:
            raise ValueError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    return max(1, int(threads))


def run_replications(cfg, methods, R: int, base_seed: int = 0,
                     config: MethodConfig | None = None, threads: int | None = None,
                     progress=None) -> SimulationTable:
    """Run ``R`` replications; every method sees the same data per replication.

    Failed replications are dropped for all methods and listed in
    ``failures``.  ``threads`` overrides the ``ROBAVG_THREADS`` variable.
    """
    if R < 1:
        raise ValueError(f"R must be at least 1, got {R}")
    labels = validate_methods(methods)
    reps = range(1, R + 1)
    workers = _workers(threads)
    if workers == 1:
        results = []
        for r in reps:
            results.append(_one_replication(cfg, labels, r, base_seed, config))
            if progress is not None:
                progress(r, R)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futs = [pool.submit(_one_replication, cfg, labels, r, base_seed, config) for r in reps]
            results = [f.result() for f in futs]
    results.sort(key=lambda t: t[0])
    failures = [(r, msg) for r, pe, msg in results if pe is None]
    ok = [pe for _, pe, _ in results if pe is not None]
    reports = {}
    for lab in labels:
        vals = np.array([pe[lab] for pe in ok], dtype=float)
        reports[lab] = ApeReport.from_errors(lab, vals) if vals.size else ApeReport(lab, vals, float("nan"), 0)
    return SimulationTable(cfg, labels, reports, R, base_seed, failures)
