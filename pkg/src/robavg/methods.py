"""The ten benchmarked procedures behind their table labels.

==========  ====================================================
label       procedure
==========  ====================================================
MA_A        absolute loss, random-design weight criterion
MA_Ac       absolute loss, fixed-design weight criterion
MS_A        absolute loss, Akaike-type selection
MA_H        Huber loss, random-design weight criterion
MA_Hc       Huber loss, fixed-design weight criterion
MS_H        Huber loss, Akaike-type selection
WCp         weighted-likelihood Mallows Cp selection
MCp         robust Cp, Mallows-type weights
HCp         robust Cp, Huber-type weights
MMA         least-squares Mallows model averaging
==========  ====================================================
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .averaging import (
    CriterionMethod,
    CriterionReport,
    RandomCriterion,
    default_c_rho,
    fit_weights,
)
from .candidates import CandidateSet
from .losses import HUBER_C, LossSpec
from .regression import Dataset, FitBundle, SolverOptions, fit_all
from .selection import SelectionReport, WLOptions, akaike_type_scores, rcp_scores, wcp_scores
from .simplex import SimplexOptions

METHOD_ORDER = ("MA_A", "MA_Ac", "MS_A", "MA_H", "MA_Hc", "MS_H", "WCp", "MCp", "HCp", "MMA")
AVERAGING = {"MA_A", "MA_Ac", "MA_H", "MA_Hc", "MMA"}


class UnknownMethod(ValueError):
    pass


def validate_methods(labels) -> tuple[str, ...]:
    labels = tuple(labels)
    for lab in labels:
        if lab not in METHOD_ORDER:
            raise UnknownMethod(f"unknown method label {lab!r}; choose from {', '.join(METHOD_ORDER)}")
    # fixed column order, duplicates dropped
    return tuple(m for m in METHOD_ORDER if m in labels)


@dataclass(frozen=True)
class MethodConfig:
    huber_c: float = HUBER_C
    solver: SolverOptions = field(default_factory=SolverOptions)
    simplex: SimplexOptions = field(default_factory=SimplexOptions)
    wl: WLOptions = field(default_factory=WLOptions)
    kde_fallback: bool = False


@dataclass
class FittedMethod:
    label: str
    candidates: CandidateSet
    weights: np.ndarray
    coefficients: list[np.ndarray]
    scores: np.ndarray
    chosen: int | None = None
    report: CriterionReport | SelectionReport | None = None

    @property
    def is_selection(self) -> bool:
        return self.chosen is not None

    def predict(self, design) -> np.ndarray:
        X = np.atleast_2d(np.asarray(design, dtype=float))
        out = np.zeros(X.shape[0])
        for m, model in enumerate(self.candidates):
            if self.weights[m] != 0:
                out += self.weights[m] * (X[:, list(model.columns)] @ self.coefficients[m])
        return out


def _one_hot(M, j):
    w = np.zeros(M)
    w[j] = 1.0
    return w


def _from_selection(label, rep: SelectionReport) -> FittedMethod:
    M = rep.candidates.M
    return FittedMethod(label, rep.candidates, _one_hot(M, rep.chosen), rep.thetas,
                        rep.scores, rep.chosen, rep)


def _from_weights(label, bundle: FitBundle, rep: CriterionReport, fallback: bool) -> FittedMethod:
    # per-model scores are the criterion at each vertex
    if rep.c_rho is not None:
        vertex = bundle.objectives + rep.c_rho * bundle.k
    else:
        crit = RandomCriterion(bundle.residual_matrix, bundle.k, bundle.spec,
                               bundle.full_residuals, sigma2=bundle.sigma2_hat, fallback=fallback)
        vertex = crit(np.eye(bundle.candidates.M))
    return FittedMethod(label, bundle.candidates, rep.weights, [f.theta for f in bundle.fits],
                        vertex, None, rep)


class _Bundles:
    def __init__(self, data, candidates, config):
        self.data, self.candidates, self.config = data, candidates, config
        self._cache = {}

    def get(self, kind: str) -> FitBundle:
        if kind not in self._cache:
            spec = {"square": LossSpec.square(), "absolute": LossSpec.absolute(),
                    "huber": LossSpec.huber(self.config.huber_c)}[kind]
            self._cache[kind] = fit_all(self.data, self.candidates, spec, self.config.solver)
        return self._cache[kind]


def run_methods(labels, data: Dataset, candidates: CandidateSet,
                config: MethodConfig | None = None) -> dict[str, FittedMethod]:
    """Fit every requested procedure on ``data``; fits are shared per loss."""
    config = config or MethodConfig()
    labels = validate_methods(labels)
    bundles = _Bundles(data, candidates, config)
    fb = config.kde_fallback
    out = {}
    for lab in labels:
        if lab in ("MA_A", "MA_H"):
            b = bundles.get("absolute" if lab == "MA_A" else "huber")
            rep = fit_weights(b, CriterionMethod.MTC_RANDOM, config.simplex, fallback=fb)
            out[lab] = _from_weights(lab, b, rep, fb)
        elif lab in ("MA_Ac", "MA_Hc"):
            b = bundles.get("absolute" if lab == "MA_Ac" else "huber")
            rep = fit_weights(b, CriterionMethod.MTC_FIXED, config.simplex, fallback=fb)
            out[lab] = _from_weights(lab, b, rep, fb)
        elif lab == "MMA":
            b = bundles.get("square")
            rep = fit_weights(b, CriterionMethod.MMA, config.simplex)
            out[lab] = _from_weights(lab, b, rep, fb)
        elif lab in ("MS_A", "MS_H"):
            b = bundles.get("absolute" if lab == "MS_A" else "huber")
            rep = akaike_type_scores(b, b.spec, default_c_rho(b, b.spec, fallback=fb))
            out[lab] = _from_selection(lab, rep)
        elif lab == "WCp":
            out[lab] = _from_selection(lab, wcp_scores(data, candidates, config.wl))
        else:
            weighting = "huber" if lab == "HCp" else "mallows"
            rep = rcp_scores(data, candidates, weighting, c=config.huber_c, opts=config.solver)
            out[lab] = _from_selection(lab, rep)
    return out


class Procedure:
    """A single labelled method as a callable ``train -> FittedMethod``."""

    def __init__(self, label: str, candidates: CandidateSet, config: MethodConfig | None = None):
        validate_methods([label])
        self.label = label
        self.candidates = candidates
        self.config = config or MethodConfig()

    def __call__(self, train: Dataset) -> FittedMethod:
        return run_methods([self.label], train, self.candidates, self.config)[self.label]
