"""Prediction-error scoring and the delete-one protocol for real data."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .candidates import CandidateSet
from .errors import LengthMismatch, ModelFitError, RobAvgError
from .methods import METHOD_ORDER, MethodConfig, Procedure, run_methods, validate_methods
from .regression import Dataset


@dataclass
class ApeReport:
    """Average of per-replication (or per-fold) absolute prediction errors."""

    method: str
    per_replication_pe: np.ndarray
    ape: float
    n_eval: int

    def __post_init__(self):
        pe = np.asarray(self.per_replication_pe, dtype=float)
        if pe.size and np.any(pe < 0):
            raise ValueError("prediction errors must be nonnegative")
        self.per_replication_pe = pe

    @classmethod
    def from_errors(cls, method: str, pe, n_eval: int | None = None) -> ApeReport:
        pe = np.asarray(pe, dtype=float)
        return cls(method, pe, float(np.mean(pe)), int(pe.size if n_eval is None else n_eval))

    @property
    def se(self) -> float:
        """Standard error sd / sqrt(R); zero for a single value."""
        r = self.per_replication_pe.size
        return float(np.std(self.per_replication_pe, ddof=1) / np.sqrt(r)) if r > 1 else 0.0


def prediction_error(y_true, y_hat) -> float:
    """Mean absolute deviation between ``y_true`` and ``y_hat``."""
    a = np.asarray(y_true, dtype=float).ravel()
    b = np.asarray(y_hat, dtype=float).ravel()
    if a.size != b.size:
        raise LengthMismatch(f"{a.size} targets but {b.size} predictions")
    if a.size == 0:
        raise LengthMismatch("need at least one prediction")
    return float(np.mean(np.abs(a - b)))


def _folds(data: Dataset, outlier_indices) -> np.ndarray:
    out = {int(i) for i in outlier_indices}
    bad = [i for i in out if not 0 <= i < data.n]
    if bad:
        raise ValueError(f"outlier indices out of range: {sorted(bad)}")
    held = np.array([t for t in range(data.n) if t not in out], dtype=int)
    if held.size < 2:
        raise ValueError("need at least two non-outlier rows")
    return held


def delete_one_table(data: Dataset, candidates: CandidateSet, methods=METHOD_ORDER,
                     outlier_indices=(), config: MethodConfig | None = None) -> dict[str, ApeReport]:
    """Delete-one APE for several methods; fits are shared across methods per fold.

    Each non-outlier row is held out in turn and predicted from a fit on the
    remaining rows, outliers included.
    """
    labels = validate_methods(methods)
    held = _folds(data, outlier_indices)
    errs = {lab: np.empty(held.size) for lab in labels}
    for f, t in enumerate(held):
        train = data.subset(np.delete(np.arange(data.n), t))
        try:
            fitted = run_methods(labels, train, candidates, config)
        except RobAvgError as exc:
            raise ModelFitError(f"fold {f} (row {t}): {exc}", fold=f) from exc
        x_t = data.design[t:t + 1]
        for lab in labels:
            errs[lab][f] = abs(data.response[t] - fitted[lab].predict(x_t)[0])
    return {lab: ApeReport.from_errors(lab, errs[lab]) for lab in labels}


def delete_one_eval(data: Dataset, outlier_indices, method, candidates: CandidateSet | None = None,
                    config: MethodConfig | None = None) -> ApeReport:
    """Delete-one APE of one procedure.

    ``method`` is a :class:`Procedure`, a method label (then ``candidates`` is
    required) or any callable mapping a training :class:`Dataset` to an
    object with ``predict``.
    """
    if isinstance(method, str):
        if candidates is None:
            raise ValueError("a method label needs a candidate set")
        method = Procedure(method, candidates, config)
    label = getattr(method, "label", getattr(method, "__name__", "custom"))
    held = _folds(data, outlier_indices)
    errs = np.empty(held.size)
    for f, t in enumerate(held):
        train = data.subset(np.delete(np.arange(data.n), t))
        try:
            fitted = method(train)
        except RobAvgError as exc:
            raise ModelFitError(f"fold {f} (row {t}): {exc}", fold=f) from exc
        errs[f] = abs(data.response[t] - np.asarray(fitted.predict(data.design[t:t + 1])).ravel()[0])
    return ApeReport.from_errors(label, errs)
