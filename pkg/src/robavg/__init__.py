"""Outlier-robust Mallows-type model averaging for linear regression."""

from .averaging import CriterionMethod, CriterionReport, fit_weights
from .candidates import CandidateModel, CandidateSet, all_nonempty_subsets, all_subsets_with_intercept
from .datasets import NamedDataset, hald_cement, load_csv, stackloss
from .evaluation import ApeReport, delete_one_eval, delete_one_table, prediction_error
from .losses import LossKind, LossSpec
from .methods import METHOD_ORDER, MethodConfig, Procedure, run_methods
from .regression import Dataset, FitBundle, FitResult, SolverOptions, fit_all, fit_m_estimator
from .simulation import SettingAConfig, SettingBConfig, run_replications

__version__ = "0.1.0"

__all__ = [
    "ApeReport", "CandidateModel", "CandidateSet", "CriterionMethod", "CriterionReport",
    "Dataset", "FitBundle", "FitResult", "LossKind", "LossSpec", "METHOD_ORDER",
    "MethodConfig", "NamedDataset", "Procedure", "SettingAConfig", "SettingBConfig",
    "SolverOptions", "all_nonempty_subsets", "all_subsets_with_intercept", "delete_one_eval",
    "delete_one_table", "fit_all", "fit_m_estimator", "fit_weights", "hald_cement",
    "load_csv", "prediction_error", "run_methods", "run_replications", "stackloss",
]
