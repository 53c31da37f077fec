from __future__ import annotations

import numpy as np
import pytest

from robavg.candidates import CandidateSet, all_subsets_with_intercept
from robavg.errors import LengthMismatch, ModelFitError
from robavg.evaluation import ApeReport, delete_one_eval, delete_one_table, prediction_error
from robavg.methods import Procedure
from robavg.regression import Dataset

from conftest import make_linear


def test_prediction_error_basic(rng):
    y = rng.standard_normal(13)
    assert prediction_error(y, y) == 0.0
    assert prediction_error([0, 0], [1, -1]) == 1.0
    yh = rng.standard_normal(13)
    loop = sum(abs(a - b) for a, b in zip(y, yh)) / 13
    assert prediction_error(y, yh) == pytest.approx(loop, abs=1e-14)
    with pytest.raises(LengthMismatch):
        prediction_error([1, 2], [1])


def test_ape_report_invariants():
    r = ApeReport.from_errors("MMA", [1.0, 2.0, 4.0])
    assert r.ape == pytest.approx(7 / 3, abs=1e-12)
    assert r.se == pytest.approx(np.std([1, 2, 4], ddof=1) / np.sqrt(3))
    with pytest.raises(ValueError):
        ApeReport("MMA", np.array([-1.0]), -1.0, 1)


def test_exact_linear_data_gives_zero(rng):
    n = 12
    X = np.column_stack([np.ones(n), rng.uniform(-1, 1, (n, 2))])
    d = Dataset(X, X @ np.array([0.5, 1.0, -2.0]))
    rep = delete_one_eval(d, (), "MMA", all_subsets_with_intercept(2))
    assert rep.ape == pytest.approx(0.0, abs=1e-8)
    assert rep.n_eval == n


def test_fold_count_and_outliers_retained(rng):
    d = make_linear(rng, n=15, p=1)
    seen = []

    def method(train):
        seen.append(train.n)

        class Mean:
            def predict(self, X):
                return np.full(len(X), train.response.mean())

        return Mean()

    rep = delete_one_eval(d, {0, 3}, method)
    assert rep.n_eval == 13
    assert seen == [14] * 13


def test_table_matches_single_method_runs(rng):
    d = make_linear(rng, n=14, p=2)
    cs = all_subsets_with_intercept(2)
    tab = delete_one_table(d, cs, ("MMA", "MS_H"), outlier_indices={2})
    for lab in ("MMA", "MS_H"):
        single = delete_one_eval(d, {2}, Procedure(lab, cs))
        assert np.array_equal(tab[lab].per_replication_pe, single.per_replication_pe)


def test_order_invariance(rng):
    d = make_linear(rng, n=12, p=1)
    cs = all_subsets_with_intercept(1)
    perm = rng.permutation(12)
    a = delete_one_eval(d, (), "MA_Hc", cs).ape
    b = delete_one_eval(d.subset(perm), (), "MA_Hc", cs).ape
    assert a == pytest.approx(b, rel=1e-7)


def test_fold_errors_carry_index():
    X = np.column_stack([np.ones(4), [0.0, 1.0, 2.0, 3.0], [0.0, 2.0, 4.0, 6.1]])
    d = Dataset(X, [0.0, 1.0, 2.0, 3.0])
    cs = CandidateSet.from_column_lists([(0,), (0, 1, 2)])
    with pytest.raises(ModelFitError) as info:
        delete_one_eval(d, (), "MMA", cs)
    assert info.value.fold == 0


def test_bad_outliers(rng):
    d = make_linear(rng, n=5, p=1)
    with pytest.raises(ValueError):
        delete_one_eval(d, {1, 2, 3, 4}, "MMA", all_subsets_with_intercept(1))
