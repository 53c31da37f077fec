from __future__ import annotations

import numpy as np
import pytest

from robavg.averaging import (
    CriterionMethod,
    FixedCriterion,
    RandomCriterion,
    average_predict,
    criterion_fixed,
    criterion_mma,
    criterion_random,
    default_c_rho,
    fit_weights,
)
from robavg.candidates import CandidateModel, CandidateSet, all_subsets_with_intercept
from robavg.losses import LossSpec, c_rho_m_random
from robavg.regression import Dataset, fit_all
from robavg.selection import akaike_type_scores

from conftest import make_linear


@pytest.fixture
def bundles(rng):
    d = make_linear(rng, n=50, p=3)
    cs = all_subsets_with_intercept(3)
    return d, {s.kind.value: fit_all(d, cs, s) for s in
               (LossSpec.square(), LossSpec.absolute(), LossSpec.huber())}


def test_vertex_degeneracy(bundles):
    _, bs = bundles
    for b in bs.values():
        c = default_c_rho(b, b.spec)
        sel = akaike_type_scores(b, b.spec, c)
        for m in range(b.candidates.M):
            w = np.eye(b.candidates.M)[m]
            v, loss, pen = criterion_fixed(b, b.spec, w, c)
            assert v == sel.scores[m]
            assert pen == c * b.k[m]


def test_mma_equals_fixed_square(bundles, rng):
    _, bs = bundles
    b = bs["square"]
    for _ in range(100):
        w = rng.dirichlet(np.ones(b.candidates.M))
        assert criterion_mma(b, w) == pytest.approx(
            criterion_fixed(b, LossSpec.square(), w, 2 * b.sigma2_hat)[0], rel=1e-10)
    full = np.eye(b.candidates.M)[-1]
    rss = float(b.full_residuals @ b.full_residuals)
    assert criterion_mma(b, full) == pytest.approx(rss + 2 * b.sigma2_hat * 4, rel=1e-12)


def test_mma_is_quadratic_along_segments(bundles, rng):
    b = bundles[1]["square"]
    u, v = rng.dirichlet(np.ones(8), size=2)
    ts = np.array([0.0, 0.5, 1.0])
    vals = [criterion_mma(b, (1 - t) * u + t * v) for t in ts]
    coef = np.polyfit(ts, vals, 2)
    for t in rng.uniform(0, 1, 5):
        assert criterion_mma(b, (1 - t) * u + t * v) == pytest.approx(np.polyval(coef, t), rel=1e-8)


def test_random_square_equals_fixed(bundles, rng):
    b = bundles[1]["square"]
    w = rng.dirichlet(np.ones(8))
    assert criterion_random(b, LossSpec.square(), w)[0] == pytest.approx(
        criterion_fixed(b, LossSpec.square(), w, 2 * b.sigma2_hat)[0], rel=1e-12)


def test_random_penalties_match_loss_module(bundles, rng):
    _, bs = bundles
    for kind in ("absolute", "huber"):
        b = bs[kind]
        w = rng.dirichlet(np.ones(8))
        value, loss, pen, per = criterion_random(b, b.spec, w)
        ew = b.residual_matrix @ w
        expect = [c_rho_m_random(b.spec, b.residual_matrix[:, m], ew, b.full_residuals)
                  for m in range(8)]
        assert np.allclose(per, expect, rtol=1e-12)
        assert pen == pytest.approx(float(np.sum(w * b.k * per)), rel=1e-12)
        assert value == pytest.approx(loss + pen, rel=1e-12)


def test_random_huber_zero_residuals():
    E = np.zeros((6, 2))
    crit = RandomCriterion(E, [1, 2], LossSpec.huber(), np.zeros(6))
    assert crit(np.array([0.3, 0.7])) == 0.0


def test_identical_columns_prefer_smallest_k(rng):
    e = rng.standard_normal(40) + 0.3
    E = np.column_stack([e, e, e])
    crit = RandomCriterion(E, [3, 1, 2], LossSpec.huber(), e)
    from robavg.simplex import minimize_over_simplex

    res = minimize_over_simplex(crit, 3)
    assert np.argmax(res.weights) == 1


def test_fit_weights_reports(bundles):
    _, bs = bundles
    for kind, method in (("square", "MMA"), ("absolute", "MTC_Fixed"), ("huber", "MTC_Random")):
        rep = fit_weights(bs[kind], method)
        assert rep.method is CriterionMethod(method)
        assert abs(rep.weights.sum() - 1) <= 1e-10 and np.all(rep.weights >= 0)
        assert rep.criterion_value == pytest.approx(rep.loss_term + rep.penalty_term, abs=1e-9)
        crit_vertices = (FixedCriterion(bs[kind].residual_matrix, bs[kind].k, bs[kind].spec, rep.c_rho)
                         if rep.c_rho is not None else
                         RandomCriterion(bs[kind].residual_matrix, bs[kind].k, bs[kind].spec,
                                         bs[kind].full_residuals))
        assert rep.criterion_value <= crit_vertices(np.eye(8)).min() + 1e-9


def test_mma_needs_square_bundle(bundles):
    with pytest.raises(ValueError):
        fit_weights(bundles[1]["huber"], "MMA")


def test_mma_exact_model_gets_weight(rng):
    n = 40
    X = np.column_stack([np.ones(n), rng.standard_normal((n, 2))])
    y = X[:, :2] @ np.array([1.0, 2.0]) + 1e-6 * rng.standard_normal(n)
    cs = CandidateSet.from_column_lists([(0,), (0, 1), (0, 1, 2)])
    b = fit_all(Dataset(X, y), cs, LossSpec.square())
    rep = fit_weights(b, "MMA")
    assert rep.weights[1] >= 0.99


def test_average_predict(bundles, rng):
    d, bs = bundles
    b = bs["huber"]
    Xn = rng.standard_normal((7, 4))
    P = b.prediction_matrix(Xn)
    for m in range(8):
        assert np.allclose(average_predict(b, np.eye(8)[m], Xn), P[:, m])
    w1, w2 = rng.dirichlet(np.ones(8), size=2)
    a = 0.3
    lhs = average_predict(b, a * w1 + (1 - a) * w2, Xn)
    rhs = a * average_predict(b, w1, Xn) + (1 - a) * average_predict(b, w2, Xn)
    assert np.max(np.abs(lhs - rhs)) < 1e-12
    with pytest.raises(ValueError):
        average_predict(b, w1, Xn[:, :2])


def test_duplicate_models_split_weight(rng):
    d = make_linear(rng, n=30, p=1)
    twins = CandidateSet((CandidateModel(0, (0, 1)), CandidateModel(1, (0, 1))), 0)
    b = fit_all(d, twins, LossSpec.square())
    Xn = rng.standard_normal((4, 2))
    half = average_predict(b, np.array([0.5, 0.5]), Xn)
    assert np.allclose(half, average_predict(b, np.array([1.0, 0.0]), Xn), atol=1e-12)
