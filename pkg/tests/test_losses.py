from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from robavg.errors import DegenerateBandwidth, EmptyAcceptRegion, ZeroCurvature
from robavg.losses import (
    LossSpec,
    c_rho_fixed,
    c_rho_m_random,
    epanechnikov_bandwidth,
    epanechnikov_density,
    epanechnikov_kde,
    mean_curvature,
    rho,
    rho1,
)

SPECS = [LossSpec.square(), LossSpec.absolute(), LossSpec.huber(1.345), LossSpec.huber(0.3)]
finite = st.floats(-50, 50, allow_nan=False)


def test_rho_values():
    h = LossSpec.huber(1.345)
    assert rho(h, 0.0) == 0.0
    assert rho(h, 2.0) == pytest.approx(2 * 1.345 * 2 - 1.345**2, abs=1e-12)
    assert rho(h, 2.0) == pytest.approx(3.570975, abs=1e-12)
    assert rho(LossSpec.absolute(), -3.0) == 3.0
    assert rho(LossSpec.square(), -3.0) == 9.0


def test_rho1_values():
    assert rho1(LossSpec.square(), 1.5) == 3.0
    assert rho1(LossSpec.huber(1.345), -4.0) == pytest.approx(-2.69)
    assert rho1(LossSpec.absolute(), 0.0) == 1.0
    assert rho1(LossSpec.absolute(), -1e-300) == -1.0


def test_invalid_huber_threshold():
    with pytest.raises(ValueError):
        LossSpec.huber(0.0)


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: s.label)
@given(a=finite, b=finite, lam=st.floats(0, 1))
@settings(max_examples=200, deadline=None)
def test_convex_and_nonnegative(spec, a, b, lam):
    mid = spec.rho(lam * a + (1 - lam) * b)
    assert mid <= lam * spec.rho(a) + (1 - lam) * spec.rho(b) + 1e-9 * (1 + abs(a) + abs(b)) ** 2
    assert spec.rho(a) >= 0


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: s.label)
def test_central_difference_matches_rho1(spec):
    t = np.linspace(-6, 6, 1201)
    c = spec.huber_c
    keep = (np.abs(t) > 1e-3) & (np.abs(np.abs(t) - c) > 1e-3)
    t = t[keep]
    h = 1e-5
    fd = (spec.rho(t + h) - spec.rho(t - h)) / (2 * h)
    assert np.max(np.abs(fd - spec.rho1(t))) < 1e-6


def test_huber_equals_square_inside():
    t = np.linspace(-1.345, 1.345, 501)
    assert np.array_equal(LossSpec.huber().rho(t), LossSpec.square().rho(t))


def test_huber_tends_to_absolute():
    c = 1e-4
    for t in (-1.0, 1.0, 3.0):
        ratio = LossSpec.huber(c).rho(t) / (2 * c)
        assert abs(ratio - abs(t)) / abs(t) < 1e-3


def test_epanechnikov_hand_value():
    assert epanechnikov_density([-1.0, 0.0, 1.0], 0.0) == pytest.approx(0.5, abs=1e-15)
    assert epanechnikov_bandwidth([-1.0, 0.0, 1.0]) == 0.5


def test_epanechnikov_degenerate():
    with pytest.raises(DegenerateBandwidth):
        epanechnikov_density([0.0, 0.0, 0.0, 0.0], 0.0)
    # the opt-in fallback only helps when the sd is positive
    r = np.array([0.0, 0.0, 0.0, 0.0, 0.0, 1.0])
    assert epanechnikov_bandwidth(r, fallback=True) == pytest.approx(1.06 * np.std(r, ddof=1) * 6 ** -0.2)


def test_epanechnikov_normal_consistency(rng):
    r = rng.standard_normal(10000)
    assert epanechnikov_density(r, 0.0) == pytest.approx(1 / np.sqrt(2 * np.pi), abs=0.03)


def test_epanechnikov_loop_oracle(rng):
    r = rng.standard_normal(37)
    pts = rng.uniform(-2, 2, 9)
    q1, q3 = np.percentile(r, [25, 75])
    h = (q3 - q1) / 2
    expect = []
    for x in pts:
        s = 0.0
        for ri in r:
            u = (x - ri) / h
            if abs(u) <= 1:
                s += 0.75 * (1 - u * u)
        expect.append(s / (len(r) * h))
    assert np.allclose(epanechnikov_kde(r, pts).values, expect, rtol=0, atol=1e-14)


@given(st.lists(st.floats(-10, 10, allow_nan=False), min_size=4, max_size=30))
@settings(max_examples=50, deadline=None)
def test_epanechnikov_integrates_to_one(sample):
    r = np.asarray(sample)
    q1, q3 = np.percentile(r, [25, 75])
    if q3 - q1 <= 1e-3:
        return
    h = epanechnikov_bandwidth(r)
    grid = np.linspace(r.min() - h, r.max() + h, 20001)
    vals = epanechnikov_kde(r, grid).values
    assert np.all(vals >= 0)
    assert abs(np.trapezoid(vals, grid) - 1) < 1e-3


def test_c_rho_fixed_examples():
    assert c_rho_fixed(LossSpec.square(), [1, -1, 1, -1], n=4, k_full=2) == 4.0
    assert c_rho_fixed(LossSpec.huber(1.345), [0.5, -0.5, 10]) == pytest.approx(2.309025, abs=1e-12)
    with pytest.raises(EmptyAcceptRegion):
        c_rho_fixed(LossSpec.huber(1.345), [5, 6, 7])
    r = np.array([-1.0, 0.0, 1.0])
    assert c_rho_fixed(LossSpec.absolute(), r) == pytest.approx(1.0)


def test_c_rho_fixed_square_is_twice_rss_over_dof(rng):
    r = rng.standard_normal(25)
    assert c_rho_fixed(LossSpec.square(), r, k_full=4) == 2 * float(r @ r) / 21


def test_c_rho_m_random_square():
    r = np.array([1.0, -1.0, 1.0, -1.0])
    assert c_rho_m_random(LossSpec.square(), r, r, r, k_full=0) == 2.0


def test_c_rho_m_random_absolute_constant_density():
    # residuals far from each other relative to the bandwidth: density at each is 0.75/(n h)
    full = np.array([-30.0, -10.0, 10.0, 30.0])
    h = epanechnikov_bandwidth(full)
    em = full.copy()
    ew = np.abs(em) + 1.0
    d = float(np.mean(epanechnikov_kde(full, em).values))
    val = c_rho_m_random(LossSpec.absolute(), em, ew, full)
    assert val == pytest.approx(np.mean(np.sign(em)) / d)
    pos = np.ones(4)
    assert c_rho_m_random(LossSpec.absolute(), full, pos, full) == pytest.approx(
        np.mean(np.where(full >= 0, 1, -1)) / d)
    assert d == pytest.approx(0.75 / (4 * h))


def test_c_rho_m_random_huber_zero():
    z = np.zeros(6)
    assert c_rho_m_random(LossSpec.huber(), z, z, z) == 0.0


def test_c_rho_m_random_huber_loop_oracle(rng):
    c = 1.345
    full = rng.standard_normal(15)
    em = rng.standard_normal(15) * 1.5
    ew = 0.5 * em + 0.5 * full
    n = len(full)
    r2 = [2 / n * sum(abs(fj + ei) <= c for fj in full) for ei in em]
    num = np.mean(np.clip(2 * em, -2 * c, 2 * c) * np.clip(2 * ew, -2 * c, 2 * c))
    assert c_rho_m_random(LossSpec.huber(c), em, ew, full) == pytest.approx(num / np.mean(r2), rel=1e-12)


def test_zero_curvature():
    full = np.zeros(5)
    far = np.full(5, 100.0)
    with pytest.raises(ZeroCurvature):
        c_rho_m_random(LossSpec.huber(), far, far, full)


def test_mean_curvature_shapes(rng):
    E = rng.standard_normal((20, 4))
    full = E[:, -1]
    for spec in SPECS:
        out = mean_curvature(spec, E, full)
        assert out.shape == (4,)
        assert np.all(out >= 0)
