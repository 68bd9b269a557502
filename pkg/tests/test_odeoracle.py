import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st
from numpy.testing import assert_allclose

from si_euler.errors import NumericalError
from si_euler.odeoracle import classify, integrate_y, riccati_crossing, riccati_equiv, shoot_decaying


def power_forcing(t):
    return 2.0 / (1.0 + t) ** 3


def test_exact_exponential():
    p = integrate_y(lambda t: 1.0, 1.0, -1.0, 10.0, 1e-3)
    assert np.max(np.abs(p.y - np.exp(-p.t))) <= 1e-8
    assert p.crossed_zero is None


def test_exact_cosh():
    p = integrate_y(lambda t: 1.0, 1.0, 0.0, 5.0, 1e-3)
    assert_allclose(p.y, np.cosh(p.t), rtol=1e-10)
    assert_allclose(p.dy, np.sinh(p.t), rtol=1e-10, atol=1e-14)


def test_exact_double_rate():
    p = integrate_y(lambda t: 4.0, 1.0, -2.0, 5.0, 1e-3)
    assert np.max(np.abs(p.y - np.exp(-2 * p.t))) <= 1e-8


def test_weighted_integral_exact():
    p = integrate_y(lambda t: 1.0, 1.0, 0.0, 3.0, 1e-2)
    assert p.W[-1] == pytest.approx(4.5, abs=1e-12)


def test_zero_crossing_recorded():
    p = integrate_y(lambda t: 1.0, 1.0, -2.0, 3.0, 1e-3)
    # y = (3 e^{-t} - e^{t}) / 2 vanishes at log(3) / 2
    assert p.crossed_zero == pytest.approx(math.log(3) / 2, abs=2e-3)


def test_invalid_inputs():
    with pytest.raises(ValueError):
        integrate_y(lambda t: 1.0, 0.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        integrate_y(lambda t: 1.0, 1.0, 0.0, -1.0)


def test_convexity():
    p = integrate_y(lambda t: 1.0 + 0.5 * math.sin(t), 1.0, -0.9, 8.0, 1e-3)
    pos = p.y > 0
    assert np.all(np.diff(p.dy)[pos[:-1]] >= -1e-15)


def test_classify_constant_decaying():
    r = classify(lambda t: 1.0, 1.0, -1.0, 20.0)
    assert r.scenario == "zero_limit"
    assert not r.weighted_convergent and r.weighted_integral == math.inf


def test_classify_constant_growing():
    r = classify(lambda t: 1.0, 1.0, 1.0, 10.0)
    assert r.scenario == "divergent"
    assert r.monotone_after == 0.0
    assert r.limit_estimate == math.inf


def test_classify_power_forcing():
    dy0 = shoot_decaying(power_forcing, 100.0, 1e-2, sup_c=2.0)
    r = classify(power_forcing, 1.0, dy0, 100.0, dt=1e-2)
    assert r.scenario == "positive_limit"
    assert r.weighted_convergent
    assert r.weighted_integral == pytest.approx(1.0, abs=1e-3)
    assert r.limit_estimate > 0.1


@pytest.mark.parametrize("a", [1.0, 4.0])
def test_shoot_constant(a):
    assert shoot_decaying(lambda t: a, 20.0, 1e-3, sup_c=a) == pytest.approx(-math.sqrt(a), abs=1e-8)


def test_shoot_power_path():
    T = 100.0
    dy0 = shoot_decaying(power_forcing, T, 1e-2, sup_c=2.0)
    p = integrate_y(power_forcing, 1.0, dy0, T, 1e-2)
    r = classify(power_forcing, 1.0, dy0, T, dt=1e-2, path=p)
    assert p.y[-1] > 0.5 * r.limit_estimate
    assert abs(p.dy[-1]) < 1e-3
    assert np.all(p.dy <= 0)


def test_shoot_bracket_failure():
    with pytest.raises(NumericalError):
        shoot_decaying(lambda t: 1.0, 20.0, 1e-3, sup_c=1e-4)


def test_riccati_equiv_exponential():
    p = integrate_y(lambda t: 1.0, 1.0, -1.0, 5.0, 1e-3)
    assert_allclose(riccati_equiv(p), 1.0, atol=1e-9)


def test_riccati_equiv_cosh():
    p = integrate_y(lambda t: 1.0, 1.0, 0.0, 3.0, 1e-3)
    F = riccati_equiv(p)
    assert_allclose(F, -np.tanh(p.t), atol=1e-10)
    dF = np.gradient(F, p.t)
    assert np.max(np.abs(dF - (F ** 2 - 1.0))[1:-1]) < 1e-6


def test_riccati_equiv_rejects_nonpositive():
    with pytest.raises(ValueError):
        riccati_equiv((np.zeros(2), np.array([1.0, 0.0]), np.zeros(2)))


@settings(max_examples=100, deadline=None)
@given(
    alpha=st.floats(0.2, 2.0), beta=st.floats(-0.9, 2.0), gamma=st.floats(0.1, 2.0),
    dy0=st.floats(-2.5, 1.0),
)
def test_dichotomy(alpha, beta, gamma, dy0):
    beta *= alpha if beta < 0 else 1.0
    c = lambda t: alpha + beta * math.exp(-gamma * t)
    p = integrate_y(c, 1.0, dy0, 15.0, 1e-2)
    assume(p.crossed_zero is None)
    r = classify(c, 1.0, dy0, 15.0, dt=1e-2, path=p)
    assert r.scenario in ("divergent", "zero_limit", "positive_limit")
    if r.scenario == "divergent":
        k = int(np.argmin(np.abs(p.t - r.monotone_after)))
        assert np.all(p.dy[k:] > 0)
    else:
        assert np.all(p.dy <= 0)
    if r.scenario == "positive_limit":
        assert r.weighted_convergent


@pytest.mark.parametrize("q", [3.0, 4.0])
def test_positive_limit_tail_bound(q):
    c = lambda t: 2.0 / (1.0 + t) ** q
    T = 100.0
    dy0 = shoot_decaying(c, T, 1e-2, sup_c=2.0)
    p = integrate_y(c, 1.0, dy0, T, 1e-2)
    r = classify(c, 1.0, dy0, T, dt=1e-2, path=p)
    assert r.scenario == "positive_limit"
    # |y'(t)| <= M / t with M read off the second half; it must also cover the third quarter onward
    quarter = p.t >= T / 4
    assert np.isfinite(r.tail_constant)
    assert np.max(p.t[quarter] * np.abs(p.dy[quarter])) <= max(r.tail_constant, 1.0) * 4


def test_forcing_lemma():
    rng = np.random.default_rng(7)
    for _ in range(20):
        c0 = rng.uniform(0.05, 1.0)
        C0 = rng.uniform(1.0, 10.0)
        T0 = rng.uniform(0.0, 5.0)
        f_T = c0 * c0 / (1000 * C0)
        window = c0 / (2 * C0)
        t_cross = riccati_crossing(lambda t: c0 - C0 * (t - T0), f_T, T0 + window, dt=window / 2000, t0=T0)
        assert t_cross is not None and t_cross < T0 + window
