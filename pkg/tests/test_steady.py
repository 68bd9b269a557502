import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from si_euler.contour import JumpProfile, contour_run, contour_velocity
from si_euler.errors import ConfigError, NoSteadyStateError
from si_euler.steady import (
    SteadyCandidate,
    local_G,
    local_G_eval,
    shoot_rotating,
    solve_rotating,
    uniqueness_probe,
    verify_steady,
)

# atan(1/sqrt(2)): 2 tan d1 = tan d2 with d1 + d2 = pi/2 gives tan^2 d1 = 1/2
D1_TWO_ONE = 0.615479708670387341067464589123993


def test_local_G_constant():
    A, B = local_G(2.0, (0.1, 0.5), (0.5, 0.5))
    assert A == pytest.approx(0.0, abs=1e-15) and B == pytest.approx(0.0, abs=1e-15)


def test_local_G_unit_sine():
    L = 0.6
    A, B = local_G(0.0, (0.0, L), (0.0, math.sin(2 * L) / 2))
    assert A == pytest.approx(1.0, abs=1e-15)
    assert B == pytest.approx(0.0, abs=1e-15)


def test_local_G_rejects_long_interval():
    with pytest.raises(ValueError):
        local_G(1.0, (0.0, math.pi / 4), (0.0, 0.0))
    with pytest.raises(ValueError):
        local_G(1.0, (0.3, 0.3), (0.0, 0.0))
    A, B = local_G(1.0, (0.0, math.pi / 4), (0.1, 0.2), strict=False)
    assert np.isfinite(A) and np.isfinite(B)


@settings(max_examples=200, deadline=None)
@given(
    g=st.floats(-3, 3), lo=st.floats(-1, 1), L=st.floats(0.05, 0.78),
    b0=st.floats(-2, 2), b1=st.floats(-2, 2),
)
def test_local_G_matches_and_solves(g, lo, L, b0, b1):
    A, B = local_G(g, (lo, lo + L), (b0, b1))
    assert local_G_eval(g, lo, A, B, lo) == pytest.approx(b0, abs=1e-9)
    assert local_G_eval(g, lo, A, B, lo + L) == pytest.approx(b1, abs=1e-9)
    th = np.linspace(lo, lo + L, 50)
    G = local_G_eval(g, lo, A, B, th)
    # (4 + d^2) G = g: G'' = -4 (G - g/4)
    d2 = -4 * (A / 2 * np.sin(2 * (th - lo)) - B / 2 * np.cos(2 * (th - lo)))
    assert_allclose(4 * G + d2, g, atol=1e-12)
    if A > 0 and A / math.tan(2 * L) + B > 0:
        inner = np.linspace(lo, lo + L, 2002)[1:-1]
        assert np.all(local_G_eval(g, lo, A, B, inner, deriv=True) > 0)


def test_two_level_equal_widths(fold4):
    c = solve_rotating((1.0, -1.0), fold4)
    assert c.status == "ok"
    assert_allclose(c.widths, math.pi / 4, atol=1e-10)
    assert c.tangent_residual() <= 1e-10
    assert np.max(np.abs(contour_velocity(c.profile))) <= 1e-10


def test_four_level_equal_widths(fold4):
    c = solve_rotating((1.0, -1.0, 1.0, -1.0), fold4)
    assert_allclose(c.widths, math.pi / 8, atol=1e-10)
    assert verify_steady(c).passed


def test_unequal_levels_against_shooting(fold4):
    c = solve_rotating((2.0, -1.0), fold4)
    assert c.widths[0] == pytest.approx(D1_TWO_ONE, abs=1e-12)
    assert 2 * math.tan(c.widths[0]) == pytest.approx(math.tan(c.widths[1]), rel=1e-12)
    assert c.widths.sum() == pytest.approx(math.pi / 2, abs=1e-14)
    assert_allclose(shoot_rotating((2.0, -1.0), fold4), c.widths, atol=1e-12)
    assert c.tangent_residual() <= 1e-10


@pytest.mark.parametrize("levels", [(1.0, -1.0), (2.0, -1.0), (3.0, -1.0, 2.0, -2.0), (1.0, -0.5, 0.7, -2.0)])
@pytest.mark.parametrize("m", [4, 5, 6])
def test_newton_agrees_with_shooting(levels, m):
    c = solve_rotating(levels, m)
    assert c.status == "ok"
    assert_allclose(shoot_rotating(levels, m), c.widths, atol=1e-10)
    assert verify_steady(c).passed


def test_rotating_member(fold4):
    c = solve_rotating((1.0, -1.0), fold4, c=0.2)
    assert math.tan(c.widths[0]) ** 2 == pytest.approx(1.4 / 0.6, rel=1e-12)
    assert_allclose(contour_velocity(c.profile), 0.2, atol=1e-10)
    assert verify_steady(c).passed


def test_verify_two_level(fold4):
    rep = verify_steady(solve_rotating((1.0, -1.0), fold4), tol=1e-8)
    assert set(rep.checks) == {"equal_velocity", "opposite_extremal_values", "global_extrema", "c1_matching"}
    assert rep.passed and not rep.degenerate


def test_verify_perturbed_fails_velocity(fold4):
    c = solve_rotating((1.0, -1.0), fold4)
    a = c.profile.breakpoints.copy()
    a[1] += 1e-3
    bad = dataclasses.replace(c, profile=JumpProfile(fold4, a, c.profile.levels), residuals={})
    rep = verify_steady(bad, tol=1e-8)
    ok, defect = rep.checks["equal_velocity"]
    assert not ok and 1e-4 < defect < 1e-2


def test_verify_zero_profile_degenerate(fold4):
    prof = JumpProfile.constant(fold4, 0.0)
    rep = verify_steady(SteadyCandidate(prof, 0.0, np.diff(prof.breakpoints), 0, "ok", {}))
    assert rep.degenerate and rep.passed


def test_non_alternating_levels(fold4):
    with pytest.raises(NoSteadyStateError):
        solve_rotating((1.0, 2.0), fold4)
    with pytest.raises(NoSteadyStateError):
        solve_rotating((1.0, -1.0), fold4, c=0.75)


def test_small_fold_and_odd_count_rejected():
    with pytest.raises(ConfigError):
        solve_rotating((1.0, -1.0), 3)
    with pytest.raises(ConfigError):
        solve_rotating((1.0, -1.0, 1.0), 4)


def test_uniqueness_probe(fold4):
    sols, spread = uniqueness_probe((2.0, -1.0), fold4, trials=20, seed=3)
    assert len(sols) == 20
    assert spread <= 1e-8


def test_steady_is_contour_fixed_point(fold4):
    c = solve_rotating((2.0, -1.0), fold4)
    ct = contour_run(c.profile, 1e-2, 10.0, 100)
    widths = np.diff(ct.jumps, axis=1)
    assert np.max(np.abs(widths - widths[0])) <= 1e-8
    assert np.max(np.abs(ct.jumps - ct.jumps[0])) <= 1e-8
