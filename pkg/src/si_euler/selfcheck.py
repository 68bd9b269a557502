"""Fast oracle-equivalence and invariant checks run by `si-euler selfcheck`."""
from __future__ import annotations

import math

import numpy as np

from .kernel import (
    ScalarField,
    convolve_kernel,
    derivative,
    invert_helmholtz,
    kernel_eval_m,
    periodized_kernel,
    rotation_average,
    symmetry_constants,
)


def _constants():
    worst = 0.0
    for m in (3, 4, 5, 6, 8):
        f = symmetry_constants(m)
        worst = max(worst, abs(f.C - 3 * math.pi / (2 * (m * m - 4))))
        worst = max(worst, abs(f.Ctilde - (0.25 - 2 * f.C / math.pi)))
    return worst


def _kernel_m4():
    # the closed form C|sin(m t/2)| + Ctilde coincides with the rotation average only for m = 4
    th = np.linspace(-math.pi, math.pi, 1000)
    return float(np.max(np.abs(rotation_average(th, 4) - kernel_eval_m(th, 4))))


def _periodized():
    worst = 0.0
    th = np.linspace(-math.pi, math.pi, 1000)
    for m in (3, 5, 8):
        worst = max(worst, float(np.max(np.abs(rotation_average(th, m) - periodized_kernel(th, m)))))
    return worst


def _elliptic():
    rng = np.random.default_rng(1)
    worst = 0.0
    for m in (3, 4, 5):
        fold = symmetry_constants(m)
        n = 128
        th = np.linspace(-math.pi / m, math.pi / m, n, endpoint=False)
        g = sum(rng.normal() * np.cos(j * m * th) + rng.normal() * np.sin(j * m * th) for j in range(6))
        f = ScalarField(fold, g)
        worst = max(worst, float(np.max(np.abs(invert_helmholtz(f).values - convolve_kernel(f).values))))
    return worst


def _flow():
    from .flow import InitialData, run

    fold = symmetry_constants(4)
    tr = run(InitialData.fourier(fold, [(1, 0.0, 1.0)]), fold, 256, 256, 1e-2, 2.0, grid_diagnostics=False)
    s = tr.final
    return max(s.riccati_defect(), s.F_defect(), s.measure_defect(),
               abs(tr.trace.mean_g[-1] - tr.trace.mean_g[0]), float(tr.trace.latch_violations()))


def _initial_F():
    from .flow import InitialData, init_state

    fold = symmetry_constants(4)
    s = init_state(InitialData.fourier(fold, [(1, 0.0, 1.0)]), fold, 256, 256)
    return float(np.max(np.abs(s.F + np.cos(4 * s.labels) / 3)))


def _contour():
    from .contour import G_at_jump, G_at_jump_closed_form, JumpProfile, contour_velocity

    p = JumpProfile.on_fundamental_domain(4, [0.1], [1.0, -1.0])
    v = contour_velocity(p)
    return max(abs(v[j] - 2 * G_at_jump(p, j)) for j in range(2)) + max(
        abs(G_at_jump(p, j) - G_at_jump_closed_form(p, j)) for j in range(2)
    )


def _steady():
    from .steady import solve_rotating, verify_steady

    c = solve_rotating((1.0, -1.0), 4)
    rep = verify_steady(c)
    bad = 0.0 if rep.passed else 1.0
    return max(bad, float(np.max(np.abs(c.widths - math.pi / 4))))


def _ode():
    from .odeoracle import integrate_y

    p = integrate_y(lambda t: 1.0, 1.0, -1.0, 10.0, 1e-3)
    q = integrate_y(lambda t: 1.0, 1.0, 0.0, 2.0, 1e-3)
    return max(float(np.max(np.abs(p.y - np.exp(-p.t)))), float(np.max(np.abs(q.y - np.cosh(q.t)))))


CHECKS = (
    ("symmetry_constants", _constants, 1e-15),
    ("closed_form_kernel_m4", _kernel_m4, 1e-10),
    ("periodized_kernel", _periodized, 1e-12),
    ("elliptic_oracle", _elliptic, 1e-8),
    ("initial_riccati", _initial_F, 1e-9),
    ("flow_invariants", _flow, 1e-6),
    ("contour_velocity", _contour, 1e-12),
    ("steady_two_level", _steady, 1e-10),
    ("ode_exact", _ode, 1e-8),
)


def run_selfcheck():
    """List of (name, passed, defect, tolerance)."""
    rows = []
    for name, fn, tol in CHECKS:
        try:
            d = float(fn())
        except Exception:  # a crash is a failed check, not a crashed suite
            d = math.inf
        rows.append((name, bool(d <= tol), d, tol))
    return rows
