"""Acceptance criteria 1-11 at their stated tolerances.

Each test prints one PASS/FAIL line (repeated in the terminal summary) and
then asserts the same condition.
"""
import json
import math
from fractions import Fraction

import numpy as np
import pytest

from conftest import acceptance_line, random_bandlimited
from si_euler import cli
from si_euler.contour import JumpProfile, compare_with_grid, contour_run
from si_euler.flow import InitialData, run
from si_euler.kernel import (
    ScalarField,
    convolve_kernel,
    invert_helmholtz,
    kernel_eval_m,
    rotation_average,
    symmetry_constants,
)
from si_euler.odeoracle import classify, riccati_crossing, shoot_decaying
from si_euler.steady import solve_rotating, uniqueness_probe, verify_steady


def test_01_constants():
    worst = 0.0
    signs = []
    for m in (3, 4, 5):
        f = symmetry_constants(m)
        exact_C = 3 * math.pi / (2 * (m * m - 4))
        worst = max(worst, abs(f.C - exact_C))
        # Ctilde = 1/4 - 3/(m^2 - 4); the sign comes from exact rationals
        exact_Ct = Fraction(1, 4) - Fraction(3, m * m - 4)
        worst = max(worst, abs(f.Ctilde - float(exact_Ct)))
        signs.append(int(np.sign(f.Ctilde)))
    ok = worst <= 1e-15 and signs == [-1, 0, 1]
    assert acceptance_line(1, "constants", ok, f"max error {worst:.1e}, Ctilde signs {signs}")


def test_02_kernel_equivalence():
    th = np.linspace(-math.pi, math.pi, 1000)
    dev = {m: float(np.max(np.abs(rotation_average(th, m) - kernel_eval_m(th, m)))) for m in (3, 4, 5, 8)}
    ok = all(v <= 1e-10 for v in dev.values())
    detail = ", ".join(f"m={m}: {v:.1e}" for m, v in dev.items()) + " (tol 1e-10)"
    assert acceptance_line(2, "kernel equivalence", ok, detail)


def test_03_elliptic_oracle():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for k in range(20):
        m = (3, 4, 5, 6, 8)[k % 5]
        g = random_bandlimited(symmetry_constants(m), 256, rng, modes=12)
        worst = max(worst, float(np.max(np.abs(invert_helmholtz(g).values - convolve_kernel(g).values))))
    assert acceptance_line(3, "elliptic oracle", worst <= 1e-8, f"sup error {worst:.1e} over 20 fields (tol 1e-8)")


def test_04_riccati_consistency():
    fold = symmetry_constants(4)
    tr = run(InitialData.fourier(fold, [(1, 0.0, 1.0)]), fold, 1024, 1024, 1e-3, 10.0, cadence=1000)
    ric = max(s.riccati_defect() for s in tr.snapshots)
    fdef = max(s.F_defect() for s in tr.snapshots)
    ok = tr.status == "ok" and ric <= 1e-6 and fdef <= 1e-5
    assert acceptance_line(4, "Riccati consistency", ok,
                           f"max |dchi y^2 - 1| {ric:.1e} (tol 1e-6), max |F - dG(chi)| {fdef:.1e} (tol 1e-5)")


def _random_smooth_data(fold, seed):
    rng = np.random.default_rng(seed)
    modes = [(j, rng.normal() / j, rng.normal() / j) for j in (1, 2, 3)]
    lo, hi = InitialData.fourier(fold, modes).range()
    scale = max(abs(lo), abs(hi))
    return InitialData.fourier(fold, [(j, a / scale, b / scale) for j, a, b in modes])


@pytest.mark.slow
def test_05_entropy_monotonicity():
    fold = symmetry_constants(4)
    failures = []
    min_gain = math.inf
    for seed in range(20):
        tr = run(_random_smooth_data(fold, seed), fold, 2048, 2048, 1e-2, 50.0, grid_diagnostics=False)
        t = tr.trace
        gain = t.entropy[-1] - t.entropy[0]
        min_gain = min(min_gain, gain / t.quantum)
        ok = (tr.status == "ok" and tr.final.t == 50.0 and np.all(np.diff(t.entropy) >= 0)
              and t.latch_violations() == 0 and np.array_equal(t.entropy_from_crossings(), t.entropy)
              and gain >= t.quantum)
        if not ok:
            failures.append(seed)
    assert acceptance_line(5, "entropy monotonicity", not failures,
                           f"20 runs to T=50, failing seeds {failures}, min gain {min_gain:.0f} quanta")


@pytest.mark.slow
def test_06_relaxation_both_directions():
    fold = symmetry_constants(4)
    data = InitialData.fourier(fold, [(1, 0.0, 1.0)])
    ratios = {}
    reached = True
    for T in (50.0, -50.0):
        tr = run(data, fold, 1024, 1024, math.copysign(1e-3, T), T, grid_diagnostics=False)
        reached &= tr.status == "ok" and tr.final.t == T
        ratios[T] = tr.trace.h1dual[-1] / tr.trace.h1dual[0]
    ok = reached and all(r <= 0.1 for r in ratios.values())
    assert acceptance_line(6, "relaxation", ok,
                           f"h1 ratio forward {ratios[50.0]:.4f}, backward {ratios[-50.0]:.4f} (bar 0.1)")


def test_07_contour_grid_cross_validation():
    fold = symmetry_constants(4)
    prof = JumpProfile.on_fundamental_domain(fold, [0.1], [1.0, -1.0])
    ct = contour_run(prof, 1e-3, 1.0, cadence=100)
    tr = run(InitialData.piecewise(prof, 2.0), fold, 4096, 4096, 1e-3, 1.0, cadence=100, grid_diagnostics=False)
    err = compare_with_grid(ct, tr.snapshots)
    assert acceptance_line(7, "contour/grid", tr.status == "ok" and err <= 1e-3,
                           f"max jump distance {err:.1e} over T=1 (tol 1e-3)")


def test_08_steady_states():
    fold = symmetry_constants(4)
    cand = solve_rotating((1.0, -1.0), fold)
    wdev = float(np.max(np.abs(cand.widths - math.pi / 4)))
    rep = verify_steady(cand, tol=1e-8)
    ct = contour_run(cand.profile, 1e-2, 10.0, cadence=10)
    spread = ct.jumps[:, 1] - ct.jumps[:, 0]
    drift = float(np.max(np.abs(spread - spread[0])))
    ok = wdev <= 1e-10 and rep.passed and drift <= 1e-8
    failed = [k for k, (p, _) in rep.checks.items() if not p]
    assert acceptance_line(8, "steady states", ok,
                           f"width error {wdev:.1e}, failed checks {failed}, spread drift {drift:.1e}")


def test_09_uniqueness():
    sols, spread = uniqueness_probe((2.0, -1.0), symmetry_constants(4), trials=20, seed=9)
    ok = len(sols) == 20 and spread <= 1e-8
    assert acceptance_line(9, "uniqueness", ok, f"{len(sols)}/20 converged, spread {spread:.1e} (tol 1e-8)")


def test_10_appendix_oracle():
    one = classify(lambda t: 1.0, 1.0, -1.0, 20.0)
    ok1 = one.scenario == "zero_limit" and not one.weighted_convergent

    c = lambda t: 2.0 / (1.0 + t) ** 3
    dy0 = shoot_decaying(c, 100.0, 1e-2, sup_c=2.0)
    pw = classify(c, 1.0, dy0, 100.0, dt=1e-2)
    ok2 = pw.scenario == "positive_limit" and abs(pw.weighted_integral - 1.0) <= 1e-3

    rng = np.random.default_rng(10)
    crossed = 0
    for _ in range(20):
        c0, C0, T = rng.uniform(0.0, 1.0), rng.uniform(1.0, 10.0), rng.uniform(0.0, 5.0)
        window = c0 / (2 * C0)
        t = riccati_crossing(lambda s: c0 - C0 * (s - T), c0 * c0 / (1000 * C0), T + window,
                             dt=window / 2000, t0=T)
        crossed += t is not None and t < T + window
    ok = ok1 and ok2 and crossed == 20
    assert acceptance_line(10, "appendix oracle", ok,
                           f"c=1 {one.scenario}/W divergent={not one.weighted_convergent}, "
                           f"2/(1+t)^3 {pw.scenario} W={pw.weighted_integral:.6f}, forcing lemma {crossed}/20")


def test_11_determinism(tmp_path):
    cfg = tmp_path / "run.toml"
    cfg.write_text('preset = "homoclinic"\nM = 128\nN = 128\ndt = 0.02\nT = 2.0\ncadence = 25\n')
    bodies = []
    for name in ("a", "b"):
        assert cli.main(["simulate", "--config", str(cfg), "--out", str(tmp_path / name)]) == 0
        bodies.append({p.name: p.read_bytes() for p in (tmp_path / name).glob("*.csv")})
    same = bodies[0] == bodies[1] and len(bodies[0]) == 3
    man = [json.loads((tmp_path / n / "manifest.json").read_text())["files"] for n in ("a", "b")]
    assert acceptance_line(11, "determinism", same and man[0] == man[1],
                           f"{len(bodies[0])} CSV files byte-identical: {same}")
