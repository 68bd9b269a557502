"""Steady and solidly rotating piecewise-constant states.

A jump profile rotating rigidly at speed c has 2 G(a_j) = c at every jump.
With H = G - c/2 and shifted levels h_i = g_i - 2c, (4 + d^2) H = h_i on each
interval and H vanishes at both of its ends, so on an interval of width d_i

    H = (h_i / 4) (1 - cos(2u) / cos(d_i)),   u = distance to the midpoint,

and C^1 matching at the jumps gives the tangent relations

    h_i tan(d_i) + h_{i+1} tan(d_{i+1}) = 0,   sum d_i = 2 pi / m.

Around an even cycle these relations close automatically, so for each c
there is (at most) one set of widths: c is an input, and c = 0 gives the
steady states.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .contour import JumpProfile, G_of_profile, contour_velocity, dG_of_profile
from .errors import ConfigError, NoSteadyStateError
from .kernel import SymmetryFold, _as_fold


# --------------------------------------------------------------------------
# local representation on one interval
# --------------------------------------------------------------------------

def local_G(level: float, interval, boundary, strict: bool = True) -> tuple[float, float]:
    """Coefficients (A, B) of

        G = level/4 + (A/2) sin(2(t - lo)) - (B/2) cos(2(t - lo))

    matching G(lo), G(hi) = boundary.  Then dG/dt = A cos(2(t - lo)) + B sin(2(t - lo)),
    so A > 0 and A cot(2 L) + B > 0 give dG/dt > 0 on the open interval of length L < pi/4.
    """
    lo, hi = float(interval[0]), float(interval[1])
    L = hi - lo
    if L <= 0.0:
        raise ValueError("interval must have positive length")
    if strict and L >= math.pi / 4:
        raise ValueError(f"interval length {L:.6g} is not below pi/4")
    s2 = math.sin(2 * L)
    if abs(s2) < 1e-12:
        raise ValueError(f"interval length {L:.6g} makes the local system singular")
    q = level / 4.0
    B = -2.0 * (boundary[0] - q)
    A = (2.0 * (boundary[1] - q) + B * math.cos(2 * L)) / s2
    return A, B


def local_G_eval(level, lo, A, B, theta, deriv: bool = False):
    u = 2.0 * (np.asarray(theta, dtype=float) - lo)
    if deriv:
        return A * np.cos(u) + B * np.sin(u)
    return level / 4.0 + 0.5 * A * np.sin(u) - 0.5 * B * np.cos(u)


# --------------------------------------------------------------------------
# rotating states
# --------------------------------------------------------------------------

@dataclass
class SteadyCandidate:
    profile: JumpProfile
    rotation: float
    widths: np.ndarray
    iterations: int = 0
    status: str = "ok"
    residuals: dict = field(default_factory=dict)

    @property
    def shifted_levels(self) -> np.ndarray:
        return self.profile.levels - 2.0 * self.rotation

    def tangent_residual(self) -> float:
        return float(np.max(np.abs(_tangent_system(self.widths, self.shifted_levels, self.profile.fold.period))))

    def to_dict(self) -> dict:
        d = self.profile.to_dict()
        d.update(rotation=self.rotation, widths=[float(x) for x in self.widths], status=self.status)
        return d


def _shifted(levels, c: float) -> np.ndarray:
    h = np.asarray(levels, dtype=float) - 2.0 * c
    if h.size < 2 or h.size % 2:
        raise ConfigError("a rotating state needs an even number (>= 2) of levels")
    if np.any(h == 0.0) or np.any(np.sign(h) == np.sign(np.roll(h, -1))):
        raise NoSteadyStateError(
            "shifted levels g_i - 2c do not strictly alternate in sign; the only such state is trivial"
        )
    return h


def _tangent_system(d, h, L):
    t = np.tan(d)
    r = h[:-1] * t[:-1] + h[1:] * t[1:]
    return np.append(r, np.sum(d) - L)


def _tangent_jacobian(d, h):
    n = d.size
    sec2 = 1.0 / np.cos(d) ** 2
    J = np.zeros((n, n))
    idx = np.arange(n - 1)
    J[idx, idx] = h[:-1] * sec2[:-1]
    J[idx, idx + 1] = h[1:] * sec2[1:]
    J[-1, :] = 1.0
    return J


def solve_rotating(levels, fold, c: float = 0.0, init=None, tol: float = 1e-14,
                   max_iter: int = 100, start: float | None = None) -> SteadyCandidate:
    """Damped Newton for the widths of the state rotating at speed c.

    `init` are starting widths (default: equal).  The profile starts at
    `start` (default -pi/m); the rotation phase is otherwise free.
    """
    fold = _as_fold(fold)
    if fold.m < 4:
        raise ConfigError("rotating states are classified for m >= 4")
    h = _shifted(levels, c)
    L = fold.period
    cap = min(L, math.pi / 2)
    n = h.size
    d = np.full(n, L / n) if init is None else np.asarray(init, dtype=float).copy()
    if d.size != n or np.any(d <= 0) or np.any(d >= cap):
        raise ConfigError("initial widths must be positive and below min(2pi/m, pi/2)")
    d *= L / d.sum()

    def norm(x):
        return float(np.linalg.norm(_tangent_system(x, h, L)))

    r = norm(d)
    it = 0
    status = "ok"
    while r > tol and it < max_iter:
        it += 1
        F = _tangent_system(d, h, L)
        try:
            step = np.linalg.solve(_tangent_jacobian(d, h), -F)
        except np.linalg.LinAlgError:
            status = "singular jacobian"
            break
        lam = 1.0
        for _ in range(31):
            trial = d + lam * step
            if np.all(trial > 0) and np.all(trial < cap) and norm(trial) < r:
                break
            lam *= 0.5
        else:
            status = "line search failed"
            break
        d = trial
        r = norm(d)
    if r > 1e-10 and status == "ok":
        status = "not converged"
    if start is None:
        start = -math.pi / fold.m
    a = start + np.concatenate(([0.0], np.cumsum(d)))
    a[-1] = a[0] + L
    profile = JumpProfile(fold, a, np.asarray(levels, dtype=float))
    return SteadyCandidate(profile, float(c), d, it, status, {"tangent": r})


def shoot_rotating(levels, fold, c: float = 0.0) -> np.ndarray:
    """Independent widths by one-parameter shooting on d_1.

    tan(d_{i+1}) = -(h_i / h_{i+1}) tan(d_i) determines every width from d_1;
    root-find sum(d) = 2pi/m.
    """
    fold = _as_fold(fold)
    h = _shifted(levels, c)
    L = fold.period
    ratio = np.concatenate(([1.0], np.cumprod(-h[:-1] / h[1:])))

    def widths(d1):
        return np.arctan(ratio * math.tan(d1))

    hi = min(L, math.pi / 2) * (1 - 1e-15)
    f = lambda d1: float(np.sum(widths(d1)) - L)
    if f(1e-300) >= 0 or f(hi) <= 0:
        raise NoSteadyStateError("no width d_1 closes the period")
    d1 = brentq(f, 1e-300, hi, xtol=1e-16, rtol=4 * np.finfo(float).eps, maxiter=500)
    return widths(d1)


# --------------------------------------------------------------------------
# verification
# --------------------------------------------------------------------------

@dataclass
class SteadyReport:
    checks: dict  # name -> (passed, defect)
    degenerate: bool = False

    @property
    def passed(self) -> bool:
        return all(ok for ok, _ in self.checks.values())


def verify_steady(candidate: SteadyCandidate, tol: float = 1e-8, samples: int = 4000) -> SteadyReport:
    """Four checks with exact closed-form G of the sharp profile.

    (i)   equal contour velocities, equal to the rotation speed
    (ii)  dG/dtheta at the jumps alternates in sign with a common nonzero magnitude,
          so each interval sees exactly opposite values at its two ends
    (iii) that magnitude is the global maximum of |dG/dtheta|
    (iv)  G is C^1 at the jumps when rebuilt interval by interval with local_G
    """
    prof = candidate.profile
    if prof.degenerate or np.all(prof.levels == 0.0):
        return SteadyReport({}, degenerate=True)
    fold = prof.fold
    a = prof.breakpoints
    jumps = prof.jump_positions
    vel = contour_velocity(prof)
    d_vel = float(np.max(np.abs(vel - candidate.rotation)))
    checks = {"equal_velocity": (d_vel <= tol, d_vel)}

    dG = dG_of_profile(prof, jumps)
    mag = float(np.mean(np.abs(dG)))
    alt = bool(np.all(np.sign(dG) == -np.sign(np.roll(dG, 1)))) and mag > tol
    d_opp = float(np.max(np.abs(np.abs(dG) - mag)))
    checks["opposite_extremal_values"] = (alt and d_opp <= tol, d_opp)

    x = np.linspace(a[0], a[-1], samples, endpoint=False)
    peak = float(np.max(np.abs(dG_of_profile(prof, x))))
    d_ext = max(peak - mag, 0.0)
    checks["global_extrema"] = (d_ext <= tol, d_ext)

    Gb = G_of_profile(prof, a)
    worst = 0.0
    right_end = []
    left_end = []
    for i, g in enumerate(prof.levels):
        A, B = local_G(g, (a[i], a[i + 1]), (Gb[i], Gb[i + 1]), strict=False)
        left_end.append(local_G_eval(g, a[i], A, B, a[i], deriv=True))
        right_end.append(local_G_eval(g, a[i], A, B, a[i + 1], deriv=True))
    left_end = np.array(left_end)
    right_end = np.array(right_end)
    # jump j sits between interval j (right end) and interval j+1 (left end)
    mismatch = np.abs(right_end - np.roll(left_end, -1))
    worst = float(np.max(np.maximum(mismatch, np.abs(right_end - dG))))
    checks["c1_matching"] = (worst <= tol, worst)
    candidate.residuals.update({k: v[1] for k, v in checks.items()})
    return SteadyReport(checks)


def uniqueness_probe(levels, fold, c: float = 0.0, trials: int = 20, seed: int = 0):
    """Newton from random widths; returns (converged solutions, max pairwise distance)."""
    fold = _as_fold(fold)
    rng = np.random.default_rng(seed)
    n = len(levels)
    L = fold.period
    cap = min(L, math.pi / 2)
    sols = []
    for _ in range(trials):
        while True:
            w = rng.dirichlet(np.ones(n)) * L
            if np.all(w < cap) and np.all(w > 1e-6):
                break
        cand = solve_rotating(levels, fold, c, init=w)
        if cand.status == "ok":
            sols.append(np.append(cand.widths, cand.rotation))
    if not sols:
        return [], math.nan
    S = np.array(sols)
    spread = float(np.max(np.abs(S - S[0])))
    return sols, spread
