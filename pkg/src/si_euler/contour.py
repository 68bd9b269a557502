"""Exact dynamics of piecewise-constant profiles (contour dynamics on the circle).

A profile takes the value levels[i] on (breakpoints[i], breakpoints[i+1]).  The
first and last breakpoints are the same jump seen from both ends of one
period, so a profile with 2n levels has 2n moving jumps.  Each jump travels
with velocity 2 G(a_j), and G at a breakpoint is an exact sum of closed-form
kernel integrals over the intervals.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import JumpMergerError
from .kernel import SymmetryFold, _as_fold


@dataclass(frozen=True, eq=False)
class JumpProfile:
    fold: SymmetryFold
    breakpoints: np.ndarray
    levels: np.ndarray

    def __post_init__(self):
        fold = _as_fold(self.fold)
        a = np.array(self.breakpoints, dtype=float)
        g = np.array(self.levels, dtype=float)
        object.__setattr__(self, "fold", fold)
        if a.ndim != 1 or g.ndim != 1 or a.size != g.size + 1:
            raise ValueError("need len(breakpoints) == len(levels) + 1")
        if np.any(np.diff(a) <= 0.0):
            raise ValueError("breakpoints must be strictly increasing")
        if abs((a[-1] - a[0]) - fold.period) > 1e-12 * max(1.0, abs(a[0])):
            raise ValueError("breakpoints must span exactly one period 2*pi/m")
        if g.size > 1:
            if g.size % 2:
                raise ValueError("a jump profile needs an even number of levels")
            if np.any(g == np.roll(g, -1)):
                raise ValueError("adjacent levels must differ (cyclically)")
        a.setflags(write=False)
        g.setflags(write=False)
        object.__setattr__(self, "breakpoints", a)
        object.__setattr__(self, "levels", g)

    @classmethod
    def on_fundamental_domain(cls, fold, inner_breakpoints, levels) -> "JumpProfile":
        fold = _as_fold(fold)
        half = math.pi / fold.m
        a = np.concatenate(([-half], np.asarray(inner_breakpoints, dtype=float), [half]))
        return cls(fold, a, levels)

    @classmethod
    def constant(cls, fold, value: float) -> "JumpProfile":
        fold = _as_fold(fold)
        half = math.pi / fold.m
        return cls(fold, [-half, half], [value])

    @property
    def degenerate(self) -> bool:
        return self.levels.size == 1

    @property
    def n_jumps(self) -> int:
        return 0 if self.degenerate else self.levels.size

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.breakpoints)

    @property
    def jump_positions(self) -> np.ndarray:
        """The 2n distinct jump locations a_1, ..., a_2n."""
        return self.breakpoints[1:].copy()

    def mean(self) -> float:
        return float(np.sum(self.levels * self.widths) / self.fold.period)

    def with_jumps(self, jumps) -> "JumpProfile":
        jumps = np.asarray(jumps, dtype=float)
        a = np.concatenate(([jumps[-1] - self.fold.period], jumps))
        return JumpProfile(self.fold, a, self.levels)

    def __call__(self, theta):
        """Sharp profile value; at a jump the average of the two sides."""
        th = np.asarray(theta, dtype=float)
        a, g, L = self.breakpoints, self.levels, self.fold.period
        u = a[0] + np.mod(th - a[0], L)
        idx = np.searchsorted(a, u, side="right") - 1
        idx = np.clip(idx, 0, g.size - 1)
        out = g[idx].astype(float)
        if not self.degenerate:
            right = np.roll(g, -1)
            for j in range(1, a.size):
                on = np.isclose(u, a[j], rtol=0.0, atol=1e-15) | np.isclose(u, a[j] - L, rtol=0.0, atol=1e-15)
                out = np.where(on, 0.5 * (g[j - 1] + right[j - 1]), out)
        return out if np.ndim(out) else float(out)

    def mollified(self, width: float):
        """Smooth version: each jump replaced by a tanh ramp of half-width `width`."""
        if width <= 0.0 or self.degenerate:
            return self.__call__
        a, g, L = self.breakpoints, self.levels, self.fold.period
        jumps = a[1:]
        sizes = np.roll(g, -1) - g

        def func(theta):
            th = np.asarray(theta, dtype=float)
            out = np.asarray(self(th), dtype=float).copy()
            for aj, dj in zip(jumps, sizes):
                s = np.mod(th - aj + 0.5 * L, L) - 0.5 * L
                sharp = np.where(s > 0, 1.0, np.where(s < 0, 0.0, 0.5))
                out = out + dj * (0.5 * (1.0 + np.tanh(s / width)) - sharp)
            return out

        return func

    def to_dict(self) -> dict:
        return {
            "m": self.fold.m,
            "breakpoints": [float(x) for x in self.breakpoints],
            "levels": [float(x) for x in self.levels],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "JumpProfile":
        return cls(_as_fold(int(d["m"])), d["breakpoints"], d["levels"])


# --------------------------------------------------------------------------
# exact G on a piecewise-constant profile
# --------------------------------------------------------------------------

def _kernel_primitive(u, fold: SymmetryFold):
    """P(u) with P' = periodized kernel on 0 <= u <= 2pi/m (no kink inside)."""
    return 0.5 * fold.green_amplitude * np.sin(2.0 * u - fold.period)


def _kernel_dprimitive(u, fold: SymmetryFold):
    return fold.green_amplitude * np.cos(2.0 * u - fold.period)


def _interval_integral(x, lo, hi, fold: SymmetryFold, deriv: bool = False):
    """int_lo^hi K(x - w) dw (or its x-derivative) for an interval of length <= 2pi/m.

    The interval is split where x - w crosses a multiple of the period, i.e.
    at the kernel's kink, and each piece uses the closed-form primitive.
    """
    L = fold.period
    # candidate kink points x - k L inside (lo, hi)
    kmin = math.ceil((x - hi) / L)
    kmax = math.floor((x - lo) / L)
    cuts = [x - k * L for k in range(kmin, kmax + 1) if lo < x - k * L < hi]
    pts = [lo] + sorted(cuts) + [hi]
    total = 0.0
    for p0, p1 in zip(pts[:-1], pts[1:]):
        mid = 0.5 * (p0 + p1)
        shift = math.floor((x - mid) / L) * L
        u0, u1 = x - p0 - shift, x - p1 - shift
        # d/dw K(x - w) integrates to -[P(x - w)]; the x-derivative of that is -[K(x - w)]
        if deriv:
            total += _kernel_dprimitive(u0, fold) - _kernel_dprimitive(u1, fold)
        else:
            total += _kernel_primitive(u0, fold) - _kernel_primitive(u1, fold)
    return total


def G_of_profile(profile: JumpProfile, x) -> np.ndarray:
    """G = (4 + d^2)^{-1} g evaluated exactly at arbitrary angles."""
    fold = profile.fold
    scale = fold.m / (2.0 * math.pi)
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.zeros(xs.size)
    a, g = profile.breakpoints, profile.levels
    for k, xv in enumerate(xs):
        out[k] = scale * sum(g[i] * _interval_integral(xv, a[i], a[i + 1], fold) for i in range(g.size))
    return out if np.ndim(x) else float(out[0])


def dG_of_profile(profile: JumpProfile, x) -> np.ndarray:
    """dG/dtheta of a jump profile (continuous, since G is C^1)."""
    fold = profile.fold
    scale = fold.m / (2.0 * math.pi)
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.zeros(xs.size)
    a, g = profile.breakpoints, profile.levels
    for k, xv in enumerate(xs):
        out[k] = scale * sum(
            g[i] * _interval_integral(xv, a[i], a[i + 1], fold, deriv=True) for i in range(g.size)
        )
    return out if np.ndim(x) else float(out[0])


def G_at_jump(profile: JumpProfile, j: int) -> float:
    """G at breakpoint j (0 <= j <= 2n)."""
    a = profile.breakpoints
    if np.any(np.diff(a) <= 0.0):
        raise ValueError("degenerate interval in profile")
    return float(G_of_profile(profile, a[j]))


def G_at_jump_closed_form(profile: JumpProfile, j: int) -> float:
    """G(a_j) from the |cos - cos| closed form; valid only for m = 4.

    Each interval contributes (C_m/pi) g_i |cos(m/2 (a_i - a_j)) - cos(m/2 (a_{i-1} - a_j))|,
    plus the offset term Ctilde_m * mean(g).
    """
    fold = profile.fold
    a, g = profile.breakpoints, profile.levels
    h = 0.5 * fold.m
    x = a[j]
    s = np.sum(g * np.abs(np.cos(h * (a[1:] - x)) - np.cos(h * (a[:-1] - x))))
    return float(fold.C / math.pi * s + fold.Ctilde * fold.m / (2 * math.pi) * np.sum(g * np.diff(a)))


def _jump_velocities(fold: SymmetryFold, jumps: np.ndarray, levels: np.ndarray) -> np.ndarray:
    """Vectorized a_j' = 2 G(a_j) for sorted jumps within one period."""
    L = fold.period
    A = fold.green_amplitude
    scale = fold.m / (2.0 * math.pi)
    a = np.concatenate(([jumps[-1] - L], jumps))
    # For x = a_j every interval lies wholly on one side of x inside the window
    # [a_j - L, a_j + L]: intervals left of x have u = x - w in [0, L], those to
    # the right are shifted by one period.
    x = jumps[:, None]
    lo = a[None, :-1]
    hi = a[None, 1:]
    left = hi <= x + 1e-15
    shift = np.where(left, 0.0, -L)
    u0 = x - lo - shift
    u1 = x - hi - shift
    contrib = 0.5 * A * (np.sin(2 * u0 - L) - np.sin(2 * u1 - L))
    G = scale * contrib @ levels
    return 2.0 * G


def contour_velocity(profile: JumpProfile) -> np.ndarray:
    """Speeds of the 2n jumps a_1..a_2n (for a single level, the common drift g/2)."""
    if profile.degenerate:
        return np.array([0.5 * profile.levels[0]])
    return _jump_velocities(profile.fold, profile.jump_positions, profile.levels)


@dataclass
class ContourTrajectory:
    times: np.ndarray
    jumps: np.ndarray  # shape (nt, 2n)
    profile0: JumpProfile
    status: str = "ok"
    message: str = ""

    def profile_at(self, k: int) -> JumpProfile:
        return self.profile0.with_jumps(self.jumps[k])

    @property
    def final(self) -> JumpProfile:
        return self.profile_at(-1)

    def mean_trace(self) -> np.ndarray:
        L = self.profile0.fold.period
        a = np.concatenate((self.jumps[:, -1:] - L, self.jumps), axis=1)
        return np.sum(self.profile0.levels * np.diff(a, axis=1), axis=1) / L


def contour_run(profile: JumpProfile, dt: float, T: float, cadence: int = 1) -> ContourTrajectory:
    """RK4 integration of the jump ODEs; stops with status 'jump merger' on collision."""
    if dt == 0 or (T != 0 and np.sign(T) != np.sign(dt)):
        raise ValueError("dt must be nonzero and have the sign of T")
    fold, levels = profile.fold, profile.levels
    nsteps = int(round(T / dt))
    if profile.degenerate:
        v = 0.5 * levels[0]
        times = dt * np.arange(0, nsteps + 1, cadence)
        jumps = (profile.breakpoints[1] + v * times)[:, None]
        return ContourTrajectory(times, jumps, profile)
    L = fold.period

    def rhs(a):
        return _jump_velocities(fold, a, levels)

    def ordered(a):
        return np.all(np.diff(a) > 0.0) and a[-1] - a[0] < L

    a = profile.jump_positions
    times, snaps = [0.0], [a.copy()]
    status, message = "ok", ""
    for k in range(1, nsteps + 1):
        k1 = rhs(a)
        s = a + 0.5 * dt * k1
        if not ordered(s):
            status, message = "jump merger", f"breakpoints collided near t={(k - 1) * dt:.6g}"
            break
        k2 = rhs(s)
        s = a + 0.5 * dt * k2
        if not ordered(s):
            status, message = "jump merger", f"breakpoints collided near t={(k - 1) * dt:.6g}"
            break
        k3 = rhs(s)
        s = a + dt * k3
        if not ordered(s):
            status, message = "jump merger", f"breakpoints collided near t={(k - 1) * dt:.6g}"
            break
        k4 = rhs(s)
        a_new = a + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not ordered(a_new):
            status, message = "jump merger", f"breakpoints collided near t={k * dt:.6g}"
            break
        a = a_new
        if k % cadence == 0 or k == nsteps:
            times.append(k * dt)
            snaps.append(a.copy())
    return ContourTrajectory(np.array(times), np.array(snaps), profile, status, message)


def contour_run_checked(profile: JumpProfile, dt: float, T: float, cadence: int = 1) -> ContourTrajectory:
    traj = contour_run(profile, dt, T, cadence)
    if traj.status != "ok":
        raise JumpMergerError(traj.message)
    return traj


# --------------------------------------------------------------------------
# cross-check against the grid solver
# --------------------------------------------------------------------------

def track_grid_jumps(state, profile0: JumpProfile, near) -> np.ndarray:
    """Jump positions of a grid-solver state started from mollified `profile0`.

    Each jump is located as the mid-level crossing of the reconstructed g
    nearest to the guess in `near`: a sign change is bracketed on the grid
    and refined by root finding on the continuous reconstruction.
    """
    from scipy.optimize import brentq

    fold = profile0.fold
    g = state.g_grid
    nodes, vals = g.nodes, g.values
    n, L = nodes.size, fold.period
    levels = profile0.levels
    out = np.empty(len(near))
    for j, guess in enumerate(near):
        mid = 0.5 * (levels[j] + levels[(j + 1) % levels.size])
        f = vals - mid
        change = np.nonzero(np.sign(f) != np.sign(np.roll(f, -1)))[0]
        if change.size == 0:
            raise ValueError(f"no mid-level crossing for jump {j}")
        left = nodes[change]
        dist = np.abs(np.mod(left - guess + 0.5 * L, L) - 0.5 * L)
        i = change[int(np.argmin(dist))]
        lo = nodes[i]
        lo = lo + np.round((guess - lo) / L) * L
        hi = lo + L / n
        root = brentq(lambda x: float(state.g_at(x)) - mid, lo, hi, xtol=1e-14)
        out[j] = root
    return out


def compare_with_grid(ctraj: ContourTrajectory, snapshots) -> float:
    """Max distance between contour jumps and grid-tracked jumps at matching times."""
    worst = 0.0
    L = ctraj.profile0.fold.period
    for s in snapshots:
        k = int(np.argmin(np.abs(ctraj.times - s.t)))
        if abs(ctraj.times[k] - s.t) > 1e-9:
            raise ValueError(f"no contour sample at t={s.t}")
        a = ctraj.jumps[k]
        b = track_grid_jumps(s, ctraj.profile0, a)
        d = np.abs(np.mod(a - b + 0.5 * L, L) - 0.5 * L)
        worst = max(worst, float(d.max()))
    return worst
