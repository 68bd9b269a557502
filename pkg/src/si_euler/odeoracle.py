"""Scalar theory of y'' = c(t) y with c > 0, and the Riccati link F = -y'/y.

Used as an independent oracle for the marker solver and as a standalone
classifier of finite-horizon paths.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import NumericalError

Forcing = Callable[[float], float]


@dataclass
class YPath:
    t: np.ndarray
    y: np.ndarray
    dy: np.ndarray
    W: np.ndarray  # running integral of t * c(t)
    crossed_zero: float | None = None  # first time y <= 0, if any

    def as_tuple(self):
        return self.t, self.y, self.dy


@dataclass(frozen=True)
class OdeClassification:
    scenario: str  # positive_limit, zero_limit, divergent or undecided
    limit_estimate: float  # inf for divergent paths
    weighted_integral: float
    weighted_convergent: bool
    monotone_after: float | None  # time after which y' keeps one sign (y' > 0 for divergent)
    tail_constant: float = math.nan  # sup t |y'(t)| over the second half (bounded for positive limits)


def integrate_y(c: Forcing, y0: float, dy0: float, T: float, dt: float = 1e-3,
                record_every: int = 1) -> YPath:
    """Classical RK4 for (y, y', W) with W' = t c(t)."""
    if y0 <= 0:
        raise ValueError("y0 must be positive")
    if dt <= 0 or T <= 0:
        raise ValueError("T and dt must be positive")
    n = int(round(T / dt))
    ts, ys, dys, Ws = [0.0], [y0], [dy0], [0.0]
    y, v, W, t = float(y0), float(dy0), 0.0, 0.0
    crossed = None
    for k in range(1, n + 1):
        c1 = c(t)
        ch = c(t + 0.5 * dt)
        c4 = c(t + dt)
        k1y, k1v = v, c1 * y
        k2y, k2v = v + 0.5 * dt * k1v, ch * (y + 0.5 * dt * k1y)
        k3y, k3v = v + 0.5 * dt * k2v, ch * (y + 0.5 * dt * k2y)
        k4y, k4v = v + dt * k3v, c4 * (y + dt * k3y)
        y += dt / 6.0 * (k1y + 2 * k2y + 2 * k3y + k4y)
        v += dt / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v)
        W += dt / 6.0 * (t * c1 + 4 * (t + 0.5 * dt) * ch + (t + dt) * c4)
        t = k * dt
        if crossed is None and y <= 0.0:
            crossed = t
        if k % record_every == 0 or k == n:
            ts.append(t)
            ys.append(y)
            dys.append(v)
            Ws.append(W)
    return YPath(np.array(ts), np.array(ys), np.array(dys), np.array(Ws), crossed)


def _at(path: YPath, t: float) -> int:
    return int(np.argmin(np.abs(path.t - t)))


def _richardson(ts, xs) -> float:
    """Limit of x(t) = X + a/t + b/t^2 fitted through three dyadic checkpoints."""
    x1, x2, x3 = (float(v) for v in xs)
    if abs(x3 - x2) <= 0.125 * abs(x2 - x1):
        # faster than any power of 1/t: the last value is already the limit
        return x3
    t = np.asarray(ts, dtype=float)
    V = np.stack([np.ones(3), 1.0 / t, 1.0 / t ** 2], axis=1)
    try:
        sol = np.linalg.solve(V, np.asarray(xs, dtype=float))
    except np.linalg.LinAlgError:
        return float(xs[-1])
    return float(sol[0]) if np.isfinite(sol[0]) else float(xs[-1])


def classify(c: Forcing, y0: float, dy0: float, T: float, tol: float = 1e-6,
             dt: float = 1e-3, path: YPath | None = None, ratio: float = 0.75) -> OdeClassification:
    """Finite-horizon classification of a path of y'' = c y.

    divergent:       y' becomes positive and stays so (then y grows without bound)
    positive_limit:  y' <= 0 throughout, extrapolated limit above 10 tol, and the
                     weighted integral converges
    zero_limit:      y' <= 0 throughout and the limit extrapolates to ~0, or the
                     weighted integral diverges
    Limits use Richardson extrapolation in powers of 1/t on the checkpoints
    T/4, T/2, T.  The weighted integral counts as divergent unless its
    increments over those dyadic windows shrink by at least `ratio` each time.
    """
    if path is None:
        path = integrate_y(c, y0, dy0, T, dt)
    if path.crossed_zero is not None:
        return OdeClassification("undecided", math.nan, float(path.W[-1]), False, None)
    i1, i2, i3 = _at(path, T / 4), _at(path, T / 2), len(path.t) - 1
    i0 = _at(path, T / 8)
    W = path.W
    incs = np.array([W[i1] - W[i0], W[i2] - W[i1], W[i3] - W[i2]])
    w_conv = bool(incs[1] <= ratio * incs[0] + tol and incs[2] <= ratio * incs[1] + tol)
    cks = path.t[[i1, i2, i3]]
    w_est = _richardson(cks, W[[i1, i2, i3]]) if w_conv else math.inf

    pos = path.dy > 0.0
    if pos[-1]:
        # first time after which y' stays positive
        k = len(pos) - 1
        while k > 0 and pos[k - 1]:
            k -= 1
        return OdeClassification("divergent", math.inf, w_est, w_conv, float(path.t[k]))
    if np.any(pos):
        return OdeClassification("undecided", math.nan, w_est, w_conv, None)

    y_est = max(_richardson(cks, path.y[[i1, i2, i3]]), 0.0)
    half = path.t >= T / 2
    tail = float(np.max(path.t[half] * np.abs(path.dy[half])))
    scenario = "positive_limit" if y_est > 10 * tol and w_conv else "zero_limit"
    return OdeClassification(scenario, y_est, w_est, w_conv, 0.0, tail)


def shoot_decaying(c: Forcing, T: float, dt: float = 1e-3, sup_c: float | None = None,
                   iters: int = 60) -> float:
    """Slope dy0 (with y0 = 1) separating paths that turn upward from paths that hit zero.

    Bisection on [-2 sqrt(sup c), 0]: slopes that stay positive with y' <= 0 up to T
    are too steep only if y hits zero, too shallow if y' turns positive.
    """
    if sup_c is None:
        ts = np.linspace(0.0, T, 2001)
        sup_c = float(max(c(t) for t in ts))
    lo, hi = -2.0 * math.sqrt(sup_c), 0.0

    def fate(s):
        p = integrate_y(c, 1.0, s, T, dt, record_every=max(1, int(round(T / dt)) // 64))
        if p.crossed_zero is not None:
            return -1
        return 1 if p.dy[-1] > 0 else 0

    if fate(lo) != -1 or fate(hi) != 1:
        raise NumericalError("shooting bracket does not separate decaying from growing paths")
    best = None
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        f = fate(mid)
        if f == -1:
            lo = mid
        elif f == 1:
            hi = mid
        else:
            # non-increasing positive path on [0, T]; keep narrowing toward the separatrix
            lo = best = mid
        if hi - lo < 1e-15:
            break
    # the last slope verified non-increasing, so the returned path never turns upward
    return best if best is not None else 0.5 * (lo + hi)


def riccati_equiv(path) -> np.ndarray:
    """F = -y'/y along a path given as YPath or (t, y, y')."""
    t, y, dy = path.as_tuple() if isinstance(path, YPath) else path
    y = np.asarray(y, dtype=float)
    if np.any(y <= 0.0):
        raise ValueError("F = -y'/y needs y > 0 along the path")
    return -np.asarray(dy, dtype=float) / y


def riccati_crossing(c: Forcing, F0: float, T: float, dt: float = 1e-4, t0: float = 0.0):
    """Integrate F' = F^2 - c(t) from F(t0) = F0; first time F < 0 (None if not before T)."""
    F, t = float(F0), float(t0)
    n = int(round((T - t0) / dt))
    f = lambda s, x: x * x - c(s)
    for _ in range(n):
        k1 = f(t, F)
        k2 = f(t + 0.5 * dt, F + 0.5 * dt * k1)
        k3 = f(t + 0.5 * dt, F + 0.5 * dt * k2)
        k4 = f(t + dt, F + dt * k3)
        F += dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        t += dt
        if F < 0.0:
            return t
        if not math.isfinite(F):
            return None
    return None
