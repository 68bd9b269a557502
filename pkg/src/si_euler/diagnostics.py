"""Entropy, expanding-set estimates, relaxation indicators and profile extraction."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .contour import JumpProfile
from .kernel import ScalarField, derivative, grid_nodes, invert_helmholtz


def sign_floor(state) -> float:
    """Magnitude below which F counts as zero: quadrature round-off relative to the data scale."""
    return 1e-12 * max(1.0, float(np.max(np.abs(state.g0))))


@dataclass
class DiagnosticsTrace:
    times: np.ndarray
    entropy: np.ndarray
    h1dual: np.ndarray
    mean_g: np.ndarray
    l2_g: np.ndarray
    min_g: np.ndarray
    max_g: np.ndarray
    crossing_time: np.ndarray  # per marker; inf if F never went negative
    labels: np.ndarray
    m: int
    direction: int = 1
    sign_history: np.ndarray | None = field(default=None, repr=False)  # (steps, M) bool, F < 0
    dchi_decreases: int = 0  # never-crossed markers whose dchi ever decreased

    @property
    def M(self) -> int:
        return self.labels.size

    @property
    def quantum(self) -> float:
        return 2.0 * math.pi / self.M

    def entropy_from_crossings(self) -> np.ndarray:
        ct = self.crossing_time
        if self.direction > 0:
            counts = np.array([np.count_nonzero(ct <= t) for t in self.times])
        else:
            counts = np.array([np.count_nonzero(ct >= t) for t in self.times])
        return self.quantum * counts

    def latch_violations(self) -> int:
        """Markers whose F went back to >= 0 after being negative."""
        if self.sign_history is None:
            return 0
        neg = self.sign_history
        seen = np.logical_or.accumulate(neg, axis=0)
        return int(np.count_nonzero(np.any(seen & ~neg, axis=0)))

    def plateaued(self, fraction: float = 0.2) -> bool:
        n = len(self.times)
        k = max(int(math.floor((1.0 - fraction) * (n - 1))), 0)
        return bool(self.entropy[-1] - self.entropy[k] < self.quantum)

    def rows(self):
        for k in range(len(self.times)):
            yield (self.times[k], self.entropy[k], self.h1dual[k], self.mean_g[k],
                   self.l2_g[k], self.min_g[k], self.max_g[k])


class TraceRecorder:
    """Accumulates a DiagnosticsTrace step by step during a run.

    The sign of F is latched in the direction of time: forward runs latch
    F < 0, backward runs latch F > 0 (the time-reversed flow has the opposite
    sign convention for contraction).
    """

    def __init__(self, state, direction: int = 1, grid_diagnostics: bool = True, keep_signs: bool = True):
        self.direction = 1 if direction >= 0 else -1
        self.grid = grid_diagnostics
        self.keep_signs = keep_signs
        self.labels = state.labels
        self.m = state.fold.m
        self.crossed = np.zeros(state.M, dtype=bool)
        self.crossing_time = np.full(state.M, math.inf if self.direction > 0 else -math.inf)
        self.nonmonotone = np.zeros(state.M, dtype=bool)
        self._last_dchi = state.dchi.copy()
        self._rows: list[tuple] = []
        self._signs: list[np.ndarray] = []
        self.record(state)

    def _contracting(self, state) -> np.ndarray:
        return self.direction * state.F < -sign_floor(state)

    def record(self, state) -> None:
        neg = self._contracting(state)
        new = neg & ~self.crossed
        self.crossing_time[new] = state.t
        self.crossed |= neg
        # nondecreasing dchi (in the run's time direction) on never-crossed markers
        grew = self.direction * (state.dchi - self._last_dchi) >= 0.0
        self.nonmonotone |= ~self.crossed & ~grew
        self._last_dchi = state.dchi.copy()
        if self.keep_signs:
            self._signs.append(neg)
        M = state.M
        dens = state.g0 * state.dchi
        mean = float(np.mean(dens))
        l2 = math.sqrt(2.0 * math.pi * float(np.mean(state.g0 ** 2 * state.dchi)))
        if self.grid:
            g = state.g_grid.values
            gmin, gmax = float(g.min()), float(g.max())
        else:
            gmin, gmax = math.nan, math.nan
        S = 2.0 * math.pi * np.count_nonzero(self.crossed) / M
        self._rows.append((state.t, S, state.h1dual(), mean, l2, gmin, gmax))

    def expanding_mask(self) -> np.ndarray:
        """Markers that have never latched into contraction."""
        return ~self.crossed

    def trace(self) -> DiagnosticsTrace:
        cols = np.array(self._rows, dtype=float).T
        signs = np.array(self._signs) if self.keep_signs else None
        return DiagnosticsTrace(
            times=cols[0], entropy=cols[1], h1dual=cols[2], mean_g=cols[3], l2_g=cols[4],
            min_g=cols[5], max_g=cols[6], crossing_time=self.crossing_time.copy(),
            labels=self.labels, m=self.m, direction=self.direction, sign_history=signs,
            dchi_decreases=int(np.count_nonzero(self.nonmonotone & ~self.crossed)),
        )


def entropy(state, history: np.ndarray | None = None) -> float:
    """(2pi/M) times the number of markers whose F has been negative up to now.

    Values within round-off of zero (see `sign_floor`) do not count.

    `history` is an optional boolean latch of earlier crossings; without it
    only the current sign is available.
    """
    neg = state.F < -sign_floor(state)
    if history is not None:
        neg = neg | history
    return 2.0 * math.pi * np.count_nonzero(neg) / state.M


def _components(mask: np.ndarray) -> int:
    """Connected runs of True in a cyclic boolean array."""
    if mask.all():
        return 1
    if not mask.any():
        return 0
    starts = mask & ~np.roll(mask, 1)
    return int(np.count_nonzero(starts))


@dataclass(frozen=True)
class ExpandingSetEstimate:
    labels: np.ndarray
    horizon: float
    measure: float  # label measure on the full circle
    components: int  # per fundamental domain
    degenerate: bool


def expanding_set_estimate(trace: DiagnosticsTrace, horizon: float | None = None) -> ExpandingSetEstimate:
    if horizon is None:
        horizon = float(trace.times[-1])
    if trace.direction > 0:
        mask = ~(trace.crossing_time <= horizon)
    else:
        mask = ~(trace.crossing_time >= horizon)
    degenerate = bool(mask.all() and np.all(trace.h1dual <= 1e-12))
    return ExpandingSetEstimate(
        labels=trace.labels[mask], horizon=horizon,
        measure=trace.quantum * int(np.count_nonzero(mask)),
        components=_components(mask), degenerate=degenerate,
    )


def weak_convergence_proxy(g: ScalarField) -> float:
    """||dG/dtheta||_{L2} with (4 + d^2) G = g; small when g is close to its mean in H^-1."""
    return derivative(invert_helmholtz(g)).l2_norm()


@dataclass(frozen=True)
class AsymptoticProfile:
    kind: str  # "constant", "jumps" or "undecided"
    value: float | None = None
    profile: JumpProfile | None = None
    residual: float = math.nan
    message: str = ""


def extract_profile(final, tol: float = 0.05, trace: DiagnosticsTrace | None = None,
                    eps: float | None = None) -> AsymptoticProfile:
    """Cluster the final g into levels and read jumps off cluster boundaries.

    Sorted grid values are split wherever consecutive values differ by more
    than tol * (max g0 - min g0).  Clusters covering less than a fraction tol
    of the domain are transition layers (pointwise convergence is only almost
    everywhere) and are dropped.  One surviving cluster gives the constant
    profile with the conserved mean; several give a jump profile.  Runs whose
    entropy has not plateaued are reported as undecided.
    """
    if trace is not None and not trace.plateaued():
        return AsymptoticProfile("undecided", message="entropy has not plateaued")
    g = final.g_grid
    vals = g.values
    fold = final.fold
    n = vals.size
    g0min, g0max = float(final.g0.min()), float(final.g0.max())
    rng = g0max - g0min
    # the invariant mean, taken at t = 0 where the label quadrature is exact;
    # mean(g0 * dchi) degrades once dchi concentrates on a few markers
    mean = float(np.mean(final.g0))
    if rng == 0.0:
        return AsymptoticProfile("constant", value=mean, residual=float(np.max(np.abs(vals - mean))))
    order = np.argsort(vals, kind="stable")
    sv = vals[order]
    cuts = np.nonzero(np.diff(sv) > tol * rng)[0] + 1
    groups = np.split(np.arange(n), cuts)
    kept = [grp for grp in groups if grp.size >= tol * n]
    if not kept:
        return AsymptoticProfile("undecided", message="no level covers a fraction tol of the domain")
    levels_all = np.array([np.median(sv[grp]) for grp in kept])
    if len(kept) == 1:
        if abs(levels_all[0] - mean) > tol * rng:
            return AsymptoticProfile("undecided", message="single level away from the conserved mean")
        resid = float(np.max(np.abs(sv[kept[0]] - mean)))
        return AsymptoticProfile("constant", value=mean, residual=resid)
    # label each node by nearest kept level, then collapse cyclic runs
    idx = np.argmin(np.abs(vals[:, None] - levels_all[None, :]), axis=1)
    change = np.nonzero(idx != np.roll(idx, 1))[0]
    if change.size < 2 or change.size % 2:
        return AsymptoticProfile("undecided", message=f"{change.size} level changes per period")
    nodes = grid_nodes(fold, n)
    dx = fold.period / n
    jumps = nodes[change] - 0.5 * dx  # midway between differing nodes
    seg_levels = levels_all[idx[change]]
    breaks = np.concatenate((jumps, [jumps[0] + fold.period]))
    profile = JumpProfile(fold, breaks, seg_levels)
    if eps is None:
        eps = 4 * dx
    d = np.abs(np.mod(nodes[:, None] - jumps[None, :] + fold.period / 2, fold.period) - fold.period / 2)
    away = np.all(d > eps, axis=1)
    resid = float(np.max(np.abs(vals[away] - profile(nodes[away])))) if away.any() else math.nan
    return AsymptoticProfile("jumps", profile=profile, residual=resid)


@dataclass(frozen=True)
class Classification:
    outcome: str  # "weak_to_mean", "finite_E" or "undecided"
    proxy_ratio: float
    components: int
    measure: float


def classify_run(trace: DiagnosticsTrace, proxy_threshold: float = 0.1, window: float = 0.2) -> Classification:
    """Single decision per run.

    weak_to_mean: final proxy below proxy_threshold times its initial value.
    finite_E: otherwise, if the expanding-set component count is unchanged
    over the trailing window and positive.  Anything else is undecided.
    """
    h0 = trace.h1dual[0]
    ratio = trace.h1dual[-1] / h0 if h0 > 0 else 0.0
    est = expanding_set_estimate(trace)
    if ratio <= proxy_threshold:
        return Classification("weak_to_mean", ratio, est.components, est.measure)
    t0, t1 = trace.times[0], trace.times[-1]
    tw = t1 - window * (t1 - t0)
    earlier = expanding_set_estimate(trace, tw)
    if est.components > 0 and earlier.components == est.components and trace.plateaued(window):
        return Classification("finite_E", ratio, est.components, est.measure)
    return Classification("undecided", ratio, est.components, est.measure)
