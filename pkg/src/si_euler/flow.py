"""Method-of-characteristics solver for  g_t + 2 G g_theta = 0,  (4 + d^2) G = g.

Markers carry fixed Lagrangian labels and co-evolve

    chi' = 2 G(chi),   (d chi)' = 2 F d chi,   F' = F^2 - c(chi),   y'' = c(chi) y,

where d chi is the label derivative of the flow map and F the Riccati variable.
G, dG/dtheta and c at the markers are computed by quadrature over labels
against the periodized Green's function.  The kernel is a sum of separable
trigonometric terms on each side of its kink, so with ordered markers each
evaluation reduces to prefix sums (O(M) per stage).  The kink sits exactly
on a marker and is handled by an Euler-Maclaurin endpoint correction.

The Eulerian field g = g0 o chi^{-1} is reconstructed on a uniform grid for
diagnostics and output; it does not feed back into the dynamics.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np
from scipy.interpolate import PchipInterpolator

from .contour import JumpProfile
from .errors import ConfigError, MarkerCrossingError, ResolutionExhausted
from .kernel import (
    ScalarField,
    SymmetryFold,
    _as_fold,
    _check_size,
    derivative,
    forcing_c,
    grid_nodes,
    invert_helmholtz,
)


# --------------------------------------------------------------------------
# initial data
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class InitialData:
    """An m-fold symmetric bounded g0.

    kind = "fourier":   `modes` is a list of (j, a_j, b_j) meaning a_j cos(j m t) + b_j sin(j m t)
    kind = "piecewise": `profile` is a JumpProfile, mollified over `mollify_cells` grid cells
    kind = "tabulated": `samples` on the uniform fundamental-domain grid, interpolated spectrally
    """

    kind: str
    fold: SymmetryFold
    modes: tuple = ()
    profile: JumpProfile | None = None
    samples: np.ndarray | None = None
    mollify_cells: float = 2.0

    def __post_init__(self):
        object.__setattr__(self, "fold", _as_fold(self.fold))
        if self.kind == "fourier":
            modes = tuple((int(j), float(a), float(b)) for j, a, b in self.modes)
            if any(j < 0 for j, _, _ in modes):
                raise ConfigError("fourier mode multiples must be >= 0")
            object.__setattr__(self, "modes", modes)
        elif self.kind == "piecewise":
            if self.profile is None:
                raise ConfigError("piecewise data needs a JumpProfile")
            if self.profile.fold.m != self.fold.m:
                raise ConfigError("profile fold differs from data fold")
        elif self.kind == "tabulated":
            if self.samples is None:
                raise ConfigError("tabulated data needs samples")
            s = np.asarray(self.samples, dtype=float)
            _check_size(s.size)
            object.__setattr__(self, "samples", s)
        else:
            raise ConfigError(f"unknown initial data kind {self.kind!r}")

    @classmethod
    def fourier(cls, fold, modes) -> "InitialData":
        return cls("fourier", fold, modes=tuple(modes))

    @classmethod
    def piecewise(cls, profile: JumpProfile, mollify_cells: float = 2.0) -> "InitialData":
        return cls("piecewise", profile.fold, profile=profile, mollify_cells=mollify_cells)

    @classmethod
    def tabulated(cls, fold, samples) -> "InitialData":
        return cls("tabulated", fold, samples=np.asarray(samples, dtype=float))

    @property
    def is_constant(self) -> bool:
        if self.kind == "fourier":
            return all(j == 0 or (a == 0.0 and b == 0.0) for j, a, b in self.modes)
        if self.kind == "piecewise":
            return self.profile.degenerate
        return bool(np.all(self.samples == self.samples[0]))

    def sampler(self, n: int) -> Callable[[np.ndarray], np.ndarray]:
        """g0 as a function of the label, for a solver using n cells per period."""
        fold = self.fold
        if self.kind == "fourier":
            modes = self.modes

            def f(theta):
                th = np.asarray(theta, dtype=float)
                out = np.zeros_like(th)
                for j, a, b in modes:
                    if j == 0:
                        out = out + a
                    else:
                        out = out + a * np.cos(j * fold.m * th) + b * np.sin(j * fold.m * th)
                return out

            return f
        if self.kind == "piecewise":
            width = 0.5 * self.mollify_cells * fold.period / n
            return self.profile.mollified(width)
        field_ = ScalarField(fold, self.samples)
        return field_.evaluate

    def range(self) -> tuple[float, float]:
        if self.kind == "piecewise":
            return float(self.profile.levels.min()), float(self.profile.levels.max())
        vals = self.sampler(4096)(grid_nodes(self.fold, 4096))
        return float(vals.min()), float(vals.max())


# --------------------------------------------------------------------------
# marker fields
# --------------------------------------------------------------------------

def _label_derivative(w: np.ndarray, fold: SymmetryFold) -> np.ndarray:
    M = w.size
    k = fold.m * np.arange(M // 2 + 1)
    coef = np.fft.rfft(w) * 1j * k
    if M % 2 == 0:
        coef[-1] = 0.0
    return np.fft.irfft(coef, n=M)


def _kernel_sums(p: np.ndarray, wts: np.ndarray, fold: SymmetryFold, want_derivative: bool):
    """Trapezoid sums  sum_l wts_l K(p_i - p_l)  and  sum_{l != i} wts_l K'(p_i - p_l).

    p must be strictly increasing with p[-1] - p[0] < 2pi/m.  On 0 <= d < L the
    kernel is A cos(2d - L); sources to the right of the target are one period
    away, giving phase +L instead of -L.
    """
    A, L = fold.green_amplitude, fold.period
    c2, s2 = np.cos(2 * p), np.sin(2 * p)
    wc, ws = wts * c2, wts * s2
    Pc, Ps = np.cumsum(wc), np.cumsum(ws)
    Qc, Qs = Pc[-1] - Pc, Ps[-1] - Ps
    cl, sl = np.cos(L), np.sin(L)
    # cos(2p - L), sin(2p - L), cos(2p + L), sin(2p + L)
    cm, sm = c2 * cl + s2 * sl, s2 * cl - c2 * sl
    cp, sp = c2 * cl - s2 * sl, s2 * cl + c2 * sl
    S = A * (cm * Pc + sm * Ps + cp * Qc + sp * Qs)
    if not want_derivative:
        return S, None
    # strictly-lower sums for the derivative (self term has zero average slope)
    Pc0, Ps0 = Pc - wc, Ps - ws
    D = -2.0 * A * (sm * Pc0 - cm * Ps0 + sp * Qc - cp * Qs)
    return S, D


def marker_fields(p, dchi, g0v, fold: SymmetryFold, h: float):
    """G, dG/dtheta and c at the markers.

    Quadrature is over labels with spacing h; the integrand density for g is
    g0 * dchi.  The Euler-Maclaurin correction for the kernel kink at the
    target label is h^2/12 * dchi * density for values and -h^2/12 * density'
    for the derivative.
    """
    scale = fold.m / (2.0 * math.pi)
    dens = g0v * dchi
    S, D = _kernel_sums(p, h * dens, fold, True)
    G = scale * S + (h * h / 12.0) * dchi * dens
    dG = scale * D - (h * h / 12.0) * _label_derivative(dens, fold)
    dens_c = dG * dG * dchi
    Sc, _ = _kernel_sums(p, h * dens_c, fold, False)
    c = 12.0 * (scale * Sc + (h * h / 12.0) * dchi * dens_c)
    return G, dG, c


# --------------------------------------------------------------------------
# state
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FlowState:
    t: float
    fold: SymmetryFold
    labels: np.ndarray
    chi: np.ndarray
    dchi: np.ndarray
    F: np.ndarray
    y: np.ndarray
    dy: np.ndarray
    g0: np.ndarray  # g0 at the labels
    g0_func: Callable = field(repr=False)
    n_grid: int = 1024
    # field values at the markers, consistent with chi/dchi
    G_m: np.ndarray | None = None
    dG_m: np.ndarray | None = None
    c_m: np.ndarray | None = None

    @property
    def M(self) -> int:
        return self.labels.size

    @property
    def h(self) -> float:
        return self.fold.period / self.M

    @cached_property
    def inverse_map(self) -> Callable[[np.ndarray], np.ndarray]:
        return _inverse_map(self)

    def g_at(self, theta) -> np.ndarray:
        """Reconstructed g at arbitrary angles (no grid interpolation involved)."""
        return self.g0_func(self.inverse_map(theta))

    @cached_property
    def g_grid(self) -> ScalarField:
        return reconstruct_g(self)

    @cached_property
    def G_grid(self) -> ScalarField:
        return invert_helmholtz(self.g_grid)

    @cached_property
    def dG_grid(self) -> ScalarField:
        return derivative(self.G_grid)

    @cached_property
    def c_grid(self) -> ScalarField:
        return forcing_c(self.g_grid)

    def riccati_defect(self) -> float:
        return float(np.max(np.abs(self.dchi * self.y ** 2 - 1.0)))

    def F_defect(self) -> float:
        return float(np.max(np.abs(self.F - self.dG_m)))

    def measure_defect(self) -> float:
        return float(abs(np.mean(self.dchi) - 1.0))

    def max_gap(self) -> float:
        gaps = np.diff(np.append(self.chi, self.chi[0] + self.fold.period))
        return float(gaps.max())

    def h1dual(self) -> float:
        """||dG/dtheta||_{L2(-pi, pi)} from the marker quadrature."""
        return math.sqrt(self.fold.m * self.h * float(np.sum(self.dG_m ** 2 * self.dchi)))


def marker_labels(fold: SymmetryFold, M: int) -> np.ndarray:
    """Cell-centred labels on the fundamental domain."""
    return -math.pi / fold.m + (np.arange(M) + 0.5) * (fold.period / M)


def init_state(data: InitialData, fold, M: int = 1024, N: int = 1024) -> FlowState:
    fold = _as_fold(fold)
    if data.fold.m != fold.m:
        raise ConfigError(f"initial data has m={data.fold.m} but the run uses m={fold.m}")
    _check_size(N)
    if M < 8:
        raise ConfigError("need at least 8 markers")
    labels = marker_labels(fold, M)
    g0f = data.sampler(max(M, N))
    g0v = np.asarray(g0f(labels), dtype=float)
    chi = labels.copy()
    dchi = np.ones(M)
    G, dG, c = marker_fields(chi, dchi, g0v, fold, fold.period / M)
    return FlowState(
        t=0.0, fold=fold, labels=labels, chi=chi, dchi=dchi, F=dG.copy(), y=np.ones(M),
        dy=-dG.copy(), g0=g0v, g0_func=g0f, n_grid=N, G_m=G, dG_m=dG, c_m=c,
    )


def velocity_at(G: ScalarField, positions) -> np.ndarray:
    """2 G at arbitrary angles by trigonometric interpolation."""
    return 2.0 * G.evaluate(positions)


def _ordered(chi: np.ndarray, period: float) -> bool:
    return bool(np.all(np.diff(chi) > 0.0) and chi[-1] - chi[0] < period)


def _crossing_message(chi, t, period) -> str:
    d = np.diff(np.append(chi, chi[0] + period))
    i = int(np.argmin(d))
    return f"marker ordering violated at t={t:.6g}: gap {d[i]:.3e} after marker {i}"


def step(state: FlowState, dt: float, t_new: float | None = None) -> FlowState:
    """One classical RK4 step of the coupled marker system.

    G, dG and c are re-evaluated from the marker positions at every stage.
    `t_new` overrides the accumulated time stamp (avoids round-off drift).
    """
    fold, h, g0v = state.fold, state.h, state.g0
    L = fold.period

    def rhs(chi, dchi, F, y, dy, fields=None):
        if fields is None:
            if not _ordered(chi, L):
                raise MarkerCrossingError(_crossing_message(chi, state.t, L))
            fields = marker_fields(chi, dchi, g0v, fold, h)
        G, _, c = fields
        return (2.0 * G, 2.0 * F * dchi, F * F - c, dy, c * y)

    x0 = (state.chi, state.dchi, state.F, state.y, state.dy)
    k1 = rhs(*x0, fields=(state.G_m, state.dG_m, state.c_m))
    k2 = rhs(*[a + 0.5 * dt * b for a, b in zip(x0, k1)])
    k3 = rhs(*[a + 0.5 * dt * b for a, b in zip(x0, k2)])
    k4 = rhs(*[a + dt * b for a, b in zip(x0, k3)])
    new = [a + dt / 6.0 * (b1 + 2 * b2 + 2 * b3 + b4) for a, b1, b2, b3, b4 in zip(x0, k1, k2, k3, k4)]
    chi, dchi, F, y, dy = new
    t = state.t + dt if t_new is None else t_new
    if not _ordered(chi, L):
        raise MarkerCrossingError(_crossing_message(chi, t, L))
    G, dG, c = marker_fields(chi, dchi, g0v, fold, h)
    return FlowState(
        t=t, fold=fold, labels=state.labels, chi=chi, dchi=dchi, F=F, y=y, dy=dy,
        g0=g0v, g0_func=state.g0_func, n_grid=state.n_grid, G_m=G, dG_m=dG, c_m=c,
    )


def _inverse_map(state: FlowState) -> Callable[[np.ndarray], np.ndarray]:
    """chi^{-1} on the whole line by monotone cubic interpolation of the markers."""
    L = state.fold.period
    chi = state.chi
    if not _ordered(chi, L):
        raise MarkerCrossingError(_crossing_message(chi, state.t, L))
    # three periodic copies so every query in [chi0, chi0 + L) is interior
    xs = np.concatenate((chi - L, chi, chi + L))
    ls = np.concatenate((state.labels - L, state.labels, state.labels + L))
    inverse = PchipInterpolator(xs, ls, extrapolate=False)
    x0 = chi[0]

    def inv(theta):
        th = np.asarray(theta, dtype=float)
        shift = np.floor((th - x0) / L) * L
        return inverse(th - shift) + shift

    return inv


def reconstruct_g(state: FlowState) -> ScalarField:
    """g = g0 o chi^{-1} on the uniform grid via a monotone cubic inverse of the marker map."""
    nodes = grid_nodes(state.fold, state.n_grid)
    return ScalarField(state.fold, state.g0_func(state.inverse_map(nodes)))


# --------------------------------------------------------------------------
# driver
# --------------------------------------------------------------------------

@dataclass
class Trajectory:
    snapshots: list
    trace: "DiagnosticsTrace"
    status: str = "ok"
    message: str = ""

    @property
    def final(self) -> FlowState:
        return self.snapshots[-1]


def run(
    data: InitialData,
    fold,
    M: int = 1024,
    N: int = 1024,
    dt: float = 1e-3,
    T: float = 1.0,
    cadence: int | None = None,
    cfl: float = 0.5,
    max_gap: float = 0.125,
    grid_diagnostics: bool = True,
    raise_on_exhaustion: bool = False,
) -> Trajectory:
    """Integrate to time T (negative T integrates backward) and collect diagnostics.

    `cadence` is the snapshot interval in steps (default: first and last only).
    The run stops with status "resolution exhausted" once the gap between
    consecutive markers next to a still-expanding marker exceeds the fraction
    `max_gap` of the fundamental domain.  Refining M postpones exhaustion.
    """
    from .diagnostics import TraceRecorder

    fold = _as_fold(fold)
    if dt == 0.0 or (T != 0.0 and math.copysign(1.0, T) != math.copysign(1.0, dt)):
        raise ConfigError("dt must be nonzero and carry the sign of T")
    nsteps = int(round(abs(T / dt)))
    state = init_state(data, fold, M, N)
    recorder = TraceRecorder(state, direction=1 if dt > 0 else -1, grid_diagnostics=grid_diagnostics)
    snapshots = [state]
    status, message = "ok", ""
    L = fold.period
    if not 0.0 < max_gap <= 1.0:
        raise ConfigError("max_gap must lie in (0, 1]")
    gap_limit = max_gap * L
    for k in range(1, nsteps + 1):
        vmax = 2.0 * float(np.max(np.abs(state.G_m)))
        if vmax > 0 and abs(dt) > cfl * L / vmax:
            raise ConfigError(f"dt={dt} violates the CFL bound {cfl * L / vmax:.3g}")
        state = step(state, dt, k * dt)
        recorder.record(state)
        if cadence and k % cadence == 0 and k != nsteps:
            snapshots.append(state)
        gaps = np.diff(np.append(state.chi, state.chi[0] + L))
        expanding = recorder.expanding_mask()
        near = expanding | np.roll(expanding, 1)
        if np.any(gaps[near] > gap_limit):
            status = "resolution exhausted"
            message = f"marker gap {gaps[near].max():.3e} exceeds {gap_limit:.3e} at t={state.t:.6g}"
            break
    if snapshots[-1] is not state:
        snapshots.append(state)
    traj = Trajectory(snapshots, recorder.trace(), status, message)
    if status != "ok" and raise_on_exhaustion:
        raise ResolutionExhausted(message)
    return traj
