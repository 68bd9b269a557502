"""Elliptic inversion G = (4 + d^2/dtheta^2)^{-1} g for m-fold symmetric fields.

Fields live on the fundamental arc [-pi/m, pi/m) and are extended to the
circle by 2*pi/m periodicity, so only wavenumbers k = j*m appear.  For m >= 3
no such wavenumber equals +-2 and the operator is invertible.

Two independent routes are provided: Fourier multipliers (`invert_helmholtz`)
and direct quadrature against the periodized Green's function
(`convolve_kernel`).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np


@dataclass(frozen=True)
class SymmetryFold:
    """Fold count m with the derived kernel constants.

    ``C`` and ``Ctilde`` are the amplitude/offset of the closed form
    C|sin(m theta/2)| + Ctilde.  ``green_amplitude`` and ``green_min`` describe
    the exact periodized kernel (see `periodized_kernel`); the two descriptions
    agree when m == 4.
    """

    m: int
    C: float
    Ctilde: float

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.m

    @property
    def green_amplitude(self) -> float:
        return math.pi / (2.0 * self.m * math.sin(self.period))

    @property
    def green_min(self) -> float:
        # value of the periodized kernel at theta = 0; sharp constant in c >= const * mean
        return self.green_amplitude * math.cos(self.period)

    @property
    def forcing_signed(self) -> bool:
        return self.m >= 4


def symmetry_constants(m: int) -> SymmetryFold:
    if int(m) != m or m <= 2:
        raise ValueError(f"fold m must be an integer >= 3, got {m!r}")
    m = int(m)
    C = 3.0 * math.pi / (2.0 * (m * m - 4))
    if m == 4:
        # 1/4 - 2C/pi vanishes identically; avoid a 1e-17 residue
        Ctilde = 0.0
    else:
        Ctilde = 0.25 - 2.0 * C / math.pi
    return SymmetryFold(m=m, C=C, Ctilde=Ctilde)


def _as_fold(fold) -> SymmetryFold:
    if isinstance(fold, SymmetryFold):
        return fold
    return symmetry_constants(fold)


# --------------------------------------------------------------------------
# grid and spectral representations
# --------------------------------------------------------------------------

def _check_size(n: int) -> None:
    if n < 8 or n & (n - 1):
        raise ValueError(f"grid size must be a power of two >= 8, got {n}")


def grid_nodes(fold: SymmetryFold, n: int) -> np.ndarray:
    """Equispaced nodes -pi/m + i*(2pi/m)/n on the fundamental arc."""
    return -math.pi / fold.m + np.arange(n) * (fold.period / n)


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Samples of an m-fold periodic function at `grid_nodes(fold, n)`."""

    fold: SymmetryFold
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 1:
            raise ValueError("ScalarField values must be one-dimensional")
        _check_size(vals.size)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_function(cls, fold, n: int, func) -> "ScalarField":
        fold = _as_fold(fold)
        return cls(fold, func(grid_nodes(fold, n)))

    @classmethod
    def constant(cls, fold, n: int, value: float) -> "ScalarField":
        fold = _as_fold(fold)
        return cls(fold, np.full(n, float(value)))

    @property
    def n(self) -> int:
        return self.values.size

    @cached_property
    def nodes(self) -> np.ndarray:
        return grid_nodes(self.fold, self.n)

    @cached_property
    def spectrum(self) -> "SpectralField":
        return SpectralField(self.fold, np.fft.rfft(self.values) / self.n, self.n)

    def mean(self) -> float:
        return float(np.mean(self.values))

    def l2_norm(self) -> float:
        """L2 norm over the full circle [-pi, pi)."""
        return math.sqrt(2.0 * math.pi * float(np.mean(self.values ** 2)))

    def evaluate(self, positions) -> np.ndarray:
        """Trigonometric interpolant evaluated at arbitrary angles."""
        return self.spectrum.evaluate(positions)

    def __add__(self, other):
        if isinstance(other, ScalarField):
            return ScalarField(self.fold, self.values + other.values)
        return ScalarField(self.fold, self.values + other)

    def __sub__(self, other):
        if isinstance(other, ScalarField):
            return ScalarField(self.fold, self.values - other.values)
        return ScalarField(self.fold, self.values - other)

    def __mul__(self, other):
        if isinstance(other, ScalarField):
            return ScalarField(self.fold, self.values * other.values)
        return ScalarField(self.fold, self.values * other)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Normalized real-FFT coefficients; entry j multiplies exp(i j m (theta + pi/m))."""

    fold: SymmetryFold
    coefficients: np.ndarray
    n: int

    @property
    def wavenumbers(self) -> np.ndarray:
        return self.fold.m * np.arange(self.coefficients.size)

    def to_field(self) -> ScalarField:
        return ScalarField(self.fold, np.fft.irfft(self.coefficients * self.n, n=self.n))

    def evaluate(self, positions, chunk: int = 4096) -> np.ndarray:
        pos = np.atleast_1d(np.asarray(positions, dtype=float))
        coef = self.coefficients.copy()
        coef[1:] *= 2.0
        if self.n % 2 == 0:
            coef[-1] *= 0.5
        k = self.wavenumbers
        phase0 = pos + math.pi / self.fold.m
        out = np.empty(pos.size)
        for start in range(0, pos.size, chunk):
            ph = np.exp(1j * np.outer(phase0[start:start + chunk], k))
            out[start:start + chunk] = (ph @ coef).real
        return out.reshape(np.shape(positions)) if np.ndim(positions) else out[0]


def _helmholtz_symbol(fold: SymmetryFold, ncoef: int) -> np.ndarray:
    k = fold.m * np.arange(ncoef, dtype=float)
    return 4.0 - k * k


def invert_helmholtz(g: ScalarField) -> ScalarField:
    """Solve (4 + d^2)G = g by dividing each Fourier mode by 4 - k^2."""
    if g.fold.m <= 2:
        raise ValueError("m-fold symmetry with m >= 3 is required")
    spec = g.spectrum
    coef = spec.coefficients / _helmholtz_symbol(g.fold, spec.coefficients.size)
    return SpectralField(g.fold, coef, g.n).to_field()


def apply_helmholtz(G: ScalarField) -> ScalarField:
    """Forward operator 4G + G''."""
    spec = G.spectrum
    coef = spec.coefficients * _helmholtz_symbol(G.fold, spec.coefficients.size)
    return SpectralField(G.fold, coef, G.n).to_field()


def derivative(f: ScalarField, order: int = 1) -> ScalarField:
    spec = f.spectrum
    ik = 1j * spec.wavenumbers
    coef = spec.coefficients * ik ** order
    if order % 2 == 1:
        coef[-1] = 0.0
    return SpectralField(f.fold, coef, f.n).to_field()


def forcing_c(g: ScalarField) -> ScalarField:
    """c = 12 (4 + d^2)^{-1} (dG/dtheta)^2, squared on a 2x padded grid."""
    dG = derivative(invert_helmholtz(g))
    n = g.n
    fine = np.fft.irfft(dG.spectrum.coefficients * (2 * n), n=2 * n)
    sq = np.fft.rfft(fine * fine)[: n // 2 + 1] / (2 * n)
    h = SpectralField(g.fold, sq, n).to_field()
    return 12.0 * invert_helmholtz(h)


# --------------------------------------------------------------------------
# kernels
# --------------------------------------------------------------------------

def _wrap(theta, period: float):
    """Map angles into [-period/2, period/2)."""
    return (np.asarray(theta, dtype=float) + 0.5 * period) % period - 0.5 * period


def kernel_eval_full(theta):
    """Full-circle kernel of (4 + d^2)^{-1} on functions orthogonal to sin 2t, cos 2t.

    sign(0) is taken as +1.
    """
    t = _wrap(theta, 2.0 * math.pi)
    sgn = np.where(t >= 0.0, 1.0, -1.0)
    s2 = np.sin(2.0 * t)
    out = 0.5 * math.pi * s2 * sgn - 0.5 * s2 * t - 0.125 * np.cos(2.0 * t)
    return out if np.ndim(out) else float(out)


def kernel_eval_m(theta, fold) -> np.ndarray:
    """Closed form C_m |sin(m theta / 2)| + Ctilde_m (exact only for m = 4)."""
    fold = _as_fold(fold)
    out = fold.C * np.abs(np.sin(0.5 * fold.m * np.asarray(theta, dtype=float))) + fold.Ctilde
    return out if np.ndim(out) else float(out)


def periodized_kernel(theta, fold) -> np.ndarray:
    """Exact 2pi/m-periodic Green's function, i.e. the m-rotation average of the full kernel.

    With this normalization (4 + d^2)^{-1} h = (m / 2pi) * int_{period} K(theta - w) h(w) dw.
    """
    fold = _as_fold(fold)
    u = _wrap(theta, fold.period)
    out = fold.green_amplitude * np.cos(2.0 * np.abs(u) - fold.period)
    return out if np.ndim(out) else float(out)


def rotation_average(theta, fold) -> np.ndarray:
    fold = _as_fold(fold)
    th = np.asarray(theta, dtype=float)
    acc = np.zeros_like(th)
    for j in range(fold.m):
        acc = acc + kernel_eval_full(th + j * fold.period)
    return acc / fold.m


def _kernel_one_sided_derivatives(fold: SymmetryFold, order: int):
    """Derivatives d^k/du^k of the periodized kernel at u = 0+ and u = 0- (k = 0..order)."""
    A, L = fold.green_amplitude, fold.period
    k = np.arange(order + 1)
    plus = A * 2.0 ** k * np.cos(-L + k * math.pi / 2)
    minus = A * 2.0 ** k * np.cos(L + k * math.pi / 2)
    return plus, minus


_EM_COEFFS = (1.0 / 12.0, -1.0 / 720.0, 1.0 / 30240.0, -1.0 / 1209600.0)


def convolve_kernel(g: ScalarField, refine: int = 4) -> ScalarField:
    """Evaluate (m/2pi) int K(theta - w) g(w) dw by direct quadrature.

    The integrand is sampled on a grid `refine` times finer than g's.  For each
    target the periodic sum is cut at w = theta, where the kernel has its kink,
    and the resulting trapezoid sum on [theta - 2pi/m, theta] is corrected with
    Euler-Maclaurin endpoint terms through h^8, using the exact one-sided
    kernel derivatives and spectral derivatives of g.
    """
    fold = g.fold
    if fold.m <= 2:
        raise ValueError("m-fold symmetry with m >= 3 is required")
    if refine < 4:
        raise ValueError("refine must be >= 4")
    n, L = g.n, fold.period
    nf = refine * n
    hf = L / nf
    fine = np.fft.irfft(g.spectrum.coefficients * nf, n=nf)
    wf = grid_nodes(fold, nf)
    targets = g.nodes

    # direct O(n * nf) trapezoid sums
    trap = np.empty(n)
    for i0 in range(0, n, 256):
        tt = targets[i0:i0 + 256, None]
        trap[i0:i0 + 256] = periodized_kernel(tt - wf[None, :], fold) @ fine * hf

    # one-sided derivative jumps of f(w) = K(theta - w) g(w) at w = theta
    nder = 2 * len(_EM_COEFFS) - 1
    kp, km = _kernel_one_sided_derivatives(fold, nder)
    gder = [g.values] + [derivative(g, order=r).values for r in range(1, nder + 1)]
    correction = np.zeros(n)
    for p, coef in enumerate(_EM_COEFFS):
        q = 2 * p + 1
        jump = np.zeros(n)
        for r in range(q + 1):
            # d/dw acts as -d/du on the kernel factor
            jump += math.comb(q, r) * (-1) ** r * (kp[r] - km[r]) * gder[q - r]
        correction += coef * hf ** (2 * p + 2) * jump
    total = trap - correction
    return ScalarField(fold, fold.m / (2.0 * math.pi) * total)


