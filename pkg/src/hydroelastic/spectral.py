"""Trigonometric series on [0, 2pi) and the geometric operators built on them.

A real 2pi-periodic function is stored as

    u(tau) = mean + sum_{n=1}^{N} a_n cos(n tau) + b_n sin(n tau).

Linear operators (Hilbert transform, derivative, antiderivative, mean removal)
act exactly on the coefficients.  Nonlinear quantities are evaluated on an
oversampled collocation grid and truncated back to N modes.

Sign convention for the periodic Hilbert transform ``C``::

    C cos(n tau) = sin(n tau),   C sin(n tau) = -cos(n tau),   C 1 = 0.

Every other module relies on this convention; it is what makes the diagonal
of the linearised residual come out as ``-E22 j^2 + l1 + l2/j - (...)/j^2``.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import EvaluationError, OutOfBallError, PreconditionError

TWO_PI = 2.0 * np.pi

# Bounds of the neighbourhood in which the reduction is carried out.
OMEGA_BOUNDS = (0.5, 2.0)
SIGMA_BOUND = 1.0
XI_BOUND = 0.5


@dataclass(frozen=True)
class Discretization:
    """Numerical resolution and solver tolerances.

    The collocation grid has ``2 * oversampling_factor * (n_modes + 1)``
    points, so a degree-d polynomial of N-mode series is reproduced exactly
    whenever ``oversampling_factor >= (d + 1) / 2``.
    """

    n_modes: int = 32
    oversampling_factor: int = 4
    newton_tol: float = 1e-12
    newton_max_iter: int = 30
    fd_step_scale: float = 1e-6

    def __post_init__(self):
        if int(self.n_modes) < 1:
            raise PreconditionError("n_modes must be a positive integer")
        if int(self.oversampling_factor) < 2:
            raise PreconditionError("oversampling_factor must be >= 2")
        if not 0.0 < self.newton_tol < 1e-8:
            raise PreconditionError("newton_tol must lie in (0, 1e-8)")
        if int(self.newton_max_iter) < 1:
            raise PreconditionError("newton_max_iter must be positive")
        if not self.fd_step_scale > 0.0:
            raise PreconditionError("fd_step_scale must be positive")

    @property
    def grid_size(self) -> int:
        return grid_size_for(self.n_modes, self.oversampling_factor)

    @property
    def grid(self) -> "Grid":
        return Grid.of_size(self.grid_size)


def grid_size_for(n_modes: int, oversampling_factor: int = 4) -> int:
    return 2 * int(oversampling_factor) * (int(n_modes) + 1)


# ---------------------------------------------------------------------------
# TrigSeries
# ---------------------------------------------------------------------------


def _frozen(x) -> np.ndarray:
    arr = np.array(x, dtype=float).reshape(-1)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class TrigSeries:
    """Truncated real trigonometric series with ``n_modes`` harmonics."""

    mean: float
    cos_coeffs: np.ndarray
    sin_coeffs: np.ndarray

    def __post_init__(self):
        a = _frozen(self.cos_coeffs)
        b = _frozen(self.sin_coeffs)
        if a.shape != b.shape:
            raise PreconditionError("cosine and sine coefficient counts differ")
        object.__setattr__(self, "mean", float(self.mean))
        object.__setattr__(self, "cos_coeffs", a)
        object.__setattr__(self, "sin_coeffs", b)

    # -- constructors -------------------------------------------------------

    @classmethod
    def zeros(cls, n_modes: int) -> "TrigSeries":
        return cls(0.0, np.zeros(n_modes), np.zeros(n_modes))

    @classmethod
    def constant(cls, value: float, n_modes: int) -> "TrigSeries":
        return cls(value, np.zeros(n_modes), np.zeros(n_modes))

    @classmethod
    def cosine(cls, coeffs: Sequence[float], mean: float = 0.0) -> "TrigSeries":
        """Even series ``mean + sum a_n cos(n tau)``."""
        coeffs = np.asarray(coeffs, dtype=float)
        return cls(mean, coeffs, np.zeros_like(coeffs))

    @classmethod
    def mode(cls, n: int, n_modes: int, kind: str = "cos", amplitude: float = 1.0):
        a = np.zeros(n_modes)
        b = np.zeros(n_modes)
        (a if kind == "cos" else b)[n - 1] = amplitude
        return cls(0.0, a, b)

    @classmethod
    def from_samples(cls, samples, n_modes: int) -> "TrigSeries":
        """Project grid samples at tau_j = 2 pi j / M onto ``n_modes`` harmonics."""
        samples = np.asarray(samples, dtype=float)
        grid = Grid.of_size(samples.size)
        if n_modes >= grid.size // 2:
            raise PreconditionError(
                f"{grid.size} samples cannot resolve {n_modes} modes")
        c = grid.forward(samples)
        return cls(c[0].real, 2.0 * c[1:n_modes + 1].real,
                   -2.0 * c[1:n_modes + 1].imag)

    # -- basic properties ---------------------------------------------------

    @property
    def n_modes(self) -> int:
        return self.cos_coeffs.size

    def samples(self, size: int) -> np.ndarray:
        grid = Grid.of_size(size)
        if self.n_modes >= size // 2:
            raise PreconditionError(f"{size} points cannot represent {self.n_modes} modes")
        c = np.zeros(size // 2 + 1, dtype=complex)
        c[0] = self.mean
        c[1:self.n_modes + 1] = 0.5 * (self.cos_coeffs - 1j * self.sin_coeffs)
        return grid.backward(c)

    def __call__(self, tau):
        tau = np.asarray(tau, dtype=float)
        n = np.arange(1, self.n_modes + 1)
        phase = np.multiply.outer(tau, n)
        return self.mean + np.cos(phase) @ self.cos_coeffs + np.sin(phase) @ self.sin_coeffs

    def truncate(self, n_modes: int) -> "TrigSeries":
        """Truncate or zero-pad to ``n_modes`` harmonics."""
        a = np.zeros(n_modes)
        b = np.zeros(n_modes)
        m = min(n_modes, self.n_modes)
        a[:m] = self.cos_coeffs[:m]
        b[:m] = self.sin_coeffs[:m]
        return TrigSeries(self.mean, a, b)

    def is_even(self, tol: float = 1e-13) -> bool:
        return bool(np.all(np.abs(self.sin_coeffs) <= tol))

    def is_odd(self, tol: float = 1e-13) -> bool:
        return abs(self.mean) <= tol and bool(np.all(np.abs(self.cos_coeffs) <= tol))

    def inner(self, other: "TrigSeries") -> float:
        """L^2(0, 2 pi) inner product."""
        n = min(self.n_modes, other.n_modes)
        return float(TWO_PI * self.mean * other.mean
                     + np.pi * (self.cos_coeffs[:n] @ other.cos_coeffs[:n]
                                + self.sin_coeffs[:n] @ other.sin_coeffs[:n]))

    def norm(self) -> float:
        """Euclidean norm of the coefficient vector (mean counted with weight sqrt 2)."""
        return float(np.sqrt(2.0 * self.mean ** 2 + self.cos_coeffs @ self.cos_coeffs
                             + self.sin_coeffs @ self.sin_coeffs))

    def max_abs_coeff(self) -> float:
        return float(max(abs(self.mean), np.max(np.abs(self.cos_coeffs), initial=0.0),
                         np.max(np.abs(self.sin_coeffs), initial=0.0)))

    # -- arithmetic ---------------------------------------------------------

    def _aligned(self, other):
        n = max(self.n_modes, other.n_modes)
        return self.truncate(n), other.truncate(n)

    def __add__(self, other):
        if np.isscalar(other):
            return TrigSeries(self.mean + other, self.cos_coeffs, self.sin_coeffs)
        x, y = self._aligned(other)
        return TrigSeries(x.mean + y.mean, x.cos_coeffs + y.cos_coeffs,
                          x.sin_coeffs + y.sin_coeffs)

    __radd__ = __add__

    def __neg__(self):
        return TrigSeries(-self.mean, -self.cos_coeffs, -self.sin_coeffs)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, scalar):
        if not np.isscalar(scalar):
            return NotImplemented
        return TrigSeries(scalar * self.mean, scalar * self.cos_coeffs,
                          scalar * self.sin_coeffs)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self * (1.0 / scalar)

    def __repr__(self):
        return f"TrigSeries(n_modes={self.n_modes}, mean={self.mean:.3g})"


# ---------------------------------------------------------------------------
# Collocation grid
# ---------------------------------------------------------------------------


class Grid:
    """Equispaced grid tau_j = 2 pi j / M with FFT-based spectral operators.

    Instances are cached per size and treated as immutable.
    """

    def __init__(self, size: int):
        if size < 4 or size % 2:
            raise PreconditionError("grid size must be an even integer >= 4")
        self.size = size
        self.tau = TWO_PI * np.arange(size) / size
        n = np.arange(size // 2 + 1, dtype=float)
        ik = 1j * n
        ik[-1] = 0.0
        hil = -1j * np.ones_like(ik)
        hil[0] = 0.0
        hil[-1] = 0.0
        inv_ik = np.zeros_like(ik)
        inv_ik[1:-1] = 1.0 / ik[1:-1]
        self._ik = ik
        self._hil = hil
        self._inv_ik = inv_ik
        self._cos_cache = {}

    @staticmethod
    @functools.lru_cache(maxsize=None)
    def of_size(size: int) -> "Grid":
        return Grid(int(size))

    def forward(self, u):
        return np.fft.rfft(u) / self.size

    def backward(self, c):
        return np.fft.irfft(c * self.size, self.size)

    def mean(self, u) -> float:
        return float(np.mean(u))

    def integrate(self, u) -> float:
        return TWO_PI * float(np.mean(u))

    def project(self, u):
        return u - np.mean(u)

    def hilbert(self, u):
        return self.backward(self._hil * self.forward(u))

    def deriv(self, u):
        return self.backward(self._ik * self.forward(u))

    def antideriv0(self, u, tol: float = 1e-10):
        c = self.forward(u)
        scale = max(1.0, float(np.max(np.abs(u))))
        if abs(c[0].real) > tol * scale:
            raise PreconditionError(
                f"antiderivative needs a zero-mean input, mean is {c[0].real:.3e}")
        v = self.backward(self._inv_ik * c)
        return v - v[0]

    def cos_coeffs(self, u, n_modes: int):
        return 2.0 * self.forward(u)[1:n_modes + 1].real

    def sin_coeffs(self, u, n_modes: int):
        return -2.0 * self.forward(u)[1:n_modes + 1].imag

    def from_cos(self, a, mean: float = 0.0):
        c = np.zeros(self.size // 2 + 1, dtype=complex)
        c[0] = mean
        c[1:len(a) + 1] = 0.5 * np.asarray(a)
        return self.backward(c)

    def cos_matrix(self, n_modes: int):
        """Samples of cos(j tau) for j = 1..n_modes, shape (M, n_modes)."""
        B = self._cos_cache.get(n_modes)
        if B is None:
            B = np.cos(np.outer(self.tau, np.arange(1, n_modes + 1)))
            B.setflags(write=False)
            self._cos_cache[n_modes] = B
        return B


@dataclass(frozen=True)
class CollocationGrid:
    """Samples of a series on the grid tau_j = 2 pi j / size."""

    size: int
    samples: np.ndarray

    @classmethod
    def of(cls, u: TrigSeries, oversampling_factor: int = 4) -> "CollocationGrid":
        size = grid_size_for(u.n_modes, oversampling_factor)
        return cls(size, u.samples(size))

    def to_series(self, n_modes: int) -> TrigSeries:
        return TrigSeries.from_samples(self.samples, n_modes)


# ---------------------------------------------------------------------------
# Linear operators (exact in coefficients)
# ---------------------------------------------------------------------------


def hilbert(u: TrigSeries) -> TrigSeries:
    return TrigSeries(0.0, -u.sin_coeffs, u.cos_coeffs)


def differentiate(u: TrigSeries) -> TrigSeries:
    n = np.arange(1, u.n_modes + 1)
    return TrigSeries(0.0, n * u.sin_coeffs, -n * u.cos_coeffs)


def antiderivative0(u: TrigSeries, tol: float = 1e-12) -> TrigSeries:
    """Periodic antiderivative ``v`` of a zero-mean ``u`` with ``v(0) = 0``."""
    if abs(u.mean) > tol * max(1.0, u.max_abs_coeff()):
        raise PreconditionError(f"antiderivative0 needs zero mean, got {u.mean:.3e}")
    n = np.arange(1, u.n_modes + 1)
    a = -u.sin_coeffs / n
    b = u.cos_coeffs / n
    return TrigSeries(-float(np.sum(a)), a, b)


def project_zero_mean(u: TrigSeries) -> TrigSeries:
    return TrigSeries(0.0, u.cos_coeffs, u.sin_coeffs)


def grid_compose(inputs: Sequence[TrigSeries], f: Callable, n_modes: int | None = None,
                 oversampling_factor: int = 4) -> TrigSeries:
    """Apply ``f`` pointwise to the grid samples of ``inputs``.

    The result is truncated to ``n_modes`` harmonics (default: the largest
    input).  Non-finite values raise :class:`EvaluationError` naming the
    first offending collocation point.
    """
    if n_modes is None:
        n_modes = max(u.n_modes for u in inputs)
    size = grid_size_for(max([n_modes] + [u.n_modes for u in inputs]), oversampling_factor)
    grid = Grid.of_size(size)
    with np.errstate(all="ignore"):
        values = np.asarray(f(*[u.samples(size) for u in inputs]), dtype=float)
    values = np.broadcast_to(values, (size,))
    bad = np.flatnonzero(~np.isfinite(values))
    if bad.size:
        tau = float(grid.tau[bad[0]])
        raise EvaluationError(f"non-finite value at tau = {tau:.6f}", tau=tau)
    return TrigSeries.from_samples(values, n_modes)


# ---------------------------------------------------------------------------
# Geometry of the parametrised curve (-tau - C w, w)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Geometry:
    """Grid fields derived from a shape ``w``.

    ``omega_m1`` is Omega - 1 computed without cancellation and ``omega_sigma``
    is the product Omega * sigma = -C((log Omega)').
    """

    w: np.ndarray
    wp: np.ndarray
    cwp: np.ndarray
    omega_m1: np.ndarray
    omega: np.ndarray
    omega_sigma: np.ndarray

    @property
    def sigma(self):
        return self.omega_sigma / self.omega


def geometry(grid: Grid, w: np.ndarray) -> Geometry:
    wp = grid.deriv(w)
    cwp = grid.hilbert(wp)
    num = wp * wp + cwp * (2.0 + cwp)
    omega_m1 = num / (1.0 + np.sqrt(wp * wp + (1.0 + cwp) ** 2))
    omega = 1.0 + omega_m1
    with np.errstate(all="ignore"):
        log_omega = np.log1p(omega_m1)
    omega_sigma = -grid.hilbert(grid.deriv(log_omega))
    return Geometry(w, wp, cwp, omega_m1, omega, omega_sigma)


def check_ball(geo: Geometry, xi=None):
    """Raise :class:`OutOfBallError` unless the state lies in the working ball."""
    lo, hi = OMEGA_BOUNDS
    om_min, om_max = float(np.min(geo.omega)), float(np.max(geo.omega))
    if not np.isfinite(om_min) or om_min < lo:
        raise OutOfBallError("min Omega", om_min, f">= {lo}")
    if om_max > hi:
        raise OutOfBallError("max Omega", om_max, f"<= {hi}")
    sig = float(np.max(np.abs(geo.sigma)))
    if not np.isfinite(sig) or sig > SIGMA_BOUND:
        raise OutOfBallError("sup |sigma|", sig, f"<= {SIGMA_BOUND}")
    if xi is not None:
        x = float(np.max(np.abs(xi)))
        if not np.isfinite(x) or x > XI_BOUND:
            raise OutOfBallError("sup |xi|", x, f"<= {XI_BOUND}")


def _grid_for(*series: TrigSeries, oversampling_factor: int = 4) -> Grid:
    n = max(u.n_modes for u in series)
    return Grid.of_size(grid_size_for(n, oversampling_factor))


def omega_sigma(w: TrigSeries, oversampling_factor: int = 4):
    """Metric factor Omega(w) and curvature sigma(w), truncated to w's modes."""
    grid = _grid_for(w, oversampling_factor=oversampling_factor)
    geo = geometry(grid, w.samples(grid.size))
    check_ball(geo)
    n = w.n_modes
    return (TrigSeries.from_samples(geo.omega, n), TrigSeries.from_samples(geo.sigma, n))


def ell_apply(w: TrigSeries, u: TrigSeries, oversampling_factor: int = 4) -> TrigSeries:
    """``L[w] u = (w' u + (1 + C w') C u) / Omega(w)^2``."""
    grid = _grid_for(w, u, oversampling_factor=oversampling_factor)
    geo = geometry(grid, w.samples(grid.size))
    check_ball(geo)
    us = u.samples(grid.size)
    out = (geo.wp * us + (1.0 + geo.cwp) * grid.hilbert(us)) / geo.omega ** 2
    return TrigSeries.from_samples(out, max(w.n_modes, u.n_modes))


def ell_inv_adjoint_grid(grid: Grid, geo: Geometry, u: np.ndarray) -> np.ndarray:
    return geo.wp * u + grid.hilbert((1.0 + geo.cwp) * u)


def ell_inv_adjoint(w: TrigSeries, u: TrigSeries, oversampling_factor: int = 4) -> TrigSeries:
    """``(L[w]^{-1})^* u = w' u + C((1 + C w') u)``."""
    grid = _grid_for(w, u, oversampling_factor=oversampling_factor)
    geo = geometry(grid, w.samples(grid.size))
    check_ball(geo)
    out = ell_inv_adjoint_grid(grid, geo, u.samples(grid.size))
    return TrigSeries.from_samples(out, max(w.n_modes, u.n_modes))
