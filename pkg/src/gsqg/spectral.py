"""Periodic grid, Fourier transforms and Fourier-multiplier operators.

Coefficients use the amplitude convention ``coeffs = fft2(values) / n**2``,
so ``cos(x1)`` has coefficient 1/2 at ``k = +-(1, 0)``. Axis 0 of every
array corresponds to ``x1`` and axis 1 to ``x2``.
"""

from __future__ import annotations

import contextlib
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft

TWO_PI = 2.0 * math.pi

_FFT_WORKERS = 1


def set_fft_workers(k: int) -> None:
    """Set the number of threads used by every transform in the package."""
    global _FFT_WORKERS
    if int(k) < 1:
        raise ValueError(f"thread count must be >= 1, got {k}")
    _FFT_WORKERS = int(k)


def get_fft_workers() -> int:
    return _FFT_WORKERS


@contextlib.contextmanager
def fft_workers(k: int):
    """Temporarily change the transform thread count."""
    old = _FFT_WORKERS
    set_fft_workers(k)
    try:
        yield
    finally:
        set_fft_workers(old)


def fft2(a: np.ndarray) -> np.ndarray:
    return scipy.fft.fft2(a, workers=_FFT_WORKERS)


def ifft2(a: np.ndarray) -> np.ndarray:
    return scipy.fft.ifft2(a, workers=_FFT_WORKERS)


@dataclass(frozen=True)
class Grid:
    """Uniform ``n x n`` grid on the torus ``[0, 2pi)^2``."""

    n: int
    length: float = TWO_PI

    def __post_init__(self):
        n = self.n
        if isinstance(n, bool) or not isinstance(n, (int, np.integer)):
            raise TypeError(f"grid size must be an integer, got {n!r}")
        if n < 8 or n & (n - 1):
            raise ValueError(f"grid size must be a power of two >= 8, got {n}")
        if self.length != TWO_PI:
            raise ValueError("domain period is fixed at 2*pi so wavenumbers are integers")
        object.__setattr__(self, "n", int(n))

    @property
    def h(self) -> float:
        return self.length / self.n

    @property
    def cell_area(self) -> float:
        return self.h * self.h

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n, self.n)

    @cached_property
    def x(self) -> tuple[np.ndarray, np.ndarray]:
        """Coordinate arrays ``(x1, x2)`` with ``indexing='ij'``."""
        s = np.arange(self.n) * self.h
        return tuple(np.meshgrid(s, s, indexing="ij"))

    @cached_property
    def k(self) -> tuple[np.ndarray, np.ndarray]:
        """Signed integer wavenumbers ``(k1, k2)`` as floats."""
        f = np.fft.fftfreq(self.n, 1.0 / self.n)
        return tuple(np.meshgrid(f, f, indexing="ij"))

    @cached_property
    def k_odd(self) -> tuple[np.ndarray, np.ndarray]:
        """Wavenumbers with the Nyquist entry zeroed, for odd-order symbols.

        ``i*k`` at ``k = -n/2`` has no Hermitian partner, so keeping it
        would make derivatives of real fields complex.
        """
        f = np.fft.fftfreq(self.n, 1.0 / self.n)
        f[self.n // 2] = 0.0
        return tuple(np.meshgrid(f, f, indexing="ij"))

    @cached_property
    def kabs(self) -> np.ndarray:
        k1, k2 = self.k
        return np.hypot(k1, k2)

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        k1, k2 = self.k
        return np.maximum(np.abs(k1), np.abs(k2)) <= self.n / 3.0

    @cached_property
    def conj_index(self) -> np.ndarray:
        """Flat index of ``-k`` for every mode ``k``."""
        idx = (-np.arange(self.n)) % self.n
        return (idx[:, None] * self.n + idx[None, :]).ravel()

    def integrate(self, values: np.ndarray) -> float:
        """Midpoint quadrature over the torus."""
        return float(np.sum(values) * self.cell_area)

    def lp_norm(self, values: np.ndarray, p: float) -> float:
        if p < 1:
            raise ValueError(f"Lebesgue exponent must be >= 1, got {p}")
        a = np.abs(values)
        if p == 2:
            return math.sqrt(self.integrate(a * a))
        return self.integrate(a**p) ** (1.0 / p)


@dataclass(frozen=True, eq=False)
class PhysicalField:
    """Real samples on a :class:`Grid`; ``values[i1, i2] = f(i1*h, i2*h)``."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        n = self.grid.n
        if v.size != n * n:
            raise ValueError(f"expected {n * n} samples, got {v.size}")
        v = v.reshape(n, n)
        if not np.all(np.isfinite(v)):
            raise ValueError("field contains non-finite values")
        object.__setattr__(self, "values", v)

    def flat(self) -> np.ndarray:
        return self.values.ravel()

    def __add__(self, other: PhysicalField) -> PhysicalField:
        _same_grid(self.grid, other.grid)
        return PhysicalField(self.grid, self.values + other.values)

    def __sub__(self, other: PhysicalField) -> PhysicalField:
        _same_grid(self.grid, other.grid)
        return PhysicalField(self.grid, self.values - other.values)

    def __mul__(self, c: float) -> PhysicalField:
        return PhysicalField(self.grid, self.values * c)

    __rmul__ = __mul__

    def __neg__(self) -> PhysicalField:
        return PhysicalField(self.grid, -self.values)


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Fourier coefficients of a real field, stored on the full ``n x n`` lattice."""

    grid: Grid
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.shape != self.grid.shape:
            raise ValueError(f"expected coefficient shape {self.grid.shape}, got {c.shape}")
        object.__setattr__(self, "coeffs", c)

    @property
    def mean(self) -> float:
        return float(self.coeffs[0, 0].real)

    def hermitian_defect(self) -> float:
        """Largest ``|c(-k) - conj c(k)|`` relative to the largest coefficient."""
        c = self.coeffs.ravel()
        scale = np.max(np.abs(c))
        if scale == 0:
            return 0.0
        return float(np.max(np.abs(c[self.grid.conj_index] - np.conj(c))) / scale)

    def with_coeffs(self, coeffs: np.ndarray) -> SpectralField:
        return SpectralField(self.grid, coeffs)

    def __add__(self, other: SpectralField) -> SpectralField:
        _same_grid(self.grid, other.grid)
        return SpectralField(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other: SpectralField) -> SpectralField:
        _same_grid(self.grid, other.grid)
        return SpectralField(self.grid, self.coeffs - other.coeffs)

    def __mul__(self, c: complex) -> SpectralField:
        return SpectralField(self.grid, self.coeffs * c)

    __rmul__ = __mul__

    def __neg__(self) -> SpectralField:
        return SpectralField(self.grid, -self.coeffs)


def _same_grid(a: Grid, b: Grid) -> None:
    if a != b:
        raise ValueError(f"grid mismatch: n={a.n} vs n={b.n}")


def to_spectral(f: PhysicalField) -> SpectralField:
    """Exact discrete Fourier coefficients (amplitude convention)."""
    if not np.all(np.isfinite(f.values)):
        raise ValueError("cannot transform a field with non-finite values")
    n = f.grid.n
    return SpectralField(f.grid, fft2(f.values) / (n * n))


def to_physical(f: SpectralField) -> PhysicalField:
    n = f.grid.n
    return PhysicalField(f.grid, ifft2(f.coeffs).real * (n * n))


def physical_values(grid: Grid, coeffs: np.ndarray) -> np.ndarray:
    """Inverse transform of a raw coefficient array, real part."""
    return ifft2(coeffs).real * (grid.n * grid.n)


def spectral_coeffs(grid: Grid, values: np.ndarray) -> np.ndarray:
    return fft2(values) / (grid.n * grid.n)


def parseval_sum(f: SpectralField) -> float:
    """``||f||_2^2`` computed from coefficients."""
    return float(np.sum(np.abs(f.coeffs) ** 2) * f.grid.length**2)


def is_mean_free(f: SpectralField, rtol: float = 1e-12) -> bool:
    scale = np.max(np.abs(f.coeffs))
    return scale == 0 or abs(f.coeffs[0, 0]) <= rtol * scale


def fractional_laplacian(f: SpectralField, s: float, strict: bool = False) -> SpectralField:
    """Apply ``Lambda^s`` with symbol ``|k|^s``.

    For ``s > 0`` the zero mode is multiplied by zero. For ``s < 0`` the zero
    mode is set to zero, or, with ``strict=True``, a field with nonzero mean
    is rejected.
    """
    if not -2.0 <= s <= 4.0:
        raise ValueError(f"order s must lie in [-2, 4], got {s}")
    if s == 0:
        return SpectralField(f.grid, f.coeffs.copy())
    if s < 0 and strict and not is_mean_free(f):
        raise ValueError("negative-order operator on non-mean-free field")
    kabs = f.grid.kabs
    with np.errstate(divide="ignore"):
        sym = np.where(kabs > 0, kabs**s, 0.0)
    return SpectralField(f.grid, f.coeffs * sym)


def riesz_perp_velocity(theta: SpectralField, gamma: float) -> tuple[SpectralField, SpectralField]:
    """Velocity ``v = R_perp Lambda^(gamma-1) theta``.

    ``v_hat(k) = i (k2, -k1) |k|^(gamma-2) theta_hat(k)`` with ``v_hat(0) = 0``.
    """
    if not 0.0 <= gamma <= 2.0:
        raise ValueError(f"gamma must lie in [0, 2], got {gamma}")
    g = theta.grid
    m = _velocity_symbol(g, gamma)
    k1, k2 = g.k_odd
    c = theta.coeffs * m
    return SpectralField(g, 1j * k2 * c), SpectralField(g, -1j * k1 * c)


def _velocity_symbol(grid: Grid, gamma: float) -> np.ndarray:
    kabs = grid.kabs
    with np.errstate(divide="ignore"):
        return np.where(kabs > 0, kabs ** (gamma - 2.0), 0.0)


def partial_derivative(f: SpectralField, axis: int) -> SpectralField:
    """Spectral ``d/dx_axis`` for ``axis`` in ``{1, 2}``."""
    if axis not in (1, 2):
        raise ValueError(f"axis must be 1 or 2, got {axis}")
    k = f.grid.k_odd[axis - 1]
    return SpectralField(f.grid, 1j * k * f.coeffs)


def dealias(f: SpectralField) -> SpectralField:
    """Two-thirds rule: zero modes with ``max(|k1|, |k2|) > n/3``."""
    return SpectralField(f.grid, np.where(f.grid.dealias_mask, f.coeffs, 0.0))


def divergence(v1: SpectralField, v2: SpectralField) -> SpectralField:
    return partial_derivative(v1, 1) + partial_derivative(v2, 2)
