"""Dyadic Littlewood-Paley machinery on the periodic lattice."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .spectral import (Grid, PhysicalField, SpectralField, fft2, ifft2, partial_derivative,
                       physical_values)

RHO_INNER = 0.75
RHO_OUTER = 1.0

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(80)


def _bump(t: np.ndarray) -> np.ndarray:
    out = np.zeros_like(t)
    m = np.abs(t) < 1.0
    out[m] = np.exp(-1.0 / (1.0 - t[m] ** 2))
    return out


def _bump_cdf(t: np.ndarray) -> np.ndarray:
    """Normalized integral of the standard bump from -1 to ``t``."""
    t = np.clip(np.asarray(t, dtype=float), -1.0, 1.0)
    u = 0.5 * (_GL_NODES + 1.0)
    s = -1.0 + (t[..., None] + 1.0) * u
    vals = np.sum(0.5 * _GL_WEIGHTS * _bump(s), axis=-1) * (t + 1.0)
    return np.clip(vals / _BUMP_MASS, 0.0, 1.0)


_BUMP_MASS = float(np.sum(_GL_WEIGHTS * _bump(_GL_NODES)))


def rho_profile(r) -> np.ndarray:
    """Smooth radial cutoff: 1 for ``r <= 3/4``, 0 for ``r >= 1``."""
    r = np.asarray(r, dtype=float)
    mid = 0.5 * (RHO_INNER + RHO_OUTER)
    half = 0.5 * (RHO_OUTER - RHO_INNER)
    t = (r - mid) / half
    out = np.where(r <= RHO_INNER, 1.0, 0.0)
    band = (r > RHO_INNER) & (r < RHO_OUTER)
    if np.any(band):
        out = out.astype(float)
        # the bump is even, so 1 - cdf(t) = cdf(-t) without cancellation
        out[band] = _bump_cdf(-t[band])
    return out


def phi_profile(r) -> np.ndarray:
    """Shell function ``phi(xi) = rho(xi/2) - rho(xi)``."""
    r = np.asarray(r, dtype=float)
    return rho_profile(0.5 * r) - rho_profile(r)


def _radial_table(kabs: np.ndarray, scale: float, fn) -> np.ndarray:
    # evaluate on unique radii only; the lattice has far fewer radii than modes
    r, inv = np.unique(kabs, return_inverse=True)
    return fn(r * scale)[inv].reshape(kabs.shape)


def max_shell(n: int) -> int:
    """Largest shell whose support lies inside the dealiased band."""
    return int(math.floor(math.log2(n / 3.0))) - 1


@dataclass(frozen=True, eq=False)
class DyadicPartition:
    """Tabulated ``rho(k)`` and ``phi(2^-j k)`` on a grid.

    ``jmin..jmax`` is the diagnostic shell range (shells fully inside the
    dealiased band). Shells up to ``jtop`` are tabulated so that both unity
    identities hold at every lattice wavenumber.
    """

    grid: Grid
    jmin: int
    jmax: int
    jtop: int
    rho: np.ndarray
    phi: dict = field(repr=False)

    def phi_j(self, j: int) -> np.ndarray:
        if j not in self.phi:
            raise ValueError(f"shell {j} outside tabulated range [{self.jmin}, {self.jtop}]")
        return self.phi[j]

    def low_pass_symbol(self, N: int) -> np.ndarray:
        return _low_pass_symbol(self.grid.n, int(N))

    @property
    def shells(self) -> range:
        return range(self.jmin, self.jmax + 1)

    def profile_hash(self) -> str:
        import hashlib

        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.rho).tobytes())
        for j in sorted(self.phi):
            h.update(np.ascontiguousarray(self.phi[j]).tobytes())
        return h.hexdigest()


@lru_cache(maxsize=64)
def _low_pass_symbol(n: int, N: int) -> np.ndarray:
    g = Grid(n)
    out = _radial_table(g.kabs, 2.0**-N, rho_profile)
    out.flags.writeable = False
    return out


@lru_cache(maxsize=16)
def _build_partition(n: int) -> DyadicPartition:
    grid = Grid(n)
    jmin = 0
    jmax = max_shell(n)
    if jmax < jmin:
        raise ValueError(f"grid n={n} is too small to hold one full dyadic shell")
    kmax = float(np.max(grid.kabs))
    # smallest J with rho(2^-(J+1) kmax) == 1
    jtop = max(jmax, int(math.ceil(math.log2(kmax / RHO_INNER))) - 1)
    rho = _radial_table(grid.kabs, 1.0, rho_profile)
    phi = {j: _radial_table(grid.kabs, 2.0**-j, phi_profile) for j in range(jmin, jtop + 1)}
    for a in [rho, *phi.values()]:
        a.flags.writeable = False
    return DyadicPartition(grid, jmin, jmax, jtop, rho, phi)


def build_partition(grid: Grid) -> DyadicPartition:
    """Tabulate the dyadic partition of unity on ``grid``."""
    if max_shell(grid.n) < 0:
        raise ValueError(f"grid n={grid.n} is too small to hold one full dyadic shell")
    return _build_partition(grid.n)


def dyadic_block(f: SpectralField, j: int, partition: DyadicPartition,
                 kind: str = "homogeneous") -> SpectralField:
    """Apply ``Delta_j`` (nonhomogeneous, ``j >= -1``) or the homogeneous block."""
    if kind == "homogeneous":
        if not partition.jmin <= j <= partition.jtop:
            raise ValueError(f"homogeneous shell {j} outside [{partition.jmin}, {partition.jtop}]")
        return f.with_coeffs(f.coeffs * partition.phi_j(j))
    if kind == "nonhomogeneous":
        if j < -1 or j > partition.jtop:
            raise ValueError(f"nonhomogeneous shell {j} outside [-1, {partition.jtop}]")
        if j == -1:
            return f.with_coeffs(f.coeffs * partition.rho)
        return f.with_coeffs(f.coeffs * partition.phi_j(j))
    raise ValueError(f"kind must be 'homogeneous' or 'nonhomogeneous', got {kind!r}")


def low_pass(f: SpectralField, N: int, partition: DyadicPartition | None = None) -> SpectralField:
    """``S_N f``: multiply by ``rho(2^-N k)``."""
    if N < 0:
        raise ValueError(f"cut-off index must be >= 0, got {N}")
    return f.with_coeffs(f.coeffs * _low_pass_symbol(f.grid.n, int(N)))


def block_norm(f: SpectralField, j: int, p: float, partition: DyadicPartition,
               kind: str = "homogeneous") -> float:
    b = dyadic_block(f, j, partition, kind)
    return f.grid.lp_norm(physical_values(f.grid, b.coeffs), p)


def besov_norm(f: SpectralField, s: float, p: float, r: float, kind: str = "homogeneous",
               partition: DyadicPartition | None = None, shells=None) -> float:
    """Besov norm from grid-quadrature block norms.

    ``r`` may be ``math.inf``. The nonhomogeneous norm is defined as
    ``||f||_{L^p}`` plus the homogeneous norm.
    """
    if p < 1:
        raise ValueError(f"Lebesgue exponent must be >= 1, got {p}")
    if not (r == math.inf or r >= 1):
        raise ValueError(f"summability index must be >= 1 or inf, got {r}")
    partition = partition or build_partition(f.grid)
    shells = partition.shells if shells is None else shells
    w = np.array([2.0 ** (j * s) * block_norm(f, j, p, partition) for j in shells])
    hom = float(np.max(w)) if r == math.inf else float(np.sum(w**r) ** (1.0 / r))
    if kind == "homogeneous":
        return hom
    if kind == "nonhomogeneous":
        return f.grid.lp_norm(physical_values(f.grid, f.coeffs), p) + hom
    raise ValueError(f"kind must be 'homogeneous' or 'nonhomogeneous', got {kind!r}")


@dataclass(frozen=True)
class ShellEntry:
    j: int
    raw_norm: float
    weighted_norm: float


@dataclass(frozen=True)
class ShellNormProfile:
    """Sequence ``(j, ||Delta_j f||_p, 2^{j alpha} ||Delta_j f||_p)``."""

    p: float
    alpha: float
    entries: tuple

    def __post_init__(self):
        js = [e.j for e in self.entries]
        if js != sorted(js):
            raise ValueError("profile entries must be sorted by shell index")
        if any(e.raw_norm < 0 or e.weighted_norm < 0 for e in self.entries):
            raise ValueError("shell norms must be nonnegative")

    @property
    def j(self) -> np.ndarray:
        return np.array([e.j for e in self.entries])

    @property
    def raw(self) -> np.ndarray:
        return np.array([e.raw_norm for e in self.entries])

    @property
    def weighted(self) -> np.ndarray:
        return np.array([e.weighted_norm for e in self.entries])

    def value(self, j: int) -> float:
        for e in self.entries:
            if e.j == j:
                return e.weighted_norm
        return 0.0

    def satisfies_cN(self, tol: float) -> bool:
        """Finite proxy for ``2^{j alpha}||Delta_j f|| -> 0``.

        The last third of the shells must be strictly decreasing and the
        final value must be below ``tol``.
        """
        w = self.weighted
        if len(w) == 0:
            return True
        m = max(1, math.ceil((len(w) - 1) / 3))
        tail = w[-m:]
        # an identically vanished tail counts as decreasing
        decreasing = bool(np.all((np.diff(tail) < 0) | (tail[1:] == 0))) if len(tail) > 1 else True
        return decreasing and tail[-1] < tol

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["j", "raw_norm", "weighted_norm"])
        for e in self.entries:
            wr.writerow([e.j, repr(float(e.raw_norm)), repr(float(e.weighted_norm))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, p: float, alpha: float) -> ShellNormProfile:
        rows = list(csv.DictReader(io.StringIO(text)))
        return cls(p, alpha, tuple(ShellEntry(int(r["j"]), float(r["raw_norm"]),
                                              float(r["weighted_norm"])) for r in rows))


def shell_profile(f: SpectralField, alpha: float, p: float, partition: DyadicPartition | None = None,
                  shells=None, kind: str = "homogeneous") -> ShellNormProfile:
    partition = partition or build_partition(f.grid)
    shells = partition.shells if shells is None else shells
    entries = []
    for j in shells:
        raw = block_norm(f, j, p, partition, kind)
        entries.append(ShellEntry(int(j), raw, 2.0 ** (j * alpha) * raw))
    return ShellNormProfile(float(p), float(alpha), tuple(entries))


def cN_tail_profile(f: SpectralField, alpha: float, p: float,
                    partition: DyadicPartition | None = None) -> ShellNormProfile:
    """Weighted shell sequence ``2^{j alpha} ||Delta_j f||_{L^p}`` over the diagnostic shells."""
    return shell_profile(f, alpha, p, partition)


class K1:
    """Kernel ``2^{j(alpha+1-gamma)}`` for ``j <= 0`` and ``2^{-(gamma-alpha) j}`` for ``j > 0``."""

    def __init__(self, alpha: float, gamma: float):
        _check_alpha(alpha)
        if not alpha + 1.0 - gamma > 0:
            raise ValueError(f"K1 needs alpha + 1 - gamma > 0 (alpha={alpha}, gamma={gamma})")
        if not gamma - alpha > 0:
            raise ValueError(f"K1 needs gamma - alpha > 0 (alpha={alpha}, gamma={gamma})")
        self.alpha, self.gamma = alpha, gamma
        self.left = alpha + 1.0 - gamma
        self.right = gamma - alpha

    def __call__(self, j):
        j = np.asarray(j, dtype=float)
        return np.where(j <= 0, 2.0 ** (j * self.left), 2.0 ** (-self.right * j))

    def l1_norm(self) -> float:
        return _two_sided_l1(self.left, self.right)


class K2:
    """Kernel ``2^{j alpha}`` for ``j <= 0`` and ``2^{-(1-alpha) j}`` for ``j > 0``."""

    def __init__(self, alpha: float):
        _check_alpha(alpha)
        self.alpha = alpha
        self.left = alpha
        self.right = 1.0 - alpha

    def __call__(self, j):
        j = np.asarray(j, dtype=float)
        return np.where(j <= 0, 2.0 ** (j * self.left), 2.0 ** (-self.right * j))

    def l1_norm(self) -> float:
        return _two_sided_l1(self.left, self.right)


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"kernel exponent alpha must lie in (0, 1), got {alpha}")


def _two_sided_l1(left: float, right: float) -> float:
    return 1.0 / (1.0 - 2.0**-left) + 2.0**-right / (1.0 - 2.0**-right)


def kernel_convolve(kernel, d, N: int) -> float:
    """``(K * d)(N) = sum_j K(N - j) d(j)`` over the shells present in ``d``.

    ``d`` is a :class:`ShellNormProfile` (weighted norms are used) or a
    mapping ``j -> d_j``.
    """
    if isinstance(d, ShellNormProfile):
        js, vals = d.j, d.weighted
    else:
        items = sorted(dict(d).items())
        js = np.array([j for j, _ in items])
        vals = np.array([v for _, v in items], dtype=float)
    if len(js) == 0:
        return 0.0
    return float(np.sum(kernel(N - js) * vals))


def _grad_magnitude(f: SpectralField) -> np.ndarray:
    g1 = physical_values(f.grid, partial_derivative(f, 1).coeffs)
    g2 = physical_values(f.grid, partial_derivative(f, 2).coeffs)
    return np.hypot(g1, g2)


def bernstein_ratios(f: SpectralField, j: int, p: float, q: float) -> tuple[float, float]:
    """Derivative and Lebesgue-exponent ratios for a shell-``j`` field."""
    if q < p:
        raise ValueError(f"need q >= p, got p={p}, q={q}")
    g = f.grid
    vals = physical_values(g, f.coeffs)
    base = g.lp_norm(vals, p)
    if base == 0:
        raise ValueError("empty shell")
    deriv = g.lp_norm(_grad_magnitude(f), p) / (2.0**j * base)
    lebesgue = g.lp_norm(vals, q) / (2.0 ** (j * 2.0 * (1.0 / p - 1.0 / q)) * base)
    return deriv, lebesgue


def increment_norm(f: PhysicalField, y, p: float) -> float:
    """``||f(. - y) - f||_{L^p}``; grid-aligned shifts use exact index rolls."""
    g = f.grid
    y = np.asarray(y, dtype=float)
    s = y / g.h
    if np.allclose(s, np.round(s), rtol=0, atol=1e-12):
        shifted = np.roll(f.values, tuple(int(v) for v in np.round(s)), axis=(0, 1))
    else:
        k1, k2 = g.k
        c = fft2(f.values) * np.exp(-1j * (k1 * y[0] + k2 * y[1]))
        shifted = ifft2(c).real
    return g.lp_norm(shifted - f.values, p)
