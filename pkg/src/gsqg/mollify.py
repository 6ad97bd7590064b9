"""Standard mollifier, the Constantin-E-Titi commutator and log-log rate fits."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np
from scipy.integrate import quad

from .spectral import Grid, PhysicalField, fft2, ifft2

MIN_CELLS_ACROSS = 5.0


def _eta(r: np.ndarray) -> np.ndarray:
    out = np.zeros_like(r, dtype=float)
    m = r < 1.0
    out[m] = np.exp(-1.0 / (1.0 - r[m] ** 2))
    return out


@lru_cache(maxsize=1)
def analytic_c0() -> float:
    """``C0`` with ``int_{R^2} C0 exp(-1/(1-|x|^2)) dx = 1``."""
    mass, _ = quad(lambda r: 2.0 * math.pi * r * math.exp(-1.0 / (1.0 - r * r)), 0.0, 1.0,
                   epsabs=1e-15, epsrel=1e-13)
    return 1.0 / mass


class Mollifier:
    """Periodized ``eta_eps(x) = eps^-2 eta(x/eps)`` tabulated on a grid.

    The table is rescaled so that its grid quadrature is exactly one;
    ``normalization`` holds the effective constant that replaces ``C0``.
    """

    def __init__(self, grid: Grid, eps: float):
        if not 0.0 < eps < grid.length / 4.0:
            raise ValueError(f"eps must lie in (0, period/4) = (0, {grid.length / 4:.6g}), got {eps}")
        if 2.0 * eps / grid.h < MIN_CELLS_ACROSS * (1.0 - 1e-12):
            raise ValueError(
                f"under-resolved kernel: eps={eps:.6g} spans {2 * eps / grid.h:.3g} cells across, "
                f"need >= {MIN_CELLS_ACROSS:g} (eps >= {MIN_CELLS_ACROSS * grid.h / 2:.6g})")
        self.grid = grid
        self.epsilon = float(eps)
        n = grid.n
        d = np.minimum(np.arange(n), n - np.arange(n)) * grid.h
        r = np.hypot(d[:, None], d[None, :]) / eps
        raw = _eta(r)
        mass = float(np.sum(raw)) * grid.cell_area / eps**2
        self.normalization = 1.0 / mass
        self.c0 = analytic_c0()
        self.kernel = raw * (self.normalization / eps**2)

    @cached_property
    def multiplier(self) -> np.ndarray:
        """Fourier multiplier of the periodized kernel (real: the kernel is even)."""
        return (fft2(self.kernel) * self.grid.cell_area).real

    @cached_property
    def support_offsets(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        i1, i2 = np.nonzero(self.kernel)
        return i1, i2, self.kernel[i1, i2] * self.grid.cell_area

    def quadrature(self) -> float:
        return float(np.sum(self.kernel) * self.grid.cell_area)

    def apply(self, values: np.ndarray) -> np.ndarray:
        return ifft2(fft2(values) * self.multiplier).real

    def apply_direct(self, values: np.ndarray) -> np.ndarray:
        out = np.zeros_like(values, dtype=float)
        for a, b, w in zip(*self.support_offsets):
            out += w * np.roll(values, (int(a), int(b)), axis=(0, 1))
        return out


@lru_cache(maxsize=8)
def _cached_mollifier(n: int, eps: float) -> Mollifier:
    return Mollifier(Grid(n), eps)


def get_mollifier(grid: Grid, eps: float) -> Mollifier:
    return _cached_mollifier(grid.n, float(eps))


def mollify(f: PhysicalField, eps: float, method: str = "spectral") -> PhysicalField:
    """``f * eta_eps`` as a periodic convolution.

    ``method`` is ``"spectral"`` (multiply by the kernel's transform) or
    ``"direct"`` (sum of shifted copies over the kernel support).
    """
    m = get_mollifier(f.grid, eps)
    if method == "spectral":
        return PhysicalField(f.grid, m.apply(f.values))
    if method == "direct":
        return PhysicalField(f.grid, m.apply_direct(f.values))
    raise ValueError(f"method must be 'spectral' or 'direct', got {method!r}")


def cet_commutator(f: PhysicalField, g: PhysicalField, eps: float) -> PhysicalField:
    """Pointwise ``(fg)^eps - f^eps g^eps``."""
    if f.grid != g.grid:
        raise ValueError(f"grid mismatch: n={f.grid.n} vs n={g.grid.n}")
    m = get_mollifier(f.grid, eps)
    fe = m.apply(f.values)
    ge = m.apply(g.values)
    return PhysicalField(f.grid, m.apply(f.values * g.values) - fe * ge)


@dataclass(frozen=True)
class RateFit:
    """Least-squares exponent of ``value ~ eps^slope``."""

    scales: tuple
    values: tuple
    slope: float
    r2: float
    intercept: float = 0.0

    def __post_init__(self):
        s = np.asarray(self.scales, dtype=float)
        if len(s) < 2 or np.any(np.diff(s) >= 0):
            raise ValueError("scales must be strictly decreasing with at least 2 entries")
        if not math.isfinite(self.slope):
            raise ValueError("slope must be finite")

    def to_dict(self) -> dict:
        return {"scales": [float(v) for v in self.scales], "values": [float(v) for v in self.values],
                "slope": float(self.slope), "r2": float(self.r2)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> RateFit:
        d = json.loads(text)
        return cls(tuple(d["scales"]), tuple(d["values"]), d["slope"], d["r2"])


def loglog_fit(x, y, base: float = math.e) -> tuple[float, float, float]:
    """Slope, intercept and r^2 of ``log y`` against ``log x``."""
    lx = np.log(np.asarray(x, dtype=float)) / math.log(base)
    ly = np.log(np.asarray(y, dtype=float)) / math.log(base)
    A = np.vstack([lx, np.ones_like(lx)]).T
    (slope, icpt), *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = ly - (slope * lx + icpt)
    sst = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / sst if sst > 0 else 1.0
    return float(slope), float(icpt), r2


def fit_rate(scales, values) -> RateFit:
    """Fit ``value ~ C eps^slope`` over at least 4 scales spanning 2 octaves."""
    s = np.asarray(scales, dtype=float)
    v = np.asarray(values, dtype=float)
    if s.shape != v.shape:
        raise ValueError("scales and values must have equal length")
    if len(s) < 4:
        raise ValueError(f"need at least 4 scales, got {len(s)}")
    if np.any(s <= 0):
        raise ValueError("scales must be positive")
    if np.any(~np.isfinite(v)) or np.any(v <= 0):
        raise ValueError("values must be positive and finite for a log-log fit")
    if math.log2(s.max() / s.min()) < 2.0 - 1e-12:
        raise ValueError("scales must span at least 2 octaves")
    order = np.argsort(-s)
    s, v = s[order], v[order]
    slope, icpt, r2 = loglog_fit(s, v)
    return RateFit(tuple(s.tolist()), tuple(v.tolist()), slope, r2, icpt)


def _derivative_values(grid: Grid, values: np.ndarray, order: int) -> list[np.ndarray]:
    k1, k2 = grid.k_odd
    c = fft2(values)
    if order == 1:
        return [ifft2(1j * k1 * c).real, ifft2(1j * k2 * c).real]
    K1, K2 = grid.k
    return [ifft2(-K1 * K1 * c).real, ifft2(-k1 * k2 * c).real, ifft2(-K2 * K2 * c).real]


def mollified_derivative_norm(f: PhysicalField, eps: float, k: int, p: float) -> float:
    """``|| grad^k f^eps ||_{L^p}`` with the pointwise Euclidean (Frobenius) magnitude."""
    if k not in (1, 2):
        raise ValueError(f"derivative order must be 1 or 2, got {k}")
    fe = get_mollifier(f.grid, eps).apply(f.values)
    parts = _derivative_values(f.grid, fe, k)
    if k == 1:
        mag2 = parts[0] ** 2 + parts[1] ** 2
    else:
        mag2 = parts[0] ** 2 + 2.0 * parts[1] ** 2 + parts[2] ** 2
    return f.grid.lp_norm(np.sqrt(mag2), p)


def mollification_error(f: PhysicalField, eps: float, p: float) -> float:
    """``|| f^eps - f ||_{L^p}``."""
    fe = get_mollifier(f.grid, eps).apply(f.values)
    return f.grid.lp_norm(fe - f.values, p)


def resolved_scales(grid: Grid, octaves: int, top: float | None = None) -> list[float]:
    """``octaves + 1`` halving scales ending at the smallest resolved ``eps``."""
    if top is None:
        top = MIN_CELLS_ACROSS * grid.h / 2.0 * 2.0**octaves
    return [top * 2.0**-i for i in range(octaves + 1)]


# below this the error of a band-limited field is cut short by the missing modes past n/3
ERROR_MIN_CELLS = 8


def error_scales(grid: Grid, octaves: int = 5) -> list[float]:
    """Halving scales for fitting ``||f^eps - f||``, starting at ``8 h``.

    Fewer than ``octaves`` are returned when the top scale would reach
    ``period/4``.
    """
    base = ERROR_MIN_CELLS * grid.h
    octaves = min(octaves, math.ceil(math.log2(grid.length / 4 / base)) - 1)
    if octaves < 2:
        raise ValueError(f"n={grid.n} leaves fewer than 2 octaves above {ERROR_MIN_CELLS} cells")
    return [base * 2.0 ** (octaves - i) for i in range(octaves + 1)]
