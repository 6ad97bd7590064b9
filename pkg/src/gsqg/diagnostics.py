"""Conserved quantities, energy and helicity flux functionals, and exponent scans."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .littlewood_paley import (K1, K2, DyadicPartition, build_partition, kernel_convolve,
                               low_pass, shell_profile)
from .mollify import get_mollifier, loglog_fit
from .spectral import (Grid, PhysicalField, SpectralField, dealias, partial_derivative,
                       physical_values, riesz_perp_velocity, spectral_coeffs, to_spectral)


def lp_energy(theta: PhysicalField, p: float) -> float:
    """``(int |theta|^p dx)^(1/p)`` by grid quadrature."""
    if p < 1:
        raise ValueError(f"Lebesgue exponent must be >= 1, got {p}")
    return theta.grid.lp_norm(theta.values, p)


def helicity(theta: PhysicalField, i: int) -> float:
    """``int theta d_i theta dx``; identically zero for periodic fields."""
    d = physical_values(theta.grid, partial_derivative(to_spectral(theta), i).coeffs)
    return theta.grid.integrate(theta.values * d)


@dataclass
class FluxRecord:
    """One flux evaluation at a single scale (``N`` or ``eps``)."""

    time: float
    scale: float
    p: float
    gamma: float
    alpha: float | None
    value: float
    terms: tuple = (0.0, 0.0, 0.0)
    bound: float | None = None
    approach: str = "lp"
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        vals = [self.value, *self.terms] + ([] if self.bound is None else [self.bound])
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("flux record contains non-finite values")

    def row(self) -> list:
        alpha = math.nan if self.alpha is None else self.alpha
        bound = math.nan if self.bound is None else self.bound
        return [self.time, self.scale, self.p, self.gamma, alpha, *self.terms, self.value, bound]


class _Fields:
    """Physical-space ingredients shared by the flux functionals."""

    def __init__(self, theta: SpectralField, gamma: float):
        self.grid = theta.grid
        self.theta_hat = dealias(theta).coeffs
        v1, v2 = riesz_perp_velocity(SpectralField(self.grid, self.theta_hat), gamma)
        self.v_hat = (v1.coeffs, v2.coeffs)
        self.theta = self.phys(self.theta_hat)
        self.v = (self.phys(v1.coeffs), self.phys(v2.coeffs))

    def phys(self, c):
        return physical_values(self.grid, c)

    def spec(self, values):
        return spectral_coeffs(self.grid, values)

    def dealiased_product(self, a, b):
        return np.where(self.grid.dealias_mask, self.spec(a * b), 0.0)

    def d(self, c, axis):
        return 1j * self.grid.k_odd[axis - 1] * c


def _check_N(N: int, partition: DyadicPartition) -> None:
    # S_N is exact on grid products only while 2^N stays inside the dealiased band
    if not 0 <= N <= partition.jmax + 1:
        raise ValueError(f"cut-off N={N} outside [0, {partition.jmax + 1}]")


def _filter(kind: str, grid: Grid, scale):
    if kind == "lp":
        from .littlewood_paley import _low_pass_symbol

        return _low_pass_symbol(grid.n, int(scale))
    if kind == "mollified":
        return get_mollifier(grid, float(scale)).multiplier
    raise ValueError(f"approach must be 'lp' or 'mollified', got {kind!r}")


def _energy_flux(F: _Fields, sym: np.ndarray, p: float) -> float:
    g = F.grid
    s_hat = F.theta_hat * sym
    s = F.phys(s_hat)
    total = np.zeros(g.shape)
    for j in (1, 2):
        comm = F.phys(F.dealiased_product(F.v[j - 1], F.theta) * sym) - F.phys(F.v_hat[j - 1] * sym) * s
        total += comm * F.phys(F.d(s_hat, j))
    if p != 2:
        total *= np.abs(s) ** (p - 2)
    return (p - 1) * g.integrate(total)


def flux_bound(theta: SpectralField, N: int, p: float, gamma: float, alpha: float,
               partition: DyadicPartition | None = None) -> float | None:
    """``2^{(gamma-3 alpha)N} (K1*d')(N) (K2*d')(N) (K2*d)(N) ||theta||_{p+1}^{p-2}``.

    ``d'`` uses homogeneous blocks and ``d`` nonhomogeneous ones, both in
    ``L^{p+1}`` with weight ``2^{j alpha}``. Returns ``None`` when the kernel
    summability constraints fail.
    """
    partition = partition or build_partition(theta.grid)
    try:
        k1, k2 = K1(alpha, gamma), K2(alpha)
    except ValueError:
        return None
    q = p + 1.0
    th = dealias(theta)
    hom = shell_profile(th, alpha, q, partition)
    nonhom = shell_profile(th, alpha, q, partition, range(-1, partition.jmax + 1), kind="nonhomogeneous")
    val = (2.0 ** ((gamma - 3.0 * alpha) * N) * kernel_convolve(k1, hom, N)
           * kernel_convolve(k2, hom, N) * kernel_convolve(k2, nonhom, N))
    if p != 2:
        val *= theta.grid.lp_norm(physical_values(theta.grid, th.coeffs), q) ** (p - 2)
    return float(val)


def energy_flux_lp(theta: SpectralField, N: int, p: float, gamma: float,
                   partition: DyadicPartition | None = None, alpha: float | None = None,
                   time: float = 0.0) -> FluxRecord:
    """``(p-1) int [S_N(v_j theta) - S_N v_j S_N theta] d_j S_N theta |S_N theta|^{p-2} dx``.

    The field is 2/3-dealiased first. For ``p = 2`` the value equals
    ``(1/2) d/dt ||S_N theta||_2^2`` along solver trajectories.
    """
    if p < 2:
        raise ValueError(f"flux exponent p must be >= 2, got {p}")
    partition = partition or build_partition(theta.grid)
    _check_N(N, partition)
    F = _Fields(theta, gamma)
    val = _energy_flux(F, _filter("lp", theta.grid, N), p)
    bound = None if alpha is None else flux_bound(theta, N, p, gamma, alpha, partition)
    return FluxRecord(time, float(N), p, gamma, alpha, val, (val, 0.0, 0.0), bound, "lp")


def energy_flux_mollified(theta: PhysicalField, eps: float, p: float, gamma: float,
                          alpha: float | None = None, time: float = 0.0) -> FluxRecord:
    """``(p-1) int [(v_j theta)^eps - v_j^eps theta^eps] d_j theta^eps |theta^eps|^{p-2} dx``."""
    if p < 2:
        raise ValueError(f"flux exponent p must be >= 2, got {p}")
    F = _Fields(to_spectral(theta), gamma)
    val = _energy_flux(F, _filter("mollified", theta.grid, eps), p)
    return FluxRecord(time, float(eps), p, gamma, alpha, val, (val, 0.0, 0.0), None, "mollified")


def helicity_flux_terms(theta: SpectralField, scale, i: int, gamma: float, approach: str = "lp",
                        partition: DyadicPartition | None = None, time: float = 0.0) -> FluxRecord:
    """The three commutator terms of the filtered helicity budget.

    With ``~`` the filter (``S_N`` or mollification) and summation over ``j``:

    * ``I   = int d_j th~ [(d_i v_j th)~ - d_i v~_j th~]``
    * ``II  = int [(v_j d_i th)~ - v~_j d_i th~] d_j th~``
    * ``III = int [(v_j th)~ - th~ v~_j] d_i d_j th~``

    Products are formed from the dealiased field and projected back onto the
    dealiased band, so ``I + II + III`` vanishes up to rounding.
    """
    if i not in (1, 2):
        raise ValueError(f"helicity index must be 1 or 2, got {i}")
    g = theta.grid
    if approach == "lp":
        _check_N(int(scale), partition or build_partition(g))
    sym = _filter(approach, g, scale)
    F = _Fields(theta, gamma)
    t_hat = F.theta_hat
    tt_hat = t_hat * sym
    tt = F.phys(tt_hat)
    di_t = F.phys(F.d(t_hat, i))
    di_tt = F.phys(F.d(tt_hat, i))
    terms = [0.0, 0.0, 0.0]
    for j in (1, 2):
        vj_hat = F.v_hat[j - 1]
        vj = F.v[j - 1]
        vv_hat = vj_hat * sym
        vv = F.phys(vv_hat)
        dj_tt = F.phys(F.d(tt_hat, j))
        div_vj = F.phys(F.d(vj_hat, i))
        di_vv = F.phys(F.d(vv_hat, i))
        a = F.phys(F.dealiased_product(div_vj, F.theta) * sym) - F.phys(F.dealiased_product(di_vv, tt))
        b = F.phys(F.dealiased_product(vj, di_t) * sym) - F.phys(F.dealiased_product(vv, di_tt))
        c = F.phys(F.dealiased_product(vj, F.theta) * sym) - F.phys(F.dealiased_product(tt, vv))
        didj_tt = F.phys(F.d(F.d(tt_hat, i), j))
        terms[0] += g.integrate(dj_tt * a)
        terms[1] += g.integrate(b * dj_tt)
        terms[2] += g.integrate(c * didj_tt)
    total = math.fsum(terms)
    rec = FluxRecord(time, float(scale), 2.0, gamma, None, total, tuple(terms), None, approach)
    rec.extra["i"] = i
    return rec
