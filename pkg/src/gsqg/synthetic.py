"""Synthetic fields with a prescribed dyadic regularity profile."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .littlewood_paley import DyadicPartition, build_partition, shell_profile
from .spectral import Grid, PhysicalField, SpectralField, physical_values, spectral_coeffs

KINDS = ("lacunary", "gaussian", "cusp")

# odd lattice directions with |b| < 3; each dilate 2^m b sits inside one shell at weight 1
LACUNARY_BASE = ((1, 0), (0, 1), (1, 1), (1, -1), (2, 1), (1, 2), (2, -1), (1, -2))

MAX_SWEEPS = 5
PROFILE_TOL = 0.10


class CalibrationError(RuntimeError):
    def __init__(self, message: str, profile):
        super().__init__(message)
        self.profile = profile


@dataclass(frozen=True)
class SyntheticSpec:
    """Target ``2^{j alpha} ||Delta_j theta||_{L^p} = amplitude`` on ``shells``.

    ``kind`` selects the phase structure:

    * ``"lacunary"``: dilates ``2^m b`` of a few lattice directions with
      random amplitudes and phases, exactly self-similar across shells;
    * ``"gaussian"``: independent random phases on every mode;
    * ``"cusp"``: a single homogeneous singularity ``|k|^-(a+2) Psi(angle)``
      with random angular harmonics.
    """

    alpha: float
    p: float = 3.0
    seed: int = 0
    shells: tuple | None = None
    amplitude: float = 1.0
    kind: str = "lacunary"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.p < 1:
            raise ValueError(f"calibration exponent p must be >= 1, got {self.p}")
        if not self.amplitude > 0:
            raise ValueError("amplitude must be positive")
        if not -2.0 < self.alpha < 4.0:
            raise ValueError(f"alpha must lie in (-2, 4), got {self.alpha}")


def _raw_lacunary(grid: Grid, spec: SyntheticSpec, rng) -> np.ndarray:
    n = grid.n
    base = LACUNARY_BASE
    amps = rng.uniform(0.5, 1.0, len(base))
    phases = rng.uniform(0.0, 2.0 * np.pi, len(base))
    widest = max(abs(v) for b in base for v in b)
    c = np.zeros(grid.shape, dtype=complex)
    m = 0
    while widest * 2**m <= n // 3:
        s = 2**m
        w = 2.0 ** (-m * spec.alpha)
        for (b1, b2), a, ph in zip(base, amps, phases):
            c[(s * b1) % n, (s * b2) % n] += 0.5 * a * w * np.exp(1j * ph)
            c[(-s * b1) % n, (-s * b2) % n] += 0.5 * a * w * np.exp(-1j * ph)
        m += 1
    return c


def _raw_gaussian(grid: Grid, spec: SyntheticSpec, rng) -> np.ndarray:
    kabs = grid.kabs
    with np.errstate(divide="ignore"):
        amp = np.where(kabs > 0, kabs ** -(spec.alpha + 1.0), 0.0)
    return spectral_coeffs(grid, rng.standard_normal(grid.shape)) * amp


def _raw_cusp(grid: Grid, spec: SyntheticSpec, rng) -> np.ndarray:
    a = spec.alpha - 2.0 / spec.p
    kabs = grid.kabs
    k1, k2 = grid.k
    ang = np.arctan2(k2, k1)
    with np.errstate(divide="ignore"):
        amp = np.where(kabs > 0, kabs ** -(a + 2.0), 0.0)
    psi = np.zeros(grid.shape, dtype=complex)
    for m in range(1, 5):
        psi += rng.normal() * np.exp(1j * m * ang) * np.exp(1j * rng.uniform(0.0, 2.0 * np.pi)) / m
    c = (amp * psi).ravel()
    c = 0.5 * (c + np.conj(c[grid.conj_index]))
    return c.reshape(grid.shape)


_RAW = {"lacunary": _raw_lacunary, "gaussian": _raw_gaussian, "cusp": _raw_cusp}


def _calibrated_shells(spec: SyntheticSpec, partition: DyadicPartition) -> list[int]:
    shells = list(partition.shells) if spec.shells is None else [int(j) for j in spec.shells]
    if not shells:
        raise ValueError("no shells to calibrate")
    lo, hi = min(shells), max(shells)
    if lo < partition.jmin or hi > partition.jmax:
        raise ValueError(f"shells [{lo}, {hi}] outside grid range [{partition.jmin}, {partition.jmax}]")
    return list(range(lo, hi + 1))


def synthesize_coeffs(spec: SyntheticSpec, grid: Grid) -> SpectralField:
    """Calibrated synthetic field in spectral form; deterministic per seed."""
    partition = build_partition(grid)
    shells = _calibrated_shells(spec, partition)
    rng = np.random.default_rng(spec.seed)
    c = _RAW[spec.kind](grid, spec, rng)
    c = np.where(grid.dealias_mask, c, 0.0)
    c[0, 0] = 0.0
    field_ = SpectralField(grid, c)
    for _ in range(MAX_SWEEPS):
        prof = shell_profile(field_, spec.alpha, spec.p, partition, shells)
        w = prof.weighted
        if np.any(w <= 0):
            raise CalibrationError("calibration hit an empty shell", prof)
        gain = spec.amplitude / w
        mult = np.zeros(grid.shape)
        for j in range(partition.jmin, partition.jtop + 1):
            if j < shells[0]:
                g = gain[0]
            elif j > shells[-1]:
                g = gain[-1]
            else:
                g = gain[j - shells[0]]
            mult += g * partition.phi_j(j)
        field_ = field_.with_coeffs(field_.coeffs * mult)
        if _profile_ok(field_, spec, partition, shells):
            return field_
    prof = shell_profile(field_, spec.alpha, spec.p, partition, shells)
    raise CalibrationError(
        f"calibration did not reach +-{PROFILE_TOL:.0%} in {MAX_SWEEPS} sweeps: "
        f"weighted profile {np.round(prof.weighted, 4).tolist()}", prof)


def _profile_ok(f: SpectralField, spec: SyntheticSpec, partition, shells) -> bool:
    w = shell_profile(f, spec.alpha, spec.p, partition, shells).weighted
    return bool(np.all(np.abs(w / spec.amplitude - 1.0) <= PROFILE_TOL))


def synthesize_besov_field(spec: SyntheticSpec, grid: Grid) -> PhysicalField:
    """Random field whose weighted shell profile is flat at ``spec.amplitude`` (within 10%)."""
    c = synthesize_coeffs(spec, grid)
    return PhysicalField(grid, physical_values(grid, c.coeffs))
