"""Dealiased pseudospectral RK4 integration of the gSQG transport equation."""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .spectral import (Grid, PhysicalField, SpectralField, physical_values, riesz_perp_velocity,
                       spectral_coeffs, to_spectral)

CHECKPOINT_MAGIC = b"GSQG1"
_HEADER = struct.Struct("<5sIddQ")


class CFLViolation(RuntimeError):
    pass


class NumericalAbort(RuntimeError):
    """Raised when the state becomes non-finite."""

    def __init__(self, message: str, last_checkpoint=None, series=None):
        super().__init__(message)
        self.last_checkpoint = last_checkpoint
        self.series = series


@dataclass(frozen=True)
class SolverState:
    theta: SpectralField
    time: float = 0.0
    step_count: int = 0
    gamma: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.gamma <= 2.0:
            raise ValueError(f"gamma must lie in [0, 2], got {self.gamma}")
        if self.time < 0:
            raise ValueError("time must be nonnegative")

    @property
    def grid(self) -> Grid:
        return self.theta.grid


@dataclass(frozen=True)
class StepPolicy:
    """``dt=None`` selects ``dt = cfl * h / max|v|`` at every step."""

    dt: float | None = None
    cfl_number: float = 0.4
    filter: bool = False
    strict: bool = False

    def __post_init__(self):
        if self.dt is not None and not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not 0.0 < self.cfl_number < 1.0:
            raise ValueError(f"cfl_number must lie in (0, 1), got {self.cfl_number}")


def _velocity(theta_hat: np.ndarray, grid: Grid, gamma: float):
    v1, v2 = riesz_perp_velocity(SpectralField(grid, theta_hat), gamma)
    return v1.coeffs, v2.coeffs


def _rhs(theta_hat: np.ndarray, grid: Grid, gamma: float, form: str) -> np.ndarray:
    v1h, v2h = _velocity(theta_hat, grid, gamma)
    v1 = physical_values(grid, v1h)
    v2 = physical_values(grid, v2h)
    k1, k2 = grid.k_odd
    if form == "divergence":
        th = physical_values(grid, theta_hat)
        out = 1j * k1 * spectral_coeffs(grid, v1 * th) + 1j * k2 * spectral_coeffs(grid, v2 * th)
    elif form == "advective":
        d1 = physical_values(grid, 1j * k1 * theta_hat)
        d2 = physical_values(grid, 1j * k2 * theta_hat)
        out = spectral_coeffs(grid, v1 * d1 + v2 * d2)
    else:
        raise ValueError(f"form must be 'divergence' or 'advective', got {form!r}")
    return -np.where(grid.dealias_mask, out, 0.0)


def nonlinear_term(state: SolverState, form: str = "divergence") -> SpectralField:
    """``-dealias(F(v_1 theta) i k_1 + F(v_2 theta) i k_2)``, or the advective variant."""
    return SpectralField(state.grid, _rhs(state.theta.coeffs, state.grid, state.gamma, form))


def max_velocity(state: SolverState) -> float:
    v1h, v2h = _velocity(state.theta.coeffs, state.grid, state.gamma)
    g = state.grid
    return float(np.max(np.hypot(physical_values(g, v1h), physical_values(g, v2h))))


def cfl_dt(state: SolverState, policy: StepPolicy) -> float:
    vmax = max_velocity(state)
    if vmax == 0:
        return policy.dt if policy.dt is not None else policy.cfl_number * state.grid.h
    return policy.cfl_number * state.grid.h / vmax


def spectral_filter(grid: Grid) -> np.ndarray:
    """``exp(-36 (|k|/k_max)^36)`` with ``k_max = n/3``."""
    return np.exp(-36.0 * (grid.kabs / (grid.n / 3.0)) ** 36)


def step_rk4(state: SolverState, policy: StepPolicy, dt: float | None = None,
             form: str = "divergence") -> SolverState:
    """Advance by one classical RK4 step of size ``dt`` (default from ``policy``)."""
    g = state.grid
    if dt is None:
        dt = policy.dt if policy.dt is not None else cfl_dt(state, policy)
    if policy.strict:
        vmax = max_velocity(state)
        if vmax > 0 and dt > policy.cfl_number * g.h / vmax * (1 + 1e-12):
            raise CFLViolation(f"dt={dt:.6g} violates CFL {policy.cfl_number} with max|v|={vmax:.6g}")
    y = state.theta.coeffs
    f = lambda c: _rhs(c, g, state.gamma, form)  # noqa: E731
    a = f(y)
    b = f(y + 0.5 * dt * a)
    c = f(y + 0.5 * dt * b)
    d = f(y + dt * c)
    new = y + (dt / 6.0) * (a + 2.0 * b + 2.0 * c + d)
    if policy.filter:
        new = new * spectral_filter(g)
    return SolverState(SpectralField(g, new), state.time + dt, state.step_count + 1, state.gamma)


# --- checkpoints -----------------------------------------------------------

def quantize(theta: SpectralField) -> SpectralField:
    """Round coefficients through the checkpoint precision (complex64)."""
    return SpectralField(theta.grid, theta.coeffs.astype("<c8").astype(complex))


def write_checkpoint(path, state: SolverState) -> Path:
    path = Path(path)
    n = state.grid.n
    header = _HEADER.pack(CHECKPOINT_MAGIC, n, float(state.gamma), float(state.time), int(state.step_count))
    payload = np.ascontiguousarray(state.theta.coeffs, dtype="<c8").tobytes()
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(header)
        fh.write(payload)
    tmp.replace(path)
    return path


def read_checkpoint(path) -> SolverState:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise ValueError(f"{path}: truncated checkpoint header")
    magic, n, gamma, time, steps = _HEADER.unpack_from(data, 0)
    if magic != CHECKPOINT_MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    expected = _HEADER.size + n * n * 8
    if len(data) != expected:
        raise ValueError(f"{path}: expected {expected} bytes, found {len(data)}")
    coeffs = np.frombuffer(data, dtype="<c8", offset=_HEADER.size).reshape(n, n).astype(complex)
    return SolverState(SpectralField(Grid(n), coeffs), time, int(steps), gamma)


# --- initial conditions ----------------------------------------------------

def initial_condition(ic: dict, grid: Grid, gamma: float = 1.0) -> SpectralField:
    """Build the initial spectral field described by an ``ic`` mapping."""
    t = ic["type"]
    x1, x2 = grid.x
    if t == "zero":
        return SpectralField(grid, np.zeros(grid.shape, dtype=complex))
    if t == "steady_mode":
        return to_spectral(PhysicalField(grid, ic.get("amplitude", 1.0) * np.cos(x1)))
    if t == "single_mode":
        k1, k2 = ic.get("k", [1, 0])
        vals = ic.get("amplitude", 1.0) * np.cos(k1 * x1 + k2 * x2 + ic.get("phase", 0.0))
        return to_spectral(PhysicalField(grid, vals))
    if t == "gaussian_random":
        return gaussian_random_field(grid, ic.get("k0", 4.0), ic.get("rms", 1.0), ic["seed"])
    if t == "synthetic":
        from .synthetic import SyntheticSpec, synthesize_coeffs

        spec = SyntheticSpec(alpha=ic["alpha"], p=ic.get("p") or 3.0, seed=ic["seed"],
                             amplitude=ic.get("amplitude", 1.0), kind=ic.get("kind", "lacunary"))
        return synthesize_coeffs(spec, grid)
    if t == "dump":
        st = read_checkpoint(ic["path"])
        if st.grid != grid:
            raise ValueError(f"checkpoint grid n={st.grid.n} does not match n={grid.n}")
        return st.theta
    raise ValueError(f"unknown initial condition type {t!r}")


def gaussian_random_field(grid: Grid, k0: float, rms: float, seed: int) -> SpectralField:
    """Smooth random field with spectrum ``exp(-(|k|/k0)^2)``, zero mean, given RMS."""
    rng = np.random.default_rng(seed)
    c = spectral_coeffs(grid, rng.standard_normal(grid.shape)) * np.exp(-(grid.kabs / k0) ** 2)
    c = np.where(grid.dealias_mask, c, 0.0)
    c[0, 0] = 0.0
    norm = math.sqrt(float(np.sum(np.abs(c) ** 2)))
    if norm == 0:
        return SpectralField(grid, c)
    return SpectralField(grid, c * (rms / norm))


# --- driver ----------------------------------------------------------------

def _record(state: SolverState, cfg, dt: float, partition) -> list:
    from .diagnostics import energy_flux_lp, helicity

    g = state.grid
    th = PhysicalField(g, physical_values(g, state.theta.coeffs))
    row = [state.time, state.step_count, dt, state.theta.coeffs[0, 0].real]
    row += [g.lp_norm(th.values, p) for p in cfg.norms_p]
    row += [helicity(th, 1), helicity(th, 2)]
    row += [energy_flux_lp(state.theta, N, 2.0, state.gamma, partition).value for N in cfg.flux_N]
    return row + ["ok"]


def series_columns(cfg) -> list:
    cols = ["time", "step", "dt", "mean"]
    cols += [f"norm_L{p:g}" for p in cfg.norms_p]
    cols += ["helicity_1", "helicity_2"]
    cols += [f"flux_N{N}" for N in cfg.flux_N]
    return cols + ["status"]


def run(config, out_dir=None) -> "DiagnosticSeries":
    """Integrate to ``config.horizon`` recording diagnostics every ``diag_every`` steps.

    Writing a checkpoint rounds the live state to the checkpoint precision,
    so a restart from that file continues bit-for-bit like the original run.
    """
    from .io import DiagnosticSeries, build_metadata
    from .littlewood_paley import build_partition
    from .spectral import dealias

    grid = Grid(config.n)
    partition = build_partition(grid)
    if config.ic["type"] == "dump":
        state = read_checkpoint(config.ic["path"])
        if state.grid != grid:
            raise ValueError(f"checkpoint grid n={state.grid.n} does not match n={grid.n}")
        state = replace(state, gamma=config.gamma)
    else:
        theta = dealias(initial_condition(config.ic, grid, config.gamma))
        state = SolverState(theta, 0.0, 0, config.gamma)
    policy = StepPolicy(config.dt, config.cfl, config.filter, config.strict_cfl)
    meta = build_metadata(config, partition.profile_hash(),
                          checkpoint_quantization=bool(config.checkpoint_every and out_dir))
    series = DiagnosticSeries(meta, series_columns(config))
    series.append(_record(state, config, 0.0, partition))
    ckpt_dir = None
    last_ckpt = None
    if out_dir is not None and config.checkpoint_every:
        ckpt_dir = Path(out_dir) / "checkpoints"
        ckpt_dir.mkdir(parents=True, exist_ok=True)
    horizon = config.horizon
    tiny = 1e-12 * max(1.0, horizon)
    recorded = True
    while state.time < horizon - tiny:
        dt = policy.dt if policy.dt is not None else cfl_dt(state, policy)
        dt = min(dt, horizon - state.time)
        new = step_rk4(state, policy, dt, config.form)
        if not np.all(np.isfinite(new.theta.coeffs)):
            series.append([new.time, new.step_count, dt] + [math.nan] * (len(series.columns) - 4) + ["abort"])
            raise NumericalAbort(f"non-finite state at step {new.step_count} (t={new.time:.6g})",
                                 last_ckpt, series)
        state = new
        recorded = False
        if ckpt_dir is not None and state.step_count % config.checkpoint_every == 0:
            state = replace(state, theta=quantize(state.theta))
            last_ckpt = write_checkpoint(ckpt_dir / f"step_{state.step_count:08d}.gsqg", state)
        if state.step_count % config.diag_every == 0:
            series.append(_record(state, config, dt, partition))
            recorded = True
    if not recorded:
        series.append(_record(state, config, dt, partition))
    series.final_state = state
    return series
