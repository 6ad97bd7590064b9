"""Pseudospectral testbed for the generalized surface quasi-geostrophic equation."""

__version__ = "0.1.0"

from .spectral import (Grid, PhysicalField, SpectralField, dealias, fractional_laplacian,
                       partial_derivative, riesz_perp_velocity, set_fft_workers, to_physical,
                       to_spectral)
from .littlewood_paley import (K1, K2, DyadicPartition, ShellNormProfile, bernstein_ratios,
                               besov_norm, build_partition, cN_tail_profile, dyadic_block,
                               increment_norm, kernel_convolve, low_pass)
from .mollify import (Mollifier, RateFit, cet_commutator, fit_rate, mollified_derivative_norm,
                      mollify)
from .solver import SolverState, StepPolicy, nonlinear_term, run, step_rk4
from .diagnostics import (FluxRecord, energy_flux_lp, energy_flux_mollified, helicity,
                          helicity_flux_terms, lp_energy)
from .synthetic import SyntheticSpec, synthesize_besov_field
from .scans import exponent_scan
from .config import ConfigError, RunConfig, parse_config
from .io import DiagnosticSeries
from .cli import execute
from .estimators import BesovExponent, LowPass, Mollify, ShellNorms

__all__ = [name for name in dir() if not name.startswith("_")]
