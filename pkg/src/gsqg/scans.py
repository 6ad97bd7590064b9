"""Parameter-scan drivers behind the ``flux-scan``, ``commutator-scan`` and ``analyze`` modes."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .diagnostics import (FluxRecord, energy_flux_lp, energy_flux_mollified, helicity_flux_terms)
from .littlewood_paley import besov_norm, build_partition, shell_profile
from .mollify import (cet_commutator, error_scales, fit_rate, loglog_fit, mollification_error,
                      mollified_derivative_norm, resolved_scales)
from .solver import initial_condition
from .spectral import Grid, PhysicalField, SpectralField, dealias, fft_workers, physical_values
from .synthetic import SyntheticSpec, synthesize_coeffs

SLOPE_TOL = 0.15
CRITICAL_ATOL = 1e-9


def _map(fn, items, threads: int):
    """Evaluate ``fn`` over ``items``; results come back in input order."""
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with fft_workers(1), ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def default_N_list(grid: Grid) -> list[int]:
    part = build_partition(grid)
    return list(range(part.jmin, part.jmax + 2))


def fit_window(scales: list, kind: str) -> list:
    """Scales used for the slope fit.

    N-scans drop the two coarsest cut-offs and the two nearest the dealias
    cutoff. Scale lists for eps are already bounded by kernel resolution
    and by eps < period/4, so all of them are used.
    """
    if kind == "N" and len(scales) >= 6:
        return list(scales[2:-2])
    return list(scales)


def predicted_slope(gamma: float, alpha: float, kind: str) -> float:
    return gamma - 3.0 * alpha if kind == "N" else 3.0 * alpha - gamma


def sign_agrees(slope: float, gamma: float, alpha: float, kind: str) -> bool:
    """Decay for alpha > gamma/3, growth for alpha < gamma/3, flat on the critical line."""
    s = slope if kind == "N" else -slope
    crit = gamma / 3.0
    if abs(alpha - crit) <= CRITICAL_ATOL:
        return abs(s) <= SLOPE_TOL
    return s < 0 if alpha > crit else s > 0


def _cell_field(cfg, grid: Grid, alpha: float, p: float) -> SpectralField:
    ic = cfg.ic
    if ic["type"] == "synthetic":
        spec = SyntheticSpec(alpha=alpha, p=ic.get("p") or p + 1.0, seed=ic["seed"],
                             amplitude=ic.get("amplitude", 1.0), kind=ic.get("kind", "lacunary"))
        return synthesize_coeffs(spec, grid)
    return dealias(initial_condition(ic, grid, cfg.gamma))


def _scan_cell(cfg, grid, gamma, alpha, p):
    part = build_partition(grid)
    theta = _cell_field(cfg, grid, alpha, p)
    kind = cfg.scan_kind
    scales = (cfg.N_list if cfg.N_list is not None else default_N_list(grid)) if kind == "N" else \
        (cfg.eps_list if cfg.eps_list is not None else resolved_scales(grid, 5))
    phys = PhysicalField(grid, physical_values(grid, theta.coeffs))
    recs = []
    for s in scales:
        if cfg.flux == "energy":
            if kind == "N":
                rec = energy_flux_lp(theta, int(s), p, gamma, part, alpha=_bound_alpha(alpha))
                rec.alpha = alpha
            else:
                rec = energy_flux_mollified(phys, float(s), p, gamma, alpha)
        else:
            approach = "lp" if kind == "N" else "mollified"
            rec = helicity_flux_terms(theta, int(s) if kind == "N" else float(s), cfg.helicity_index,
                                      gamma, approach, part)
            rec.alpha, rec.p = alpha, p
        recs.append(rec)
    return recs, _summarize(recs, gamma, alpha, p, kind, cfg.flux)


def _bound_alpha(alpha):
    return alpha if 0.0 < alpha < 1.0 else None


def _fit(recs, values, kind):
    scales = [r.scale for r in recs]
    win = fit_window(scales, kind)
    idx = [scales.index(s) for s in win]
    x = np.array(win, dtype=float)
    y = np.abs(np.array([values[i] for i in idx], dtype=float))
    if np.all(y == 0) or len(x) < 2:
        return None
    if np.any(y == 0):
        return {"slope": None, "r2": None, "note": "zero flux inside the fit window"}
    if kind == "N":
        slope, _, r2 = loglog_fit(2.0**x, y, base=2.0)
    else:
        slope, _, r2 = loglog_fit(x, y)
    return {"slope": slope, "r2": r2, "window": win}


def _summarize(recs, gamma, alpha, p, kind, flux):
    pred = predicted_slope(gamma, alpha, kind)
    out = {"gamma": gamma, "alpha": alpha, "p": p, "scan": kind, "flux": flux,
           "predicted_slope": pred}
    series = {"total": [r.value for r in recs]}
    if flux == "helicity":
        for name, i in (("term_I", 0), ("term_II", 1), ("term_III", 2)):
            series[name] = [r.terms[i] for r in recs]
    fits = {}
    for name, vals in series.items():
        fits[name] = _fit(recs, vals, kind)
    key = "total" if flux == "energy" else "term_III"
    main = fits[key]
    if main is None:
        out.update(trivial=True, slope=None, r2=None, within_tol=None, sign_agrees=None)
    else:
        s = main["slope"]
        out.update(trivial=False, slope=s, r2=main["r2"], fit_window=main.get("window"),
                   within_tol=None if s is None else abs(s - pred) <= SLOPE_TOL,
                   sign_agrees=None if s is None else sign_agrees(s, gamma, alpha, kind))
    if flux == "helicity":
        out["term_fits"] = fits
    ratios = [abs(r.value) / r.bound for r in recs if r.bound not in (None, 0.0)]
    out["bound_constant"] = max(ratios) if ratios else None
    return out


def exponent_scan(cfg, threads: int = 1):
    """Flux records for every ``(gamma, alpha, p, scale)`` plus per-cell fit summaries."""
    grid = Grid(cfg.n)
    alphas = cfg.alpha_list or [cfg.ic.get("alpha")]
    cells = [(g, a, p) for g in cfg.gammas for a in alphas for p in cfg.p_list]
    results = _map(lambda c: _scan_cell(cfg, grid, *c), cells, threads)
    records = [r for recs, _ in results for r in recs]
    summary = {"cells": [s for _, s in results]}
    summary["all_trivial"] = all(c["trivial"] for c in summary["cells"])
    return records, summary


# --- commutator and mollification rates ------------------------------------

COMMUTATOR_COLUMNS = ["quantity", "alpha", "beta", "q", "eps", "value"]


def synthetic_pair(grid: Grid, alpha: float, beta: float, q: float, seed: int, kind: str):
    """Two independent fields calibrated in ``L^{2q}`` so that ``1/q = 1/2q + 1/2q``."""
    f = synthesize_coeffs(SyntheticSpec(alpha, 2.0 * q, seed, kind=kind), grid)
    g = synthesize_coeffs(SyntheticSpec(beta, 2.0 * q, seed + 1, kind=kind), grid)
    return (PhysicalField(grid, physical_values(grid, f.coeffs)),
            PhysicalField(grid, physical_values(grid, g.coeffs)))


def commutator_rate(f: PhysicalField, g: PhysicalField, scales, q: float):
    vals = [g.grid.lp_norm(cet_commutator(f, g, e).values, q) for e in scales]
    return fit_rate(scales, vals)


def mollification_rates(f: PhysicalField, scales, p: float, err_scales=None):
    """Fits of ``||f^eps - f||_p`` and ``||grad f^eps||_p``.

    The error is fitted over ``err_scales`` when given, since it needs a
    coarser window than the gradient.
    """
    err_scales = scales if err_scales is None else err_scales
    err = [mollification_error(f, e, p) for e in err_scales]
    grad = [mollified_derivative_norm(f, e, 1, p) for e in scales]
    return fit_rate(err_scales, err), fit_rate(scales, grad)


def commutator_scan(cfg, threads: int = 1):
    grid = Grid(cfg.n)
    if cfg.eps_list is not None:
        scales = err_scales = cfg.eps_list
    else:
        scales = resolved_scales(grid, 5)
        try:
            err_scales = error_scales(grid, 5)
        except ValueError:
            # coarse grids have no room above 8 cells
            err_scales = scales
    pairs = cfg.pairs or [[a, a] for a in cfg.alpha_list]
    alphas = sorted({a for a, _ in pairs} | set(cfg.alpha_list))

    def pair_job(ab):
        a, b = ab
        f, g = synthetic_pair(grid, a, b, cfg.q, cfg.seed, cfg.field_kind)
        return commutator_rate(f, g, scales, cfg.q)

    def alpha_job(a):
        spec = SyntheticSpec(a, 2.0 * cfg.q, cfg.seed, kind=cfg.field_kind)
        f = PhysicalField(grid, physical_values(grid, synthesize_coeffs(spec, grid).coeffs))
        return mollification_rates(f, scales, 2.0 * cfg.q, err_scales)

    pair_fits = _map(pair_job, pairs, threads)
    alpha_fits = _map(alpha_job, alphas, threads)
    rows, summary = [], {"pairs": [], "mollification": []}
    for (a, b), fit in zip(pairs, pair_fits):
        rows += [["commutator", a, b, cfg.q, e, v] for e, v in zip(fit.scales, fit.values)]
        summary["pairs"].append({"alpha": a, "beta": b, "q": cfg.q, "predicted_slope": a + b, **fit.to_dict()})
    for a, (err, grad) in zip(alphas, alpha_fits):
        p = 2.0 * cfg.q
        rows += [["mollify_error", a, math.nan, p, e, v] for e, v in zip(err.scales, err.values)]
        rows += [["grad_norm", a, math.nan, p, e, v] for e, v in zip(grad.scales, grad.values)]
        summary["mollification"].append({"alpha": a, "p": p, "error": err.to_dict(), "grad": grad.to_dict(),
                                         "predicted_error_slope": a, "predicted_grad_slope": a - 1.0})
    return rows, summary


# --- analyze -----------------------------------------------------------------

ANALYZE_COLUMNS = ["p", "alpha", "j", "raw_norm", "weighted_norm"]


def analyze(cfg):
    grid = Grid(cfg.n)
    part = build_partition(grid)
    theta = initial_condition(cfg.ic, grid, cfg.gamma)
    alphas = cfg.alpha_list or [cfg.ic.get("alpha") or 0.0]
    rows, cells = [], []
    for p in cfg.p_list:
        for a in alphas:
            prof = shell_profile(theta, a, p, part)
            rows += [[p, a, e.j, e.raw_norm, e.weighted_norm] for e in prof.entries]
            w = prof.weighted
            tol = 1e-8 * float(np.max(w)) if len(w) and np.max(w) > 0 else 0.0
            cells.append({
                "p": p, "alpha": a,
                "besov_hom_inf": besov_norm(theta, a, p, math.inf, "homogeneous", part),
                "besov_nonhom_inf": besov_norm(theta, a, p, math.inf, "nonhomogeneous", part),
                "cN_tol": tol, "cN_verdict": prof.satisfies_cN(tol),
            })
    return rows, {"n": cfg.n, "jmin": part.jmin, "jmax": part.jmax, "cells": cells}
