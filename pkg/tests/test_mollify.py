import json
import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import j0

from gsqg.mollify import (MIN_CELLS_ACROSS, Mollifier, RateFit, analytic_c0, cet_commutator,
                          fit_rate, get_mollifier, mollification_error, mollified_derivative_norm,
                          mollify, resolved_scales)
from gsqg.spectral import Grid, PhysicalField, to_physical

from conftest import random_rough, random_smooth


def field(grid, seed=0, smooth=True):
    f = random_smooth(grid, seed=seed, k0=8.0) if smooth else random_rough(grid, seed=seed)
    return to_physical(f)


def continuous_symbol(xi: float) -> float:
    """Hankel transform of the unit-mass bump, by adaptive quadrature."""
    c0 = analytic_c0()
    return quad(lambda r: 2 * math.pi * r * c0 * math.exp(-1 / (1 - r * r)) * j0(xi * r), 0, 1,
                epsabs=1e-14, limit=200)[0]


class TestKernel:
    def test_c0_value(self):
        # independent 2-D check of the unit mass
        mass = quad(lambda r: 2 * math.pi * r * math.exp(-1 / (1 - r * r)), 0, 1)[0]
        assert abs(analytic_c0() * mass - 1) < 1e-12
        assert abs(analytic_c0() - 2.1436) < 1e-3

    @pytest.mark.parametrize("cells", [5, 8, 20])
    def test_unit_quadrature_and_support(self, cells):
        g = Grid(128)
        eps = cells * g.h / 2
        m = Mollifier(g, eps)
        assert abs(m.quadrature() - 1) < 1e-8
        assert np.all(m.kernel >= 0)
        i1, i2 = np.nonzero(m.kernel)
        d1 = np.minimum(i1, g.n - i1) * g.h
        d2 = np.minimum(i2, g.n - i2) * g.h
        assert np.all(np.hypot(d1, d2) < eps)
        assert abs(m.normalization / m.c0 - 1) < 0.3

    def test_rejects_large_eps(self):
        g = Grid(64)
        with pytest.raises(ValueError, match="period/4"):
            Mollifier(g, g.length / 4)

    def test_rejects_under_resolved(self):
        g = Grid(64)
        with pytest.raises(ValueError, match="under-resolved"):
            Mollifier(g, 0.99 * MIN_CELLS_ACROSS * g.h / 2)
        Mollifier(g, MIN_CELLS_ACROSS * g.h / 2)

    def test_symbol_matches_continuous_transform(self):
        g = Grid(256)
        eps = 40 * g.h / 2
        m = get_mollifier(g, eps).multiplier
        for k in (1, 3, 5, 12, 20):
            assert abs(m[k, 0] - continuous_symbol(k * eps)) < 1e-5


class TestMollify:
    def test_constant(self):
        g = Grid(64)
        f = PhysicalField(g, np.full(g.shape, 3.7))
        out = mollify(f, 0.3)
        assert np.max(np.abs(out.values - 3.7)) < 1e-8

    def test_cosine_multiplier(self):
        g = Grid(128)
        f = PhysicalField(g, np.cos(3 * g.x[0]))
        prev = 0.0
        for eps in (0.6, 0.4, 0.25, 0.15):
            out = mollify(f, eps).values
            c = np.sum(out * f.values) / np.sum(f.values**2)
            assert 0 < c <= 1
            assert np.max(np.abs(out - c * f.values)) < 1e-12
            assert c > prev
            prev = c

    @pytest.mark.parametrize("p", [1.5, 2.0, 3.0, 6.0])
    def test_contraction(self, p):
        g = Grid(128)
        f = field(g, smooth=False)
        for eps in (0.15, 0.3):
            assert g.lp_norm(mollify(f, eps).values, p) <= g.lp_norm(f.values, p) * (1 + 1e-8)

    @pytest.mark.parametrize("n", [64, 256])
    def test_direct_matches_spectral(self, n):
        g = Grid(n)
        f = field(g, smooth=False)
        eps = 6 * g.h
        a = mollify(f, eps, "spectral").values
        b = mollify(f, eps, "direct").values
        assert np.max(np.abs(a - b)) < 1e-8

    def test_method_validation(self):
        with pytest.raises(ValueError):
            mollify(field(Grid(64)), 0.3, "fft")


class TestCommutator:
    def test_constant_factor(self):
        g = Grid(128)
        f = field(g, smooth=False)
        c = PhysicalField(g, np.full(g.shape, 2.5))
        assert np.max(np.abs(cet_commutator(f, c, 0.2).values)) < 1e-10

    def test_variance_nonnegative(self):
        g = Grid(128)
        f = field(g, seed=3, smooth=False)
        assert np.min(cet_commutator(f, f, 0.2).values) >= -1e-12

    def test_bilinear_and_symmetric(self):
        g = Grid(64)
        f1, f2, h = field(g, 1), field(g, 2), field(g, 3)
        lhs = cet_commutator(2.0 * f1 + (-3.0) * f2, h, 0.3).values
        rhs = 2.0 * cet_commutator(f1, h, 0.3).values - 3.0 * cet_commutator(f2, h, 0.3).values
        assert np.max(np.abs(lhs - rhs)) < 1e-10
        assert np.array_equal(cet_commutator(f1, h, 0.3).values, cet_commutator(h, f1, 0.3).values)

    def test_grid_mismatch(self):
        with pytest.raises(ValueError, match="grid mismatch"):
            cet_commutator(field(Grid(32)), field(Grid(64)), 0.5)


class TestFitRate:
    def test_exact_power_laws(self):
        eps = [2.0**-m for m in range(1, 7)]
        r1 = fit_rate(eps, eps)
        assert abs(r1.slope - 1) < 1e-12 and abs(r1.r2 - 1) < 1e-12
        assert abs(fit_rate(eps, [e**2 for e in eps]).slope - 2) < 1e-12

    def test_sorts_scales(self):
        eps = [0.1, 0.4, 0.2, 0.05]
        r = fit_rate(eps, [e**1.5 for e in eps])
        assert list(r.scales) == sorted(eps, reverse=True)

    @pytest.mark.parametrize("scales,values,frag", [
        ([0.4, 0.2, 0.1], [1, 1, 1], "at least 4"),
        ([0.4, 0.3, 0.25, 0.2], [1, 1, 1, 1], "2 octaves"),
        ([0.4, 0.2, 0.1, 0.05], [1, 0, 1, 1], "positive"),
        ([0.4, 0.2, 0.1, 0.05], [1, -1, 1, 1], "positive"),
    ])
    def test_errors(self, scales, values, frag):
        with pytest.raises(ValueError, match=frag):
            fit_rate(scales, values)

    def test_json_round_trip(self):
        eps = [2.0**-m for m in range(1, 6)]
        r = fit_rate(eps, [3 * e**0.7 for e in eps])
        d = json.loads(r.to_json())
        assert set(d) == {"scales", "values", "slope", "r2"}
        back = RateFit.from_json(r.to_json())
        assert back.slope == r.slope and back.scales == r.scales

    def test_invariants(self):
        with pytest.raises(ValueError):
            RateFit((0.1, 0.2), (1.0, 1.0), 1.0, 1.0)
        with pytest.raises(ValueError):
            RateFit((0.2, 0.1), (1.0, 1.0), math.nan, 1.0)

    def test_smooth_error_rate_two(self):
        g = Grid(512)
        f = PhysicalField(g, np.cos(4 * g.x[0]))
        eps = [0.4 * 2.0**-m for m in range(4)]
        r = fit_rate(eps, [mollification_error(f, e, 2.0) for e in eps])
        assert abs(r.slope - 2) < 0.05


class TestDerivativeNorms:
    def test_converges_for_band_limited(self):
        g = Grid(512)
        f = PhysicalField(g, np.sin(2 * g.x[0]) + np.cos(g.x[1]))
        exact = g.lp_norm(np.hypot(2 * np.cos(2 * g.x[0]), -np.sin(g.x[1])), 3.0)
        vals = [mollified_derivative_norm(f, e, 1, 3.0) for e in (0.4, 0.2, 0.1, 5 * g.h / 2)]
        errs = [abs(v - exact) for v in vals]
        assert all(b < a for a, b in zip(errs, errs[1:]))
        assert errs[-1] < 1e-3 * exact

    def test_constant_zero(self):
        g = Grid(64)
        f = PhysicalField(g, np.full(g.shape, 1.3))
        assert mollified_derivative_norm(f, 0.3, 1, 2.0) < 1e-12
        assert mollified_derivative_norm(f, 0.3, 2, 2.0) < 1e-12

    def test_second_order_single_mode(self):
        g = Grid(128)
        f = PhysicalField(g, np.cos(g.x[0] + g.x[1]))
        m = get_mollifier(g, 0.3).multiplier[1, 1]
        # Hessian of cos(x1 + x2) has Frobenius magnitude 2|cos|
        expect = m * g.lp_norm(2 * np.cos(g.x[0] + g.x[1]), 2.0)
        assert abs(mollified_derivative_norm(f, 0.3, 2, 2.0) - expect) < 1e-10

    def test_order_validation(self):
        with pytest.raises(ValueError):
            mollified_derivative_norm(field(Grid(32)), 0.5, 3, 2.0)


def test_resolved_scales():
    g = Grid(512)
    s = resolved_scales(g, 5)
    assert len(s) == 6
    assert abs(s[-1] - 2.5 * g.h) < 1e-15
    assert abs(s[0] / s[-1] - 32) < 1e-12
    for e in s:
        Mollifier(g, e)


def test_error_scales():
    from gsqg.mollify import ERROR_MIN_CELLS, error_scales

    g = Grid(2048)
    s = error_scales(g)
    assert len(s) == 6 and abs(s[-1] - ERROR_MIN_CELLS * g.h) < 1e-15
    assert s[0] < g.length / 4
    assert len(error_scales(Grid(1024))) == 5
    with pytest.raises(ValueError, match="octaves"):
        error_scales(Grid(128))
