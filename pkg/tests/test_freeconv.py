import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from deformed_ldp import AtomicMeasure, FreeConvContext
from deformed_ldp.errors import AboveEdge, DomainAboveSupport


def semicircle(x, t=1.0):
    return math.sqrt(max(4 * t - x * x, 0.0)) / (2 * math.pi * t)


@pytest.fixture
def goe(dirac0):
    return FreeConvContext(dirac0, 1.0)


def test_goe_shock_and_edge(goe):
    # 1/w^2 = 1 -> w = -1, edge = -1 + 1/(-1)
    assert goe.shock_point == -1.0
    assert goe.edge == -2.0


def test_two_atom_shock_and_edge(two_atoms):
    # (a+1)/(a-1)^2 = 1 with a = w^2 gives a = 3
    ctx = FreeConvContext(two_atoms, 1.0)
    assert abs(ctx.shock_point + math.sqrt(3)) <= 1e-10
    assert abs(ctx.edge + 1.5 * math.sqrt(3)) <= 1e-10


def test_h_transform_domain(goe):
    assert goe.h_transform(-2.0) == -2.5
    with pytest.raises(DomainAboveSupport):
        goe.h_transform(0.5)


def test_goe_branches(goe):
    # roots of w^2 + 3w + 1 = 0
    assert goe.subordination_lower(-3) == pytest.approx((-3 - math.sqrt(5)) / 2, abs=1e-14)
    assert goe.subordination_upper(-3) == pytest.approx((-3 + math.sqrt(5)) / 2, abs=1e-14)


def test_shifted_atom_branches():
    # H(w) = w + 1/(w-1) = -2  <=>  w^2 + w - 1 = 0
    ctx = FreeConvContext(AtomicMeasure.dirac(1.0), 1.0)
    assert ctx.subordination_lower(-2) == pytest.approx((-1 - math.sqrt(5)) / 2, abs=1e-14)
    assert ctx.subordination_upper(-2) == pytest.approx((-1 + math.sqrt(5)) / 2, abs=1e-14)


def test_above_edge(goe):
    with pytest.raises(AboveEdge):
        goe.subordination_lower(-1.9)
    assert goe.subordination_lower(-2.0) == goe.shock_point


MEASURES = [
    AtomicMeasure.dirac(0.0),
    AtomicMeasure([(-1.0, 0.5), (1.0, 0.5)]),
    AtomicMeasure([(-2.0, 0.1), (0.0, 0.3), (3.0, 0.6)]),
]


@settings(max_examples=80, deadline=None)
@given(k=st.integers(0, 2), t=st.floats(0.2, 3.0), depth=st.floats(1e-6, 20.0))
def test_branch_residuals(k, t, depth):
    ctx = FreeConvContext(MEASURES[k], t)
    x = ctx.edge - depth
    w = ctx.subordination_lower(x)
    ws = ctx.subordination_upper(x)
    assert w <= ctx.shock_point <= ws < ctx.nu.support_edge
    assert abs(ctx.h_transform(w) - x) <= 1e-12 * (1 + abs(x))
    assert abs(ctx.h_transform(ws) - x) <= 1e-12 * (1 + abs(x))
    # subordination identity
    assert abs(w - (x - t * ctx.stieltjes_conv(x))) <= 1e-10


def test_stieltjes_conv_against_quadrature(goe):
    for x in (-10.0, -3.0, -2.2):
        oracle = quad(lambda y: semicircle(y) / (x - y), -2, 2, epsabs=1e-13)[0]
        assert goe.stieltjes_conv(x) == pytest.approx(oracle, abs=1e-10)
    assert goe.stieltjes_conv(-10) == pytest.approx(-0.101021, abs=1e-6)


def test_log_potential_against_quadrature(goe):
    assert goe.log_potential_conv(-3) == pytest.approx(1.0353727, abs=1e-7)
    for x in (-6.0, -3.0, -2.05):
        oracle = quad(lambda y: math.log(y - x) * semicircle(y), -2, 2,
                      epsabs=1e-13, limit=200)[0]
        assert goe.log_potential_conv(x) == pytest.approx(oracle, abs=1e-9)


@pytest.mark.parametrize("k", [0, 1, 2])
def test_hopf_lax_against_density(k):
    ctx = FreeConvContext(MEASURES[k], 1.0)
    xs, ds = ctx.density_curve(8000)
    for x in np.linspace(ctx.edge - 4, ctx.edge - 0.05, 20):
        oracle = np.trapezoid(np.log(xs - x) * ds, xs)
        assert abs(ctx.log_potential_conv(x) - oracle) <= 1e-6


def test_biane_v_semicircle(goe):
    u = np.linspace(-0.99, 0.99, 51)
    assert np.allclose(goe.biane_v(u), np.sqrt(1 - u**2), atol=1e-12)
    assert goe.biane_v(1.5) == 0.0


def test_density_goe_matches_semicircle(goe):
    xs, ds = goe.density_curve(4000)
    assert xs[0] == -2.0 and ds[0] == 0.0 and ds[-1] == 0.0
    exact = np.array([semicircle(x) for x in xs])
    assert np.max(np.abs(ds - exact)) < 1e-12


@pytest.mark.parametrize("k", [0, 1, 2])
def test_density_normalized(k):
    ctx = FreeConvContext(MEASURES[k], 1.0)
    xs, ds = ctx.density_curve(4000)
    assert np.all(np.diff(xs) >= 0)
    assert abs(np.trapezoid(ds, xs) - 1) <= 1e-6
    assert abs(xs[0] - ctx.edge) < 1e-12


def test_cdf(goe):
    assert goe.cdf(-2.5) == 0.0
    assert goe.cdf(2.5) == 1.0
    assert goe.cdf(0.0) == pytest.approx(0.5, abs=1e-6)
    oracle = quad(semicircle, -2, -1)[0]
    assert goe.cdf(-1.0) == pytest.approx(oracle, abs=1e-6)
    vals = [goe.cdf(x) for x in np.linspace(-2.5, 2.5, 101)]
    assert np.all(np.diff(vals) >= 0)
