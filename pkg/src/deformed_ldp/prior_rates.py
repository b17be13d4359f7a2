"""Earlier closed forms of the smallest-eigenvalue rate, used as cross-checks.

* rank-one spiked GOE with entry variance 1/2 and spike at `spike`
* GOE with no outlier, via quadrature of the semicircle tail
* general atomic bulk with no outlier, through a sup over a spherical
  integral parameter theta
"""
from __future__ import annotations

import math

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .errors import AboveEdge, ThetaOutOfRange
from .freeconv import FreeConvContext
from .measure import AtomicMeasure
from .rate import INFINITY

SQRT2 = math.sqrt(2.0)


def _tail_integral(x: float, a2: float) -> float:
    """integral of sqrt(z^2 - a2) for z from x up to -sqrt(a2), x <= -sqrt(a2)."""
    u = -x
    a = math.sqrt(a2)
    if u <= a:
        return 0.0
    r = math.sqrt(u * u - a2)
    return 0.5 * u * r - 0.5 * a2 * math.log((u + r) / a)


def spiked_rate(spike: float, x: float):
    """Rate for the smallest eigenvalue of a variance-1/2 GOE plus a rank-one
    spike. Threshold spike = -1/sqrt(2) separates the two regimes."""
    x = float(x)
    rho = spike + 1 / (2 * spike)
    if spike <= -1 / SQRT2:
        if x > -SQRT2:
            return INFINITY
        # signed integral from x to rho
        tail = _tail_integral(x, 2.0) - _tail_integral(rho, 2.0)
        return 0.5 * tail - spike * (x - rho) + 0.25 * (x * x - rho * rho)
    if x > -SQRT2:
        return INFINITY
    if x >= rho:
        return _tail_integral(x, 2.0)
    # the constant makes both pieces agree at rho
    return (0.5 * _tail_integral(x, 2.0) - spike * x + 0.25 * x * x
            + 0.25 + 0.25 * math.log(2) + 0.5 * spike * spike
            + 0.5 * math.log(-spike))


def goe_rate(x: float, t: float = 1.0):
    """Semicircle tail rate by adaptive quadrature (independent oracle)."""
    edge = -2 * math.sqrt(t)
    if x > edge:
        return INFINITY
    val, _ = quad(lambda z: math.sqrt(max(z * z - 4 * t, 0.0)), x, edge,
                  epsabs=1e-14, epsrel=1e-13, limit=200)
    return val / (2 * t)


# -- no-outlier rate through the spherical-integral sup -----------------------

def _inverse_stieltjes(nu: AtomicMeasure, s: float) -> float:
    """The x below the support with G_nu(x) = s, for s < 0."""
    edge = nu.support_edge
    # G_nu(x) <= 1/(x - edge) so x = edge + 1/s is left of the root
    lo = edge + 1.0 / s
    hi = edge - 1e-12 * (1 + abs(edge))
    if nu.stieltjes(hi) > s:
        return hi
    if nu.stieltjes(lo) <= s:  # equality for a single atom
        return lo
    return brentq(lambda x: nu.stieltjes(x) - s, lo, hi, xtol=1e-15,
                  rtol=4 * np.finfo(float).eps)


def r_transform(m, s: float) -> float:
    """R(s) = K(s) - 1/s for s < 0, m an AtomicMeasure or a FreeConvContext."""
    if isinstance(m, FreeConvContext):
        return r_transform(m.nu, s) + m.t * s
    return _inverse_stieltjes(m, s) - 1.0 / s


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(96)


def _inverse_stieltjes_batch(nu: AtomicMeasure, s: np.ndarray) -> np.ndarray:
    """Vectorized inverse of G_nu: safeguarded Newton on 1/G(x) = 1/s, which
    is exactly linear for a single atom."""
    edge = nu.support_edge
    lo = edge + 1.0 / s
    hi = np.full_like(s, edge - 1e-12 * (1 + abs(edge)))
    locs, w = nu.locations[:, None], nu.weights[:, None]
    x = lo.copy()
    for _ in range(100):
        d = x[None, :] - locs
        g = np.sum(w / d, axis=0)
        dg = -np.sum(w / d**2, axis=0)
        resid = 1.0 / g - 1.0 / s
        lo = np.where(resid <= 0, x, lo)
        hi = np.where(resid > 0, x, hi)
        step = resid * g * g / dg
        xn = x + step
        bad = (xn < lo) | (xn > hi)
        xn = np.where(bad, 0.5 * (lo + hi), xn)
        if np.all(np.abs(xn - x) <= 4e-15 * (1 + np.abs(x))):
            return xn
        x = xn
    return x


def _r_integral(m, u: float) -> float:
    """integral of R(-s) for s in [0, u] by Gauss-Legendre; R is analytic
    on the closed interval."""
    if u == 0:
        return 0.0
    if isinstance(m, FreeConvContext):
        return _r_integral(m.nu, u) - m.t * u * u / 2
    s = 0.5 * u * (_GL_NODES + 1)
    r = _inverse_stieltjes_batch(m, -s) + 1.0 / s
    return float(0.5 * u * (_GL_WEIGHTS @ r))


def _bulk_at(m, x: float):
    """|G_m(x)| and the log potential of m at x, both independent of theta."""
    if isinstance(m, FreeConvContext):
        if x > m.edge:
            raise AboveEdge(f"x={x} above the edge {m.edge}")
        return abs(m.stieltjes_conv(x)), m.log_potential_conv(x)
    if x > m.support_edge:
        raise AboveEdge(f"x={x} above the support")
    if x == m.support_edge:
        return math.inf, None
    return abs(m.stieltjes(x)), -m.log_potential(x)


def spherical_term(theta: float, m, x: float, bulk=None) -> float:
    """Asymptotic spherical-integral exponent at parameter theta >= 0 for a
    matrix with bulk m and smallest eigenvalue x (mirrored to the left edge)."""
    if theta < 0:
        raise ThetaOutOfRange(f"theta={theta!r} must be nonnegative")
    if theta == 0:
        return 0.0
    g, logpot = bulk if bulk is not None else _bulk_at(m, x)
    if 2 * theta <= g:
        return -0.5 * _r_integral(m, 2 * theta)
    return -theta * x - 0.5 * (1 + math.log(2 * theta)) - 0.5 * logpot


def theta_objective(theta: float, ctx: FreeConvContext, x: float,
                    bulk=None) -> float:
    edge = ctx.nu.support_edge
    return (spherical_term(theta, ctx, x, bulk)
            - spherical_term(theta, ctx.nu, edge, (math.inf, None))
            - theta * theta)


def _golden_max(f, a, b, tol=1e-9):
    invphi = (math.sqrt(5) - 1) / 2
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol * (1 + abs(a) + abs(b)):
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return (a + b) / 2


def no_outlier_rate(nu: AtomicMeasure, x: float, return_theta: bool = False):
    """sup over theta >= 0 of the spherical-integral difference, for unit
    semicircle variance."""
    ctx = FreeConvContext(nu, 1.0)
    x = float(x)
    if x > ctx.edge:
        return (INFINITY, None) if return_theta else INFINITY
    bulk = _bulk_at(ctx, x)
    f = lambda th: theta_objective(th, ctx, x, bulk)
    lo = 0.5 * bulk[0]  # below this the objective is flat
    hi = max(1.0, abs(x - nu.support_edge)) * 5
    theta = _golden_max(f, lo, hi)
    # Newton polish on the stationarity condition K(-2 theta) - 2 theta = x
    if theta > lo:
        k = _inverse_stieltjes(nu, -2 * theta)
        gk = -2.0 / nu.stieltjes_derivative(k) - 2
        step = (k - 2 * theta - x) / gk
        if abs(step) < 1e-3 and f(theta - step) >= f(theta):
            theta -= step
    val = max(f(theta), 0.0)
    return (val, theta) if return_theta else val
