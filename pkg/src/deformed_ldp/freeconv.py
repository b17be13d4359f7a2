"""Free convolution of an atomic law with a semicircle of variance t.

Everything goes through the subordination map: the convolved law's Stieltjes
transform at x equals the atomic one at omega(x), where omega inverts
H(w) = w + t * G_nu(w) on its increasing branch left of the shock point.
"""
from __future__ import annotations

import math
from functools import cached_property

import numpy as np
from scipy.optimize import brentq

from .errors import AboveEdge, BelowBranch, ConfigError, DomainAboveSupport
from .measure import AtomicMeasure

_XTOL = 1e-15
_RTOL = 4 * np.finfo(float).eps


def _bisect_decreasing(g, lo, hi, n_iter=90):
    """Vectorized bisection for the root of a decreasing g on [lo, hi]."""
    lo = np.array(lo, dtype=float, copy=True)
    hi = np.array(hi, dtype=float, copy=True)
    for _ in range(n_iter):
        mid = 0.5 * (lo + hi)
        pos = g(mid) > 0
        lo = np.where(pos, mid, lo)
        hi = np.where(pos, hi, mid)
    return 0.5 * (lo + hi)


class FreeConvContext:
    def __init__(self, nu: AtomicMeasure, t: float):
        if not (t > 0 and math.isfinite(t)):
            raise ConfigError(f"variance t must be positive, got {t!r}")
        self.nu = nu
        self.t = float(t)
        self.shock_point = self._solve_shock()
        self.edge = self.h_transform(self.shock_point)

    def __repr__(self):
        return f"FreeConvContext({self.nu!r}, t={self.t})"

    # -- transform on the real line left of the support ---------------------

    def h_transform(self, w: float) -> float:
        if w >= self.nu.support_edge:
            raise DomainAboveSupport(f"w={w!r} is not below the support")
        return w + self.t * self.nu.stieltjes(w)

    def _curvature(self, w):
        """sum alpha / (eta - w)^2, vectorized."""
        d = self.nu.locations[:, None] - np.atleast_1d(w)[None, :]
        return np.sum(self.nu.weights[:, None] / d**2, axis=0)

    def _solve_shock(self) -> float:
        # the curvature is increasing left of the support and blows up at
        # the leftmost atom; it is at most 1/(edge - w)^2 so edge - sqrt(t)
        # is a valid left bracket
        edge = self.nu.support_edge
        target = 1.0 / self.t
        f = lambda w: float(self._curvature(w)[0]) - target
        lo = edge - math.sqrt(self.t)
        if f(lo) >= 0:
            return lo
        return brentq(f, lo, edge - 1e-12 * math.sqrt(self.t),
                      xtol=_XTOL, rtol=_RTOL)

    # -- subordination -------------------------------------------------------

    def subordination_lower(self, x: float) -> float:
        """omega(x): root of H(w) = x with w <= shock point."""
        x = float(x)
        if x > self.edge:
            if x - self.edge > 1e-12 * (1 + abs(x)):
                raise AboveEdge(f"x={x!r} exceeds the edge {self.edge!r}")
            x = self.edge
        if x == self.edge:
            return self.shock_point
        # H(w) < w below the support, so [x, shock] brackets the root
        lo = x
        while self.h_transform(lo) > x:  # only from rounding near the edge
            lo -= 1.0 + abs(lo)
        return brentq(lambda w: self.h_transform(w) - x, lo, self.shock_point,
                      xtol=_XTOL, rtol=_RTOL)

    def subordination_upper(self, x: float) -> float:
        """omega*(x): root of H(w) = x on [shock point, support edge)."""
        x = float(x)
        if x > self.edge:
            if x - self.edge > 1e-12 * (1 + abs(x)):
                raise BelowBranch(f"x={x!r} exceeds the edge {self.edge!r}")
            x = self.edge
        if x == self.edge:
            return self.shock_point
        edge = self.nu.support_edge
        gap = 0.5 * (edge - self.shock_point)
        while self.h_transform(edge - gap) > x:
            gap *= 0.5
            if gap < 1e-300:
                raise BelowBranch(f"no upper-branch root for x={x!r}")
        return brentq(lambda w: self.h_transform(w) - x, self.shock_point,
                      edge - gap, xtol=_XTOL, rtol=_RTOL)

    def stieltjes_conv(self, x: float) -> float:
        return self.nu.stieltjes(self.subordination_lower(x))

    def log_potential_conv(self, x: float) -> float:
        """integral of log|lambda - x| against the convolved law, x <= edge."""
        w = self.subordination_lower(x)
        return -self.nu.log_potential(w) + (w - x) ** 2 / (2 * self.t)

    # -- density --------------------------------------------------------------

    def biane_v(self, u):
        """Smallest v >= 0 with sum alpha / ((eta-u)^2 + v^2) <= 1/t."""
        u_arr = np.atleast_1d(np.asarray(u, dtype=float))
        d2 = (self.nu.locations[:, None] - u_arr[None, :]) ** 2
        w = self.nu.weights[:, None]
        target = 1.0 / self.t
        with np.errstate(divide="ignore"):
            inside = np.sum(w / d2, axis=0) > target
        s = _bisect_decreasing(
            lambda s: np.sum(w / (d2 + s[None, :]), axis=0) - target,
            np.zeros_like(u_arr), np.full_like(u_arr, self.t))
        v = np.where(inside, np.sqrt(s), 0.0)
        return float(v[0]) if np.ndim(u) == 0 else v

    def _support_components(self):
        """Maximal u-intervals on which biane_v is positive."""
        locs, t = self.nu.locations, self.t
        target = 1.0 / t
        f = lambda u: float(self._curvature(u)[0]) - target
        # mirror image of the shock point: decreasing, root within sqrt(t)
        top = locs[-1] + math.sqrt(t)
        right = top if f(top) >= 0 else brentq(
            f, locs[-1] + 1e-12 * math.sqrt(t), top, xtol=_XTOL, rtol=_RTOL)
        cuts = [self.shock_point]
        for a, b in zip(locs, locs[1:]):
            # curvature is convex between neighbours; locate its minimum
            fp = lambda u: float(np.sum(2 * self.nu.weights / (locs - u) ** 3))
            h = (b - a) * 1e-12
            umin = brentq(fp, a + h, b - h, xtol=_XTOL, rtol=_RTOL)
            if f(umin) < 0:
                cuts.append(brentq(f, a + h, umin, xtol=_XTOL, rtol=_RTOL))
                cuts.append(brentq(f, umin, b - h, xtol=_XTOL, rtol=_RTOL))
        cuts.append(right)
        return list(zip(cuts[::2], cuts[1::2]))

    def _x_of_u(self, u, v):
        du = u[None, :] - self.nu.locations[:, None]
        re_g = np.sum(self.nu.weights[:, None] * du / (du**2 + v[None, :] ** 2),
                      axis=0)
        return u + self.t * re_g

    def density_curve(self, n_points: int = 4000):
        """Sample the convolved density as arrays (x, density).

        Each support component gets a cosine-clustered grid in the Biane
        parameter so the square-root edges are resolved.
        """
        comps = self._support_components()
        if n_points < 2 * len(comps):
            raise ConfigError(f"need at least {2 * len(comps)} points")
        widths = np.array([b - a for a, b in comps])
        counts = np.maximum(2, np.floor(n_points * widths / widths.sum())).astype(int)
        counts[np.argmax(widths)] += n_points - counts.sum()
        xs, dens = [], []
        for (a, b), m in zip(comps, counts):
            s = np.linspace(0.0, 1.0, m)
            u = a + (b - a) * 0.5 * (1 - np.cos(np.pi * s))
            u[0], u[-1] = a, b
            v = self.biane_v(u)
            v[0] = v[-1] = 0.0
            xs.append(self._x_of_u(u, v))
            dens.append(v / (np.pi * self.t))
        return np.concatenate(xs), np.concatenate(dens)

    @cached_property
    def _cdf_table(self):
        x, d = self.density_curve(20001)
        cum = np.concatenate([[0.0], np.cumsum(0.5 * (d[1:] + d[:-1]) * np.diff(x))])
        return x, cum / cum[-1]

    def cdf(self, x: float) -> float:
        xs, cum = self._cdf_table
        return float(np.interp(x, xs, cum, left=0.0, right=1.0))
