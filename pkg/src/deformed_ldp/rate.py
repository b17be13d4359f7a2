"""Large-deviation rate function for the smallest eigenvalue of a GOE matrix
plus a diagonal deformation carrying one isolated outlier."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import AtBranchPoint, ConfigError, OutlierAtEdge
from .freeconv import FreeConvContext
from .measure import AtomicMeasure


class _PlusInfinity:
    """+infinity as a distinct value, so it cannot be confused with overflow."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INFINITY"

    def __str__(self):
        return "inf"

    def __float__(self):
        return math.inf

    def __eq__(self, other):
        return other is self

    def __hash__(self):
        return hash(math.inf)

    def __gt__(self, other):
        return other is not self

    def __ge__(self, other):
        return True

    def __lt__(self, other):
        return False

    def __le__(self, other):
        return other is self


INFINITY = _PlusInfinity()
ExtendedReal = "float | _PlusInfinity"


def is_infinite(v) -> bool:
    return v is INFINITY


class Branch(str, Enum):
    BBP = "bbp-branch"
    PULLED = "pulled-branch"


class DeformedModel:
    """Atomic bulk law nu, semicircle variance t, outlier position."""

    def __init__(self, nu: AtomicMeasure, t: float, outlier: float):
        outlier = float(outlier)
        if not math.isfinite(outlier):
            raise ConfigError("outlier must be finite")
        if outlier > nu.support_edge:
            raise ConfigError(
                f"outlier {outlier} lies above the support edge {nu.support_edge}")
        self.ctx = FreeConvContext(nu, t)
        self.outlier = outlier

    @classmethod
    def from_context(cls, ctx: FreeConvContext, outlier: float):
        model = cls.__new__(cls)
        model.ctx, model.outlier = ctx, float(outlier)
        if model.outlier > ctx.nu.support_edge:
            raise ConfigError("outlier lies above the support edge")
        return model

    def __repr__(self):
        return f"DeformedModel({self.nu!r}, t={self.t}, outlier={self.outlier})"

    @property
    def nu(self) -> AtomicMeasure:
        return self.ctx.nu

    @property
    def t(self) -> float:
        return self.ctx.t

    @property
    def no_outlier(self) -> bool:
        return self.outlier == self.nu.support_edge

    @property
    def branch(self) -> Branch:
        return Branch.BBP if self.outlier <= self.ctx.shock_point else Branch.PULLED

    def rho(self) -> float:
        """Image of the outlier under w -> w + t G_nu(w)."""
        if self.no_outlier:
            raise OutlierAtEdge("outlier sits on the support edge")
        return self.ctx.h_transform(self.outlier)

    def _rho_or_minus_inf(self) -> float:
        return -math.inf if self.no_outlier else self.rho()

    def limit_smallest(self) -> float:
        if self.branch is Branch.BBP and not self.no_outlier:
            return self.rho()
        return self.ctx.edge

    def gamma(self, lam: float) -> float:
        if self.branch is Branch.BBP and not self.no_outlier:
            return self.outlier
        if lam <= self._rho_or_minus_inf():
            return self.outlier
        return self.ctx.subordination_upper(lam)

    def rate_two_arg(self, lam: float, g: float):
        if lam > self.ctx.edge:
            return INFINITY
        w = self.ctx.subordination_lower(lam)
        s = self.nu.log_potential
        return (0.5 * (s(w) - s(g))
                + ((lam - g) ** 2 - (lam - w) ** 2) / (4 * self.t))

    def rate(self, lam: float):
        lam = float(lam)
        if lam > self.ctx.edge:
            return INFINITY
        return self.rate_two_arg(lam, self.gamma(lam))

    def rate_derivative(self, lam: float) -> float:
        lam = float(lam)
        if lam > self.ctx.edge:
            raise ConfigError("derivative undefined above the edge")
        if self.branch is Branch.PULLED and not self.no_outlier:
            if abs(lam - self.rho()) < 1e-10:
                raise AtBranchPoint(f"lambda={lam} is the branch point")
        w = self.ctx.subordination_lower(lam)
        return (w - self.gamma(lam)) / (2 * self.t)

    def rate_curve(self, lo: float, hi: float, n: int) -> RateCurve:
        if n < 2:
            raise ConfigError("rate_curve needs n >= 2")
        xs = np.linspace(lo, hi, n)
        vals = [self.rate(x) for x in xs]
        return RateCurve(xs.tolist(), vals, self.branch, self.limit_smallest())


@dataclass
class RateCurve:
    xs: list
    values: list
    branch: Branch
    zero_at: float
    meta: dict = field(default_factory=dict)
