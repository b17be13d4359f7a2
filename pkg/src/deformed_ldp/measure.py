"""Finitely supported probability measures and their discretization."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import AtomCollision, ConfigError, UnboundedQuantile

WEIGHT_TOL = 1e-9
MERGE_TOL = 1e-12
COLLISION_TOL = 1e-13


class AtomicMeasure:
    """Probability measure sum_i w_i delta_{loc_i}, atoms sorted ascending."""

    __slots__ = ("locations", "weights")

    def __init__(self, atoms):
        pairs = sorted((float(loc), float(w)) for loc, w in atoms)
        if not pairs:
            raise ConfigError("a measure needs at least one atom")
        for loc, w in pairs:
            if not math.isfinite(loc) or not math.isfinite(w):
                raise ConfigError(f"non-finite atom ({loc}, {w})")
            if w <= 0:
                raise ConfigError(f"atom weight must be positive, got {w}")
        total = math.fsum(w for _, w in pairs)
        if abs(total - 1.0) > WEIGHT_TOL:
            raise ConfigError(f"weights sum to {total!r}, expected 1")

        merged = [list(pairs[0])]
        for loc, w in pairs[1:]:
            if loc - merged[-1][0] < MERGE_TOL:
                merged[-1][1] += w
            else:
                merged.append([loc, w])
        locs = np.array([m[0] for m in merged])
        ws = np.array([m[1] for m in merged]) / total
        locs.flags.writeable = False
        ws.flags.writeable = False
        object.__setattr__(self, "locations", locs)
        object.__setattr__(self, "weights", ws)

    def __setattr__(self, name, value):
        raise AttributeError("AtomicMeasure is immutable")

    @classmethod
    def dirac(cls, loc: float = 0.0) -> AtomicMeasure:
        return cls([(loc, 1.0)])

    def __repr__(self):
        body = ", ".join(f"({l:g}, {w:g})" for l, w in self.atoms())
        return f"AtomicMeasure([{body}])"

    def __eq__(self, other):
        if not isinstance(other, AtomicMeasure):
            return NotImplemented
        return (np.array_equal(self.locations, other.locations)
                and np.array_equal(self.weights, other.weights))

    def __hash__(self):
        return hash((self.locations.tobytes(), self.weights.tobytes()))

    def __len__(self):
        return len(self.locations)

    def atoms(self) -> list[tuple[float, float]]:
        return list(zip(self.locations.tolist(), self.weights.tolist()))

    @property
    def support_edge(self) -> float:
        return float(self.locations[0])

    def mean(self) -> float:
        return float(self.locations @ self.weights)

    def _offsets(self, x: float) -> np.ndarray:
        d = x - self.locations
        if np.any(np.abs(d) < COLLISION_TOL * (1.0 + np.abs(self.locations))):
            raise AtomCollision(f"x={x!r} coincides with an atom")
        return d

    def stieltjes(self, x: float) -> float:
        return float(np.sum(self.weights / self._offsets(x)))

    def stieltjes_derivative(self, x: float) -> float:
        d = self._offsets(x)
        return float(-np.sum(self.weights / d**2))

    def log_potential(self, x: float) -> float:
        """-sum_i w_i log|x - loc_i|."""
        return float(-np.sum(self.weights * np.log(np.abs(self._offsets(x)))))

    def quantile_table(self) -> QuantileSpec:
        """Step quantile function of this measure as a breakpoint table."""
        pts = []
        c = 0.0
        for loc, w in self.atoms():
            pts.append((c, loc))
            c = min(1.0, c + w)
            pts.append((c, loc))
        pts[-1] = (1.0, pts[-1][1])
        return QuantileSpec.table(pts)


@dataclass(frozen=True)
class QuantileSpec:
    """Nondecreasing quantile function on [0, 1], piecewise linear.

    Breakpoints (u, value) with u nondecreasing from 0 to 1. Repeated u
    encodes a jump (a gap in the support); equal consecutive values an atom.
    """

    points: tuple

    def __post_init__(self):
        pts = tuple((float(u), float(v)) for u, v in self.points)
        if len(pts) < 2:
            raise ConfigError("quantile table needs at least two breakpoints")
        if any(not (math.isfinite(u) and math.isfinite(v)) for u, v in pts):
            raise UnboundedQuantile("quantile values must be finite on [0, 1]")
        if pts[0][0] != 0.0 or pts[-1][0] != 1.0:
            raise ConfigError("quantile table must span u in [0, 1]")
        for (u0, v0), (u1, v1) in zip(pts, pts[1:]):
            if u1 < u0 or v1 < v0:
                raise ConfigError("quantile table must be nondecreasing")
        object.__setattr__(self, "points", pts)

    @classmethod
    def uniform(cls, a: float, b: float) -> QuantileSpec:
        if not (math.isfinite(a) and math.isfinite(b)):
            raise UnboundedQuantile("uniform bounds must be finite")
        if b < a:
            raise ConfigError("uniform needs a <= b")
        return cls(((0.0, a), (1.0, b)))

    @classmethod
    def table(cls, pts) -> QuantileSpec:
        return cls(tuple(pts))

    def value(self, u: float) -> float:
        """Right-continuous evaluation at u."""
        pts = self.points
        for (u0, v0), (u1, v1) in zip(pts, pts[1:]):
            if u0 <= u < u1:
                return v0 + (v1 - v0) * (u - u0) / (u1 - u0)
        return pts[-1][1]

    def segments(self):
        for (u0, v0), (u1, v1) in zip(self.points, self.points[1:]):
            if u1 > u0:
                yield u0, u1, v0, v1


def _cell(v: float, edge: float, eps: float, upper: bool) -> int:
    r = (v - edge) / eps
    k = round(r)
    if abs(r - k) < 1e-9:  # on the grid
        return int(k)
    return math.ceil(r) if upper else math.floor(r)


def discretize(q: QuantileSpec, eps: float, side: str = "lower",
               edge: float | None = None) -> AtomicMeasure:
    """Push the law of q(U) through the floor (lower) or ceiling (upper)
    map onto the grid edge + k*eps."""
    if side not in ("lower", "upper"):
        raise ConfigError(f"side must be 'lower' or 'upper', got {side!r}")
    if not eps > 0:
        raise ConfigError("eps must be positive")
    if edge is None:
        edge = q.points[0][1]
    upper = side == "upper"
    mass: dict[int, float] = {}
    for u0, u1, v0, v1 in q.segments():
        if v1 == v0:
            k = _cell(v0, edge, eps, upper)
            mass[k] = mass.get(k, 0.0) + (u1 - u0)
            continue
        # split the linear piece where it crosses grid lines
        k_lo = math.floor((v0 - edge) / eps) + 1
        k_hi = math.ceil((v1 - edge) / eps) - 1
        cuts = [v0] + [edge + k * eps for k in range(k_lo, k_hi + 1)
                       if v0 < edge + k * eps < v1] + [v1]
        for a, b in zip(cuts, cuts[1:]):
            if b <= a:
                continue
            k = math.ceil(((a + b) / 2 - edge) / eps) if upper \
                else math.floor(((a + b) / 2 - edge) / eps)
            mass[k] = mass.get(k, 0.0) + (u1 - u0) * (b - a) / (v1 - v0)
    atoms = [(edge + k * eps, w) for k, w in sorted(mass.items()) if w > 0]
    total = math.fsum(w for _, w in atoms)
    return AtomicMeasure([(l, w / total) for l, w in atoms])


def measure_from_dict(doc: dict) -> AtomicMeasure:
    """Parse {"atoms": [[loc, w], ...]} or {"quantile": {...}, "eps": e}."""
    if not isinstance(doc, dict):
        raise ConfigError("measure document must be a JSON object")
    if "atoms" in doc:
        try:
            atoms = [(a[0], a[1]) for a in doc["atoms"]]
        except (TypeError, IndexError, KeyError) as exc:
            raise ConfigError(f"malformed atoms list: {exc}") from None
        return AtomicMeasure(atoms)
    if "quantile" in doc:
        spec = doc["quantile"]
        if "uniform" in spec:
            a, b = spec["uniform"]
            q = QuantileSpec.uniform(float(a), float(b))
        elif "table" in spec:
            q = QuantileSpec.table(spec["table"])
        else:
            raise ConfigError("quantile needs 'uniform' or 'table'")
        if "eps" not in doc:
            raise ConfigError("quantile measures need a discretization 'eps'")
        return discretize(q, float(doc["eps"]), doc.get("side", "lower"))
    raise ConfigError("measure needs 'atoms' or 'quantile'")


def load_measure(path) -> AtomicMeasure:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read measure {path}: {exc}") from None
    return measure_from_dict(doc)
