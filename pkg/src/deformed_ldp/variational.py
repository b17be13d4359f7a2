"""Variational characterization of the rate through eigenvector masses.

A point Y of the simplex holds the squared overlaps of the bottom eigenvector
with the outlier direction (index 0) and with each atom's eigenspace.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import gammaln

from .errors import AboveEdge, ConfigError, MinimizerMismatch
from .rate import INFINITY, DeformedModel, is_infinite

FEASIBILITY_TOL = 1e-12


class SimplexVector(tuple):
    """(y0, y1, ..., yp), nonnegative and summing to one."""

    def __new__(cls, values, tol=1e-9):
        vals = tuple(float(v) for v in values)
        if any(v < 0 for v in vals):
            raise ConfigError(f"negative simplex coordinate in {vals}")
        if abs(math.fsum(vals) - 1) > tol:
            raise ConfigError(f"coordinates sum to {math.fsum(vals)}")
        return super().__new__(cls, vals)

    @property
    def array(self) -> np.ndarray:
        return np.array(self)


@dataclass(frozen=True)
class FunctionalEval:
    L: float
    I_nu: object
    J: object
    K: object
    phi: float
    indicator_active: bool


def _check_strict(model: DeformedModel):
    if model.no_outlier:
        raise ConfigError("the variational formulas need outlier < support edge")


def _levels(model):
    """Diagonal levels in simplex order: outlier first, then the atoms."""
    return np.concatenate([[model.outlier], model.nu.locations])


def big_L(model: DeformedModel, lam: float, y) -> float:
    y = np.asarray(y, dtype=float)
    lev = _levels(model)
    m1 = float(lev @ y)
    m2 = float(lev**2 @ y)
    t = model.t
    return -lam * m1 / (2 * t) + m2 / (2 * t) - m1 * m1 / (4 * t)


def dirichlet_rate(weights, y):
    """-1/2 sum_k alpha_k log(y_k / alpha_k) over the atom coordinates."""
    w = np.asarray(weights, dtype=float)
    yk = np.asarray(y, dtype=float)[1:]
    if np.any(yk <= 0):
        return INFINITY
    return float(-0.5 * np.sum(w * np.log(yk / w)))


def c_t(t: float) -> float:
    return 0.5 - 0.5 * math.log(t)


def selberg_log_partition(n: int, t: float) -> float:
    """log of the GOE normalizing constant at size n, entry variance t/n."""
    if n < 1 or t <= 0:
        raise ConfigError("need n >= 1 and t > 0")
    j = np.arange(n)
    return (gammaln(n + 1) + n * (n + 1) / 4 * math.log(2 * t / n)
            + n * math.log(2 * math.pi)
            + float(np.sum(gammaln((j + 1) / 2) - gammaln(0.5))))


def selberg_ratio(n: int, t: float) -> float:
    """(1/n) log(Z_{n-1} at variance t(n-1)/n over Z_n at variance t)."""
    return (selberg_log_partition(n - 1, t * (n - 1) / n)
            - selberg_log_partition(n, t)) / n


def phi(model: DeformedModel, y) -> float:
    """Smallest eigenvalue of the diagonal deformation compressed to the
    orthogonal complement of a vector with masses y."""
    _check_strict(model)
    y = np.asarray(y, dtype=float)
    lam0, locs = model.outlier, model.nu.locations
    if y[0] <= 0:
        return lam0
    if y[1] <= 0:
        return float(locs[0])
    scaled = y[1:] * (locs - lam0)
    f = lambda x: float(np.sum(scaled / (locs - x))) - 1.0
    if f(lam0) >= 0:
        return lam0
    hi = locs[0] - 1e-15 * (1 + abs(locs[0]))
    return brentq(f, lam0, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)


def y_of_gamma(model: DeformedModel, lam: float, g: float):
    """Critical point of J attached to g; None when it leaves the simplex."""
    _check_strict(model)
    w = model.ctx.subordination_lower(lam)
    locs, alpha, t = model.nu.locations, model.nu.weights, model.t
    yk = t * alpha / ((locs - w) * (locs - g))
    y0 = 1.0 - math.fsum(yk)
    if y0 < -FEASIBILITY_TOL or np.any(yk < 0):
        return None
    if y0 < FEASIBILITY_TOL:
        y0 = 0.0
    return SimplexVector(np.concatenate([[y0], yk]), tol=1e-6)


def functional_K(model: DeformedModel, lam: float, y) -> FunctionalEval:
    _check_strict(model)
    t = model.t
    L = big_L(model, lam, y)
    inu = dirichlet_rate(model.nu.weights, y)
    p = phi(model, y)
    active = model.ctx.subordination_lower(lam) >= p
    if is_infinite(inu):
        return FunctionalEval(L, INFINITY, INFINITY, INFINITY, p, active)
    J = L + inu
    K = J - c_t(t) - model.ctx.log_potential_conv(lam) + lam * lam / (4 * t)
    return FunctionalEval(L, inu, J, K, p, active)


def _closed_form_candidates(model: DeformedModel, lam: float):
    cands = []
    for g in (model.outlier, model.ctx.subordination_upper(lam)):
        y = y_of_gamma(model, lam, g)
        if y is not None:
            cands.append(y)
    return cands


def minimize_J(model: DeformedModel, lam: float, restarts: int = 20,
               seed: int = 0, tol: float = 1e-6):
    """Minimize J over the simplex.

    The minimizer is one of the two closed-form critical points. Projected
    gradient descent from random starts tries to beat it and raises
    MinimizerMismatch if any start does by more than tol.
    """
    _check_strict(model)
    if lam > model.ctx.edge:
        raise AboveEdge(f"lambda={lam} above the edge {model.ctx.edge}")
    best = min(_closed_form_candidates(model, lam),
               key=lambda y: functional_K(model, lam, y).J)
    value = functional_K(model, lam, best).J
    obj = _batch_objective(model, lam, with_indicator=False)
    starts = np.random.default_rng(seed).dirichlet(np.ones(len(best)), restarts)
    ends, vals = projected_gradient(obj, starts)
    if np.min(vals) < value - tol:
        raise MinimizerMismatch(
            f"restart reached J={np.min(vals)!r} below {value!r}")
    return best, value


@dataclass(frozen=True)
class FixedPointReport:
    lam: float
    rate: float
    residual: float
    argmin_y: tuple
    phi_at_argmin: float
    restart_min: float


def fixed_point_report(model: DeformedModel, lam: float, restarts: int = 50,
                       seed: int = 0) -> FixedPointReport:
    """Compare the rate with the infimum of K plus the inner-rate penalty."""
    _check_strict(model)
    rate = model.rate(lam)
    if is_infinite(rate):
        raise AboveEdge(f"lambda={lam} above the edge {model.ctx.edge}")
    obj = _batch_objective(model, lam, with_indicator=True)
    cands = _closed_form_candidates(model, lam)
    cand_vals, _ = obj(np.array(cands))
    i = int(np.argmin(cand_vals))
    starts = np.random.default_rng(seed).dirichlet(
        np.ones(len(cands[0])), restarts)
    _, vals = projected_gradient(obj, starts)
    inf_value = min(float(cand_vals[i]), float(np.min(vals)))
    return FixedPointReport(
        lam=float(lam), rate=float(rate), residual=abs(rate - inf_value),
        argmin_y=tuple(cands[i]), phi_at_argmin=phi(model, cands[i]),
        restart_min=float(np.min(vals)))


def fixed_point_residual(model, lam, restarts=50, seed=0) -> float:
    return fixed_point_report(model, lam, restarts, seed).residual


# -- batched objective and projected gradient --------------------------------

def _phi_batch(model, Y):
    lam0, locs = model.outlier, model.nu.locations
    scaled = Y[:, 1:] * (locs - lam0)
    lo = np.full(len(Y), lam0)
    hi = np.full(len(Y), float(locs[0]))
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        with np.errstate(divide="ignore", invalid="ignore"):
            big = np.sum(scaled / (locs - mid[:, None]), axis=1) > 1.0
        hi = np.where(big, mid, hi)
        lo = np.where(big, lo, mid)
    out = 0.5 * (lo + hi)
    out = np.where(Y[:, 1] <= 0, locs[0], out)
    return np.where(Y[:, 0] <= 0, lam0, out)


def _batch_objective(model: DeformedModel, lam: float, with_indicator: bool):
    """Vectorized value and gradient of J, or of K plus the inner rate,
    on the rows of Y."""
    t = model.t
    lev = _levels(model)
    locs, alpha = model.nu.locations, model.nu.weights
    w = model.ctx.subordination_lower(lam)
    shift = -c_t(t) - model.ctx.log_potential_conv(lam) + lam * lam / (4 * t)
    s_w = model.nu.log_potential(w)

    def value_grad(Y):
        m1 = Y @ lev
        m2 = Y @ lev**2
        L = -lam * m1 / (2 * t) + m2 / (2 * t) - m1 * m1 / (4 * t)
        with np.errstate(divide="ignore", invalid="ignore"):
            inu = -0.5 * np.sum(alpha * np.log(Y[:, 1:] / alpha), axis=1)
            grad = (-lam * lev + lev**2 - m1[:, None] * lev) / (2 * t)
            grad[:, 1:] -= alpha / (2 * Y[:, 1:])
        out = L + inu
        if not with_indicator:
            return out, grad
        out = out + shift
        p = _phi_batch(model, Y)
        act = (w >= p) & np.isfinite(out)
        if np.any(act):
            pa, Ya = p[act], Y[act]
            d = pa[:, None] - locs
            s_p = -np.sum(alpha * np.log(np.abs(d)), axis=1)
            out[act] += (0.5 * (s_w - s_p)
                         + ((lam - pa) ** 2 - (lam - w) ** 2) / (4 * t))
            # chain rule through sum_k y_k (eta_k - outlier)/(eta_k - phi) = 1,
            # which stays regular when phi reaches the outlier
            dI = (pa + t * np.sum(alpha / d, axis=1) - lam) / (2 * t)
            lift = locs - model.outlier
            dF = np.sum(Ya[:, 1:] * lift / d**2, axis=1)
            grad[act, 1:] += dI[:, None] * (lift / d) / dF[:, None]
        return out, grad

    return value_grad


def project_simplex(V):
    """Euclidean projection of each row onto the probability simplex."""
    n = V.shape[1]
    U = -np.sort(-V, axis=1)
    css = np.cumsum(U, axis=1) - 1
    k = np.arange(1, n + 1)
    cond = U - css / k > 0
    r = n - 1 - np.argmax(cond[:, ::-1], axis=1)
    theta = css[np.arange(len(V)), r] / (r + 1)
    return np.maximum(V - theta[:, None], 0.0)


def projected_gradient(f, Y0, max_iter=500, ftol=1e-15):
    """Batched spectral projected gradient (Barzilai-Borwein steps with an
    Armijo search along the projected direction).

    f maps an (n, d) array of simplex points to (values, gradients).
    """
    Y = project_simplex(np.asarray(Y0, dtype=float))
    n = len(Y)
    fy, g = f(Y)
    alpha = np.full(n, 0.1)
    live = np.isfinite(fy)
    for _ in range(max_iter):
        idx = np.flatnonzero(live)
        if idx.size == 0:
            break
        Yl, fl, gl = Y[idx], fy[idx], g[idx]
        d = project_simplex(Yl - alpha[idx, None] * gl) - Yl
        slope = np.sum(gl * d, axis=1)
        mu = np.ones(idx.size)
        accepted = np.zeros(idx.size, dtype=bool)
        fn, gn = fl.copy(), gl.copy()
        for _ in range(50):
            todo = ~accepted
            cand = Yl[todo] + mu[todo, None] * d[todo]
            fc, gc = f(cand)
            ok = np.isfinite(fc) & (fc <= fl[todo] + 1e-4 * mu[todo] * slope[todo])
            sub = np.flatnonzero(todo)[ok]
            fn[sub], gn[sub] = fc[ok], gc[ok]
            accepted[sub] = True
            if accepted.all():
                break
            mu[~accepted] *= 0.5
        step = mu[:, None] * d
        ydiff = gn - gl
        sy = np.sum(step * ydiff, axis=1)
        ss = np.sum(step * step, axis=1)
        new_alpha = np.where(sy > 0, ss / np.where(sy > 0, sy, 1.0), 1e3)
        alpha[idx] = np.clip(new_alpha, 1e-10, 1e3)
        stall = ~accepted | (fl - fn <= ftol * (1 + np.abs(fl))) | (ss == 0)
        Y[idx[accepted]] = Yl[accepted] + step[accepted]
        fy[idx], g[idx] = fn, gn
        live[idx[stall]] = False
    return Y, fy
