"""Finite-N experiments: sampling, eigen-solves and Monte Carlo estimates.

Every sample is drawn from its own counter-based stream keyed on
(seed, sample index), so results do not depend on how samples are split
across worker processes.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
from scipy import stats
from threadpoolctl import threadpool_limits

from .errors import ConfigError, DegenerateDirection
from .measure import AtomicMeasure
from .rate import DeformedModel
from .variational import phi

CHUNK = 500


@dataclass(frozen=True)
class GoeSpec:
    n: int
    t: float
    seed: int

    def __post_init__(self):
        if self.n < 2:
            raise ConfigError("matrix size must be at least 2")
        if not self.t > 0:
            raise ConfigError("variance must be positive")


@dataclass(frozen=True)
class DeformedSample:
    matrix: np.ndarray
    b_diag: np.ndarray


@dataclass(frozen=True)
class McReport:
    n_samples: int
    n_hits: int
    estimate: float
    std_error: float
    empirical_rate: float
    seed: int
    N: int
    window: float
    target: float
    zero_hits: bool = False


def sample_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, index])))


def sample_goe(spec: GoeSpec, index: int = 0) -> np.ndarray:
    """Symmetric matrix with off-diagonal variance t/N, diagonal 2t/N."""
    a = sample_rng(spec.seed, index).standard_normal((spec.n, spec.n))
    return (a + a.T) * math.sqrt(spec.t / (2 * spec.n))


def multiplicities(weights, total: int) -> list[int]:
    """Largest-remainder rounding of weights * total."""
    raw = np.asarray(weights, dtype=float) * total
    base = np.floor(raw).astype(int)
    short = total - int(base.sum())
    order = sorted(range(len(raw)), key=lambda i: (-(raw[i] - base[i]), i))
    for i in order[:short]:
        base[i] += 1
    return base.tolist()


def deformation_diagonal(model: DeformedModel, n: int) -> np.ndarray:
    counts = multiplicities(model.nu.weights, n - 1)
    return np.concatenate([[model.outlier],
                           np.repeat(model.nu.locations, counts)])


def build_deformed(spec: GoeSpec, model: DeformedModel, index: int = 0) -> DeformedSample:
    if abs(spec.t - model.t) > 1e-15:
        raise ConfigError("GoeSpec and model disagree on the variance")
    b = deformation_diagonal(model, spec.n)
    x = sample_goe(spec, index)
    x[np.diag_indices_from(x)] += b
    return DeformedSample(x, b)


def smallest_eigenpair(matrix: np.ndarray):
    w, v = sla.eigh(matrix, subset_by_index=[0, 0], driver="evr")
    return float(w[0]), v[:, 0]


def smallest_eigenvalue(matrix: np.ndarray) -> float:
    return float(sla.eigh(matrix, subset_by_index=[0, 0], eigvals_only=True,
                          driver="evr")[0])


def eigenvector_masses(b_diag: np.ndarray, v: np.ndarray) -> tuple:
    """Squared overlap with the outlier coordinate, then with each level set
    of the remaining diagonal in increasing order."""
    v2 = np.asarray(v, dtype=float) ** 2
    v2 = v2 / v2.sum()
    levels, inverse = np.unique(b_diag[1:], return_inverse=True)
    blocks = np.bincount(inverse, weights=v2[1:], minlength=len(levels))
    return (float(v2[0]), *map(float, blocks))


def _model_from_diagonal(b_diag: np.ndarray) -> DeformedModel:
    levels, counts = np.unique(b_diag[1:], return_counts=True)
    nu = AtomicMeasure(list(zip(levels, counts / counts.sum())))
    return DeformedModel(nu, 1.0, float(b_diag[0]))


def projected_outlier_check(sample: DeformedSample, v: np.ndarray):
    """Smallest eigenvalue of diag(b) compressed to v-perp, against the
    secular-equation root. Returns (eigenvalue, root, |difference|)."""
    b = np.asarray(sample.b_diag, dtype=float)
    v = np.asarray(v, dtype=float)
    v = v / np.linalg.norm(v)
    y = eigenvector_masses(b, v)
    if min(y) < 1e-10 or max(y) > 1 - 1e-10:
        raise DegenerateDirection(f"direction has a degenerate mass in {y}")
    # Householder reflector sending v to e_0; rows 1: span v-perp
    u = v.copy()
    u[0] += math.copysign(1.0, v[0])
    u /= np.linalg.norm(u)
    bu = b * u
    m = np.diag(b) - 2 * np.outer(u, bu) - 2 * np.outer(bu, u) \
        + 4 * float(u @ bu) * np.outer(u, u)
    eig = float(sla.eigvalsh(m[1:, 1:], subset_by_index=[0, 0])[0])
    root = phi(_model_from_diagonal(b), y)
    # Courant-Fischer interlacing
    assert b[0] - 1e-10 <= eig <= b[1:].min() + 1e-10, (eig, b[0])
    return eig, root, abs(eig - root)


# -- Monte Carlo ---------------------------------------------------------------

def _eig_chunk(args):
    kind, n, t, seed, b_diag, lo, hi = args
    spec = GoeSpec(n, t, seed)
    out = []
    with threadpool_limits(1):
        for i in range(lo, hi):
            x = sample_goe(spec, i)
            if kind == "value":
                x[np.diag_indices_from(x)] += b_diag
                out.append(smallest_eigenvalue(x))
            else:  # bottom eigenvector masses of the undeformed GOE
                _, v = smallest_eigenpair(x)
                out.append(eigenvector_masses(b_diag, v))
    return np.array(out)


def _run_chunks(kind, n, t, seed, b_diag, n_samples, workers):
    jobs = [(kind, n, t, seed, b_diag, lo, min(lo + CHUNK, n_samples))
            for lo in range(0, n_samples, CHUNK)]
    if workers <= 1:
        parts = [_eig_chunk(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_eig_chunk, jobs))
    return np.concatenate(parts)


def smallest_eigenvalues(model: DeformedModel, n: int, n_samples: int,
                         seed: int, workers: int = 1) -> np.ndarray:
    b = deformation_diagonal(model, n)
    return _run_chunks("value", n, model.t, seed, b, n_samples, workers)


def convergence_check(model: DeformedModel, sizes, n_samples: int, seed: int,
                      workers: int = 1) -> list[McReport]:
    """Sample mean of the smallest eigenvalue at each size against the limit."""
    target = model.limit_smallest()
    reports = []
    for n in sizes:
        lam = smallest_eigenvalues(model, n, n_samples, seed, workers)
        window = 0.05
        hits = int(np.sum(np.abs(lam - target) <= window))
        reports.append(McReport(
            n_samples=n_samples, n_hits=hits, estimate=float(lam.mean()),
            std_error=float(lam.std(ddof=1) / math.sqrt(n_samples)),
            empirical_rate=-math.log(max(hits, 1) / n_samples) / n,
            seed=seed, N=n, window=window, target=target,
            zero_hits=hits == 0))
    return reports


def default_window(model: DeformedModel) -> float:
    return 0.05 * (model.ctx.edge - model.limit_smallest() + 1)


def ldp_tail_estimate(model: DeformedModel, n: int, x: float, window=None,
                      n_samples: int = 10000, seed: int = 0,
                      workers: int = 1) -> McReport:
    """Fraction of samples with smallest eigenvalue within window of x."""
    if window is None:
        window = default_window(model)
    lam = smallest_eigenvalues(model, n, n_samples, seed, workers)
    hits = int(np.sum(np.abs(lam - x) <= window))
    p = hits / n_samples
    return McReport(
        n_samples=n_samples, n_hits=hits, estimate=p,
        std_error=math.sqrt(p * (1 - p) / n_samples),
        empirical_rate=-math.log(max(hits, 1) / n_samples) / n,
        seed=seed, N=n, window=float(window), target=float(x),
        zero_hits=hits == 0)


def dirichlet_law_check(model: DeformedModel, n: int, n_samples: int,
                        seed: int, workers: int = 1) -> dict:
    """Block masses of the bottom GOE eigenvector (a uniformly distributed
    direction) against the Dirichlet means (1/N, N_1/N, ..., N_p/N)."""
    b = deformation_diagonal(model, n)
    masses = _run_chunks("masses", n, model.t, seed, b, n_samples, workers)
    counts = [1] + multiplicities(model.nu.weights, n - 1)
    expected = np.array(counts, dtype=float) / n
    means = masses.mean(axis=0)
    se = masses.std(axis=0, ddof=1) / math.sqrt(n_samples)
    z = (means - expected) / se
    # first atom block marginal is Beta(N_1/2, (N - N_1)/2)
    ks = stats.kstest(masses[:, 1], stats.beta(counts[1] / 2, (n - counts[1]) / 2).cdf)
    return {"N": n, "n_samples": n_samples, "seed": seed,
            "means": means.tolist(), "expected": expected.tolist(),
            "std_errors": se.tolist(), "z_scores": z.tolist(),
            "ks_statistic": float(ks.statistic), "ks_pvalue": float(ks.pvalue)}
