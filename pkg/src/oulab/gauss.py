"""Standard Gaussian measure utilities.

Gauss-Hermite quadrature against the standard normal density, closed-form
moments, probabilists' Hermite polynomials, seeded sampling, rejection
sampling restricted to a convex domain, and Monte Carlo mass estimates.
All stochastic routines take an explicit integer seed and are bit-stable;
independent sub-streams are derived by spawning ``numpy.random.SeedSequence``
children, so batches may run in parallel without changing results.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .domains import ConvexDomain

MAX_QUAD_ORDER = 512
DEFAULT_MASS_FLOOR = 1e-3
PROBE_BATCH = 8192
_DRAW_BATCH = 65536


class MassTooSmall(RuntimeError):
    """Rejection sampling is impractical: acceptance fell below the mass floor."""


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and probability weights for 1D integrals against the standard Gaussian."""

    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        if np.any(self.weights <= 0):
            raise ValueError("quadrature weights must be strictly positive")
        if abs(float(self.weights.sum()) - 1.0) > 1e-12:
            raise ValueError("quadrature weights must sum to one")

    def integrate(self, fn) -> float:
        return float(self.weights @ fn(self.nodes))


def gauss_hermite(order: int) -> QuadratureRule:
    """Gauss-Hermite rule of the given order for the N(0,1) weight.

    Golub-Welsch: nodes are the eigenvalues of the symmetric tridiagonal
    Jacobi matrix of the probabilists' Hermite recurrence. Weights come from
    the Christoffel function, ``1 / sum_k p_k(x_i)^2`` over the orthonormal
    polynomials, evaluated in extended precision so the rule stays finite up
    to the order cap (extreme weights below the float64 range are floored at
    the smallest subnormal). Exact for polynomials of degree
    ``2 * order - 1``.
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    if order > MAX_QUAD_ORDER:
        raise ValueError(f"order capped at {MAX_QUAD_ORDER}")
    if order == 1:
        return QuadratureRule(nodes=np.zeros(1), weights=np.ones(1))
    off = np.sqrt(np.arange(1, order, dtype=float))
    nodes = eigh_tridiagonal(np.zeros(order), off, eigvals_only=True)
    # symmetrize: nodes of the N(0,1) rule come in +- pairs
    nodes = 0.5 * (nodes - nodes[::-1])

    x = nodes.astype(np.longdouble)
    p_prev = np.zeros(order, dtype=np.longdouble)
    p_cur = np.ones(order, dtype=np.longdouble)
    christoffel = np.ones(order, dtype=np.longdouble)
    for k in range(1, order):
        p_prev, p_cur = p_cur, (x * p_cur - math.sqrt(k - 1) * p_prev) \
            / math.sqrt(k)
        christoffel += p_cur * p_cur
    weights = (1.0 / christoffel).astype(float)
    weights = 0.5 * (weights + weights[::-1])
    weights = np.maximum(weights, np.finfo(float).smallest_subnormal)
    return QuadratureRule(nodes=nodes, weights=weights / weights.sum())


def gaussian_moment(degree: int) -> float:
    """Closed-form standard normal moment: 0 for odd degree, (2m-1)!! for 2m."""
    if degree < 0:
        raise ValueError("degree must be nonnegative")
    if degree % 2 == 1:
        return 0.0
    out = 1.0
    for k in range(1, degree, 2):
        out *= k
    return out


def hermite_he(n: int, x) -> np.ndarray:
    """Probabilists' Hermite polynomial He_n evaluated by recurrence.

    These are the eigenfunctions of the whole-space generator with
    eigenvalue -n, and are orthogonal with ``E[He_m He_n] = n! delta_mn``.
    """
    x = np.asarray(x, dtype=float)
    if n == 0:
        return np.ones_like(x)
    prev, cur = np.ones_like(x), x.copy()
    for k in range(1, n):
        prev, cur = cur, x * cur - k * prev
    return cur


def sample_gaussian(dim: int, count: int, seed: int) -> np.ndarray:
    """``count`` i.i.d. standard normal vectors in R^dim, deterministic in seed."""
    if dim < 1 or count < 1:
        raise ValueError("dim and count must be positive")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    return rng.standard_normal((count, dim))


def spawn_seeds(seed: int, n: int) -> list[np.random.SeedSequence]:
    """Deterministic independent sub-streams of a root seed."""
    return np.random.SeedSequence(seed).spawn(n)


@dataclass(frozen=True)
class Estimate:
    """A Monte Carlo scalar with its standard error."""

    value: float
    std_error: float

    def within(self, target: float, n_sigma: float = 3.0) -> bool:
        return abs(self.value - target) <= n_sigma * self.std_error


@dataclass(frozen=True)
class RestrictedSample:
    """Rejection-sampled points of the Gaussian conditioned on a domain."""

    points: np.ndarray
    acceptance_rate: float
    proposed: int


def restricted_sample(domain: ConvexDomain, count: int, seed: int,
                      mass_floor: float = DEFAULT_MASS_FLOOR) -> RestrictedSample:
    """Draw ``count`` points of gamma conditioned on the domain by rejection.

    The first batch acts as a probe: if its acceptance rate is below
    ``mass_floor`` the domain is numerically degenerate for rejection
    sampling and ``MassTooSmall`` is raised.
    """
    if count < 1:
        raise ValueError("count must be positive")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    kept = []
    accepted = 0
    proposed = 0
    batch = PROBE_BATCH
    while accepted < count:
        draw = rng.standard_normal((batch, domain.dim))
        inside = domain.contains(draw)
        proposed += batch
        n_in = int(inside.sum())
        if proposed == batch and n_in / batch < mass_floor:
            raise MassTooSmall(
                f"acceptance {n_in / batch:.2e} below floor {mass_floor:.2e} "
                f"after a probe batch of {batch}"
            )
        if n_in:
            kept.append(draw[inside])
            accepted += n_in
        batch = _DRAW_BATCH
    points = np.concatenate(kept)[:count]
    return RestrictedSample(points=points, acceptance_rate=accepted / proposed,
                            proposed=proposed)


def gaussian_mass(domain: ConvexDomain, count: int, seed: int) -> Estimate:
    """Monte Carlo estimate of the Gaussian mass of the domain."""
    draw = sample_gaussian(domain.dim, count, seed)
    inside = domain.contains(draw).astype(float)
    p = float(inside.mean())
    se = float(inside.std(ddof=1) / math.sqrt(count)) if count > 1 else 0.0
    return Estimate(value=p, std_error=se)
