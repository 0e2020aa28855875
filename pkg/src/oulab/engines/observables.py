"""Sampled integrals against the Gaussian measure conditioned on a domain.

Both observables are means over the conditional (normalized) measure, the
quantity that rejection samples estimate directly; on the whole space this
coincides with the plain Gaussian integral.
"""
from __future__ import annotations

import math

import numpy as np

from ..domains import ConvexDomain
from ..gauss import Estimate, restricted_sample


def _mean_se(values: np.ndarray) -> Estimate:
    n = len(values)
    mean = float(values.mean())
    se = float(values.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return Estimate(value=mean, std_error=se)


def mean_value(f, domain: ConvexDomain, count: int, seed: int) -> Estimate:
    """Conditional mean of f over the domain."""
    pts = restricted_sample(domain, count, seed).points
    return _mean_se(np.asarray(f.eval(pts), dtype=float))


def dirichlet_energy(f, domain: ConvexDomain, count: int, seed: int) -> Estimate:
    """Conditional mean of the squared gradient norm of f over the domain."""
    pts = restricted_sample(domain, count, seed).points
    grad = f.gradient(pts)
    return _mean_se(np.einsum("ij,ij->i", grad, grad))
