"""Shared engine types and errors."""
from __future__ import annotations

from dataclasses import dataclass


class OrderTooHigh(ValueError):
    """Tensorized quadrature would exceed the node budget."""


class SolverError(RuntimeError):
    """A linear solve or eigensolve inside an engine failed."""


class ResolutionTooCoarse(ValueError):
    """Grid has fewer than the minimum interior nodes per axis."""


@dataclass(frozen=True)
class SemigroupEstimate:
    """One value of the semigroup applied to a function at a point.

    ``std_error`` is present exactly when the value came from Monte Carlo.
    """

    value: float
    t: float
    method: str  # mehler | monte_carlo | grid
    std_error: float | None = None

    def __post_init__(self):
        if (self.std_error is not None) != (self.method == "monte_carlo"):
            raise ValueError("std_error is present iff method is monte_carlo")
