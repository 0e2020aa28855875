"""Three interchangeable computations of the Neumann OU semigroup.

- ``mehler_apply``: exact whole-space oracle via tensorized Gauss-Hermite
  quadrature of the Mehler integral.
- ``mc_apply`` / ``reflected_path``: projected-Euler simulation of the
  normally reflected diffusion on any convex domain.
- ``grid_build`` / ``grid_apply`` / ``grid_spectrum``: weighted
  finite-difference operator in 1D/2D with natural Neumann faces.
"""
from .types import SemigroupEstimate, OrderTooHigh, SolverError, ResolutionTooCoarse
from .mehler import mehler_apply
from .montecarlo import reflected_path, simulate_endpoints, mc_apply, mc_apply_many
from .grid import (GridOperator, SpectrumResult, grid_build, grid_apply,
                   grid_spectrum, dirichlet_energy_grid, weighted_mean, l2_norm,
                   fd_gradient, export_values_csv, export_matrix_coo)
from .observables import dirichlet_energy, mean_value

__all__ = [
    "SemigroupEstimate", "OrderTooHigh", "SolverError", "ResolutionTooCoarse",
    "mehler_apply", "reflected_path", "simulate_endpoints", "mc_apply",
    "mc_apply_many", "GridOperator", "SpectrumResult", "grid_build",
    "grid_apply", "grid_spectrum", "dirichlet_energy_grid", "weighted_mean",
    "l2_norm", "fd_gradient", "export_values_csv", "export_matrix_coo",
    "dirichlet_energy", "mean_value",
]
