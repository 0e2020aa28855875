"""Open convex subsets of R^d.

Membership, Euclidean projection, outward boundary normals, product
structure with free Gaussian factors, and circumscribed polygon
approximations of balls. All point operations accept a single point of
shape ``(dim,)`` or a batch of shape ``(n, dim)``; batches are the fast
path used by the reflected-path engine.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog
from scipy.stats import norm

UNIT_TOL = 1e-12
CONTAINS_TOL = 1e-9
BOUNDARY_TOL = 1e-6
DYKSTRA_TOL = 1e-10
DYKSTRA_MAX_SWEEPS = 10_000


class DimensionMismatch(ValueError):
    """Point dimension does not match the domain dimension."""


class NoConvergence(RuntimeError):
    """Iterative projection failed to reach tolerance within the sweep cap."""


class CornerPoint(ValueError):
    """More than one constraint is active: the outward normal is not unique."""


class UnsupportedDimension(ValueError):
    """Operation is only defined for a specific ambient dimension."""


@dataclass(frozen=True)
class BoundaryQuery:
    """A boundary point together with its unit outward normal."""

    point: np.ndarray
    normal: np.ndarray


def _as_batch(x, dim):
    pts = np.asarray(x, dtype=float)
    single = pts.ndim == 1
    if single:
        pts = pts[None, :]
    if pts.ndim != 2 or pts.shape[1] != dim:
        raise DimensionMismatch(
            f"expected points in R^{dim}, got array of shape {np.asarray(x).shape}"
        )
    return pts, single


class ConvexDomain:
    """Base class for open convex sets with projection and normal queries."""

    dim: int

    def contains(self, x, tol: float = CONTAINS_TOL):
        """Closed-set membership test within ``tol``."""
        pts, single = _as_batch(x, self.dim)
        out = self._contains(pts, tol)
        return bool(out[0]) if single else out

    def project(self, x):
        """Euclidean projection onto the closed set."""
        pts, single = _as_batch(x, self.dim)
        out = self._project(pts)
        return out[0] if single else out

    def boundary_normal(self, x, tol: float = BOUNDARY_TOL) -> BoundaryQuery:
        """Outward unit normal at a smooth boundary point near ``x``.

        Raises ``CornerPoint`` if more than one constraint is active within
        ``tol`` and ``ValueError`` if ``x`` is not within ``tol`` of the
        boundary.
        """
        pts, _ = _as_batch(x, self.dim)
        return self._boundary_normal(pts[0], tol)

    def axis_bounds(self):
        """Per-axis bounding interval ``(lo, hi)`` with +-inf where unbounded."""
        raise NotImplementedError

    def to_config(self) -> dict:
        """JSON-ready description; ``from_config`` round-trips it exactly."""
        raise NotImplementedError

    # subclasses implement the batch forms
    def _contains(self, pts, tol):
        raise NotImplementedError

    def _project(self, pts):
        raise NotImplementedError

    def _boundary_normal(self, x, tol):
        raise NotImplementedError


@dataclass(frozen=True)
class WholeSpace(ConvexDomain):
    """All of R^d: projection is the identity and there is no boundary."""

    dim: int

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be >= 1")

    def _contains(self, pts, tol):
        return np.ones(len(pts), dtype=bool)

    def _project(self, pts):
        return pts.copy()

    def _boundary_normal(self, x, tol):
        raise ValueError("the whole space has no boundary")

    def axis_bounds(self):
        return np.full(self.dim, -np.inf), np.full(self.dim, np.inf)

    def to_config(self):
        return {"shape": "whole_space", "dim": self.dim}


@dataclass(frozen=True)
class HalfspaceIntersection(ConvexDomain):
    """Intersection of half-spaces ``{x : a_i . x <= b_i}`` with unit normals."""

    normals: np.ndarray
    offsets: np.ndarray
    dim: int = field(init=False)

    def __post_init__(self):
        normals = np.atleast_2d(np.asarray(self.normals, dtype=float))
        offsets = np.atleast_1d(np.asarray(self.offsets, dtype=float))
        if normals.shape[0] != offsets.shape[0]:
            raise ValueError("one offset per normal required")
        lengths = np.linalg.norm(normals, axis=1)
        if np.any(np.abs(lengths - 1.0) > UNIT_TOL):
            raise ValueError("half-space normals must have unit Euclidean norm")
        object.__setattr__(self, "normals", normals)
        object.__setattr__(self, "offsets", offsets)
        object.__setattr__(self, "dim", normals.shape[1])

    def _violations(self, pts):
        return pts @ self.normals.T - self.offsets

    def _contains(self, pts, tol):
        return np.all(self._violations(pts) <= tol, axis=1)

    @property
    def vertices(self) -> np.ndarray:
        """Feasible pairwise face intersections (2D only)."""
        if self.dim != 2:
            raise UnsupportedDimension("vertices are enumerated in 2D only")
        cached = getattr(self, "_vertices", None)
        if cached is None:
            cached = _polygon_vertices(self.normals, self.offsets)
            object.__setattr__(self, "_vertices", cached)
        return cached

    def _project(self, pts):
        viol = self._violations(pts)
        worst = viol.max(axis=1)
        out = pts.copy()
        bad = worst > 0.0
        if not np.any(bad):
            return out
        sub = pts[bad]
        # Projecting onto the most-violated half-space alone is exact
        # whenever the result is feasible (it attains the distance to a
        # superset of the intersection).
        j = np.argmax(viol[bad], axis=1)
        cand = sub - viol[bad, j][:, None] * self.normals[j]
        feasible = np.all(self._violations(cand) <= DYKSTRA_TOL, axis=1)
        if not np.all(feasible):
            rest = sub[~feasible]
            if self.dim == 2:
                cand[~feasible] = self._project_candidates(rest)
            else:
                cand[~feasible] = _dykstra(rest, self.normals, self.offsets)
        out[bad] = cand
        return out

    def _project_candidates(self, pts):
        """Exact 2D projection by enumerating face and vertex candidates.

        If the projection foot lies on a face, that face's constraint is
        violated at the point, so only violated faces contribute face
        candidates; vertices cover the rest. Closed form, unlike iterative
        projection, which stalls on nearly parallel adjacent faces.
        """
        n, m = len(pts), len(self.offsets)
        sviol = self._violations(pts)
        dist2 = np.full((n, m), np.inf)
        rows, faces = np.nonzero(sviol > 0.0)
        cand = pts[rows] - sviol[rows, faces][:, None] * self.normals[faces]
        ok = self._contains(cand, DYKSTRA_TOL)
        dist2[rows[ok], faces[ok]] = sviol[rows[ok], faces[ok]] ** 2
        verts = self.vertices
        if len(verts):
            dv = pts[:, None, :] - verts[None, :, :]
            dist2 = np.concatenate(
                [dist2, np.einsum("ijk,ijk->ij", dv, dv)], axis=1)
        best = np.argmin(dist2, axis=1)
        if not np.all(np.isfinite(dist2[np.arange(n), best])):
            raise NoConvergence("no feasible projection candidate found")
        out = np.empty_like(pts)
        from_face = best < m
        if np.any(from_face):
            j = best[from_face]
            sel = np.flatnonzero(from_face)
            out[sel] = pts[sel] - sviol[sel, j][:, None] * self.normals[j]
        if len(verts):
            out[~from_face] = verts[best[~from_face] - m]
        return out

    def _boundary_normal(self, x, tol):
        gaps = np.abs(self._violations(x[None, :])[0])
        active = np.flatnonzero(gaps <= tol)
        if len(active) == 0:
            raise ValueError("point is not within tolerance of the boundary")
        if len(active) > 1:
            raise CornerPoint(f"{len(active)} constraints active at {x}")
        j = active[0]
        point = x - (x @ self.normals[j] - self.offsets[j]) * self.normals[j]
        return BoundaryQuery(point=point, normal=self.normals[j].copy())

    def axis_bounds(self):
        lo = np.full(self.dim, -np.inf)
        hi = np.full(self.dim, np.inf)
        free = [(None, None)] * self.dim
        for i in range(self.dim):
            c = np.zeros(self.dim)
            for sign, target in ((1.0, lo), (-1.0, hi)):
                c[i] = sign
                res = linprog(c, A_ub=self.normals, b_ub=self.offsets,
                              bounds=free, method="highs")
                if res.status == 0:
                    target[i] = sign * res.fun
                c[i] = 0.0
        return lo, hi

    def to_config(self):
        return {
            "shape": "halfspaces",
            "normals": self.normals.tolist(),
            "offsets": self.offsets.tolist(),
        }


@dataclass(frozen=True)
class Ball(ConvexDomain):
    """Open Euclidean ball of positive radius."""

    center: np.ndarray
    radius: float
    dim: int = field(init=False)

    def __post_init__(self):
        center = np.atleast_1d(np.asarray(self.center, dtype=float))
        if self.radius <= 0:
            raise ValueError("radius must be positive")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "dim", center.shape[0])

    def _contains(self, pts, tol):
        return np.linalg.norm(pts - self.center, axis=1) <= self.radius + tol

    def _project(self, pts):
        d = pts - self.center
        r = np.linalg.norm(d, axis=1)
        out = pts.copy()
        bad = r > self.radius
        out[bad] = self.center + d[bad] * (self.radius / r[bad])[:, None]
        return out

    def _boundary_normal(self, x, tol):
        d = x - self.center
        r = np.linalg.norm(d)
        if abs(r - self.radius) > tol:
            raise ValueError("point is not within tolerance of the sphere")
        normal = d / r
        return BoundaryQuery(point=self.center + self.radius * normal, normal=normal)

    def axis_bounds(self):
        return self.center - self.radius, self.center + self.radius

    def to_config(self):
        return {"shape": "ball", "center": self.center.tolist(),
                "radius": float(self.radius)}


@dataclass(frozen=True)
class Slab(ConvexDomain):
    """``{x : lower <= d . x <= upper}`` for a unit direction ``d``."""

    direction: np.ndarray
    lower: float
    upper: float
    dim: int = field(init=False)

    def __post_init__(self):
        direction = np.atleast_1d(np.asarray(self.direction, dtype=float))
        if abs(np.linalg.norm(direction) - 1.0) > UNIT_TOL:
            raise ValueError("slab direction must be a unit vector")
        if not self.lower < self.upper:
            raise ValueError("slab needs lower < upper")
        object.__setattr__(self, "direction", direction)
        object.__setattr__(self, "dim", direction.shape[0])

    def _coord(self, pts):
        return pts @ self.direction

    def _contains(self, pts, tol):
        s = self._coord(pts)
        return (s >= self.lower - tol) & (s <= self.upper + tol)

    def _project(self, pts):
        s = self._coord(pts)
        shift = np.clip(s, self.lower, self.upper) - s
        return pts + shift[:, None] * self.direction

    def _boundary_normal(self, x, tol):
        s = float(x @ self.direction)
        at_lower = abs(s - self.lower) <= tol
        at_upper = abs(s - self.upper) <= tol
        if at_lower and at_upper:
            raise CornerPoint("both slab faces active")
        if not (at_lower or at_upper):
            raise ValueError("point is not within tolerance of a slab face")
        if at_lower:
            normal = -self.direction
            point = x + (self.lower - s) * self.direction
        else:
            normal = self.direction.copy()
            point = x + (self.upper - s) * self.direction
        return BoundaryQuery(point=point, normal=normal)

    def axis_bounds(self):
        lo = np.full(self.dim, -np.inf)
        hi = np.full(self.dim, np.inf)
        axis = np.flatnonzero(np.abs(np.abs(self.direction) - 1.0) <= UNIT_TOL)
        if len(axis) == 1:
            i = axis[0]
            if self.direction[i] > 0:
                lo[i], hi[i] = self.lower, self.upper
            else:
                lo[i], hi[i] = -self.upper, -self.lower
        return lo, hi

    def to_config(self):
        return {"shape": "slab", "direction": self.direction.tolist(),
                "lower": float(self.lower), "upper": float(self.upper)}


@dataclass(frozen=True)
class Product(ConvexDomain):
    """``base x R^k``: the first ``base.dim`` coordinates are constrained."""

    base: ConvexDomain
    free_dims: int
    dim: int = field(init=False)

    def __post_init__(self):
        if self.free_dims < 0:
            raise ValueError("free_dims must be nonnegative")
        object.__setattr__(self, "dim", self.base.dim + self.free_dims)

    def split(self, pts):
        return pts[..., : self.base.dim], pts[..., self.base.dim:]

    def _contains(self, pts, tol):
        return self.base._contains(pts[:, : self.base.dim], tol)

    def _project(self, pts):
        out = pts.copy()
        out[:, : self.base.dim] = self.base._project(pts[:, : self.base.dim])
        return out

    def _boundary_normal(self, x, tol):
        q = self.base._boundary_normal(x[: self.base.dim], tol)
        point = x.copy()
        point[: self.base.dim] = q.point
        normal = np.zeros(self.dim)
        normal[: self.base.dim] = q.normal
        return BoundaryQuery(point=point, normal=normal)

    def axis_bounds(self):
        lo_b, hi_b = self.base.axis_bounds()
        lo = np.concatenate([lo_b, np.full(self.free_dims, -np.inf)])
        hi = np.concatenate([hi_b, np.full(self.free_dims, np.inf)])
        return lo, hi

    def to_config(self):
        return {"shape": "product", "base": self.base.to_config(),
                "free_dims": int(self.free_dims)}


def _polygon_vertices(normals, offsets, tol=1e-9):
    """Feasible intersections of face-line pairs of a 2D half-space system."""
    m = len(offsets)
    verts = []
    for i in range(m):
        for j in range(i + 1, m):
            mat = np.array([normals[i], normals[j]])
            det = mat[0, 0] * mat[1, 1] - mat[0, 1] * mat[1, 0]
            if abs(det) < 1e-12:
                continue
            v = np.linalg.solve(mat, np.array([offsets[i], offsets[j]]))
            if np.all(normals @ v - offsets <= tol):
                verts.append(v)
    if not verts:
        return np.empty((0, 2))
    verts = np.array(verts)
    rounded = np.round(verts / 1e-9) * 1e-9
    _, unique_idx = np.unique(rounded, axis=0, return_index=True)
    return verts[np.sort(unique_idx)]


def _dykstra(pts, normals, offsets, tol=DYKSTRA_TOL, max_sweeps=DYKSTRA_MAX_SWEEPS):
    """Cyclic Dykstra projection onto an intersection of half-spaces.

    Vectorized over a batch of points. Raises ``NoConvergence`` when the
    per-sweep change has not dropped below ``tol`` within ``max_sweeps``.
    """
    if len(pts) == 0:
        return pts.copy()
    x = pts.copy()
    corrections = np.zeros((len(offsets),) + pts.shape)
    for _ in range(max_sweeps):
        x_prev = x.copy()
        for j in range(len(offsets)):
            z = x + corrections[j]
            s = z @ normals[j] - offsets[j]
            x = z - np.maximum(s, 0.0)[:, None] * normals[j]
            corrections[j] = z - x
        if np.max(np.abs(x - x_prev)) <= tol:
            return x
    raise NoConvergence(
        f"Dykstra projection did not reach tol={tol} in {max_sweeps} sweeps"
    )


def interval(lower: float, upper: float) -> Slab:
    """One dimensional open interval ``(lower, upper)``."""
    return Slab(direction=np.array([1.0]), lower=lower, upper=upper)


def half_line(threshold: float = 0.0) -> HalfspaceIntersection:
    """One dimensional half-line ``(threshold, +inf)``."""
    return HalfspaceIntersection(normals=np.array([[-1.0]]),
                                 offsets=np.array([-threshold]))


def polygon_approximation(ball: Ball, n: int) -> HalfspaceIntersection:
    """Circumscribed regular n-gon around a 2D ball.

    Face j is tangent to the ball in direction ``(cos, sin)(2 pi j / n)``,
    so every n-gon contains the ball and the doubling sequence
    n, 2n, 4n, ... is nested decreasing.
    """
    if not isinstance(ball, Ball) or ball.dim != 2:
        raise UnsupportedDimension("polygon approximation needs a 2D ball")
    if n < 3:
        raise ValueError("need at least 3 sides")
    angles = 2.0 * np.pi * np.arange(n) / n
    normals = np.column_stack([np.cos(angles), np.sin(angles)])
    offsets = normals @ ball.center + ball.radius
    return HalfspaceIntersection(normals=normals, offsets=offsets)


def truncation_box(domain: ConvexDomain, tail_mass: float):
    """Axis-aligned box carrying all but ``tail_mass`` of the Gaussian mass.

    Each unbounded axis side is cut at ``R`` with ``2(1 - Phi(R))`` equal to
    the per-axis share ``tail_mass / dim``; sides the domain already bounds
    keep the domain's own bound regardless of ``tail_mass``.
    """
    if not 0.0 < tail_mass < 1.0:
        raise ValueError("tail_mass must lie in (0, 1)")
    radius = float(norm.isf(tail_mass / (2.0 * domain.dim)))
    lo_d, hi_d = domain.axis_bounds()
    lo = np.where(np.isfinite(lo_d), lo_d, -radius)
    hi = np.where(np.isfinite(hi_d), hi_d, radius)
    if np.any(lo >= hi):
        raise ValueError("domain has no mass inside the truncation box")
    return lo, hi


_SHAPES = {}


def domain_from_config(cfg: dict) -> ConvexDomain:
    """Rebuild a domain from its ``to_config`` dictionary."""
    try:
        shape = cfg["shape"]
    except (TypeError, KeyError):
        raise ValueError("domain config needs a 'shape' tag") from None
    if shape not in _SHAPES:
        raise ValueError(f"unknown domain shape {shape!r}")
    return _SHAPES[shape](cfg)


_SHAPES.update({
    "whole_space": lambda c: WholeSpace(dim=int(c["dim"])),
    "halfspaces": lambda c: HalfspaceIntersection(
        normals=np.array(c["normals"], dtype=float),
        offsets=np.array(c["offsets"], dtype=float)),
    "ball": lambda c: Ball(center=np.array(c["center"], dtype=float),
                           radius=float(c["radius"])),
    "slab": lambda c: Slab(direction=np.array(c["direction"], dtype=float),
                           lower=float(c["lower"]), upper=float(c["upper"])),
    "product": lambda c: Product(base=domain_from_config(c["base"]),
                                 free_dims=int(c["free_dims"])),
})
