"""Domain types shared by every stage of the pipeline: point sets, ground
sets (finite or analytic), the epsilon budget split, and solver settings."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Optional

import numpy as np

VARIANT_FINITE = "finite"
VARIANT_COVER = "cover"

# epsilon is split into fixed fractions; the direct (finite) route needs a
# looser projection but enforces every ground constraint, the cover route
# needs a tighter projection because the cover only approximates them.
_HULL_DIV = {VARIANT_FINITE: 60.0, VARIANT_COVER: 240.0}
_SLACK_DIV = {VARIANT_FINITE: 10.0, VARIANT_COVER: 30.0}
_COVER_DIV = 40.0


def _as_matrix(points) -> np.ndarray:
    arr = np.asarray(points, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"expected a nonempty 2-d point array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("points must be finite")
    return arr


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class PointSet:
    """Finite ground set in R^d with stable integer indices."""

    points: np.ndarray
    dim: int
    labels: Optional[np.ndarray] = None

    @classmethod
    def from_array(cls, points, labels=None) -> "PointSet":
        arr = _as_matrix(points)
        # bitwise duplicates break the nearest-neighbor tie rule downstream
        seen = set()
        for i, row in enumerate(arr):
            key = row.tobytes()
            if key in seen:
                raise ValueError(f"duplicate point at index {i}")
            seen.add(key)
        lab = None
        if labels is not None:
            lab = np.asarray(labels, dtype=np.int64)
            if lab.shape != (arr.shape[0],):
                raise ValueError("labels must have one entry per point")
            lab = _freeze(lab)
        return cls(points=_freeze(arr), dim=int(arr.shape[1]), labels=lab)

    @property
    def n(self) -> int:
        return int(self.points.shape[0])


@dataclass(frozen=True)
class GroundSet:
    """A finite point set or an analytic shape (circle/sphere) together with
    its reach.  Analytic shapes answer nearest-point queries in closed form."""

    kind: str                      # "finite" | "circle" | "sphere"
    reach: float
    points: Optional[PointSet] = None
    center: Optional[np.ndarray] = None
    radius: float = 0.0
    basis: Optional[np.ndarray] = None   # (2, d) orthonormal rows, circle only

    @classmethod
    def from_points(cls, points: PointSet, reach: float = math.inf) -> "GroundSet":
        if reach < 0:
            raise ValueError("reach must be nonnegative")
        return cls(kind="finite", reach=float(reach), points=points)

    @classmethod
    def circle(cls, center, radius: float, basis=None) -> "GroundSet":
        center = np.asarray(center, dtype=np.float64).ravel()
        d = center.size
        if radius <= 0:
            raise ValueError("radius must be positive")
        if d < 2:
            raise ValueError("circle needs ambient dimension >= 2")
        if basis is None:
            if d != 2:
                raise ValueError("circle in d > 2 requires an explicit plane basis")
            basis = np.eye(2)
        basis = np.asarray(basis, dtype=np.float64)
        if basis.shape != (2, d):
            raise ValueError(f"plane basis must have shape (2, {d})")
        gram = basis @ basis.T
        if not np.allclose(gram, np.eye(2), atol=1e-10):
            raise ValueError("plane basis must be orthonormal")
        return cls(kind="circle", reach=float(radius), center=_freeze(center),
                   radius=float(radius), basis=_freeze(basis))

    @classmethod
    def sphere(cls, center, radius: float) -> "GroundSet":
        center = np.asarray(center, dtype=np.float64).ravel()
        if radius <= 0:
            raise ValueError("radius must be positive")
        if center.size < 1:
            raise ValueError("sphere needs ambient dimension >= 1")
        return cls(kind="sphere", reach=float(radius), center=_freeze(center),
                   radius=float(radius))

    @property
    def dim(self) -> int:
        if self.kind == "finite":
            return self.points.dim
        return int(self.center.size)

    @property
    def is_finite(self) -> bool:
        return self.kind == "finite"

    def surface_point(self, angles_or_dirs: np.ndarray) -> np.ndarray:
        """Map circle angles / sphere unit directions onto the shape."""
        if self.kind == "circle":
            th = np.atleast_1d(np.asarray(angles_or_dirs, dtype=np.float64))
            return (self.center[None, :]
                    + self.radius * (np.cos(th)[:, None] * self.basis[0]
                                     + np.sin(th)[:, None] * self.basis[1]))
        if self.kind == "sphere":
            dirs = np.atleast_2d(np.asarray(angles_or_dirs, dtype=np.float64))
            return self.center[None, :] + self.radius * dirs
        raise ValueError("surface_point is only defined for analytic shapes")

    def sample_surface(self, count: int, rng: np.random.Generator) -> np.ndarray:
        """Uniform samples: rows of shape points for analytic sets, ground
        points drawn with replacement for finite sets."""
        if self.kind == "circle":
            return self.surface_point(rng.uniform(0.0, 2.0 * math.pi, size=count))
        if self.kind == "sphere":
            dirs = rng.standard_normal((count, self.dim))
            dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
            return self.surface_point(dirs)
        idx = rng.integers(0, self.points.n, size=count)
        return self.points.points[idx]


@dataclass(frozen=True)
class EpsilonBudget:
    """How a distortion budget epsilon is split across pipeline stages."""

    epsilon: float
    variant: str
    hull_distortion_target: float
    constraint_slack: float
    cover_radius: float


def make_budget(epsilon: float, variant: str) -> EpsilonBudget:
    """Split epsilon into the hull-distortion target, per-constraint slack,
    and (cover variant) covering radius used by the construction."""
    if not (0.0 < epsilon < 1.0):
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    if variant not in _HULL_DIV:
        raise ValueError(f"variant must be 'finite' or 'cover', got {variant!r}")
    return EpsilonBudget(
        epsilon=float(epsilon),
        variant=variant,
        hull_distortion_target=epsilon / _HULL_DIV[variant],
        constraint_slack=epsilon / _SLACK_DIV[variant],
        cover_radius=epsilon / _COVER_DIV,
    )


@dataclass(frozen=True)
class SolverConfig:
    """Tolerances and budgets for the per-query min-norm solve."""

    feasibility_tolerance: float = 1e-9
    max_iterations: int = 100_000
    radicand_clamp: float = 1e-9
    rng_seed: int = 0

    def __post_init__(self):
        if self.feasibility_tolerance <= 0 or self.radicand_clamp <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


def worker_count() -> int:
    """Worker cap from TERMSPACE_THREADS (0 or unset = auto)."""
    raw = os.environ.get("TERMSPACE_THREADS", "0")
    try:
        val = int(raw)
    except ValueError:
        val = 0
    if val <= 0:
        return os.cpu_count() or 1
    return val
