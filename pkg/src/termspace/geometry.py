"""Nearest-point queries, Voronoi interior margins, and greedy direction
covers.  Finite sets use a kd-tree below moderate dimension and a vectorized
linear scan above it; circles and spheres project in closed form."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree

from .core import GroundSet, PointSet

DEFAULT_TIE_TOLERANCE = 1e-9
KDTREE_MAX_DIM = 30   # linear scan is faster once the tree stops pruning


@dataclass(frozen=True)
class NearestResult:
    point: np.ndarray
    index: Optional[int]
    distance: float
    tie: bool
    within_half_reach: bool


@dataclass(frozen=True)
class CoverSet:
    """Subset of a direction set covering it to a requested radius."""

    centers: np.ndarray          # (ell, d)
    center_indices: np.ndarray   # indices into the source direction set
    radius: float
    verified_radius: float

    @property
    def size(self) -> int:
        return int(self.centers.shape[0])


def _tree_for(points: PointSet) -> cKDTree:
    tree = getattr(points, "_tree", None)
    if tree is None:
        tree = cKDTree(points.points)
        object.__setattr__(points, "_tree", tree)   # memo on the frozen instance
    return tree


def _nearest_finite(ps: PointSet, u: np.ndarray, tie_tolerance: float):
    pts = ps.points
    if ps.dim <= KDTREE_MAX_DIM and ps.n > 64:
        d1, i1 = _tree_for(ps).query(u, k=2)
        if d1[1] - d1[0] > tie_tolerance:
            return int(i1[0]), float(d1[0]), False
        # near-tie: fall through so the lowest tied index wins
    dists = np.linalg.norm(pts - u[None, :], axis=1)
    k = int(np.argmin(dists))
    dmin = float(dists[k])
    near = np.nonzero(dists <= dmin + tie_tolerance)[0]
    if near.size > 1:
        k = int(near[0])   # tie: lowest index wins
        return k, float(dists[k]), True
    return k, dmin, False


def nearest(ground: GroundSet, u, tie_tolerance: float = DEFAULT_TIE_TOLERANCE,
            tube_fraction: float = 0.5) -> NearestResult:
    """Closest point of the ground set, with tie flagging and the
    distance-below-reach*tube_fraction test used by regularity audits."""
    u = np.asarray(u, dtype=np.float64).ravel()
    if u.size != ground.dim:
        raise ValueError(f"query has dimension {u.size}, ground set has {ground.dim}")

    if ground.is_finite:
        idx, dist, tie = _nearest_finite(ground.points, u, tie_tolerance)
        point = ground.points.points[idx]
        return NearestResult(point=point, index=idx, distance=dist, tie=tie,
                             within_half_reach=dist < ground.reach * tube_fraction)

    v = u - ground.center
    if ground.kind == "circle":
        p = ground.basis @ v                      # in-plane coordinates
        rho = math.hypot(p[0], p[1])
        if rho <= tie_tolerance:
            point = ground.center + ground.radius * ground.basis[0]
            tie = True
        else:
            point = ground.center + (ground.radius / rho) * (p @ ground.basis)
            tie = False
    else:                                         # sphere
        rho = float(np.linalg.norm(v))
        if rho <= tie_tolerance:
            axis = np.zeros(ground.dim)
            axis[0] = 1.0
            point = ground.center + ground.radius * axis
            tie = True
        else:
            point = ground.center + (ground.radius / rho) * v
            tie = False
    dist = float(np.linalg.norm(u - point))
    return NearestResult(point=point, index=None, distance=dist, tie=tie,
                         within_half_reach=dist < ground.reach * tube_fraction)


def voronoi_interior_margin(ps: PointSet, u) -> float:
    """Radius around u within which the nearest ground index cannot change:
    half the gap between the closest and second-closest distances."""
    u = np.asarray(u, dtype=np.float64).ravel()
    if ps.n == 1:
        return math.inf
    dists = np.linalg.norm(ps.points - u[None, :], axis=1)
    k = int(np.argmin(dists))
    rest = np.delete(dists, k)
    return max(0.0, float((rest.min() - dists[k]) / 2.0))


def greedy_cover(secants, radius: float) -> CoverSet:
    """Farthest-point selection from the direction set until every direction
    is within `radius` of a chosen center.  Deterministic: starts at index 0,
    argmax ties resolve to the lowest index."""
    if radius <= 0:
        raise ValueError("cover radius must be positive")
    dirs = secants.directions
    n = dirs.shape[0]
    if n == 0:
        raise ValueError("empty direction set")
    sq = np.sum(dirs * dirs, axis=1)
    r2 = radius * radius

    def dist_sq(center_idx: int) -> np.ndarray:
        c = dirs[center_idx]
        return np.maximum(sq - 2.0 * (dirs @ c) + float(c @ c), 0.0)

    chosen = [0]
    mind = dist_sq(0)
    thresh = r2
    while True:
        while mind.max() > thresh and len(chosen) < n:
            nxt = int(np.argmax(mind))
            chosen.append(nxt)
            np.minimum(mind, dist_sq(nxt), out=mind)
        idx = np.array(chosen, dtype=np.int64)
        cover = CoverSet(centers=dirs[idx].copy(), center_indices=idx,
                         radius=float(radius), verified_radius=0.0)
        # re-measure with the reference metric; rounding in the incremental
        # chain must never leave the verified radius above the request
        verified = covering_radius(secants, cover)
        if verified <= radius or len(chosen) >= n:
            return CoverSet(centers=cover.centers, center_indices=idx,
                            radius=float(radius), verified_radius=verified)
        thresh *= 1.0 - 1e-9


def covering_radius(secants, cover: CoverSet, chunk: int = 4096) -> float:
    """max over the direction set of the distance to its closest center."""
    dirs = secants.directions
    if dirs.shape[0] == 0 or cover.size == 0:
        raise ValueError("covering_radius needs nonempty direction and center sets")
    worst = 0.0
    ct = cover.centers.T
    cn = np.sum(cover.centers ** 2, axis=1)
    for lo in range(0, dirs.shape[0], chunk):
        blk = dirs[lo:lo + chunk]
        d2 = np.sum(blk ** 2, axis=1)[:, None] - 2.0 * (blk @ ct) + cn[None, :]
        worst = max(worst, float(np.sqrt(np.maximum(d2.min(axis=1), 0.0)).max()))
    return worst
