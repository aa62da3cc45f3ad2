"""Random linear maps, unit secant sets, empirical convex-hull distortion
certification, Gaussian-width Monte Carlo, and the manifold width bound."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Tuple

import numpy as np

from .core import GroundSet, PointSet

SECANT_DEDUP_TOL = 1e-12
UNCERTIFIED = -1.0


class CertificationError(RuntimeError):
    """Growth loop ran out of target dimensions before reaching the goal."""

    def __init__(self, target: float, best_m: int, best_estimate: float):
        super().__init__(
            f"could not certify hull distortion <= {target:g}: "
            f"best was {best_estimate:g} at m={best_m}")
        self.target = target
        self.best_m = best_m
        self.best_estimate = best_estimate


@dataclass(frozen=True)
class ProjectionMatrix:
    entries: np.ndarray          # (m, d)
    m: int
    d: int
    distortion_estimate: float   # -1 until certified
    seed: int

    def apply(self, x: np.ndarray) -> np.ndarray:
        return self.entries @ x

    def with_estimate(self, estimate: float) -> "ProjectionMatrix":
        return replace(self, distortion_estimate=float(estimate))


@dataclass(frozen=True)
class SecantSet:
    directions: np.ndarray       # (N, d), unit rows, closed under negation
    source: str                  # "exact-finite" | "sampled"

    @property
    def size(self) -> int:
        return int(self.directions.shape[0])


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.flags.writeable = False
    return arr


def _dedup_symmetrize(dirs: np.ndarray, source: str) -> SecantSet:
    """Deduplicate within SECANT_DEDUP_TOL on a canonical sign choice, then
    emit each direction with both signs so negation closure is exact."""
    # canonical sign: the first coordinate with |.| > tol decides
    mask = np.abs(dirs) > SECANT_DEDUP_TOL
    lead = np.argmax(mask, axis=1)
    sign = np.where(dirs[np.arange(dirs.shape[0]), lead] < 0, -1.0, 1.0)
    canon = dirs * sign[:, None]
    canon = canon[np.lexsort(canon.T[::-1])]
    gaps = np.linalg.norm(np.diff(canon, axis=0), axis=1)
    keep = np.concatenate([[True], gaps > SECANT_DEDUP_TOL])
    half = canon[keep]
    return SecantSet(directions=_freeze(np.vstack([half, -half])), source=source)


def _pair_directions(pts: np.ndarray) -> np.ndarray:
    iu, il = np.triu_indices(pts.shape[0], k=1)
    half = pts[iu] - pts[il]
    norms = np.linalg.norm(half, axis=1)
    ok = norms > 0
    return half[ok] / norms[ok, None]


def unit_secants(ps: PointSet) -> SecantSet:
    """Normalized differences (x - y)/||x - y|| over all ordered pairs of
    distinct ground points, deduplicated."""
    if ps.n < 2:
        raise ValueError("unit secants need at least two points")
    return _dedup_symmetrize(_pair_directions(ps.points), source="exact-finite")


def sampled_secants(ground: GroundSet, samples: int, seed: int) -> SecantSet:
    """Secant directions of `samples` uniform surface points of an analytic
    ground set (all pairs, symmetrized)."""
    if ground.is_finite:
        raise ValueError("sampled_secants is for analytic ground sets; "
                         "use unit_secants for finite ones")
    if samples < 2:
        raise ValueError("need at least two samples")
    rng = np.random.default_rng(seed)
    pts = ground.sample_surface(samples, rng)
    return _dedup_symmetrize(_pair_directions(pts), source="sampled")


def gaussian_matrix(m: int, d: int, seed: int) -> ProjectionMatrix:
    """i.i.d. N(0, 1/m) entries, so E||Pi x||^2 = ||x||^2."""
    if m < 1 or d < 1:
        raise ValueError("m and d must be >= 1")
    rng = np.random.default_rng(seed)
    entries = rng.standard_normal((m, d)) / math.sqrt(m)
    return ProjectionMatrix(entries=_freeze(entries), m=m, d=d,
                            distortion_estimate=UNCERTIFIED, seed=int(seed))


def identity_matrix(d: int) -> ProjectionMatrix:
    """Exact isometry (m = d); its hull distortion is identically zero."""
    return ProjectionMatrix(entries=_freeze(np.eye(d)), m=d, d=d,
                            distortion_estimate=UNCERTIFIED, seed=0)


def default_factory(d: int, seed: int) -> Callable[[int], ProjectionMatrix]:
    """Growth-loop factory: Gaussian below the ambient dimension, exact
    isometry once m reaches d (a random map cannot beat distortion 0)."""
    def make(m: int) -> ProjectionMatrix:
        if m >= d:
            return identity_matrix(d)
        return gaussian_matrix(m, d, seed)
    return make


def _project_simplex(theta: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sort-based)."""
    srt = np.sort(theta)[::-1]
    css = np.cumsum(srt) - 1.0
    ks = np.arange(1, theta.size + 1)
    cond = srt - css / ks > 0
    rho = np.nonzero(cond)[0][-1]
    tau = css[rho] / (rho + 1.0)
    return np.maximum(theta - tau, 0.0)


def _gap(Pi: ProjectionMatrix, x: np.ndarray) -> float:
    return abs(float(np.linalg.norm(Pi.entries @ x)) - float(np.linalg.norm(x)))


def _ascend(Pi: ProjectionMatrix, support: np.ndarray, theta: np.ndarray,
            steps: int) -> float:
    """Projected-gradient ascent of |  ||Pi x|| - ||x||  | over the weight
    simplex on a fixed support of directions.  Returns the best value seen."""
    W = support                      # (k, d)
    PW = W @ Pi.entries.T            # (k, m)
    best = 0.0
    for t in range(steps):
        x = theta @ W
        y = theta @ PW
        nx = float(np.linalg.norm(x))
        ny = float(np.linalg.norm(y))
        val = abs(ny - nx)
        if val > best:
            best = val
        if nx < 1e-14:
            break
        sign = 1.0 if ny >= nx else -1.0
        grad = sign * (PW @ (y / max(ny, 1e-14)) - W @ (x / nx))
        gn = float(np.linalg.norm(grad))
        if gn < 1e-14:
            break
        theta = _project_simplex(theta + (0.3 / math.sqrt(t + 1.0)) * grad / gn)
    x = theta @ W
    return max(best, _gap(Pi, x))


def estimate_hull_distortion(Pi: ProjectionMatrix, secants: SecantSet,
                             probes: int, ascent_steps: int, seed: int) -> float:
    """Empirical max of | ||Pi x|| - ||x|| | over probed points of the convex
    hull of the direction set: every vertex, plus Dirichlet-weighted random
    support combinations refined by simplex ascent.  A lower bound on the
    true supremum.  Probe k draws from substream (seed, k), so enlarging the
    probe budget only appends probes."""
    dirs = secants.directions
    n = dirs.shape[0]
    if n == 0:
        raise ValueError("empty secant set")
    if probes < n:
        raise ValueError(f"probes ({probes}) must cover all {n} vertices")
    vertex_norms = np.linalg.norm(dirs @ Pi.entries.T, axis=1)
    best = float(np.max(np.abs(vertex_norms - np.linalg.norm(dirs, axis=1))))
    support_size = min(n, Pi.d + 1)
    for k in range(probes - n):
        rng = np.random.default_rng([seed, k])
        idx = rng.choice(n, size=support_size, replace=False)
        theta = rng.dirichlet(np.ones(support_size))
        val = _ascend(Pi, dirs[idx], theta, ascent_steps)
        if val > best:
            best = val
    return best


def certify_or_grow(factory: Callable[[int], ProjectionMatrix], secants: SecantSet,
                    target: float, m0: int, m_cap: int,
                    probes: int | None = None, ascent_steps: int = 20,
                    seed: int = 0) -> ProjectionMatrix:
    """Double m from m0 until the factory's map passes the empirical hull
    distortion target; the accepted map carries its estimate."""
    if not (0.0 <= target < 1.0):
        raise ValueError(f"target must lie in [0, 1), got {target}")
    if m0 < 1:
        raise ValueError("m0 must be >= 1")
    n = secants.size
    full_probes = probes if probes is not None else n + 512
    best_m, best_est = 0, math.inf
    m = m0
    while m <= m_cap:
        Pi = factory(m)
        # vertex-only pass is a cheap lower bound: reject early on a miss
        quick = estimate_hull_distortion(Pi, secants, n, 0, seed)
        if quick <= target:
            est = estimate_hull_distortion(Pi, secants, full_probes, ascent_steps, seed)
            if est <= target:
                return Pi.with_estimate(est)
            quick = est
        if quick < best_est:
            best_m, best_est = Pi.m, quick
        m *= 2
    raise CertificationError(target, best_m, best_est)


def gaussian_width_mc(secants: SecantSet, trials: int, seed: int,
                      chunk: int = 2048) -> Tuple[float, float]:
    """Monte Carlo E sup_x <g, x> over the direction set, with its standard
    error.  Chunk c draws from substream (seed, c)."""
    if secants.size == 0:
        raise ValueError("empty secant set")
    if trials < 2:
        raise ValueError("need at least two trials")
    d = secants.directions.shape[1]
    sups = np.empty(trials)
    done = 0
    c = 0
    while done < trials:
        take = min(chunk, trials - done)
        g = np.random.default_rng([seed, c]).standard_normal((take, d))
        sups[done:done + take] = (g @ secants.directions.T).max(axis=1)
        done += take
        c += 1
    mean = float(sups.mean())
    stderr = float(sups.std(ddof=1) / math.sqrt(trials))
    return mean, stderr


def unit_ball_volume(d: int) -> float:
    """Volume of the d-dimensional unit ball via log-gamma (overflow safe)."""
    return math.exp(0.5 * d * math.log(math.pi) - math.lgamma(0.5 * d + 1.0))


def manifold_width_bound(d: int, tau: float, vol: float,
                         bvol: float) -> Tuple[float, float, float]:
    """Width bound for the unit secants of a compact d-dimensional
    submanifold with reach tau, volume vol, and boundary volume bvol.
    Returns (alpha, beta, bound) with beta = alpha^2 + 3^d alpha and
    bound = 8 sqrt(2) sqrt(log beta + 4 d) (natural log)."""
    if d < 1:
        raise ValueError("dimension must be >= 1")
    if tau <= 0 or vol <= 0:
        raise ValueError("tau and vol must be positive")
    if bvol < 0:
        raise ValueError("bvol must be nonnegative")
    if d == 1:
        alpha = 20.0 * vol / tau + bvol
    else:
        alpha = (vol / unit_ball_volume(d)) * (41.0 / tau) ** d \
            + (bvol / unit_ball_volume(d - 1)) * (81.0 / tau) ** (d - 1)
    beta = alpha * alpha + (3.0 ** d) * alpha
    bound = 8.0 * math.sqrt(2.0) * math.sqrt(math.log(beta) + 4.0 * d)
    return alpha, beta, bound
