"""Statistical audits of a built embedder: the bi-Lipschitz band between
ground points and arbitrary queries, local Hölder regularity with explicit
constants for the cover variant, and constraint replay."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from .embed import TerminalEmbedder, evaluate, evaluate_detail
from .geometry import nearest, voronoi_interior_margin

BAND_INFLATION = 1e-6      # numeric slack added to the (1 +- eps) band
MIN_SEPARATION = 1e-12     # pairs closer than this are skipped
AUDIT_CHUNK = 1024         # pair draws per rng substream


@dataclass(frozen=True)
class HolderConstants:
    """Explicit local regularity constants for the cover-variant embedding
    at a point whose distance to the ground set is `dist`."""

    r_u: float
    C_tilde: float
    C_prime: float
    C_u: float
    in_closure: bool


def holder_constants(dist: float, epsilon: float) -> HolderConstants:
    if dist < 0:
        raise ValueError("dist must be nonnegative")
    if not (0.0 < epsilon < 1.0):
        raise ValueError("epsilon must lie in (0, 1)")
    if dist == 0.0:
        r_u = 0.5
        c_tilde = 3.0
        c_prime = 1200.0 / epsilon
        in_closure = True
    else:
        r_u = min(1.0, epsilon * dist / 480.0)
        c_tilde = max(1200.0, 480.0 + 128.0 * math.sqrt(dist)) / epsilon
        c_prime = math.sqrt(6.0) * c_tilde
        in_closure = False
    c_u = math.sqrt(32.0 + 2.0 * c_prime ** 2 + (6.0 + 2.0 * c_prime) * (dist + 2.0))
    return HolderConstants(r_u=r_u, C_tilde=c_tilde, C_prime=c_prime, C_u=c_u,
                           in_closure=in_closure)


@dataclass
class AuditReport:
    pairs_tested: int
    min_ratio: float
    max_ratio: float
    violations: List[Tuple[np.ndarray, np.ndarray, float]]
    passed: bool
    excluded_ties: int
    band: Tuple[float, float] = (0.0, 0.0)


@dataclass
class HolderAudit:
    max_ratio: float
    fitted_slope: float
    bound: float
    passed: bool
    pairs_tested: int
    excluded: int


@dataclass
class ConstraintReport:
    queries: int
    max_norm_violation: float
    max_angle_violation: float
    passed: bool


def _ground_scale(emb: TerminalEmbedder) -> Tuple[np.ndarray, float]:
    """Center and scale of the default query distribution: midpoint and
    diagonal of the ground set's bounding box."""
    g = emb.ground
    if g.is_finite:
        pts = g.points.points
        lo, hi = pts.min(axis=0), pts.max(axis=0)
        center = (lo + hi) / 2.0
        scale = float(np.linalg.norm(hi - lo))
    else:
        center = g.center.copy()
        scale = 2.0 * g.radius
    return center, max(scale, 1.0)


def default_query_distribution(emb: TerminalEmbedder):
    center, scale = _ground_scale(emb)
    d = emb.ground.dim

    def draw(rng: np.random.Generator, count: int) -> np.ndarray:
        return center[None, :] + scale * rng.standard_normal((count, d))
    return draw


def audit_terminal(emb: TerminalEmbedder, samples: int, seed: int,
                   query_distribution=None) -> AuditReport:
    """Check ||f(x) - f(y)|| / ||x - y|| over pairs with x on the ground set
    and y drawn from the query distribution; pass iff every ratio lies in
    [1 - eps - 1e-6, 1 + eps + 1e-6]."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    draw = query_distribution or default_query_distribution(emb)
    eps = emb.budget.epsilon
    lo_band = 1.0 - eps - BAND_INFLATION
    hi_band = 1.0 + eps + BAND_INFLATION

    tested = 0
    min_ratio, max_ratio = math.inf, -math.inf
    violations: List[Tuple[np.ndarray, np.ndarray, float]] = []
    done = 0
    chunk_idx = 0
    while done < samples:
        take = min(AUDIT_CHUNK, samples - done)
        rng = np.random.default_rng([seed, chunk_idx])
        xs = emb.ground.sample_surface(take, rng)
        ys = draw(rng, take)
        for x, y in zip(xs, ys):
            gap = float(np.linalg.norm(x - y))
            if gap < MIN_SEPARATION:
                continue
            ratio = float(np.linalg.norm(evaluate(emb, x) - evaluate(emb, y))) / gap
            tested += 1
            min_ratio = min(min_ratio, ratio)
            max_ratio = max(max_ratio, ratio)
            if not (lo_band <= ratio <= hi_band):
                violations.append((x.copy(), y.copy(), ratio))
        done += take
        chunk_idx += 1
    return AuditReport(pairs_tested=tested, min_ratio=min_ratio,
                       max_ratio=max_ratio, violations=violations,
                       passed=not violations, excluded_ties=0,
                       band=(lo_band, hi_band))


def _holder_radius(emb: TerminalEmbedder, u: np.ndarray) -> Tuple[float, float]:
    """Sampling radius around u and the certified bound for the audit."""
    nn = nearest(emb.ground, u)
    # analytic nearest-point distances for on-set queries round to ~1e-16,
    # which would collapse the away-from-set radius; snap to the on-set branch
    dist = nn.distance if nn.distance > MIN_SEPARATION else 0.0
    consts = holder_constants(dist, emb.budget.epsilon)
    if emb.variant == "cover":
        if not nn.within_half_reach:
            raise ValueError("query lies outside the half-reach tube")
        return consts.r_u, consts.C_u
    if nn.tie:
        raise ValueError("query has a nearest-point tie; regularity audits "
                         "require a unique nearest ground point")
    margin = voronoi_interior_margin(emb.ground.points, u)
    if margin <= 0:
        raise ValueError("query has no Voronoi interior margin")
    # no closed-form constant in the finite case: report the slope only
    return min(consts.r_u, margin), math.inf


def audit_holder(emb: TerminalEmbedder, u, pairs: int, exponent: float,
                 seed: int) -> HolderAudit:
    """Around a fixed admissible query u, sample pairs v, w in the allowed
    ball and compare ||f(v) - f(w)|| against ||v - w||^exponent.  Passes when
    the worst ratio stays under the certified constant (cover variant) and
    the fitted log-log slope is at least exponent - 0.1."""
    if exponent not in (0.25, 0.5):
        raise ValueError("exponent must be 1/4 or 1/2")
    u = np.asarray(u, dtype=np.float64).ravel()
    radius, bound = _holder_radius(emb, u)
    radius = min(radius, 0.5)
    d = emb.ground.dim
    rng = np.random.default_rng([seed, 0])

    tube_ok = None
    if emb.variant == "cover":
        frac_limit = emb.ground.reach * 0.5

        def tube_ok(p):
            return nearest(emb.ground, p).distance < frac_limit

    max_ratio = 0.0
    gaps: List[float] = []
    diffs: List[float] = []
    excluded = 0
    tested = 0
    for _ in range(pairs):
        vw = u[None, :] + radius * _ball_pair(rng, d)
        v, w = vw[0], vw[1]
        if tube_ok is not None and not (tube_ok(v) and tube_ok(w)):
            excluded += 1
            continue
        gap = float(np.linalg.norm(v - w))
        if gap < MIN_SEPARATION:
            continue
        fdiff = float(np.linalg.norm(evaluate(emb, v) - evaluate(emb, w)))
        tested += 1
        max_ratio = max(max_ratio, fdiff / gap ** exponent)
        if fdiff > 0:
            gaps.append(math.log(gap))
            diffs.append(math.log(fdiff))
    slope = float("nan")
    if len(gaps) >= 2:
        slope = float(np.polyfit(np.array(gaps), np.array(diffs), 1)[0])
    passed = (max_ratio <= bound) and (slope >= exponent - 0.1)
    return HolderAudit(max_ratio=max_ratio, fitted_slope=slope, bound=bound,
                       passed=passed, pairs_tested=tested, excluded=excluded)


def _ball_pair(rng: np.random.Generator, d: int) -> np.ndarray:
    """Two independent uniform draws from the unit ball."""
    g = rng.standard_normal((2, d))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    r = rng.random(2) ** (1.0 / d)
    return g * r[:, None]


def audit_constraint_norms(emb: TerminalEmbedder, queries,
                           probe_points: int = 1024, seed: int = 0) -> ConstraintReport:
    """Replay each solved u' against the norm bound ||u'|| <= ||u - u_NN||
    and the ground angle constraints at slack eps/10 (for the cover variant
    the ground set is probed afresh, which exercises the cover reduction)."""
    eps = emb.budget.epsilon
    if emb.ground.is_finite:
        probes = emb.ground.points.points
    else:
        probes = emb.ground.sample_surface(probe_points, np.random.default_rng([seed, 1]))
    worst_norm = 0.0
    worst_angle = 0.0
    count = 0
    for u in queries:
        u = np.asarray(u, dtype=np.float64).ravel()
        det = evaluate_detail(emb, u)
        count += 1
        dist = det.nn.distance
        worst_norm = max(worst_norm, float(np.linalg.norm(det.u_prime)) - dist)
        diffs = probes - det.nn.point[None, :]
        pulled = emb.Pi.entries.T @ det.u_prime      # <u', Pi x> = <Pi^T u', x>
        lhs = np.abs(diffs @ pulled - diffs @ (u - det.nn.point))
        slack = (eps / 10.0) * dist * np.linalg.norm(diffs, axis=1)
        worst_angle = max(worst_angle, float((lhs - slack).max()))
    tol = 10.0 * emb.solver.feasibility_tolerance
    return ConstraintReport(queries=count, max_norm_violation=worst_norm,
                            max_angle_violation=worst_angle,
                            passed=worst_norm <= tol and worst_angle <= tol)
