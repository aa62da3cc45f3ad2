"""Per-query constraint assembly and evaluation of the nonlinear embedding

    f(u) = (Pi u_NN + u', sqrt(||u - u_NN||^2 - ||u'||^2))

where u' is the min-norm point of the query's feasible polyhedron."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import EpsilonBudget, GroundSet, SolverConfig, worker_count
from .geometry import CoverSet, NearestResult, nearest
from .minnorm import ConstraintSystem, MinNormSolution, min_norm_point
from .randproj import ProjectionMatrix


class EvaluationError(RuntimeError):
    """Solver failure annotated with the query that triggered it."""

    def __init__(self, query: np.ndarray, message: str):
        super().__init__(f"evaluate failed at query {np.array2string(query)}: {message}")
        self.query = np.asarray(query, dtype=np.float64)


@dataclass(frozen=True)
class TerminalEmbedder:
    """Immutable bundle: ground set, certified projection, budget, variant,
    optional cover, and solver settings.  Output dimension is m + 1."""

    ground: GroundSet
    Pi: ProjectionMatrix
    budget: EpsilonBudget
    variant: str
    cover: Optional[CoverSet]
    solver: SolverConfig
    precomp: Optional[np.ndarray]        # Pi x_i for finite ground points
    cover_precomp: Optional[np.ndarray]  # Pi w_i for cover directions

    @property
    def out_dim(self) -> int:
        return self.Pi.m + 1


@dataclass(frozen=True)
class EvalDetail:
    value: np.ndarray
    u_prime: np.ndarray
    nn: NearestResult
    solution: Optional[MinNormSolution]


def build_embedder(ground: GroundSet, Pi: ProjectionMatrix, budget: EpsilonBudget,
                   variant: str, cover: Optional[CoverSet] = None,
                   solver: SolverConfig = SolverConfig()) -> TerminalEmbedder:
    if variant not in ("finite", "cover"):
        raise ValueError(f"unknown variant {variant!r}")
    if variant != budget.variant:
        raise ValueError("budget was made for a different variant")
    if Pi.d != ground.dim:
        raise ValueError("projection and ground set dimensions differ")
    if Pi.distortion_estimate < 0:
        raise ValueError("projection is uncertified; run certify_or_grow or "
                         "stamp an estimate first")
    if Pi.distortion_estimate > budget.hull_distortion_target:
        raise ValueError(
            f"projection estimate {Pi.distortion_estimate:g} exceeds the "
            f"hull target {budget.hull_distortion_target:g}")
    if variant == "cover":
        if cover is None:
            raise ValueError("cover variant needs a CoverSet")
        if cover.radius != budget.cover_radius:
            raise ValueError("cover radius does not match the budget")
    else:
        cover = None
    precomp = None
    if ground.is_finite:
        precomp = ground.points.points @ Pi.entries.T
        precomp.flags.writeable = False
    cover_precomp = None
    if cover is not None:
        cover_precomp = cover.centers @ Pi.entries.T
        cover_precomp.flags.writeable = False
    return TerminalEmbedder(ground=ground, Pi=Pi, budget=budget, variant=variant,
                            cover=cover, solver=solver, precomp=precomp,
                            cover_precomp=cover_precomp)


def assemble_finite(emb: TerminalEmbedder, u: np.ndarray,
                    nn: NearestResult) -> ConstraintSystem:
    """Two rows per ground point x (skipping x = u_NN):

        |<z, Pi(x - u_NN)> - <u - u_NN, x - u_NN>| <= slack ||u-u_NN|| ||x-u_NN||
    """
    if emb.variant != "finite":
        raise ValueError("assemble_finite needs the finite variant")
    pts = emb.ground.points.points
    k = nn.index
    diffs = pts - nn.point[None, :]
    coef = emb.precomp - emb.precomp[k][None, :]    # rows Pi(x_i - u_NN)
    inner = diffs @ (u - nn.point)
    slack = emb.budget.constraint_slack * nn.distance * np.linalg.norm(diffs, axis=1)
    n = pts.shape[0]
    matrix = np.vstack([coef, -coef])
    rhs = np.concatenate([inner + slack, -inner + slack])
    src = np.concatenate([np.arange(n), np.arange(n)])
    return ConstraintSystem.from_rows(matrix, rhs, provenance="finite",
                                      source_index=src)


def assemble_cover(emb: TerminalEmbedder, u: np.ndarray,
                   nn: NearestResult) -> ConstraintSystem:
    """Two rows per cover direction w:

        |<z, Pi w> - <u - u_NN, w>| <= slack ||u - u_NN||
    """
    if emb.variant != "cover":
        raise ValueError("assemble_cover needs the cover variant")
    proj = emb.cover.centers @ (u - nn.point)
    slack = emb.budget.constraint_slack * nn.distance
    ell = emb.cover.size
    matrix = np.vstack([emb.cover_precomp, -emb.cover_precomp])
    rhs = np.concatenate([proj + slack, -proj + slack])
    src = np.concatenate([np.arange(ell), np.arange(ell)])
    return ConstraintSystem.from_rows(matrix, rhs, provenance="cover",
                                      source_index=src)


def evaluate_detail(emb: TerminalEmbedder, u) -> EvalDetail:
    u = np.asarray(u, dtype=np.float64).ravel()
    nn = nearest(emb.ground, u)
    m = emb.Pi.m
    if nn.distance == 0.0:
        head = emb.precomp[nn.index] if emb.ground.is_finite else emb.Pi.apply(u)
        value = np.concatenate([head, [0.0]])
        return EvalDetail(value=value, u_prime=np.zeros(m), nn=nn, solution=None)

    try:
        if emb.variant == "finite":
            system = assemble_finite(emb, u, nn)
        else:
            system = assemble_cover(emb, u, nn)
        sol = min_norm_point(system, emb.solver)
    except EvaluationError:
        raise
    except Exception as err:
        raise EvaluationError(u, str(err)) from err
    uprime = sol.z
    radicand = nn.distance ** 2 - float(uprime @ uprime)
    if radicand < 0.0:
        if radicand < -emb.solver.radicand_clamp:
            raise EvaluationError(
                u, f"||u'|| exceeds ||u - u_NN|| beyond the clamp "
                   f"(radicand {radicand:g})")
        radicand = 0.0
    if emb.ground.is_finite:
        head = emb.precomp[nn.index] + uprime
    else:
        head = emb.Pi.apply(nn.point) + uprime
    value = np.concatenate([head, [math.sqrt(radicand)]])
    return EvalDetail(value=value, u_prime=uprime, nn=nn, solution=sol)


def evaluate(emb: TerminalEmbedder, u) -> np.ndarray:
    """Embed one query point; returns a vector in R^(m+1)."""
    return evaluate_detail(emb, u).value


def evaluate_batch(emb: TerminalEmbedder, queries: Sequence) -> np.ndarray:
    """Embed many queries, order preserved.  Worker threads (capped by
    TERMSPACE_THREADS) only partition the queries, so output is identical
    for any thread count.  The first failure aborts with its index."""
    qs = [np.asarray(q, dtype=np.float64).ravel() for q in queries]
    for i, q in enumerate(qs):
        if q.size != emb.ground.dim:
            raise ValueError(f"query {i} has dimension {q.size}, "
                             f"expected {emb.ground.dim}")
    out = np.empty((len(qs), emb.out_dim))
    workers = min(worker_count(), max(1, len(qs)))

    def run(i: int) -> None:
        try:
            out[i] = evaluate(emb, qs[i])
        except EvaluationError as err:
            raise EvaluationError(qs[i], f"(batch index {i}) {err}") from err

    if workers <= 1 or len(qs) < 4:
        for i in range(len(qs)):
            run(i)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run, range(len(qs))))
    return out
