"""Exact minimum-norm point in a polyhedron {z : Az <= b}.

The solve runs Hildreth dual coordinate ascent as a warm start and finishes
with an active-set method whose subproblems are equality-constrained
least-norm solves on the working set, so the returned point carries a clean
KKT certificate (nonnegative multipliers with z = -sum lambda_i a_i)."""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional

import numpy as np
from numba import njit

from .core import SolverConfig

WARM_SWEEPS = 4


class InfeasibleSystemError(RuntimeError):
    """The polyhedron is empty; carries a Farkas certificate."""

    def __init__(self, certificate_rows, certificate):
        super().__init__("constraint system is infeasible")
        self.certificate_rows = list(certificate_rows)
        self.certificate = np.asarray(certificate, dtype=np.float64)


class ConvergenceError(RuntimeError):
    """Iteration budget exhausted; carries the best iterate seen."""

    def __init__(self, best_z, residual: float, iterations: int):
        super().__init__(
            f"min-norm solve did not converge: residual {residual:g} "
            f"after {iterations} iterations")
        self.best_z = np.asarray(best_z, dtype=np.float64)
        self.residual = float(residual)
        self.iterations = int(iterations)


@dataclass(frozen=True)
class ConstraintSystem:
    """Affine rows a_i^T z <= b_i in R^m, with per-row provenance."""

    matrix: np.ndarray            # (rows, m)
    rhs: np.ndarray               # (rows,)
    m: int
    provenance: str = "adhoc"     # "finite" | "cover" | "adhoc"
    source_index: Optional[np.ndarray] = None   # originating ground/cover row

    @classmethod
    def from_rows(cls, matrix, rhs, provenance: str = "adhoc",
                  source_index=None) -> "ConstraintSystem":
        A = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
        b = np.asarray(rhs, dtype=np.float64).ravel()
        if A.shape[0] != b.shape[0]:
            raise ValueError("matrix and rhs row counts differ")
        src = (np.asarray(source_index, dtype=np.int64)
               if source_index is not None else np.arange(A.shape[0]))
        # all-zero rows are vacuous (b >= 0) or certify infeasibility (b < 0)
        zero = ~np.any(A != 0.0, axis=1)
        if np.any(zero):
            bad = zero & (b < 0.0)
            if np.any(bad):
                j = int(np.nonzero(bad)[0][0])
                cert = np.zeros(A.shape[0])
                cert[j] = 1.0
                raise InfeasibleSystemError([int(src[j])], cert)
            A, b, src = A[~zero], b[~zero], src[~zero]
        A = np.ascontiguousarray(A)
        return cls(matrix=A, rhs=b, m=int(A.shape[1]), provenance=provenance,
                   source_index=src)

    @property
    def rows(self) -> int:
        return int(self.matrix.shape[0])


@dataclass(frozen=True)
class MinNormSolution:
    z: np.ndarray
    active_rows: List[int]
    iterations: int
    max_violation: float
    dual_certificate: np.ndarray   # multipliers aligned with active_rows


@dataclass(frozen=True)
class KktReport:
    feasibility: float
    stationarity: float
    complementarity: float
    tolerance: float
    passed: bool


@njit(cache=True)
def _hildreth(A, b, row_norm_sq, lam, z, sweeps, tol):
    rows = A.shape[0]
    for _ in range(sweeps):
        biggest = 0.0
        for i in range(rows):
            viol = -b[i]
            for j in range(A.shape[1]):
                viol += A[i, j] * z[j]
            new_lam = lam[i] + viol / row_norm_sq[i]
            if new_lam < 0.0:
                new_lam = 0.0
            d = new_lam - lam[i]
            if d != 0.0:
                lam[i] = new_lam
                for j in range(A.shape[1]):
                    z[j] -= d * A[i, j]
                step = d if d > 0.0 else -d
                if step > biggest:
                    biggest = step
        if biggest <= tol:
            break


def _zero_solution(system: ConstraintSystem) -> MinNormSolution:
    viol = 0.0
    if system.rows:
        viol = max(0.0, float(-system.rhs.min()))
    return MinNormSolution(z=np.zeros(system.m), active_rows=[], iterations=0,
                           max_violation=viol,
                           dual_certificate=np.zeros(0))


def _solve_working_set(A, b, P, lam_P, scale, max_inner):
    """Nonnegative multipliers on the working set P: repeatedly solve the
    equality-constrained least-norm subproblem G lam = -b_P and walk back
    along the segment when components go negative (removed lowest index
    first).  Raises on a Farkas certificate."""
    P = list(P)
    lam = np.asarray(lam_P, dtype=np.float64).copy()
    for _ in range(max_inner):
        if not P:
            return [], np.zeros(0)
        Ap = A[P]
        G = Ap @ Ap.T
        rhs = -b[P]
        hat, *_ = np.linalg.lstsq(G, rhs, rcond=None)
        resid = rhs - G @ hat
        rnorm = float(np.linalg.norm(resid))
        if rnorm > 1e-9 * scale:
            # rhs leaves range(G): the dual is unbounded along resid
            if resid.min() >= -1e-12 * rnorm:
                raise InfeasibleSystemError(P, np.maximum(resid, 0.0))
            blockers = resid < 0
            steps = lam[blockers] / -resid[blockers]
            alpha = float(steps.min())
            lam = lam + alpha * resid
            drop = int(np.nonzero(blockers)[0][np.argmin(steps)])
            P.pop(drop)
            lam = np.delete(lam, drop)
            continue
        if hat.min() >= -1e-13 * scale:
            return P, np.maximum(hat, 0.0)
        neg = hat < 0
        steps = lam[neg] / (lam[neg] - hat[neg])
        alpha = float(steps.min())
        lam = lam + alpha * (hat - lam)
        drop = int(np.nonzero(neg)[0][np.argmin(steps)])
        P.pop(drop)
        lam = np.delete(lam, drop)
    raise ConvergenceError(np.zeros(A.shape[1]), np.inf, max_inner)


def min_norm_point(system: ConstraintSystem, cfg: SolverConfig) -> MinNormSolution:
    """Euclidean projection of the origin onto {z : Az <= b}."""
    if system.rows == 0 or system.rhs.min() >= -cfg.feasibility_tolerance:
        return _zero_solution(system)

    A, b = system.matrix, system.rhs
    rows, m = system.rows, system.m
    scale = float(np.abs(A).max()) + float(np.abs(b).max()) + 1.0

    lam = np.zeros(rows)
    z = np.zeros(m)
    _hildreth(A, b, np.sum(A * A, axis=1), lam, z,
              WARM_SWEEPS, 1e-14 * scale)
    peak = float(lam.max())
    P = [int(i) for i in np.nonzero(lam > 1e-10 * max(peak, 1.0))[0]]
    lam_P = lam[P]

    best_z, best_viol = None, np.inf
    iterations = 0
    while iterations < cfg.max_iterations:
        iterations += 1
        try:
            P, lam_P = _solve_working_set(A, b, P, lam_P, scale,
                                          max_inner=4 * rows + 16)
        except InfeasibleSystemError as err:
            # map working-set certificate rows through the assembly indices
            src = [int(system.source_index[i]) for i in err.certificate_rows]
            raise InfeasibleSystemError(src, err.certificate) from None
        z = -(lam_P @ A[P]) if P else np.zeros(m)
        viol = A @ z - b
        worst_idx = int(np.argmax(viol))
        worst = float(viol[worst_idx])
        if worst <= cfg.feasibility_tolerance:
            return MinNormSolution(z=z, active_rows=list(P),
                                   iterations=iterations,
                                   max_violation=max(worst, 0.0),
                                   dual_certificate=lam_P.copy())
        if worst < best_viol:
            best_z, best_viol = z.copy(), worst
        if worst_idx in P:
            # numerically stalled: the most violated row is already active
            raise ConvergenceError(z, worst, iterations)
        P = P + [worst_idx]
        lam_P = np.append(lam_P, 0.0)
    raise ConvergenceError(best_z if best_z is not None else z,
                           best_viol, iterations)


def check_kkt(system: ConstraintSystem, sol: MinNormSolution,
              cfg: SolverConfig = SolverConfig()) -> KktReport:
    """Recompute feasibility, stationarity ||z + sum lambda_i a_i||, and
    complementary slackness from scratch."""
    tol = 10.0 * cfg.feasibility_tolerance
    if system.rows == 0:
        feas = 0.0
        slab = np.zeros(0)
    else:
        feas = max(0.0, float((system.matrix @ sol.z - system.rhs).max()))
        slab = system.rhs - system.matrix @ sol.z
    recon = sol.z.copy()
    comp = 0.0
    for idx, lam in zip(sol.active_rows, sol.dual_certificate):
        recon = recon + lam * system.matrix[idx]
        comp = max(comp, abs(float(lam * slab[idx])))
    stat = float(np.linalg.norm(recon))
    return KktReport(feasibility=feas, stationarity=stat, complementarity=comp,
                     tolerance=tol,
                     passed=feas <= tol and stat <= tol and comp <= tol)
