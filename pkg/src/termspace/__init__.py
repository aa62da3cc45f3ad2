"""Nonlinear terminal embeddings: random projection plus per-query min-norm
optimization, with distortion and regularity audits."""

from .core import (EpsilonBudget, GroundSet, PointSet, SolverConfig,
                   make_budget, worker_count)
from .embed import (EvaluationError, TerminalEmbedder, assemble_cover,
                    assemble_finite, build_embedder, evaluate, evaluate_batch,
                    evaluate_detail)
from .geometry import (CoverSet, NearestResult, covering_radius, greedy_cover,
                       nearest, voronoi_interior_margin)
from .minnorm import (ConstraintSystem, ConvergenceError, InfeasibleSystemError,
                      KktReport, MinNormSolution, check_kkt, min_norm_point)
from .randproj import (CertificationError, ProjectionMatrix, SecantSet,
                       certify_or_grow, default_factory, estimate_hull_distortion,
                       gaussian_matrix, gaussian_width_mc, identity_matrix,
                       manifold_width_bound, sampled_secants, unit_ball_volume,
                       unit_secants)
from .verify import (AuditReport, ConstraintReport, HolderAudit,
                     HolderConstants, audit_constraint_norms, audit_holder,
                     audit_terminal, holder_constants)

__version__ = "0.1.0"

__all__ = [
    "AuditReport", "CertificationError", "ConstraintReport",
    "ConstraintSystem", "ConvergenceError", "CoverSet", "EpsilonBudget",
    "EvaluationError", "GroundSet", "HolderAudit", "HolderConstants",
    "InfeasibleSystemError", "KktReport", "MinNormSolution", "NearestResult",
    "PointSet", "ProjectionMatrix", "SecantSet", "SolverConfig",
    "TerminalEmbedder", "assemble_cover", "assemble_finite",
    "audit_constraint_norms", "audit_holder", "audit_terminal",
    "build_embedder", "certify_or_grow", "check_kkt", "covering_radius",
    "default_factory", "estimate_hull_distortion", "evaluate",
    "evaluate_batch", "evaluate_detail", "gaussian_matrix",
    "gaussian_width_mc", "greedy_cover", "holder_constants",
    "identity_matrix", "make_budget", "manifold_width_bound",
    "min_norm_point", "nearest", "sampled_secants", "unit_ball_volume",
    "unit_secants", "voronoi_interior_margin", "worker_count",
]
