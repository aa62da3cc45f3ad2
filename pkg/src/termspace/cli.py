"""Command-line front end: build and serialize embedders, evaluate query
files, run audits, and print width bounds.

Archive layout (little-endian throughout):

    magic "TEMB" | version u32 | d u32 | m u32 | n u32
    variant u8 (0 finite, 1 cover) | ground kind u8 (0 finite, 1 circle, 2 sphere)
    epsilon f64 | seed u64 | reach f64 | cover size u32
    Pi entries (m*d f64, row-major)
    ground payload (finite: n*d f64; circle: center, radius, basis; sphere: center, radius)
    cover directions (ell*d f64) and verified radius (f64, if ell > 0)
    distortion estimate f64
"""

from __future__ import annotations

import argparse
import math
import os
import struct
import sys
import tempfile
from typing import Optional

import numpy as np

from .core import GroundSet, PointSet, SolverConfig, make_budget
from .embed import (EvaluationError, TerminalEmbedder, build_embedder,
                    evaluate_detail)
from .geometry import CoverSet, greedy_cover
from .minnorm import ConvergenceError, InfeasibleSystemError
from .randproj import (CertificationError, ProjectionMatrix, certify_or_grow,
                       default_factory, gaussian_width_mc, manifold_width_bound,
                       sampled_secants, unit_secants)
from .verify import (audit_constraint_norms, audit_holder, audit_terminal,
                     default_query_distribution)

MAGIC = b"TEMB"
VERSION = 1
_VARIANT_CODE = {"finite": 0, "cover": 1}
_KIND_CODE = {"finite": 0, "circle": 1, "sphere": 2}
_VARIANT_NAME = {v: k for k, v in _VARIANT_CODE.items()}
_KIND_NAME = {v: k for k, v in _KIND_CODE.items()}

EXIT_OK = 0
EXIT_AUDIT_FAIL = 1
EXIT_USAGE = 2
EXIT_NUMERIC_FAIL = 3


class UsageError(ValueError):
    pass


# ---------------------------------------------------------------- file I/O

def _atomic_write(path: str, payload: bytes) -> None:
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_points(ps: PointSet, path: str) -> None:
    """Headerless CSV, one point per row, round-trip decimal formatting."""
    lines = [",".join(repr(float(v)) for v in row) for row in ps.points]
    _atomic_write(path, ("\n".join(lines) + "\n").encode())


def load_points(path: str) -> PointSet:
    rows = []
    with open(path, "r") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                row = [float(tok) for tok in line.split(",")]
            except ValueError as err:
                raise UsageError(f"{path}:{lineno}: {err}") from None
            if rows and len(row) != len(rows[0]):
                raise UsageError(f"{path}:{lineno}: expected {len(rows[0])} "
                                 f"columns, got {len(row)}")
            rows.append(row)
    if not rows:
        raise UsageError(f"no points in {path}")
    return PointSet.from_array(np.array(rows, dtype=np.float64))


def _f64(arr: np.ndarray) -> bytes:
    return np.ascontiguousarray(arr, dtype="<f8").tobytes()


def save_archive(emb: TerminalEmbedder, path: str) -> None:
    g = emb.ground
    n = g.points.n if g.is_finite else 0
    ell = emb.cover.size if emb.cover is not None else 0
    head = MAGIC + struct.pack(
        "<IIIIBBdQdI", VERSION, g.dim, emb.Pi.m, n,
        _VARIANT_CODE[emb.variant], _KIND_CODE[g.kind],
        emb.budget.epsilon, emb.Pi.seed & 0xFFFFFFFFFFFFFFFF, g.reach, ell)
    body = [head, _f64(emb.Pi.entries)]
    if g.is_finite:
        body.append(_f64(g.points.points))
    elif g.kind == "circle":
        body += [_f64(g.center), struct.pack("<d", g.radius), _f64(g.basis)]
    else:
        body += [_f64(g.center), struct.pack("<d", g.radius)]
    if ell:
        body += [_f64(emb.cover.centers),
                 struct.pack("<d", emb.cover.verified_radius)]
    body.append(struct.pack("<d", emb.Pi.distortion_estimate))
    _atomic_write(path, b"".join(body))


class _Reader:
    def __init__(self, blob: bytes):
        self.blob = blob
        self.pos = 0

    def take(self, fmt: str):
        vals = struct.unpack_from("<" + fmt, self.blob, self.pos)
        self.pos += struct.calcsize("<" + fmt)
        return vals

    def array(self, count: int, shape) -> np.ndarray:
        arr = np.frombuffer(self.blob, dtype="<f8", count=count,
                            offset=self.pos).astype(np.float64)
        self.pos += count * 8
        return arr.reshape(shape)


def load_archive(path: str, solver: SolverConfig = SolverConfig()) -> TerminalEmbedder:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != MAGIC:
        raise UsageError(f"{path} is not an embedder archive")
    try:
        return _decode_archive(blob, solver)
    except (struct.error, KeyError, IndexError) as err:
        raise UsageError(f"{path} is corrupt or truncated: {err}") from None


def _decode_archive(blob: bytes, solver: SolverConfig) -> TerminalEmbedder:
    r = _Reader(blob[4:])
    (version, d, m, n, variant_code, kind_code,
     epsilon, seed, reach, ell) = r.take("IIIIBBdQdI")
    if version != VERSION:
        raise UsageError(f"unsupported archive version {version}")
    entries = r.array(m * d, (m, d))
    kind = _KIND_NAME[kind_code]
    if kind == "finite":
        ground = GroundSet.from_points(
            PointSet.from_array(r.array(n * d, (n, d))), reach=reach)
    elif kind == "circle":
        center = r.array(d, (d,))
        (radius,) = r.take("d")
        basis = r.array(2 * d, (2, d))
        ground = GroundSet.circle(center, radius, basis)
    else:
        center = r.array(d, (d,))
        (radius,) = r.take("d")
        ground = GroundSet.sphere(center, radius)
    cover = None
    if ell:
        centers = r.array(ell * d, (ell, d))
        (verified,) = r.take("d")
        budget_probe = make_budget(epsilon, "cover")
        cover = CoverSet(centers=centers, center_indices=np.arange(ell),
                         radius=budget_probe.cover_radius,
                         verified_radius=verified)
    (estimate,) = r.take("d")
    variant = _VARIANT_NAME[variant_code]
    budget = make_budget(epsilon, variant)
    Pi = ProjectionMatrix(entries=entries, m=m, d=d,
                          distortion_estimate=estimate, seed=seed)
    return build_embedder(ground, Pi, budget, variant, cover=cover, solver=solver)


# ----------------------------------------------------------------- reports

def format_report(title: str, items: dict, passed: Optional[bool]) -> str:
    lines = [title]
    for key, val in items.items():
        lines.append(f"{key}: {val}")
    if passed is not None:
        lines.append(f"pass: {str(passed).lower()}")
        lines.append("RESULT " + ("pass" if passed else "fail"))
    return "\n".join(lines) + "\n"


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        _atomic_write(out, text.encode())
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------- commands

def cmd_build(args) -> int:
    if not (0.0 < args.epsilon < 1.0):
        raise UsageError(f"--epsilon must lie in (0, 1), got {args.epsilon}")
    points = load_points(args.points_file)
    reach = args.reach if args.reach is not None else math.inf
    if args.variant == "cover" and args.reach is None:
        print("warning: cover variant without --reach; tube audits will "
              "treat the reach as infinite", file=sys.stderr)
    ground = GroundSet.from_points(points, reach=reach)
    budget = make_budget(args.epsilon, args.variant)
    secants = unit_secants(points)
    cover = None
    if args.variant == "cover":
        cover = greedy_cover(secants, budget.cover_radius)
    Pi = certify_or_grow(default_factory(points.dim, args.seed), secants,
                         budget.hull_distortion_target, args.m0, args.m_cap,
                         seed=args.seed)
    emb = build_embedder(ground, Pi, budget, args.variant, cover=cover)
    save_archive(emb, args.out)
    print(f"built {args.variant} embedder: n={points.n} d={points.dim} "
          f"m={Pi.m} hull_estimate={Pi.distortion_estimate:.3e}"
          + (f" cover={cover.size}" if cover else ""))
    return EXIT_OK


def cmd_eval(args) -> int:
    emb = load_archive(args.archive)
    queries = load_points(args.queries_file)
    if queries.dim != emb.ground.dim:
        raise UsageError(f"queries have dimension {queries.dim}, archive "
                         f"has {emb.ground.dim}")
    lines = []
    for q in queries.points:
        det = evaluate_detail(emb, q)
        vals = ",".join(repr(float(v)) for v in det.value)
        lines.append(f"{vals},{int(det.nn.tie)}")
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def _parse_vector(text: str, dim: int) -> np.ndarray:
    try:
        vec = np.array([float(tok) for tok in text.split(",")])
    except ValueError as err:
        raise UsageError(f"could not parse --u: {err}") from None
    if vec.size != dim:
        raise UsageError(f"--u has {vec.size} coordinates, archive needs {dim}")
    return vec


def cmd_audit(args) -> int:
    emb = load_archive(args.archive)
    if args.mode == "terminal":
        rep = audit_terminal(emb, args.pairs, args.seed)
        text = format_report("terminal-audit", {
            "pairs_tested": rep.pairs_tested,
            "min_ratio": repr(rep.min_ratio),
            "max_ratio": repr(rep.max_ratio),
            "band_low": repr(rep.band[0]),
            "band_high": repr(rep.band[1]),
            "violations": len(rep.violations),
            "excluded_ties": rep.excluded_ties,
        }, rep.passed)
        _emit(text, args.out)
        return EXIT_OK if rep.passed else EXIT_AUDIT_FAIL
    if args.mode == "holder":
        if args.u is None:
            raise UsageError("--mode holder requires --u")
        u = _parse_vector(args.u, emb.ground.dim)
        exponent = args.exponent
        if exponent is None:
            exponent = 0.25 if emb.variant == "cover" else 0.5
        rep = audit_holder(emb, u, args.pairs, exponent, args.seed)
        text = format_report("holder-audit", {
            "pairs_tested": rep.pairs_tested,
            "exponent": exponent,
            "max_ratio": repr(rep.max_ratio),
            "fitted_slope": repr(rep.fitted_slope),
            "bound": repr(rep.bound),
            "excluded": rep.excluded,
        }, rep.passed)
        _emit(text, args.out)
        return EXIT_OK if rep.passed else EXIT_AUDIT_FAIL
    if args.mode == "constraints":
        draw = default_query_distribution(emb)
        queries = draw(np.random.default_rng([args.seed, 2]), args.pairs)
        rep = audit_constraint_norms(emb, queries, seed=args.seed)
        text = format_report("constraint-audit", {
            "queries": rep.queries,
            "max_norm_violation": repr(rep.max_norm_violation),
            "max_angle_violation": repr(rep.max_angle_violation),
        }, rep.passed)
        _emit(text, args.out)
        return EXIT_OK if rep.passed else EXIT_AUDIT_FAIL
    raise UsageError(f"unknown audit mode {args.mode!r}")


def cmd_width(args) -> int:
    if (args.points_file is None) == (args.shape is None):
        raise UsageError("give either a points file or --shape")
    if args.points_file is not None:
        secants = unit_secants(load_points(args.points_file))
    else:
        if args.shape != "circle":
            raise UsageError("only --shape circle is supported")
        if args.radius <= 0:
            raise UsageError("--radius must be positive")
        d = args.dim
        basis = np.zeros((2, d))
        basis[0, 0] = 1.0
        basis[1, 1] = 1.0
        ground = GroundSet.circle(np.zeros(d), args.radius, basis)
        secants = sampled_secants(ground, args.samples, args.seed)
    mean, stderr = gaussian_width_mc(secants, args.trials, args.seed)
    print(f"gaussian_width: {mean!r} stderr: {stderr!r} "
          f"(directions={secants.size}, trials={args.trials})")
    return EXIT_OK


def cmd_manifold_bound(args) -> int:
    if args.tau <= 0 or args.vol <= 0 or args.bvol < 0 or args.dim < 1:
        raise UsageError("need --dim >= 1, --tau > 0, --vol > 0, --bvol >= 0")
    alpha, beta, bound = manifold_width_bound(args.dim, args.tau, args.vol,
                                              args.bvol)
    print(f"alpha: {alpha!r}")
    print(f"beta: {beta!r}")
    print(f"width_bound: {bound!r}")
    return EXIT_OK


# ------------------------------------------------------------------ driver

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="termspace",
                                description="nonlinear terminal embeddings: "
                                            "build, evaluate, audit")
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build", help="build an embedder from a points CSV")
    b.add_argument("points_file")
    b.add_argument("--epsilon", type=float, required=True)
    b.add_argument("--variant", choices=("finite", "cover"), default="finite")
    b.add_argument("--reach", type=float, default=None)
    b.add_argument("--m0", type=int, default=8)
    b.add_argument("--m-cap", type=int, default=2048)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--out", required=True)
    b.set_defaults(fn=cmd_build)

    e = sub.add_parser("eval", help="embed a CSV of query points")
    e.add_argument("archive")
    e.add_argument("queries_file")
    e.add_argument("--out", default=None)
    e.set_defaults(fn=cmd_eval)

    a = sub.add_parser("audit", help="audit a built embedder")
    a.add_argument("archive")
    a.add_argument("--mode", choices=("terminal", "holder", "constraints"),
                   default="terminal")
    a.add_argument("--pairs", type=int, default=1000)
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--u", default=None,
                   help="comma-separated query point (holder mode)")
    a.add_argument("--exponent", type=float, default=None)
    a.add_argument("--out", default=None)
    a.set_defaults(fn=cmd_audit)

    w = sub.add_parser("width", help="Monte Carlo Gaussian width of unit secants")
    w.add_argument("points_file", nargs="?", default=None)
    w.add_argument("--shape", choices=("circle",), default=None)
    w.add_argument("--radius", type=float, default=1.0)
    w.add_argument("--dim", type=int, default=2)
    w.add_argument("--samples", type=int, default=512)
    w.add_argument("--trials", type=int, default=100_000)
    w.add_argument("--seed", type=int, default=0)
    w.set_defaults(fn=cmd_width)

    mb = sub.add_parser("manifold-bound",
                        help="width bound from dimension, reach, and volumes")
    mb.add_argument("--dim", type=int, required=True)
    mb.add_argument("--tau", type=float, required=True)
    mb.add_argument("--vol", type=float, required=True)
    mb.add_argument("--bvol", type=float, default=0.0)
    mb.set_defaults(fn=cmd_manifold_bound)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as err:
        return err.code if err.code is not None else EXIT_USAGE
    try:
        return args.fn(args)
    except UsageError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, FileNotFoundError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except (CertificationError, ConvergenceError, InfeasibleSystemError,
            EvaluationError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_NUMERIC_FAIL


if __name__ == "__main__":
    sys.exit(main())
