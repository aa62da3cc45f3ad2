#!/usr/bin/env python3
"""Build a terminal embedder for a random Gaussian cloud, then audit the
distortion band, the constraint replay, and the local regularity slope."""

import argparse

import numpy as np

import termspace as ts


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=64)
    ap.add_argument("--dim", type=int, default=32)
    ap.add_argument("--epsilon", type=float, default=0.4)
    ap.add_argument("--pairs", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    pts = ts.PointSet.from_array(rng.standard_normal((args.n, args.dim)))
    budget = ts.make_budget(args.epsilon, "finite")
    secants = ts.unit_secants(pts)
    Pi = ts.certify_or_grow(ts.default_factory(args.dim, args.seed), secants,
                            budget.hull_distortion_target, m0=8, m_cap=4096,
                            seed=args.seed)
    emb = ts.build_embedder(ts.GroundSet.from_points(pts), Pi, budget, "finite")
    print(f"n={args.n} d={args.dim} eps={args.epsilon}  ->  m={Pi.m} "
          f"(output dim {emb.out_dim}), hull estimate {Pi.distortion_estimate:.3e}")

    rep = ts.audit_terminal(emb, args.pairs, seed=args.seed + 1)
    print(f"terminal audit: pass={rep.passed}  ratios in "
          f"[{rep.min_ratio:.5f}, {rep.max_ratio:.5f}]  band {rep.band}")

    queries = rng.standard_normal((200, args.dim)) * 2.0
    cr = ts.audit_constraint_norms(emb, queries)
    print(f"constraint replay: pass={cr.passed}  norm viol "
          f"{cr.max_norm_violation:.2e}  angle viol {cr.max_angle_violation:.2e}")

    u = pts.points[0] + 0.4 * (pts.points[1] - pts.points[0])
    hr = ts.audit_holder(emb, u, 500, 0.5, seed=args.seed + 2)
    print(f"holder audit at a generic query: slope={hr.fitted_slope:.3f} "
          f"(floor 0.4), max ratio {hr.max_ratio:.3f}")


if __name__ == "__main__":
    main()
