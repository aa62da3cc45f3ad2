#!/usr/bin/env python3
"""Cover-variant embedder for a circle embedded in higher dimension: build
the secant cover, certify the projection, and audit the terminal band plus
the quarter-Holder bound inside the reach tube."""

import argparse

import numpy as np

import termspace as ts


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dim", type=int, default=16)
    ap.add_argument("--epsilon", type=float, default=0.5)
    ap.add_argument("--samples", type=int, default=512)
    ap.add_argument("--pairs", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    q, _ = np.linalg.qr(rng.standard_normal((args.dim, args.dim)))
    ground = ts.GroundSet.circle(np.zeros(args.dim), 1.0, q[:, :2].T)
    budget = ts.make_budget(args.epsilon, "cover")

    secants = ts.sampled_secants(ground, args.samples, args.seed)
    cover = ts.greedy_cover(secants, budget.cover_radius)
    Pi = ts.certify_or_grow(ts.default_factory(args.dim, args.seed), secants,
                            budget.hull_distortion_target, m0=8, m_cap=4096,
                            seed=args.seed)
    emb = ts.build_embedder(ground, Pi, budget, "cover", cover=cover)
    print(f"circle in R^{args.dim}, eps={args.epsilon}: cover {cover.size} "
          f"directions (radius {cover.verified_radius:.5f} <= "
          f"{budget.cover_radius:.5f}), m={Pi.m}")

    rep = ts.audit_terminal(emb, args.pairs, seed=args.seed + 1)
    print(f"terminal audit: pass={rep.passed}  ratios in "
          f"[{rep.min_ratio:.5f}, {rep.max_ratio:.5f}]")

    dist = 0.25
    u = ground.center + (1.0 + dist) * ground.basis[0]
    consts = ts.holder_constants(dist, args.epsilon)
    hr = ts.audit_holder(emb, u, 500, 0.25, seed=args.seed + 2)
    print(f"holder audit at d(u,X)={dist}: max ratio {hr.max_ratio:.4f} <= "
          f"C_u {consts.C_u:.1f}, slope {hr.fitted_slope:.3f} (pass={hr.passed})")


if __name__ == "__main__":
    main()
