
import numpy as np
import pytest

from termspace import (EvaluationError, GroundSet, PointSet, SolverConfig,
                       assemble_cover, assemble_finite, build_embedder,
                       certify_or_grow, default_factory, evaluate,
                       evaluate_batch, evaluate_detail, greedy_cover,
                       identity_matrix, make_budget, min_norm_point, nearest,
                       unit_secants)


def finite_embedder(pts, eps=0.4, seed=0):
    ps = PointSet.from_array(pts)
    ground = GroundSet.from_points(ps)
    budget = make_budget(eps, "finite")
    Pi = certify_or_grow(default_factory(ps.dim, seed), unit_secants(ps),
                         budget.hull_distortion_target, m0=2, m_cap=4096,
                         seed=seed)
    return build_embedder(ground, Pi, budget, "finite")


def cover_embedder_on_circle(d=4, eps=0.5, seed=0, samples=256):
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.standard_normal((d, d)))
    ground = GroundSet.circle(np.zeros(d), 1.0, q[:, :2].T)
    budget = make_budget(eps, "cover")
    from termspace import sampled_secants
    secants = sampled_secants(ground, samples, seed)
    cover = greedy_cover(secants, budget.cover_radius)
    Pi = certify_or_grow(default_factory(d, seed), secants,
                         budget.hull_distortion_target, m0=2, m_cap=4096,
                         seed=seed)
    return build_embedder(ground, Pi, budget, "cover", cover=cover)


@pytest.fixture(scope="module")
def cloud():
    rng = np.random.default_rng(21)
    return finite_embedder(rng.standard_normal((12, 6)))


def test_assemble_finite_on_ground_point(cloud):
    pts = cloud.ground.points.points
    u = pts[2]
    nn = nearest(cloud.ground, u)
    system = assemble_finite(cloud, u, nn)
    assert system.rows == 2 * (pts.shape[0] - 1)      # the u_NN pair is dropped
    assert np.max(np.abs(system.rhs)) == 0.0
    sol = min_norm_point(system, SolverConfig())
    assert np.allclose(sol.z, 0.0, atol=1e-12)


def test_assemble_finite_two_points_drops_pair():
    emb = finite_embedder([[0.0, 0.0], [2.0, 0.0]])
    u = np.array([0.5, 0.0])                          # interior of the segment
    system = assemble_finite(emb, u, nearest(emb.ground, u))
    assert system.rows == 2


def test_assemble_finite_rhs_pair_identity(cloud):
    rng = np.random.default_rng(5)
    u = rng.standard_normal(6) * 2.0
    nn = nearest(cloud.ground, u)
    system = assemble_finite(cloud, u, nn)
    half = system.rows // 2
    pts = cloud.ground.points.points
    diffs = np.delete(pts, nn.index, axis=0) - nn.point
    expect = 2.0 * cloud.budget.constraint_slack * nn.distance \
        * np.linalg.norm(diffs, axis=1)
    assert np.allclose(system.rhs[:half] + system.rhs[half:], expect, atol=1e-12)


def test_assemble_finite_wrong_variant():
    emb = cover_embedder_on_circle()
    with pytest.raises(ValueError):
        assemble_finite(emb, np.zeros(4), nearest(emb.ground, np.zeros(4)))


def test_assemble_cover_row_count_and_zero_slack():
    # cover variant over a finite ground set: distance 0 makes every rhs 0
    pts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    ps = PointSet.from_array(pts)
    budget = make_budget(0.5, "cover")
    secants = unit_secants(ps)
    cover = greedy_cover(secants, budget.cover_radius)
    Pi = identity_matrix(2).with_estimate(0.0)
    emb = build_embedder(GroundSet.from_points(ps), Pi, budget, "cover",
                         cover=cover)
    u = pts[1]
    system = assemble_cover(emb, u, nearest(emb.ground, u))
    assert system.rows == 2 * cover.size
    assert np.max(np.abs(system.rhs)) == 0.0
    sol = min_norm_point(system, SolverConfig())
    assert np.allclose(sol.z, 0.0, atol=1e-12)


def test_assemble_cover_translation_invariance():
    emb = cover_embedder_on_circle(d=4)
    rng = np.random.default_rng(9)
    u = rng.standard_normal(4)
    nn = nearest(emb.ground, u)
    sys1 = assemble_cover(emb, u, nn)

    shift = rng.standard_normal(4)
    ground2 = GroundSet.circle(emb.ground.center + shift, emb.ground.radius,
                               emb.ground.basis)
    emb2 = build_embedder(ground2, emb.Pi, emb.budget, "cover", cover=emb.cover)
    sys2 = assemble_cover(emb2, u + shift, nearest(emb2.ground, u + shift))
    assert np.array_equal(sys1.matrix, sys2.matrix)
    assert np.allclose(sys1.rhs, sys2.rhs, atol=1e-12)


def test_evaluate_ground_point_bitwise(cloud):
    pts = cloud.ground.points.points
    for k in (0, 5, 11):
        out = evaluate(cloud, pts[k])
        assert np.array_equal(out[:-1], cloud.precomp[k])
        assert out[-1] == 0.0


def test_evaluate_norm_domination(cloud):
    rng = np.random.default_rng(13)
    tol = cloud.solver.feasibility_tolerance
    for _ in range(50):
        det = evaluate_detail(cloud, rng.standard_normal(6) * 3.0)
        assert np.linalg.norm(det.u_prime) <= det.nn.distance + tol


def test_evaluate_singleton_ground():
    ps = PointSet.from_array([np.zeros(3)])
    emb = build_embedder(GroundSet.from_points(ps),
                         identity_matrix(3).with_estimate(0.0),
                         make_budget(0.5, "finite"), "finite")
    u = np.array([1.0, 2.0, 2.0])
    out = evaluate(emb, u)
    assert np.array_equal(out[:-1], np.zeros(3))
    assert out[-1] == pytest.approx(3.0, rel=1e-15)


def test_evaluate_base_isometry(cloud):
    rng = np.random.default_rng(3)
    for _ in range(100):
        u = rng.standard_normal(6) * 2.5
        det = evaluate_detail(cloud, u)
        base = np.concatenate([cloud.precomp[det.nn.index], [0.0]])
        lift = float(np.linalg.norm(det.value - base))
        assert abs(lift - det.nn.distance) <= 1e-9 * (1.0 + det.nn.distance)


def test_evaluate_last_coordinate_real(cloud):
    rng = np.random.default_rng(31)
    for _ in range(50):
        out = evaluate(cloud, rng.standard_normal(6) * 4.0)
        assert out[-1] >= 0.0 and np.isfinite(out[-1])


def test_evaluate_cover_circle_points_land_near_projection():
    emb = cover_embedder_on_circle(d=4, samples=128)
    rng = np.random.default_rng(8)
    xs = emb.ground.sample_surface(10, rng)
    for x in xs:
        out = evaluate(emb, x)
        assert abs(out[-1]) <= 1e-9
        assert np.allclose(out[:-1], emb.Pi.apply(x), atol=1e-9)


def test_evaluate_batch_matches_sequential(cloud):
    rng = np.random.default_rng(77)
    queries = rng.standard_normal((40, 6))
    batch = evaluate_batch(cloud, queries)
    for i, q in enumerate(queries):
        assert np.array_equal(batch[i], evaluate(cloud, q))


def test_evaluate_batch_thread_count_invariance(cloud, monkeypatch):
    rng = np.random.default_rng(78)
    queries = rng.standard_normal((32, 6))
    monkeypatch.setenv("TERMSPACE_THREADS", "1")
    seq = evaluate_batch(cloud, queries)
    monkeypatch.setenv("TERMSPACE_THREADS", "4")
    par = evaluate_batch(cloud, queries)
    assert np.array_equal(seq, par)


def test_evaluate_batch_ground_points_have_zero_tail(cloud):
    batch = evaluate_batch(cloud, cloud.ground.points.points)
    assert np.all(batch[:, -1] == 0.0)


def test_evaluate_batch_dimension_check(cloud):
    with pytest.raises(ValueError, match="query 1"):
        evaluate_batch(cloud, [np.zeros(6), np.zeros(3)])


def test_evaluation_error_annotates_query():
    # a projection that kills a needed cover direction makes the feasible
    # set empty; the failure must name the query
    pts = np.array([[0.0, 0.0], [2.0, 0.0]])
    ps = PointSet.from_array(pts)
    budget = make_budget(0.5, "cover")
    secants = unit_secants(ps)            # directions +-e1
    cover = greedy_cover(secants, budget.cover_radius)
    Pi = identity_matrix(2)
    dead = Pi.__class__(entries=np.array([[0.0, 0.0], [0.0, 1.0]]), m=2, d=2,
                        distortion_estimate=0.0, seed=0)
    emb = build_embedder(GroundSet.from_points(ps), dead, budget, "cover",
                         cover=cover)
    with pytest.raises(EvaluationError, match="query"):
        evaluate(emb, np.array([5.0, 0.0]))


def test_build_embedder_validations():
    ps = PointSet.from_array([[0.0, 0.0], [1.0, 0.0]])
    ground = GroundSet.from_points(ps)
    budget = make_budget(0.4, "finite")
    with pytest.raises(ValueError, match="uncertified"):
        build_embedder(ground, identity_matrix(2), budget, "finite")
    with pytest.raises(ValueError, match="exceeds"):
        build_embedder(ground, identity_matrix(2).with_estimate(0.5), budget,
                       "finite")
    with pytest.raises(ValueError, match="CoverSet"):
        build_embedder(ground, identity_matrix(2).with_estimate(0.0),
                       make_budget(0.4, "cover"), "cover")
    with pytest.raises(ValueError, match="variant"):
        build_embedder(ground, identity_matrix(2).with_estimate(0.0),
                       budget, "cover", cover=None)


def test_out_dim_is_m_plus_one(cloud):
    assert cloud.out_dim == cloud.Pi.m + 1
    out = evaluate(cloud, np.zeros(6))
    assert out.shape == (cloud.out_dim,)
