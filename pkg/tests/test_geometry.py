import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from termspace import (CoverSet, GroundSet, PointSet, SecantSet,
                       covering_radius, greedy_cover, nearest,
                       voronoi_interior_margin)


def finite_ground(arr, reach=math.inf):
    return GroundSet.from_points(PointSet.from_array(arr), reach=reach)


def test_nearest_two_points():
    g = finite_ground([[0.0, 0.0], [4.0, 0.0]])
    res = nearest(g, [1.0, 1.0])
    assert res.index == 0
    assert res.distance == pytest.approx(math.sqrt(2.0), rel=1e-15)
    assert not res.tie
    assert res.within_half_reach     # infinite reach


def test_nearest_tie_lowest_index():
    g = finite_ground([[0.0, 0.0], [4.0, 0.0]])
    res = nearest(g, [2.0, 3.0])
    assert res.tie
    assert res.index == 0


def test_nearest_on_ground_point():
    pts = np.array([[0.5, -1.0, 2.0], [3.0, 0.0, 0.0]])
    g = finite_ground(pts)
    res = nearest(g, pts[1])
    assert res.distance == 0.0
    assert np.array_equal(res.point, pts[1])


def test_nearest_circle_radial_projection():
    g = GroundSet.circle([0.0, 0.0], 1.0)
    res = nearest(g, [0.3, 0.0])
    assert np.allclose(res.point, [1.0, 0.0], atol=1e-15)
    assert res.distance == pytest.approx(0.7, rel=1e-14)
    assert not res.within_half_reach       # 0.7 >= tau/2 = 0.5
    assert not res.tie


def test_nearest_circle_center_is_tie():
    g = GroundSet.circle([0.0, 0.0], 1.0)
    res = nearest(g, [0.0, 0.0])
    assert res.tie
    assert np.allclose(res.point, [1.0, 0.0])


def test_nearest_sphere():
    g = GroundSet.sphere([0.0, 0.0, 0.0], 2.0)
    res = nearest(g, [0.0, 0.0, 5.0])
    assert np.allclose(res.point, [0.0, 0.0, 2.0])
    assert res.distance == pytest.approx(3.0, rel=1e-14)
    center = nearest(g, [0.0, 0.0, 0.0])
    assert center.tie


def test_nearest_dimension_mismatch():
    g = finite_ground([[0.0, 0.0]])
    with pytest.raises(ValueError):
        nearest(g, [1.0, 2.0, 3.0])


def test_nearest_tube_fraction_override():
    g = GroundSet.circle([0.0, 0.0], 1.0)
    res = nearest(g, [0.3, 0.0], tube_fraction=0.8)
    assert res.within_half_reach     # 0.7 < 0.8 * 1.0


@pytest.mark.parametrize("n,d", [(200, 6), (80, 40)])
def test_nearest_matches_linear_scan(n, d):
    # kd-tree path for d <= 30, vectorized fallback above; 1e4 queries total
    rng = np.random.default_rng(17)
    pts = rng.standard_normal((n, d))
    g = finite_ground(pts)
    for _ in range(5_000):
        u = rng.standard_normal(d) * 1.5
        res = nearest(g, u)
        dists = np.linalg.norm(pts - u, axis=1)
        assert abs(res.distance - np.linalg.norm(u - res.point)) <= 1e-12
        if not res.tie:
            assert res.index == int(np.argmin(dists))
        assert res.distance <= dists.min() + 1e-9


def test_nn_lipschitz_inside_tube():
    # ||u_NN - v_NN|| <= 2 ||u - v|| for queries within half the reach
    rng = np.random.default_rng(3)
    shapes = [GroundSet.circle([0.0, 0.5], 1.0), GroundSet.sphere(np.zeros(3), 1.0)]
    for g in shapes:
        d = g.dim
        count = 0
        while count < 300:
            base = g.sample_surface(1, rng)[0]
            u = base + rng.uniform(-0.28, 0.28, size=d)
            v = u + rng.standard_normal(d) * 0.05
            ru, rv = nearest(g, u), nearest(g, v)
            if not (ru.within_half_reach and rv.within_half_reach):
                continue
            if ru.tie or rv.tie:
                continue
            count += 1
            gap = np.linalg.norm(ru.point - rv.point)
            assert gap <= 2.0 * np.linalg.norm(u - v) + 1e-9


def test_voronoi_margin_two_points():
    ps = PointSet.from_array([[0.0, 0.0], [4.0, 0.0]])
    assert voronoi_interior_margin(ps, [1.0, 0.0]) == pytest.approx(1.0)
    assert voronoi_interior_margin(ps, [2.0, 0.0]) == 0.0


def test_voronoi_margin_singleton_infinite():
    ps = PointSet.from_array([[0.0, 0.0]])
    assert voronoi_interior_margin(ps, [9.0, 9.0]) == math.inf


def test_voronoi_margin_is_safe_radius():
    rng = np.random.default_rng(5)
    pts = rng.standard_normal((12, 3))
    ps = PointSet.from_array(pts)
    g = GroundSet.from_points(ps)
    hits = 0
    while hits < 20:
        u = rng.standard_normal(3)
        margin = voronoi_interior_margin(ps, u)
        if margin <= 1e-6:
            continue
        hits += 1
        k = nearest(g, u).index
        for _ in range(50):             # 20 x 50 = 10^3 sampled v
            delta = rng.standard_normal(3)
            delta *= (margin * 0.999 * rng.random() ** (1 / 3)) / np.linalg.norm(delta)
            assert nearest(g, u + delta).index == k


def secant_set(dirs):
    dirs = np.atleast_2d(np.asarray(dirs, dtype=np.float64))
    return SecantSet(directions=np.vstack([dirs, -dirs]), source="sampled")


def test_greedy_cover_antipodes():
    s = secant_set([[1.0, 0.0]])
    cov = greedy_cover(s, 0.1)
    assert cov.size == 2
    assert cov.verified_radius == 0.0


def test_greedy_cover_circle_samples():
    rng = np.random.default_rng(2)
    th = rng.uniform(0, 2 * math.pi, 128)
    dirs = np.stack([np.cos(th), np.sin(th)], axis=1)
    s = secant_set(dirs)                   # 256 directions after symmetrizing
    cov = greedy_cover(s, 0.2)
    assert cov.size <= 32                  # arc-length packing: 2 pi / 0.2
    assert cov.verified_radius <= 0.2
    assert covering_radius(s, cov) == pytest.approx(cov.verified_radius, abs=1e-9)


def test_greedy_cover_huge_radius_single_center():
    rng = np.random.default_rng(4)
    dirs = rng.standard_normal((40, 5))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    cov = greedy_cover(secant_set(dirs), 2.0)
    assert cov.size == 1


def test_greedy_cover_deterministic():
    rng = np.random.default_rng(6)
    dirs = rng.standard_normal((50, 4))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    s = secant_set(dirs)
    c1, c2 = greedy_cover(s, 0.5), greedy_cover(s, 0.5)
    assert np.array_equal(c1.center_indices, c2.center_indices)
    assert np.array_equal(c1.centers, c2.centers)


def test_greedy_cover_centers_subset_of_source():
    rng = np.random.default_rng(8)
    dirs = rng.standard_normal((30, 3))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    s = secant_set(dirs)
    cov = greedy_cover(s, 0.4)
    for idx, center in zip(cov.center_indices, cov.centers):
        assert np.array_equal(center, s.directions[idx])


def test_covering_radius_extremes():
    s = secant_set([[1.0, 0.0]])
    self_cov = CoverSet(centers=s.directions.copy(),
                        center_indices=np.arange(2), radius=1.0,
                        verified_radius=0.0)
    assert covering_radius(s, self_cov) == 0.0
    half = CoverSet(centers=np.array([[1.0, 0.0]]),
                    center_indices=np.array([0]), radius=1.0,
                    verified_radius=2.0)
    assert covering_radius(s, half) == pytest.approx(2.0, rel=1e-12)


def test_greedy_cover_rejects_bad_radius():
    with pytest.raises(ValueError):
        greedy_cover(secant_set([[1.0, 0.0]]), 0.0)


@settings(max_examples=200, deadline=None)
@given(st.integers(min_value=1, max_value=60),
       st.integers(min_value=1, max_value=8),
       st.floats(min_value=0.01, max_value=2.5),
       st.integers(min_value=0, max_value=2 ** 31))
def test_greedy_cover_always_covers(n, d, radius, seed):
    rng = np.random.default_rng(seed)
    dirs = rng.standard_normal((n, d))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    s = secant_set(dirs)
    cov = greedy_cover(s, radius)
    assert covering_radius(s, cov) <= radius
    assert cov.verified_radius <= radius
