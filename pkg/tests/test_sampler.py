import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.spatial import ConvexHull

from floatpoly.density import Gaussian, GeneralDensity, SchechtmanZinn, gaussian_radial, marginal
from floatpoly.errors import DegenerateHull, UnsupportedDensity
from floatpoly.net import build_net
from floatpoly.sampler import (
    SampleSet, _interior_filter_2d, convex_hull_2d, dump_samples, hull_ball_hausdorff_2d, load_samples,
    random_polytope, sample, vertex_count_2d,
)
import oracles

NET = build_net(2, 0.1)


def _set(points):
    pts = np.asarray(points, float)
    return SampleSet(pts.shape[1], len(pts), pts, 0, Gaussian(pts.shape[1]))


def test_gaussian_moments():
    s = sample(Gaussian(3), 100_000, seed=11)
    assert s.points.shape == (100_000, 3)
    assert np.all(np.abs(s.points.mean(axis=0)) < 4 / math.sqrt(100_000) * 1.5)
    assert np.allclose(np.cov(s.points.T), np.eye(3), atol=0.02)


def test_seed_reproducibility():
    a = sample(SchechtmanZinn(2, 1.5), 1000, seed=(7, 3))
    b = sample(SchechtmanZinn(2, 1.5), 1000, seed=(7, 3))
    c = sample(SchechtmanZinn(2, 1.5), 1000, seed=(7, 4))
    assert np.array_equal(a.points, b.points)
    assert not np.array_equal(a.points, c.points)


@pytest.mark.parametrize("density", [SchechtmanZinn(2, 1.0), SchechtmanZinn(2, 2.5), gaussian_radial(2)])
def test_directional_marginals_pass_ks(density):
    s = sample(density, 10_000, seed=5)
    for a in np.linspace(0, np.pi, 5, endpoint=False):
        w = np.array([math.cos(a), math.sin(a)])
        proj = np.sort(s.points @ w)
        m = marginal(density, w)
        # the marginal cdf is smooth, so a 400-point grid is exact to well below the KS scale
        grid = np.linspace(proj[0], proj[-1], 400)
        cdf = np.interp(proj, grid, 1 - np.array([m.tail(t) for t in grid]))
        i = np.arange(1, len(proj) + 1) / len(proj)
        ks = max(np.max(i - cdf), np.max(cdf - (i - 1 / len(proj))))
        assert ks < oracles.ks_critical_1pct(len(proj))


def test_unsupported_density():
    with pytest.raises(UnsupportedDensity):
        sample(GeneralDensity(2, lambda x: float(x @ x)), 10, seed=0)
    with pytest.raises(ValueError):
        sample(Gaussian(2), 0, seed=0)


def test_simplex_vertices_give_exact_support():
    net = build_net(3, 0.3)
    v = np.vstack([np.zeros(3), np.eye(3)])
    P = random_polytope(_set(v), net)
    assert np.allclose(P.h, oracles.support_brute_force(v, v.mean(axis=0), net.directions), atol=1e-14)


def test_identical_points_are_degenerate():
    P = random_polytope(_set(np.ones((5, 2))), NET)
    assert P.meta["degenerate"] and np.all(P.h == 0)
    with pytest.raises(DegenerateHull):
        random_polytope(_set(np.ones((2, 2))), NET)


@settings(max_examples=25)
@given(st.integers(3, 400), st.integers(0, 2**31))
def test_planar_hull_matches_scipy(n, seed):
    pts = np.random.default_rng(seed).standard_normal((n, 2))
    ours = convex_hull_2d(_interior_filter_2d(pts))
    ref = oracles.hull_vertices(pts)
    assert {tuple(p) for p in ours} == {tuple(p) for p in ref}


@settings(max_examples=10)
@given(st.integers(0, 2**31))
def test_high_dim_prefilter_is_safe(seed):
    net = build_net(3, 0.3)
    s = sample(Gaussian(3), 5000, seed=seed)
    P = random_polytope(s, net)
    ref = oracles.support_brute_force(s.points, s.points.mean(axis=0), net.directions)
    assert np.allclose(P.h, ref, atol=1e-12)


def test_vertex_counts():
    assert vertex_count_2d(_set([[0, 0], [1, 0], [0, 1]])) == 3
    assert vertex_count_2d(_set([[0, 0], [1, 0], [1, 1], [0, 1], [0.5, 0.5]])) == 4
    pts = np.random.default_rng(1).standard_normal((20000, 2))
    assert vertex_count_2d(_set(pts)) == len(ConvexHull(pts).vertices)


def test_dump_round_trip(tmp_path):
    s = sample(Gaussian(2), 257, seed=(1, 2))
    path = tmp_path / "pts.bin"
    dump_samples(s, path)
    meta, pts = load_samples(path)
    assert np.array_equal(pts, s.points)
    assert meta["n"] == 257 and meta["seed"] == [1, 2] and meta["density"]["class"] == "gaussian"
    assert path.stat().st_size == 257 * 2 * 8
    assert np.array_equal(np.fromfile(path, "<f8")[:257], s.points[:, 0])


def test_hull_ball_hausdorff_matches_dense_support():
    s = sample(Gaussian(2), 3000, seed=9)
    r = 3.0
    v = oracles.hull_vertices(s.points)
    a = np.linspace(0, 2 * np.pi, 200_000, endpoint=False)
    h = np.max(np.column_stack([np.cos(a), np.sin(a)]) @ v.T, axis=1)
    assert hull_ball_hausdorff_2d(s, r) == pytest.approx(np.max(np.abs(h - r)), abs=1e-6)
