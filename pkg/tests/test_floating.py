import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from floatpoly.body import log_hausdorff, log_hausdorff_about, polytope, volume
from floatpoly.density import Gaussian, MonteCarloContext, ProductDensity, SchechtmanZinn, Uniform1D, gaussian_radial
from floatpoly.errors import DeltaTooLarge, EmptyLevelSet, InvalidParameter, InvalidPolygon, PossiblyEmpty
from floatpoly.floating import (
    cap_area, convex_floating_body_2d, floating_ci, floating_polytope, level_set_body, polygon_centroid,
    radon_body, radon_floating_roots, radon_gap_constant, zeta,
)
from floatpoly.net import build_net
import oracles

NET = build_net(2, 0.1)
UNIT_SQUARE = [[0, 0], [1, 0], [1, 1], [0, 1]]


def test_gaussian_floating_polytope_is_quantile_ball():
    F = floating_polytope(Gaussian(2), NET, 0.01)
    assert np.allclose(F.h, oracles.normal_upper_quantile(0.01), rtol=1e-12)
    assert F.h[0] == pytest.approx(2.3263, abs=1e-4)
    assert F.meta["delta"] == 0.01 and F.meta["density_ref"]["class"] == "gaussian"


def test_floating_polytope_near_threshold():
    delta = math.exp(-1) * (1 - 1e-9)
    F = floating_polytope(Gaussian(2), NET, delta)
    assert np.allclose(F.h, oracles.normal_upper_quantile(delta), rtol=1e-9)
    assert F.h.min() > 0  # centroid inside
    assert oracles.normal_upper_quantile(math.exp(-1)) == pytest.approx(0.3375, abs=1e-3)


@pytest.mark.parametrize("delta", [math.exp(-1), 0.5, 0.0, -1.0])
def test_floating_polytope_refuses_large_delta(delta):
    with pytest.raises(PossiblyEmpty):
        floating_polytope(Gaussian(2), NET, delta)


COARSE = build_net(2, 0.3)


@settings(max_examples=10)
@given(st.floats(1e-8, 0.3))
def test_floating_polytope_monotone(delta):
    sz = SchechtmanZinn(2, 1.5)
    a = floating_polytope(sz, COARSE, delta)
    b = floating_polytope(sz, COARSE, delta / 2)
    assert np.all(b.h >= a.h)


def test_sz_floating_polytope_contains_centroid():
    F = floating_polytope(SchechtmanZinn(2, 1.0), NET, 0.3)
    assert np.all(F.h > 0)


def test_level_set_examples():
    sz = SchechtmanZinn(2, 1.5)
    delta = 1e-3
    D = level_set_body(sz, NET, delta)
    radius = sz.level_radius(delta)
    expected = radius / np.sum(np.abs(NET.directions) ** 1.5, axis=1) ** (1 / 1.5)
    assert np.allclose(D.rho, expected, rtol=1e-9)
    c = oracles.sz_constant(1.5)
    assert D.rho[0] == pytest.approx(math.log(c ** 2 / delta) ** (1 / 1.5), rel=1e-9)
    g = Gaussian(2)
    peak = 1 / (2 * math.pi)
    assert np.allclose(level_set_body(g, NET, peak / math.e).rho, math.sqrt(2), rtol=1e-9)
    tiny = level_set_body(g, NET, peak * (1 - 1e-12))
    assert tiny.rho.max() < 1e-5
    with pytest.raises(EmptyLevelSet):
        level_set_body(g, NET, peak)


def test_radon_body_examples():
    g = Gaussian(2)
    delta = 1e-3
    R = radon_body(g, NET, delta)
    t = math.sqrt(-2 * math.log(math.sqrt(2 * math.pi) * delta))
    assert np.allclose(R.h, t, rtol=1e-10)
    with pytest.raises(DeltaTooLarge):
        radon_body(g, NET, 0.5)


def test_radon_body_radial_minimising_hyperplane():
    # brute force: minimum of Rf over hyperplanes through x on the boundary
    rad = gaussian_radial(2)
    delta = 1e-2
    R = radon_body(rad, NET, delta)
    r = R.h[0]
    x = np.array([r, 0.0])
    angles = np.linspace(0, np.pi, 721)
    through = [stats.norm.pdf(abs(np.dot(x, [math.cos(a), math.sin(a)]))) for a in angles]
    assert min(through) == pytest.approx(delta, rel=1e-8)
    assert int(np.argmin(through)) == 0


def test_radon_floating_gap_is_bounded():
    rad = gaussian_radial(2)
    e1 = np.array([1.0, 0.0])
    gap = radon_gap_constant(rad, e1, 1.0)
    for delta in (1e-3, 1e-5, 1e-7, 1e-9):
        s, t = radon_floating_roots(rad, e1, delta)
        assert abs(s - t) <= gap


def test_convex_floating_body_square():
    K = convex_floating_body_2d(UNIT_SQUARE, 0.05, NET)
    e1 = int(np.argmax(NET.directions @ np.array([1.0, 0.0])))
    assert K.absolute_support()[e1] == pytest.approx(0.95, abs=1e-11)
    for i in (3, 7, 11):
        w = NET.directions[i]
        assert K.absolute_support()[i] == pytest.approx(oracles.square_floating_support(w, 0.05), abs=1e-9)


def test_convex_floating_body_triangle_apex_cap():
    # the cap toward the apex is a similar triangle with area ratio lam
    tri = np.array([[0.0, 0.0], [2.0, 0.0], [1.0, math.sqrt(3)]])
    lam = 0.04
    K = convex_floating_body_2d(tri, lam, NET)
    i = int(np.argmax(NET.directions @ np.array([0.0, 1.0])))
    assert np.allclose(NET.directions[i], [0.0, 1.0], atol=1e-12)
    assert K.absolute_support()[i] == pytest.approx(math.sqrt(3) * (1 - math.sqrt(lam)), abs=1e-10)
    for j in range(0, len(NET.directions), 5):
        h = K.absolute_support()[j]
        assert cap_area(tri, NET.directions[j], h) == pytest.approx(lam * math.sqrt(3), abs=1e-10)


def test_convex_floating_body_distance_bound():
    pts = np.array([[0, 0], [3, 0], [4, 2], [1, 3], [-1, 1]], float)
    net = build_net(2, 0.1)
    lam = 0.01  # below 8^{-2}
    Klam = convex_floating_body_2d(pts, lam, net)
    K = polytope(pts, net, polygon_centroid(pts))
    assert log_hausdorff_about(K, Klam, polygon_centroid(pts)) <= 1 + 8 * math.sqrt(lam)


def test_convex_floating_body_errors():
    with pytest.raises(InvalidPolygon):
        convex_floating_body_2d([[0, 0], [2, 0], [1, 0.2], [2, 2], [0, 2]], 0.1, NET)
    with pytest.raises(InvalidParameter):
        convex_floating_body_2d(UNIT_SQUARE, 0.5, NET)


def test_uniform_floating_matches_convex_floating_exactly():
    u = ProductDensity([Uniform1D(), Uniform1D()])
    F = floating_polytope(u, NET, 0.02)
    K = convex_floating_body_2d(UNIT_SQUARE, 0.02, NET)
    assert np.allclose(F.h, K.h, atol=1e-10)


def test_outer_and_inner_inclusions_sz():
    sz = SchechtmanZinn(2, 2.0)
    net = build_net(2, 0.05)
    previous = math.inf
    for delta in (1e-2, 1e-3, 1e-4, 1e-5, 1e-6):
        F = floating_polytope(sz, net, delta)
        D = level_set_body(sz, net, delta)
        d, _ = log_hausdorff(F, D)
        assert 1 <= d < previous
        previous = d
        ld = math.log(1 / delta)
        assert (d - 1) <= 3.0 * math.log(ld) / ld
        # inner inclusion: shrink D about its centre by (1 + 8 lam^{1/2}), lam = 1 / vol(D)
        lam = 1.0 / volume(D)
        shrunk = D.to_support().scaled(1.0 / (1 + 8 * math.sqrt(lam)))
        assert np.all(shrunk.absolute_support() <= F.absolute_support() + 1e-12)


def test_zeta_examples():
    g1 = Gaussian(1)
    eps = stats.norm.pdf(3.0)
    est, ci = zeta(g1, eps, 400_000, seed=3)
    assert abs(est - 2 * stats.norm.sf(3.0)) <= ci
    est, _ = zeta(Gaussian(2), 1.0, 1000, seed=1)
    assert est == 1.0
    ratios = []
    for e in (1e-2, 1e-3, 1e-4):
        z, _ = zeta(Gaussian(2), e, 200_000, seed=2)
        ratios.append(z / (e * math.log(1 / e) ** 2))
    assert max(ratios) < 1.0


def test_monte_carlo_floating_interval():
    u = ProductDensity([Uniform1D(), Uniform1D()])
    ctx = MonteCarloContext(seed=5, samples=200_000)
    F = floating_polytope(u, NET, 0.05, backend="monte-carlo", context=ctx)
    ci = floating_ci(u, NET, 0.05, ctx)
    K = convex_floating_body_2d(UNIT_SQUARE, 0.05, NET)
    assert np.mean(np.abs(F.h - K.h) <= ci) >= 0.9
