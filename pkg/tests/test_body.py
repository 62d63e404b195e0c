import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from floatpoly.body import (
    RadialBody, SupportBody, ball, bm_upper, bm_upper_scaled, body_from_json, centroid, circumradius,
    gauge, hausdorff_distance, inradius, log_hausdorff, log_hausdorff_about, log_hausdorff_grid, polar,
    polytope, support_of_points, volume,
)
from floatpoly.errors import (
    CenterNotInterior, DisjointInteriors, IncompatibleRepresentation, InvalidParameter, PointNotInterior,
    PolarRequiresOrigin,
)
from floatpoly.net import build_net
from oracles import log_hausdorff_dense

NET = build_net(2, 0.1)
SQUARE = [[-1, -1], [1, -1], [1, 1], [-1, 1]]


def square(net=NET):
    return polytope(np.array(SQUARE, float), net, np.zeros(2))


def test_support_of_single_point_is_zero():
    body = support_of_points(np.array([[0.3, -0.2]]), NET, np.array([0.3, -0.2]))
    assert np.all(body.h == 0)


def test_support_of_cross_polytope():
    pts = np.array([[1, 0], [-1, 0], [0, 1], [0, -1]], float)
    body = support_of_points(pts, NET, np.zeros(2))
    assert np.allclose(body.h, np.max(np.abs(NET.directions), axis=1), atol=1e-15)


def test_support_of_disk_sample():
    rng = np.random.default_rng(3)
    r = np.sqrt(rng.random(1000))
    a = 2 * np.pi * rng.random(1000)
    body = support_of_points(np.column_stack([r * np.cos(a), r * np.sin(a)]), NET, np.zeros(2))
    assert np.all((body.h > 0.9) & (body.h <= 1.0))


def test_support_of_empty_points():
    with pytest.raises(InvalidParameter):
        support_of_points(np.zeros((0, 2)), NET)


def test_gauge_examples():
    unit = ball(NET)
    assert gauge(unit, np.zeros(2)) == 0
    x = np.array([2 / math.sqrt(2), 2 / math.sqrt(2)]) @ np.array([[1, 0], [0, 1]])
    assert 2 * (1 - NET.eps) <= gauge(unit, x) <= 2 + 1e-12
    assert gauge(square(), np.array([2.0, 2.0])) == pytest.approx(2.0, rel=1e-12)
    with pytest.raises(CenterNotInterior):
        gauge(SupportBody(NET, np.zeros(2), np.r_[0.0, np.ones(len(NET) - 1)]), np.ones(2))


@given(st.tuples(st.floats(-3, 3), st.floats(-3, 3)), st.tuples(st.floats(-3, 3), st.floats(-3, 3)),
       st.floats(0, 10))
def test_gauge_sublinear(x, y, s):
    K = square()
    x, y = np.array(x), np.array(y)
    assert gauge(K, x + y) <= gauge(K, x) + gauge(K, y) + 1e-12
    assert gauge(K, s * x) == pytest.approx(s * gauge(K, x), rel=1e-12, abs=1e-12)


def test_polar_examples():
    P = polar(ball(NET, 2.0))
    assert np.allclose(P.rho, 0.5)
    K = square()
    assert np.array_equal(polar(polar(K)).h, K.h)
    Q = polar(K)
    i_axis = int(np.argmax(NET.directions @ np.array([1.0, 0.0])))
    assert Q.rho[i_axis] == pytest.approx(1.0, abs=1e-12)
    diag = np.array([1.0, 1.0]) / math.sqrt(2)
    j = int(np.argmax(NET.directions @ diag))
    # nearest net direction to the diagonal: exact polar value is 1 / (|w1| + |w2|)
    assert Q.rho[j] == pytest.approx(1 / np.abs(NET.directions[j]).sum(), rel=1e-12)
    with pytest.raises(PolarRequiresOrigin):
        polar(K.translated([0.1, 0.0]))


def test_hausdorff_examples():
    K = square()
    assert hausdorff_distance(K, K) == 0
    assert hausdorff_distance(ball(NET, 1), ball(NET, 2)) == 1
    assert hausdorff_distance(K, ball(NET)) == pytest.approx(math.sqrt(2) - 1, abs=NET.eps * 0.01 + 1e-3)
    other = build_net(2, 0.2)
    with pytest.raises(IncompatibleRepresentation):
        hausdorff_distance(K, ball(other))


@given(st.lists(st.floats(0.5, 2.0), min_size=3, max_size=3))
def test_hausdorff_triangle_inequality(radii):
    rng = np.random.default_rng(int(sum(radii) * 1000))
    bodies = [SupportBody(NET, np.zeros(2), r + 0.3 * rng.random(len(NET))) for r in radii]
    a, b, c = bodies
    assert hausdorff_distance(a, c) <= hausdorff_distance(a, b) + hausdorff_distance(b, c) + 1e-12
    assert hausdorff_distance(a, b) == hausdorff_distance(b, a)


def test_log_hausdorff_about_examples():
    K = square()
    assert log_hausdorff_about(K, K, np.array([0.2, -0.1])) == 1.0
    assert log_hausdorff_about(ball(NET, 1), ball(NET, 2), np.zeros(2)) == pytest.approx(2.0, rel=1e-12)
    val = log_hausdorff_about(K, ball(NET), np.zeros(2))
    assert val == pytest.approx(math.sqrt(2), rel=1e-9)
    with pytest.raises(PointNotInterior):
        log_hausdorff_about(K, ball(NET), np.array([1.5, 0.0]))


@pytest.mark.parametrize("x", [(0.0, 0.0), (0.3, 0.1), (-0.4, 0.25)])
def test_log_hausdorff_about_matches_dense_ray_oracle(x):
    # two random polygons on a net containing their facet normals is not needed:
    # the oracle works on the actual H-rep vertices
    rng = np.random.default_rng(5)
    pts = rng.standard_normal((12, 2))
    K = support_of_points(pts, NET, np.zeros(2))
    L = square()
    ours = log_hausdorff_about(K, L, np.array(x))
    ref = log_hausdorff_dense(K.vertices, L.vertices, np.array(x))
    assert ours == pytest.approx(ref, rel=1e-6)


def test_log_hausdorff_search():
    K = square()
    val, _ = log_hausdorff(K, K)
    assert val == pytest.approx(1.0, abs=1e-12)
    disk = ball(NET)
    shifted = ball(NET, 1.0, np.array([0.5, 0.0]))
    best, x = log_hausdorff(disk, shifted)
    assert best <= log_hausdorff_about(disk, shifted, np.zeros(2)) + 1e-12
    assert best <= log_hausdorff_about(disk, shifted, np.array([0.5, 0.0])) + 1e-12
    assert best <= log_hausdorff_about(disk, shifted, np.array([0.25, 0.0])) + 1e-12


def test_log_hausdorff_rectangle_vs_disk_against_grid_oracle():
    rect = polytope(np.array([[0, -1], [2, -1], [2, 1], [0, 1]], float), NET)
    disk = ball(NET)
    best, x = log_hausdorff(rect, disk)
    grid, gx = log_hausdorff_grid(rect, disk, (0.02, -0.5), (0.98, 0.5), 49)
    assert best <= grid + 1e-9
    assert x[0] > 0.25  # pulled toward the rectangle, away from the origin on its edge


def test_log_hausdorff_disjoint():
    far = ball(NET, 1.0, np.array([5.0, 0.0]))
    with pytest.raises(DisjointInteriors):
        log_hausdorff(ball(NET), far)


def test_bm_upper_examples():
    K = square()
    assert bm_upper(K, K) == pytest.approx(1.0, abs=1e-12)
    assert bm_upper(ball(NET, 1), ball(NET, 2)) == pytest.approx(4.0, rel=1e-9)
    assert bm_upper(K, ball(NET)) == pytest.approx(2.0, rel=1e-6)
    # optimal homothety removes the scale: balls of any radius are at distance 1
    assert bm_upper_scaled(ball(NET, 1), ball(NET, 2))[0] == pytest.approx(1.0, abs=1e-9)


def test_measures_of_square():
    K = square()
    assert volume(K) == pytest.approx(4.0, rel=1e-12)
    assert np.allclose(centroid(K), 0, atol=1e-12)
    assert inradius(K, np.zeros(2)) == pytest.approx(1.0)
    assert circumradius(K, np.zeros(2)) == pytest.approx(math.sqrt(2))


def test_radial_body_support_conversion():
    R = RadialBody(NET, np.zeros(2), np.ones(len(NET)))
    S = R.to_support()
    assert np.all(S.h <= 1 + 1e-12) and np.all(S.h >= math.cos(math.pi / len(NET)) - 1e-12)


def test_json_round_trip():
    K = square()
    back = body_from_json(K.to_json(), NET)
    assert np.array_equal(back.h, K.h) and np.array_equal(back.center, K.center)
    assert json.loads(K.to_json())["kind"] == "support"
    with pytest.raises(IncompatibleRepresentation):
        body_from_json(K.to_json(), build_net(2, 0.3))


def test_recentre_and_scale():
    K = square()
    x = np.array([0.2, -0.3])
    R = K.recentred(x)
    assert np.allclose(R.absolute_support(), K.absolute_support())
    assert np.allclose(K.scaled(2.0).h, 2 * K.h)
