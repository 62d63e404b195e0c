import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.spatial import cKDTree

from floatpoly.errors import InvalidParameter
from floatpoly.net import (
    DirectionNet, angular_count, build_net, covering_radius, from_directions, net_functional,
    series_decompose, unit_vectors, validate,
)


def probe_cover(net, count=10_000, seed=99):
    probes = unit_vectors(np.random.default_rng(seed), count, net.dim)
    dist, _ = cKDTree(net.directions).query(probes)
    return dist.max()


@pytest.mark.parametrize("dim,eps", [(2, 0.1), (2, 0.5), (3, 0.3), (3, 0.5), (4, 0.5)])
def test_net_invariants(dim, eps):
    net = build_net(dim, eps)
    report = validate(net.directions, eps)
    assert report["ok"], report
    assert report["min_separation"] > eps
    assert net.covering_radius <= eps
    assert probe_cover(net) <= eps
    assert len(net) <= (3 / eps) ** dim


def test_planar_net_is_uniform_angular():
    net = build_net(2, 0.1)
    k = len(net)
    assert 2 * math.sin(math.pi / (2 * k)) <= 0.1 < 2 * math.sin(math.pi / (2 * (k - 1)))
    assert net.covering_radius == pytest.approx(2 * math.sin(math.pi / (2 * k)), abs=1e-15)


def test_angular_count_examples():
    assert angular_count(0.5) == 7
    assert all(2 * math.sin(math.pi / (2 * angular_count(e))) <= e for e in np.linspace(0.01, 0.99, 50))


def test_build_is_cached_and_deterministic():
    assert build_net(3, 0.4) is build_net(3, 0.4)
    a = build_net(3, 0.45, seed=1)
    b = build_net(3, 0.45, seed=1)
    assert np.array_equal(a.directions, b.directions)


def test_json_round_trip_is_exact():
    net = build_net(3, 0.4)
    back = DirectionNet.from_json(net.to_json())
    assert np.array_equal(back.directions, net.directions)
    assert back.covering_radius == net.covering_radius
    assert json.loads(net.to_json())["dim"] == 3


def test_dim_one_net():
    net = build_net(1, 0.5)
    assert sorted(net.directions[:, 0]) == [-1.0, 1.0]


@pytest.mark.parametrize("eps", [0.0, 1.0, -0.2, float("nan")])
def test_invalid_eps(eps):
    with pytest.raises(InvalidParameter):
        build_net(2, eps)


def test_from_directions_rejects_gappy_sets():
    with pytest.raises(InvalidParameter):
        from_directions([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]], 0.5)
    net = from_directions(build_net(2, 0.3).directions, 0.3)
    assert net.covering_radius <= 0.3


def test_covering_radius_voronoi_matches_dense_probes():
    net = build_net(3, 0.35)
    exact = covering_radius(net.directions)
    probed = covering_radius(net.directions, unit_vectors(np.random.default_rng(1), 200_000, 3))
    assert probed <= exact + 1e-12
    assert probed > exact - 0.01


@given(st.lists(st.floats(-10, 10), min_size=3, max_size=3).filter(lambda v: np.linalg.norm(v) > 1e-6))
def test_net_functional_sandwich(v):
    net = build_net(3, 0.3)
    x = np.array(v)
    val = net_functional(x, net)
    r = np.linalg.norm(x)
    assert (1 - net.eps) * r - 1e-12 <= val <= r + 1e-12


@given(st.floats(0, 2 * math.pi), st.integers(0, 5))
def test_series_decomposition_planar(angle, k):
    net = build_net(2, 0.2)
    theta = np.array([math.cos(angle), math.sin(angle)])
    idx, coef, resid = series_decompose(theta, net, k)
    assert all(c <= net.eps ** (j + 1) + 1e-12 for j, c in enumerate(coef))
    recon = net.directions[idx[0]] + sum(c * net.directions[i] for c, i in zip(coef, idx[1:]))
    assert np.linalg.norm(theta - recon) == pytest.approx(resid, abs=1e-12)
    assert resid <= net.eps ** (k + 1) + 1e-12


def test_series_decomposition_member_is_exact():
    net = build_net(3, 0.3)
    idx, coef, resid = series_decompose(net.directions[5], net, 3)
    assert idx == [5] and coef == [] and resid == 0.0


def test_series_rejects_non_unit():
    with pytest.raises(InvalidParameter):
        series_decompose(np.array([2.0, 0.0]), build_net(2, 0.3), 2)
