"""Epsilon-nets on the unit sphere.

A net is a finite set of unit directions that is ``eps``-separated (pairwise
chord distance strictly above ``eps``) and ``eps``-covering (every unit vector
lies within chord distance ``eps`` of some member).  In the plane the uniform
angular net is used; in higher dimension a greedy maximal separated subset is
extracted from a scrambled Sobol pool, then repaired by inserting any
spherical Voronoi vertex that is still uncovered.
"""
from __future__ import annotations

import functools
import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull, cKDTree
from scipy.stats import qmc, norm

from .errors import ConstructionFailure, InvalidParameter

POOL_MIN = 100_000
POOL_MAX = 10_000_000
_CHUNK = 4096


def dumps17(obj):
    """JSON text with every float written at 17 significant digits."""
    def fmt(o):
        if isinstance(o, float):
            return format(o, ".17g")
        if isinstance(o, (list, tuple)):
            return "[" + ", ".join(fmt(v) for v in o) + "]"
        if isinstance(o, dict):
            return "{" + ", ".join(f"{json.dumps(k)}: {fmt(v)}" for k, v in o.items()) + "}"
        if isinstance(o, np.ndarray):
            return fmt(o.tolist())
        if isinstance(o, (np.floating,)):
            return format(float(o), ".17g")
        if isinstance(o, (np.integer,)):
            return str(int(o))
        return json.dumps(o)
    return fmt(obj)


@dataclass(frozen=True, eq=False)
class DirectionNet:
    """Validated eps-net on S^{dim-1}.

    ``covering_radius`` is the exact covering chord (angular gaps in the plane,
    spherical Voronoi vertices above).
    Equality is identity: bodies built on the same net share this object.
    """

    dim: int
    eps: float
    directions: np.ndarray
    covering_radius: float
    seed: int = 0

    def __post_init__(self):
        self.directions.setflags(write=False)

    def __len__(self):
        return self.directions.shape[0]

    @property
    def tolerance(self):
        """Multiplicative uncertainty ``(1 - eps)^{-1}`` carried by net-based results."""
        return 1.0 / (1.0 - self.eps)

    def nearest(self, theta):
        """Index of the net direction closest to each row of ``theta``."""
        theta = np.atleast_2d(theta)
        return np.argmax(theta @ self.directions.T, axis=1)

    def to_json(self):
        return dumps17({
            "dim": self.dim,
            "eps": float(self.eps),
            "seed": self.seed,
            "covering_radius": float(self.covering_radius),
            "directions": self.directions,
        })

    @classmethod
    def from_json(cls, text):
        data = json.loads(text)
        directions = np.asarray(data["directions"], dtype=float).reshape(-1, int(data["dim"]))
        return cls(int(data["dim"]), float(data["eps"]), directions,
                   float(data["covering_radius"]), int(data.get("seed", 0)))


def unit_vectors(rng, count, dim):
    x = rng.standard_normal((count, dim))
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def _check_eps(eps):
    if not (0.0 < eps < 1.0) or not math.isfinite(eps):
        raise InvalidParameter(f"eps must lie in (0, 1), got {eps!r}")


def angular_count(eps):
    """Smallest k whose uniform angular net has covering chord ``<= eps``."""
    k = max(2, math.ceil(math.pi / (2.0 * math.asin(eps / 2.0))))
    while 2.0 * math.sin(math.pi / (2.0 * (k - 1))) <= eps and k > 2:
        k -= 1
    while 2.0 * math.sin(math.pi / (2.0 * k)) > eps:
        k += 1
    return k


def pool_size(dim, eps):
    return int(min(POOL_MAX, max(POOL_MIN, 50.0 * (3.0 / eps) ** dim)))


@functools.lru_cache(maxsize=64)
def build_net(dim, eps, seed=0, pool=None):
    """Construct an eps-net on S^{dim-1}.

    Deterministic in ``(dim, eps, seed)`` and cached, so repeated calls return
    the very same object.

    Raises
    ------
    InvalidParameter
        ``eps`` outside (0, 1) or ``dim < 1``.
    ConstructionFailure
        The candidate pool ran out before the probes were covered.
    """
    _check_eps(eps)
    if dim < 1:
        raise InvalidParameter(f"dim must be >= 1, got {dim}")
    if dim == 1:
        return DirectionNet(1, eps, np.array([[-1.0], [1.0]]), 0.0, seed)
    if dim == 2:
        k = angular_count(eps)
        angles = 2.0 * np.pi * np.arange(k) / k
        dirs = np.column_stack([np.cos(angles), np.sin(angles)])
        return DirectionNet(2, eps, dirs, 2.0 * math.sin(math.pi / (2.0 * k)), seed)
    return _greedy_net(dim, eps, seed, pool or pool_size(dim, eps))


def _greedy_add(accepted, tree, cands, eps):
    """Append candidates that stay eps-separated from everything accepted so far."""
    if tree is not None and len(cands):
        dist, _ = tree.query(cands, k=1, distance_upper_bound=eps * (1 + 1e-12))
        cands = cands[~(dist <= eps)]
    added = []
    for c in cands:
        if added:
            block = np.asarray(added)
            if np.min(np.sum((block - c) ** 2, axis=1)) <= eps * eps:
                continue
        added.append(c)
    if added:
        accepted.append(np.asarray(added))
    return bool(added)


def _greedy_net(dim, eps, seed, pool):
    sobol = qmc.Sobol(dim, scramble=True, seed=np.random.default_rng([seed, dim, 1]))
    accepted = []
    tree = None
    remaining = pool
    while remaining > 0:
        m = min(_CHUNK, remaining)
        u = np.clip(sobol.random(m), 1e-12, 1 - 1e-12)
        g = norm.ppf(u)
        cands = g / np.linalg.norm(g, axis=1, keepdims=True)
        if _greedy_add(accepted, tree, cands, eps):
            tree = cKDTree(np.vstack(accepted))
        remaining -= m

    # repair: a Voronoi vertex farther than eps from the net can be added
    # without breaking separation; iterate until none is left
    for _ in range(200):
        dirs = np.vstack(accepted)
        centers, radii = voronoi_vertices(dirs)
        far = centers[radii > eps]
        if len(far) == 0:
            return DirectionNet(dim, eps, dirs, float(radii.max()), seed)
        far = far[np.argsort(-radii[radii > eps])]
        _greedy_add(accepted, cKDTree(dirs), far, eps)
    raise ConstructionFailure(
        f"candidate pool of {pool} points did not yield an eps={eps} covering in dim {dim}; "
        "retry with a larger pool"
    )


def voronoi_vertices(dirs):
    """Spherical Voronoi vertices of ``dirs`` and their chord distance to the set.

    For points on the sphere whose hull contains the origin, the outward unit
    normal of each hull facet is a Voronoi vertex, equidistant from the facet's
    points.  The largest such distance is the exact covering radius.
    """
    hull = ConvexHull(dirs, qhull_options="Qt")
    normals = hull.equations[:, :-1]
    offsets = hull.equations[:, -1]
    if np.any(offsets >= 0):
        return normals, np.full(len(normals), 2.0)
    return normals, np.sqrt(np.maximum(2.0 + 2.0 * offsets, 0.0))


def from_directions(directions, eps, seed=0):
    """Wrap caller-supplied directions as a net, measuring its covering radius.

    Raises ``InvalidParameter`` when the set is not a valid eps-net.
    """
    _check_eps(eps)
    dirs = np.array(directions, dtype=float)
    if dirs.ndim == 1:
        dirs = dirs[:, None]
    dim = dirs.shape[1]
    report = validate(dirs, eps)
    if not report["ok"]:
        raise InvalidParameter(f"directions do not form an eps-net: {report}")
    return DirectionNet(dim, eps, dirs, report["covering_radius"], seed)


def covering_radius(dirs, probes=None, seed=0):
    """Largest chord distance from a probe to its nearest direction."""
    dirs = np.asarray(dirs, dtype=float)
    dim = dirs.shape[1]
    if dim == 1:
        return 0.0 if {-1.0, 1.0} <= set(dirs[:, 0].tolist()) else 2.0
    if dim == 2:
        ang = np.sort(np.mod(np.arctan2(dirs[:, 1], dirs[:, 0]), 2 * np.pi))
        gaps = np.diff(np.concatenate([ang, [ang[0] + 2 * np.pi]]))
        return float(2.0 * np.sin(gaps.max() / 4.0))
    if probes is None:
        return float(voronoi_vertices(dirs)[1].max())
    dist, _ = cKDTree(dirs).query(probes, k=1)
    return float(dist.max())


def validate(dirs, eps, probes=None):
    """Check the four net invariants; returns a dict of measured quantities."""
    dirs = np.asarray(dirs, dtype=float)
    count, dim = dirs.shape
    norms_ok = bool(np.all(np.abs(np.linalg.norm(dirs, axis=1) - 1.0) <= 1e-12))
    if count > 1:
        pairs = cKDTree(dirs).query_pairs(eps)
        min_sep = _min_pair_distance(dirs)
        packing_ok = not pairs and min_sep > eps
    else:
        min_sep, packing_ok = math.inf, True
    cover = covering_radius(dirs, probes)
    card_ok = count <= (3.0 / eps) ** dim
    return {
        "ok": norms_ok and packing_ok and cover <= eps and card_ok,
        "norms_ok": norms_ok,
        "min_separation": float(min_sep),
        "packing_ok": packing_ok,
        "covering_radius": cover,
        "cardinality": count,
        "cardinality_ok": card_ok,
    }


def _min_pair_distance(dirs):
    dist, _ = cKDTree(dirs).query(dirs, k=2)
    return float(dist[:, 1].min())


def net_functional(x, net):
    """``max_w <x, w>`` over the net; lies in ``[(1-eps)|x|, |x|]``."""
    x = np.asarray(x, dtype=float)
    return np.max(x @ net.directions.T, axis=-1)


def series_decompose(theta, net, k):
    """Greedy expansion ``theta = w_0 + sum_j c_j w_j + r``.

    Each step writes the current residual as its nearest net direction scaled
    by the residual norm, so ``c_j <= eps**j`` and ``|r| <= eps**(k+1)``.

    Returns
    -------
    indices : list of int
    coefficients : list of float
        ``c_1 .. c_k`` (the leading coefficient 1 is implicit).
    residual_norm : float
    """
    if k < 0:
        raise InvalidParameter("k must be >= 0")
    theta = np.asarray(theta, dtype=float)
    nrm = np.linalg.norm(theta)
    if abs(nrm - 1.0) > 1e-9:
        raise InvalidParameter("theta must be a unit vector")
    dirs = net.directions
    i0 = int(np.argmax(dirs @ theta))
    indices, coeffs = [i0], []
    residual = theta - dirs[i0]
    for _ in range(k):
        r = np.linalg.norm(residual)
        if r == 0.0:
            break
        i = int(np.argmax(dirs @ (residual / r)))
        indices.append(i)
        coeffs.append(float(r))
        residual = residual - r * dirs[i]
    return indices, coeffs, float(np.linalg.norm(residual))
