"""Convex bodies stored as per-direction support or radial values on a net.

``SupportBody`` is the H-representation ``{x : <x - c, w> <= h(w)}`` over the
net directions ``w``; ``RadialBody`` is the V-representation
``conv{c + rho(w) w}``.  Both expose exact vertices and facets (through qhull
for d >= 2), so gauges and distances between them are computed on the actual
polytopes rather than on a direction sample.
"""
from __future__ import annotations

import functools
import json
import math
import weakref
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog, minimize
from scipy.spatial import ConvexHull, HalfspaceIntersection

from .errors import (
    CenterNotInterior,
    DisjointInteriors,
    IncompatibleRepresentation,
    InvalidParameter,
    PointNotInterior,
    PolarRequiresOrigin,
)
from .net import DirectionNet, dumps17, unit_vectors

PROBE_FACTOR = 4


def _same_net(a, b):
    if a is b:
        return True
    return a.dim == b.dim and a.directions.shape == b.directions.shape and np.array_equal(
        a.directions, b.directions)


@dataclass(frozen=True, eq=False)
class SupportBody:
    """Intersection of the half-spaces ``<x - center, w> <= h(w)``, w in the net."""

    net: DirectionNet
    center: np.ndarray
    h: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float).reshape(self.net.dim))
        object.__setattr__(self, "h", np.asarray(self.h, dtype=float).reshape(len(self.net)))

    kind = "support"

    @property
    def dim(self):
        return self.net.dim

    def absolute_support(self):
        """``sup_{x in K} <x, w>`` for every net direction."""
        return self.h + self.net.directions @ self.center

    def recentred(self, x):
        """Same body, support values re-expressed about the point ``x``."""
        x = np.asarray(x, dtype=float)
        return SupportBody(self.net, x, self.h - self.net.directions @ (x - self.center), self.meta)

    def scaled(self, s):
        """Homothety by ``s`` about the center."""
        return SupportBody(self.net, self.center, s * self.h, self.meta)

    def translated(self, v):
        return SupportBody(self.net, self.center + np.asarray(v, dtype=float), self.h, self.meta)

    def facets(self):
        return self.net.directions, self.h

    @functools.cached_property
    def vertices(self):
        if np.any(self.h <= 0):
            raise CenterNotInterior("support values must be positive to enumerate vertices")
        if self.dim == 1:
            d = self.net.directions[:, 0]
            hi = np.min(self.h[d > 0] / d[d > 0])
            lo = np.min(self.h[d < 0] / -d[d < 0])
            return self.center + np.array([[-lo], [hi]])
        halfspaces = np.hstack([self.net.directions, -self.absolute_support()[:, None]])
        hs = HalfspaceIntersection(halfspaces, self.center)
        return _unique_rows(hs.intersections)

    def to_json(self, net_ref=None):
        return dumps17({
            "net_ref": net_ref or net_reference(self.net),
            "center": self.center,
            **_meta_fields(self.meta),
            "kind": "support",
            "values": self.h,
        })


@dataclass(frozen=True, eq=False)
class RadialBody:
    """Convex hull of the points ``center + rho(w) w``."""

    net: DirectionNet
    center: np.ndarray
    rho: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float).reshape(self.net.dim))
        object.__setattr__(self, "rho", np.asarray(self.rho, dtype=float).reshape(len(self.net)))

    kind = "radial"

    @property
    def dim(self):
        return self.net.dim

    @property
    def points(self):
        return self.center + self.rho[:, None] * self.net.directions

    def to_support(self):
        """Circumscribed net polytope of the hull points."""
        return support_of_points(self.points, self.net, self.center)

    @functools.cached_property
    def _hull(self):
        if np.any(self.rho <= 0):
            raise CenterNotInterior("radial values must be positive")
        if self.dim == 1:
            return None
        return ConvexHull(self.points)

    @functools.cached_property
    def vertices(self):
        if self.dim == 1:
            p = self.points[:, 0]
            return np.array([[p.min()], [p.max()]])
        return self.points[self._hull.vertices]

    def facets(self):
        if self.dim == 1:
            v = self.vertices[:, 0] - self.center[0]
            return np.array([[-1.0], [1.0]]), np.array([-v[0], v[1]])
        eq = self._hull.equations
        normals = eq[:, :-1]
        offsets = -eq[:, -1] - normals @ self.center
        return normals, offsets

    def to_json(self, net_ref=None):
        return dumps17({
            "net_ref": net_ref or net_reference(self.net),
            "center": self.center,
            **_meta_fields(self.meta),
            "kind": "radial",
            "values": self.rho,
        })


def _meta_fields(meta):
    # "kind" names the storage; a body's own kind travels as "body_kind"
    out = {k: v for k, v in meta.items() if isinstance(v, (int, float, str))}
    if "kind" in out:
        out["body_kind"] = out.pop("kind")
    return out


def net_reference(net):
    return f"net:{net.dim}:{net.eps!r}:{net.seed}"


def body_from_json(text, net):
    data = json.loads(text)
    cls = SupportBody if data["kind"] == "support" else RadialBody
    if data.get("net_ref") not in (None, net_reference(net)):
        raise IncompatibleRepresentation(f"body references {data['net_ref']}, got {net_reference(net)}")
    return cls(net, np.asarray(data["center"], float), np.asarray(data["values"], float))


def _unique_rows(a, decimals=12):
    scale = max(1.0, float(np.max(np.abs(a))))
    _, idx = np.unique(np.round(a / scale, decimals), axis=0, return_index=True)
    return a[np.sort(idx)]


def support_of_points(points, net, center=None):
    """Support values of ``conv(points)`` on the net, about ``center``.

    ``center`` defaults to the mean of the points.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(-1, net.dim)
    if pts.shape[0] == 0:
        raise InvalidParameter("at least one point is required")
    center = pts.mean(axis=0) if center is None else np.asarray(center, dtype=float)
    h = np.max((pts - center) @ net.directions.T, axis=0)
    return SupportBody(net, center, h)


def gauge(body, x):
    """Minkowski functional of ``body`` about its center, evaluated at ``x``.

    Works row-wise on a 2-D array of points.
    """
    normals, offsets = body.facets()
    if np.any(offsets <= 0):
        raise CenterNotInterior("center is not interior (non-positive support value)")
    y = np.asarray(x, dtype=float) - body.center
    return np.max((y @ normals.T) / offsets, axis=-1)


def dual_norm(body, y):
    """``sup_{x in K} <x - center, y>``, exact over the vertices."""
    y = np.asarray(y, dtype=float)
    return np.max((body.vertices - body.center) @ y.T, axis=0)


def polar(body):
    """Polar about the origin: support values ``h`` become radial values ``1/h``.

    Also maps a ``RadialBody`` back to the ``SupportBody`` with ``h = 1/rho``.
    """
    if np.any(body.center != 0):
        raise PolarRequiresOrigin("polar is taken about the origin; recentre first")
    if isinstance(body, SupportBody):
        if np.any(body.h <= 0):
            raise CenterNotInterior("origin must be interior")
        return RadialBody(body.net, body.center, 1.0 / body.h)
    return SupportBody(body.net, body.center, 1.0 / body.rho)


def hausdorff_distance(K, L):
    """``max_w |h_K(w) - h_L(w)|`` over the shared net (absolute support values)."""
    K, L = _as_support(K), _as_support(L)
    if not _same_net(K.net, L.net):
        raise IncompatibleRepresentation("bodies live on different nets")
    return float(np.max(np.abs(K.absolute_support() - L.absolute_support())))


def _as_support(body):
    return body if isinstance(body, SupportBody) else body.to_support()


_PROBES = weakref.WeakKeyDictionary()


def _probe_directions(net):
    probes = _PROBES.get(net)
    if probes is None:
        rng = np.random.default_rng([net.seed, net.dim, len(net), 7])
        extra = unit_vectors(rng, PROBE_FACTOR * len(net), net.dim)
        probes = _PROBES[net] = np.vstack([net.directions, extra])
    return probes


def _shifted_facets(body, x):
    normals, offsets = body.facets()
    return normals, offsets - normals @ (x - body.center)


def ratio_extremes(K, L, x):
    """``(A, B)`` with ``K - x ⊂ A (L - x)`` and ``L - x ⊂ B (K - x)`` tight.

    Evaluated on the probe set: net directions, random probes and the vertex
    directions of both bodies.  The vertex directions make the result exact
    for polytopes.
    """
    x = np.asarray(x, dtype=float)
    nK, oK = _shifted_facets(K, x)
    nL, oL = _shifted_facets(L, x)
    if np.any(oK <= 0) or np.any(oL <= 0):
        raise PointNotInterior("point is not interior to both bodies")
    dirs = np.vstack([_probe_directions(K.net), K.vertices - x, L.vertices - x])
    gK = np.max((dirs @ nK.T) / oK, axis=1)
    gL = np.max((dirs @ nL.T) / oL, axis=1)
    ratio = gL / gK
    return float(ratio.max()), float((1.0 / ratio).max())


def log_hausdorff_about(K, L, x):
    """Logarithmic Hausdorff distance of ``K`` and ``L`` about the point ``x`` (>= 1)."""
    a, b = ratio_extremes(K, L, x)
    return max(1.0, a, b)


def centroid(body):
    """Centroid of the polytope (volume-weighted, via a fan from the center)."""
    v = body.vertices
    if body.dim == 1:
        return v.mean(axis=0)
    hull = ConvexHull(v)
    c0 = v.mean(axis=0)
    simp = v[hull.simplices]
    vol = np.abs(np.linalg.det(simp - c0[None, None, :]))
    cents = (simp.sum(axis=1) + c0) / (body.dim + 1)
    return (vol[:, None] * cents).sum(axis=0) / vol.sum()


def volume(body):
    v = body.vertices
    if body.dim == 1:
        return float(v.max() - v.min())
    return float(ConvexHull(v).volume)


def diameter(body):
    v = body.vertices
    d = v[:, None, :] - v[None, :, :]
    return float(np.sqrt((d ** 2).sum(-1)).max())


def inradius(body, x=None):
    """Largest r with the ball ``B(x, r)`` inside the body (``x`` defaults to center)."""
    x = body.center if x is None else np.asarray(x, dtype=float)
    normals, offsets = _shifted_facets(body, x)
    return float(np.min(offsets / np.linalg.norm(normals, axis=1)))


def circumradius(body, x=None):
    x = body.center if x is None else np.asarray(x, dtype=float)
    return float(np.linalg.norm(body.vertices - x, axis=1).max())


def common_interior_point(K, L):
    """Chebyshev center of ``K ∩ L`` and its depth (LP)."""
    rows, rhs = [], []
    for body in (K, L):
        normals, offsets = body.facets()
        nrm = np.linalg.norm(normals, axis=1)
        rows.append(np.hstack([normals, nrm[:, None]]))
        rhs.append(offsets + normals @ body.center)
    A = np.vstack(rows)
    b = np.concatenate(rhs)
    d = K.dim
    c = np.zeros(d + 1)
    c[-1] = -1.0
    res = linprog(c, A_ub=A, b_ub=b, bounds=[(None, None)] * d + [(0, None)], method="highs")
    if not res.success:
        return None, 0.0
    return res.x[:d], float(res.x[-1])


def _objective(K, L, metric):
    def f(x):
        try:
            a, b = ratio_extremes(K, L, x)
        except PointNotInterior:
            return math.inf
        return metric(a, b)
    return f


def _search_centers(K, L, metric):
    starts = []
    for body in (K, L):
        try:
            starts.append(centroid(body))
        except Exception:
            starts.append(body.center)
    starts.append(0.5 * (starts[0] + starts[1]))
    cheb, depth = common_interior_point(K, L)
    if cheb is not None and depth > 0:
        starts.append(cheb)
    f = _objective(K, L, metric)
    scale = max(depth, 1e-3 * max(circumradius(K), circumradius(L)))
    best_val, best_x = math.inf, None
    for x0 in starts:
        v0 = f(x0)
        if not math.isfinite(v0):
            continue
        if v0 < best_val:
            best_val, best_x = v0, np.asarray(x0, float)
        simplex = np.vstack([x0] + [x0 + 0.25 * scale * e for e in np.eye(K.dim)])
        res = minimize(f, x0, method="Nelder-Mead",
                       options={"initial_simplex": simplex, "xatol": 1e-9 * scale,
                                "fatol": 1e-12, "maxiter": 400 * K.dim})
        if res.fun < best_val:
            best_val, best_x = float(res.fun), np.asarray(res.x, float)
    if best_x is None:
        raise DisjointInteriors("no common interior point found")
    return best_val, best_x


def log_hausdorff(K, L):
    """Best-found ``inf_x d_L(K, L, x)`` by multi-start downhill simplex.

    Starts at both centroids, their midpoint and the Chebyshev center of the
    intersection; the value never exceeds the distance about any start.

    Returns
    -------
    value : float
    witness_center : ndarray
    """
    val, x = _search_centers(K, L, lambda a, b: math.log(max(1.0, a, b)))
    return math.exp(val), x


def bm_upper(K, L):
    """``log_hausdorff(K, L) ** 2``, an upper bound for the Banach-Mazur distance."""
    return log_hausdorff(K, L)[0] ** 2


def bm_upper_scaled(K, L):
    """Banach-Mazur upper bound with the homothety factor optimised exactly.

    About a center ``x``, scaling ``K`` by ``s`` turns ``(A, B)`` into
    ``(s A, B / s)``; the best ``s`` gives ``sqrt(A B)``, whose square ``A B``
    bounds ``d_BM``.  ``A B`` is then minimised over centers.
    """
    val, x = _search_centers(K, L, lambda a, b: math.log(max(1.0, a * b)))
    return math.exp(val), x


def log_hausdorff_grid(K, L, lo, hi, resolution=41):
    """Brute-force minimum of ``d_L(K, L, x)`` over a planar grid of centers."""
    if K.dim != 2:
        raise InvalidParameter("grid search oracle is planar only")
    xs = np.linspace(lo[0], hi[0], resolution)
    ys = np.linspace(lo[1], hi[1], resolution)
    best, arg = math.inf, None
    for gx in xs:
        for gy in ys:
            try:
                v = log_hausdorff_about(K, L, np.array([gx, gy]))
            except PointNotInterior:
                continue
            if v < best:
                best, arg = v, np.array([gx, gy])
    return best, arg


def ball(net, radius=1.0, center=None):
    center = np.zeros(net.dim) if center is None else center
    return SupportBody(net, center, np.full(len(net), float(radius)))


def polytope(vertices, net, center=None):
    """H-rep on ``net`` of the polytope ``conv(vertices)``; center defaults to the centroid."""
    v = np.asarray(vertices, dtype=float)
    if center is None:
        center = _polygon_centroid(v) if v.shape[1] == 2 else v.mean(axis=0)
    return support_of_points(v, net, center)


def _polygon_centroid(v):
    hull = ConvexHull(v)
    p = v[hull.vertices]
    q = np.roll(p, -1, axis=0)
    cross = p[:, 0] * q[:, 1] - q[:, 0] * p[:, 1]
    area = cross.sum() / 2.0
    cx = ((p[:, 0] + q[:, 0]) * cross).sum() / (6.0 * area)
    cy = ((p[:, 1] + q[:, 1]) * cross).sum() / (6.0 * area)
    return np.array([cx, cy])
