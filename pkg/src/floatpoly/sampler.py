"""Reproducible i.i.d. samples and the random polytopes they span."""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .body import SupportBody
from .density import Gaussian, ProductDensity, RadialDensity
from .errors import DegenerateHull, UnsupportedDensity

SUPPORTED = (Gaussian, ProductDensity, RadialDensity)


@dataclass(frozen=True, eq=False)
class SampleSet:
    dim: int
    n: int
    points: np.ndarray
    seed: object
    density: object


def stream(*key):
    """Generator for the stream identified by an integer key tuple."""
    return np.random.default_rng(np.random.SeedSequence([int(k) for k in key]))


def sample(density, n, seed):
    """``n`` i.i.d. draws from ``density``; bit-identical for the same seed.

    ``seed`` is an int or a tuple of ints (for example ``(master, trial)``).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not (isinstance(density, SUPPORTED) or getattr(density, "classification", None) == "universal"):
        raise UnsupportedDensity(f"no sampler for {type(density).__name__}")
    key = seed if isinstance(seed, tuple) else (seed,)
    pts = density.sample(stream(*key), int(n))
    return SampleSet(density.dim, int(n), np.asarray(pts, float).reshape(n, density.dim), seed, density)


def convex_hull_2d(points):
    """Hull vertices of planar points, counter-clockwise, by monotone chain.

    Ties are broken lexicographically and collinear boundary points dropped.
    """
    pts = np.asarray(points, float)
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    p = pts[order]
    if len(p) < 3:
        return p

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower, upper = [], []
    for q in p:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], q) <= 0:
            lower.pop()
        lower.append(q)
    for q in p[::-1]:
        while len(upper) >= 2 and cross(upper[-2], upper[-1], q) <= 0:
            upper.pop()
        upper.append(q)
    return np.array(lower[:-1] + upper[:-1])


def _interior_filter_2d(pts, k=16):
    """Drop points strictly inside the polygon spanned by ``k`` directional extremes."""
    ang = 2 * np.pi * np.arange(k) / k
    dirs = np.column_stack([np.cos(ang), np.sin(ang)])
    x, y = np.ascontiguousarray(pts[:, 0]), np.ascontiguousarray(pts[:, 1])
    # column arithmetic: a strided argmax over an (n, k) matrix is far slower
    idx = [int(np.argmax(x * c + y * s)) for c, s in dirs]
    ext = pts[np.unique(idx)]
    poly = convex_hull_2d(ext)
    if len(poly) < 3:
        return pts
    inside = np.ones(len(pts), bool)
    for a, b in zip(poly, np.roll(poly, -1, axis=0)):
        e = b - a
        inside &= (e[0] * (y - a[1]) - e[1] * (x - a[0])) > 0
    return pts[~inside]


def hull_candidates(points, net=None):
    """Points that can attain a directional maximum.

    Planar: exact hull vertices.  Higher dimension: points outside a ball that
    is certified to lie inside the final body (checked against the computed
    support values by the caller).
    """
    pts = np.asarray(points, float)
    d = pts.shape[1]
    if d == 2:
        return convex_hull_2d(_interior_filter_2d(pts)), None
    if d == 1 or len(pts) < 64:
        return pts, None
    center = pts.mean(axis=0)
    coarse = np.vstack([np.eye(d), -np.eye(d)])
    if net is not None:
        coarse = np.vstack([coarse, net.directions[:: max(1, len(net) // 32)]])
    shifted = pts - center
    r0 = 0.99 * min(float(np.max(shifted @ w)) for w in coarse)
    keep = np.linalg.norm(pts - center, axis=1) >= r0
    return pts[keep], r0


def random_polytope(samples, net):
    """Support values of the sample hull about the sample mean.

    Raises ``DegenerateHull`` when ``n < dim + 1``.  Identical points give
    ``h = 0`` with ``meta['degenerate'] = True``.
    """
    pts = samples.points
    d = samples.dim
    if samples.n < d + 1:
        raise DegenerateHull(f"n={samples.n} points cannot span a {d}-dimensional body")
    center = pts.mean(axis=0)
    if np.all(pts == pts[0]):
        return SupportBody(net, center, np.zeros(len(net)), {"degenerate": True})
    cand, r0 = hull_candidates(pts, net)
    h = np.max((cand - center) @ net.directions.T, axis=0)
    if r0 is not None and not r0 <= h.min():
        # discarded points are not certified inside; fall back to every point
        h = np.max((pts - center) @ net.directions.T, axis=0)
    degenerate = bool(np.any(h <= 0))
    return SupportBody(net, center, h, {"degenerate": degenerate, "n": samples.n})


def vertex_count_2d(samples):
    """Exact number of vertices of the planar sample hull."""
    if samples.dim != 2:
        raise ValueError("vertex count is planar only")
    if samples.n < 3:
        raise DegenerateHull("need at least three points")
    return int(len(convex_hull_2d(_interior_filter_2d(samples.points))))


def dump_samples(samples, path):
    """Column-major float64 file plus a JSON sidecar ``<path>.json``."""
    np.asfortranarray(samples.points).T.astype("<f8").tofile(path)
    spec = samples.density.spec() if hasattr(samples.density, "spec") else str(samples.density)
    seed = list(samples.seed) if isinstance(samples.seed, tuple) else samples.seed
    with open(f"{path}.json", "w") as fh:
        json.dump({"dim": samples.dim, "n": samples.n, "seed": seed, "density": spec}, fh)


def load_samples(path):
    with open(f"{path}.json") as fh:
        meta = json.load(fh)
    raw = np.fromfile(path, dtype="<f8").reshape(meta["dim"], meta["n"]).T
    return meta, np.ascontiguousarray(raw)


def hull_ball_hausdorff_2d(samples, radius):
    """Exact Hausdorff distance between the planar sample hull and ``radius * B``.

    The support gap ``h_P - radius`` is extremal either at a vertex direction
    (farthest vertex) or at an edge normal (nearest supporting line).
    """
    v = convex_hull_2d(_interior_filter_2d(samples.points))
    w = np.roll(v, -1, axis=0)
    e = w - v
    # signed distance from the origin to each edge line (positive when inside)
    line = (e[:, 1] * v[:, 0] - e[:, 0] * v[:, 1]) / np.linalg.norm(e, axis=1)
    far = float(np.linalg.norm(v, axis=1).max())
    near = float(line.min())
    return max(far - radius, radius - near)
