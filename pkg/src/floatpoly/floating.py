"""Deterministic bodies attached to a log-concave measure.

* floating polytope: intersection over net directions of the half-spaces
  ``<x, w> <= J_w^{-1}(1 - delta)``
* level-set body ``{f >= delta}``, by radial root finding from the mode
* Radon body: per direction, the farthest hyperplane whose integral is ``delta``
* convex floating body of a planar polygon, by exact polygon clipping
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .body import RadialBody, SupportBody
from .density import Z99, marginal
from .errors import DeltaTooLarge, EmptyLevelSet, InvalidParameter, InvalidPolygon, PossiblyEmpty


@dataclass(frozen=True, eq=False)
class FloatingPolytope(SupportBody):
    delta: float = math.nan
    density: object = None


@dataclass(frozen=True, eq=False)
class LevelSetBody(RadialBody):
    delta: float = math.nan
    density: object = None


@dataclass(frozen=True, eq=False)
class RadonBody(SupportBody):
    delta: float = math.nan
    density: object = None


def floating_polytope(density, net, delta, backend=None, context=None):
    """Net over-approximation ``F_delta^N`` of the floating body.

    The body is centred at the density's centroid, which every ``delta``
    below ``1/e`` keeps inside.
    """
    if not 0.0 < delta < math.exp(-1.0):
        raise PossiblyEmpty(f"delta must lie in (0, 1/e) for a non-empty body, got {delta}")
    center = np.asarray(density.centroid, float)
    q = np.array([marginal(density, w, backend, context).quantile(1.0 - delta) for w in net.directions])
    h = q - net.directions @ center
    return FloatingPolytope(net, center, h, {"kind": "floating", "delta": delta, "density_ref": density.spec()}, delta, density)


def floating_ci(density, net, delta, context):
    """Per-direction 99% half-width of the Monte Carlo quantile (order-statistic interval)."""
    n = context.samples
    k = Z99 * math.sqrt(delta * (1 - delta) * n)
    out = []
    for w in net.directions:
        proj = np.sort(context.points(density) @ w)
        i = int(round(n * (1 - delta)))
        lo = proj[max(0, int(i - k) - 1)]
        hi = proj[min(n - 1, int(i + k) + 1)]
        out.append(0.5 * (hi - lo))
    return np.array(out)


def _radial_roots(logf, mode, dirs, level, rel_tol=1e-12):
    """Vectorised bisection for ``logf(mode + r w) = level`` along each direction."""
    m = len(dirs)
    lo = np.zeros(m)
    hi = np.ones(m)
    for _ in range(200):
        outside = logf(mode + hi[:, None] * dirs) < level
        if outside.all():
            break
        lo = np.where(outside, lo, hi)
        hi = np.where(outside, hi, 2.0 * hi)
    else:
        raise EmptyLevelSet("level set appears unbounded")
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        inside = logf(mode + mid[:, None] * dirs) >= level
        lo = np.where(inside, mid, lo)
        hi = np.where(inside, hi, mid)
        if np.all(hi - lo <= rel_tol * np.maximum(hi, 1e-300)):
            break
    return 0.5 * (lo + hi)


def level_set_body(density, net, delta):
    """``D_delta = {f >= delta}`` as radial values about the mode."""
    mode = np.asarray(density.mode, float)
    top = float(density.logpdf(mode))
    if not delta > 0:
        raise InvalidParameter("delta must be positive")
    level = math.log(delta)
    if level >= top:
        raise EmptyLevelSet(f"delta={delta} is not below the peak density {math.exp(top)}")
    rho = _radial_roots(density.logpdf, mode, net.directions, level)
    return LevelSetBody(net, mode, rho, {"kind": "level-set", "delta": delta, "density_ref": density.spec()}, delta, density)


def radon_body(density, net, delta):
    """Slab intersection approximating ``R_delta`` from outside.

    For each net direction ``w`` the upper root ``t > <mode, w>`` of
    ``Rf(<x, w> = t) = delta`` is found by bracketing outward and root
    polishing; the marginal is log-concave, so the crossing is unique.
    """
    mode = np.asarray(density.mode, float)
    h = np.empty(len(net))
    for i, w in enumerate(net.directions):
        mg = marginal(density, w)
        t0 = float(mode @ w)
        f0 = mg.pdf(t0)
        if not f0 > delta:
            raise DeltaTooLarge(f"delta={delta} exceeds the central hyperplane integral {f0:.6g}")
        a, b, step = t0, t0 + mg.scale, mg.scale
        while mg.pdf(b) > delta:
            a, b = b, b + step
            step *= 2.0
        t = optimize.brentq(lambda s: mg.pdf(s) - delta, a, b, xtol=1e-12 * mg.scale, rtol=1e-14)
        h[i] = t - t0
    return RadonBody(net, mode, h, {"kind": "radon", "delta": delta, "density_ref": density.spec()}, delta, density)


def radon_floating_roots(density, theta, delta):
    """``(s, t)``: floating root ``J^{-1}(1 - delta)`` and Radon root ``f_theta^{-1}(delta)``."""
    mg = marginal(density, theta)
    s = mg.quantile(1.0 - delta)
    t0 = mg.center
    a, b, step = t0, t0 + mg.scale, mg.scale
    while mg.pdf(b) > delta:
        a, b = b, b + step
        step *= 2.0
    t = optimize.brentq(lambda u: mg.pdf(u) - delta, a, b, xtol=1e-12 * mg.scale, rtol=1e-14)
    return s, t


def radon_gap_constant(density, theta, t0):
    """``Delta = max(1, log(1/lam) / lam)`` with ``lam = (log f(0) - log f(t0)) / t0``.

    Bounds ``|s - t|`` between floating and Radon roots once ``delta`` is
    small enough.
    """
    mg = marginal(density, theta)
    alpha, beta = mg.pdf(0.0), mg.pdf(t0)
    if not beta < alpha:
        raise InvalidParameter("t0 must lie where the marginal has already decayed")
    lam = (math.log(alpha) - math.log(beta)) / t0
    return max(1.0, math.log(1.0 / lam) / lam) if lam < 1 else 1.0


# --------------------------------------------------------------------------
# convex floating body of a polygon
# --------------------------------------------------------------------------

def _signed_area(p):
    q = np.roll(p, -1, axis=0)
    return 0.5 * float(np.sum(p[:, 0] * q[:, 1] - q[:, 0] * p[:, 1]))


def _check_convex(p):
    if len(p) < 3:
        raise InvalidPolygon("a polygon needs at least three vertices")
    e = np.roll(p, -1, axis=0) - p
    f = np.roll(e, -1, axis=0)
    cross = e[:, 0] * f[:, 1] - e[:, 1] * f[:, 0]
    if not (np.all(cross > 0) or np.all(cross < 0)):
        raise InvalidPolygon("polygon is not strictly convex or not simple")
    return p if cross[0] > 0 else p[::-1]


def clip_halfplane(poly, w, t):
    """Part of the convex polygon ``poly`` with ``<x, w> >= t`` (Sutherland-Hodgman)."""
    out = []
    n = len(poly)
    s = poly @ w - t
    for i in range(n):
        j = (i + 1) % n
        if s[i] >= 0:
            out.append(poly[i])
        if (s[i] >= 0) != (s[j] >= 0):
            lam = s[i] / (s[i] - s[j])
            out.append(poly[i] + lam * (poly[j] - poly[i]))
    return np.array(out) if out else np.zeros((0, 2))


def cap_area(poly, w, t):
    cap = clip_halfplane(poly, w, t)
    return _signed_area(cap) if len(cap) >= 3 else 0.0


def convex_floating_body_2d(polygon, lam, net):
    """Convex floating body ``K_lam`` of a convex polygon, on ``net``.

    Along each direction the cap ``{<x, w> >= t}`` of area ``lam * area(K)``
    is located by bisection; the support value is ``t`` measured from the
    polygon centroid.
    """
    if net.dim != 2:
        raise InvalidParameter("planar polygons need a planar net")
    if not 0.0 < lam < 0.5:
        raise InvalidParameter(f"lambda must lie in (0, 1/2), got {lam}")
    p = _check_convex(np.asarray(polygon, float))
    area = _signed_area(p)
    center = polygon_centroid(p)
    diam = float(np.max(np.linalg.norm(p[:, None] - p[None], axis=-1)))
    target = lam * area
    h = np.empty(len(net))
    for i, w in enumerate(net.directions):
        proj = p @ w
        lo, hi = float(proj.min()), float(proj.max())
        while hi - lo > 1e-12 * diam:
            mid = 0.5 * (lo + hi)
            if cap_area(p, w, mid) > target:
                lo = mid
            else:
                hi = mid
        h[i] = 0.5 * (lo + hi) - float(center @ w)
    return SupportBody(net, center, h, {"kind": "convex-floating", "lambda": lam})


def polygon_centroid(p):
    p = np.asarray(p, float)
    q = np.roll(p, -1, axis=0)
    cross = p[:, 0] * q[:, 1] - q[:, 0] * p[:, 1]
    a = cross.sum() / 2.0
    return np.array([((p[:, 0] + q[:, 0]) * cross).sum(), ((p[:, 1] + q[:, 1]) * cross).sum()]) / (6.0 * a)


# --------------------------------------------------------------------------
# mass outside level sets
# --------------------------------------------------------------------------

def zeta(density, epsilon, samples, seed=0):
    """Monte Carlo estimate of ``mu{f < epsilon}`` and its 99% half-width."""
    rng = np.random.default_rng(seed)
    x = density.sample(rng, int(samples))
    below = density.logpdf(x) < math.log(epsilon)
    p = float(np.mean(below))
    ci = Z99 * math.sqrt(max(p * (1 - p), 1.0 / samples) / samples)
    return p, ci
