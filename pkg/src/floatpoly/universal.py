"""A log-concave density built from a finite family of bodies.

Each body gets a coefficient that grows linearly and then saturates at its
own breakpoint.  The weighted Minkowski sum of the family is a concave,
non-decreasing body-valued map of ``t``; its inverse gauge ``g`` is convex
and the density is ``2^{-g(c x)}``.  Near each breakpoint one body carries
almost all of the weight, so the level sets there are close to homothets of
that body.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .body import SupportBody, bm_upper_scaled, centroid, circumradius, inradius, log_hausdorff, polytope, volume
from .errors import CapExceeded, EnvelopeFailure, InvalidParameter, OutOfFamily
from .floating import level_set_body
from .net import unit_vectors

LN2 = math.log(2.0)


def breakpoint_time(n):
    """``2^{2 n^2}``: where ``alpha_n`` stops growing."""
    return 2.0 ** (2 * n * n)


def alpha(n, t):
    """Coefficient schedule; vectorised in ``t``."""
    t = np.asarray(t, float)
    return np.where(t <= breakpoint_time(n), 2.0 ** (-n * n) * t, 2.0 ** (n * n))


def standard_body(name, net):
    """Named bodies in John position about the origin."""
    d = net.dim
    if name in ("disk", "ball"):
        return SupportBody(net, np.zeros(d), np.ones(len(net)), {"name": name})
    if name in ("square", "cube"):
        v = np.array(np.meshgrid(*[[-1.0, 1.0]] * d)).reshape(d, -1).T
    elif name in ("triangle", "simplex"):
        # regular simplex with inradius 1: vertices at distance d from the origin
        e = np.eye(d + 1) - 1.0 / (d + 1)
        basis = np.linalg.svd(e)[2][:d]
        v = e @ basis.T
        v *= d / np.linalg.norm(v[0])
        if d == 2:
            v = d * np.array([[0.0, 1.0], [-math.sqrt(3) / 2, -0.5], [math.sqrt(3) / 2, -0.5]])
    else:
        raise InvalidParameter(f"unknown body name {name!r}")
    body = polytope(v, net, np.zeros(d))
    return SupportBody(net, np.zeros(d), body.h, {"name": name})


@dataclass(frozen=True, eq=False)
class BodyFamily:
    """Finite family ``K_1..K_N`` in John position, supported on one net.

    Each body is re-expressed about the origin; the John position is
    spot-checked through inradius and circumradius about the origin.
    """

    bodies: tuple
    names: tuple = ()

    def __post_init__(self):
        if not self.bodies:
            raise InvalidParameter("family must contain at least one body")
        net = self.bodies[0].net
        d = net.dim
        fixed = []
        for i, K in enumerate(self.bodies):
            if K.net is not net:
                raise InvalidParameter("family bodies must share one net")
            K = SupportBody(net, np.zeros(d), K.absolute_support(), K.meta)
            r_in = inradius(K, np.zeros(d))
            r_out = circumradius(K, np.zeros(d))
            if r_in < 1.0 - (net.tolerance - 1.0) - 1e-9 or r_out > d * net.tolerance + 1e-9:
                raise InvalidParameter(
                    f"body {i + 1} is not in John position: inradius {r_in:.6g}, circumradius {r_out:.6g}")
            fixed.append(K)
        object.__setattr__(self, "bodies", tuple(fixed))
        if not self.names:
            object.__setattr__(self, "names", tuple(K.meta.get("name", f"K{i + 1}") for i, K in enumerate(fixed)))

    @property
    def net(self):
        return self.bodies[0].net

    @property
    def dim(self):
        return self.net.dim

    @property
    def size(self):
        return len(self.bodies)

    @property
    def supports(self):
        return np.vstack([K.h for K in self.bodies])


def family_from_spec(spec, net):
    """Family from ``{"bodies": [name | {"vertices": [...]}, ...], "john": true}``."""
    if isinstance(spec, list):
        spec = {"bodies": spec, "john": True}
    if not spec.get("john", False):
        raise InvalidParameter("family spec must declare John position")
    bodies = []
    for item in spec["bodies"]:
        if isinstance(item, str):
            bodies.append(standard_body(item, net))
        else:
            v = np.asarray(item["vertices"], float)
            bodies.append(polytope(v, net, np.zeros(net.dim)))
    return BodyFamily(tuple(bodies))


@dataclass(frozen=True, eq=False)
class KappaMap:
    family: BodyFamily
    _pieces: tuple = field(init=False, repr=False)

    def __post_init__(self):
        # on [T_{k-1}, T_k] the support is affine in t: t * slope_k + offset_k
        H = self.family.supports
        N = self.family.size
        pieces = []
        for k in range(1, N + 1):
            slope = sum(2.0 ** (-n * n) * H[n - 1] for n in range(k, N + 1))
            offset = sum(2.0 ** (n * n) * H[n - 1] for n in range(1, k))
            offset = offset if k > 1 else np.zeros_like(H[0])
            lo = breakpoint_time(k - 1) if k > 1 else 0.0
            pieces.append((lo, breakpoint_time(k), slope, offset))
        object.__setattr__(self, "_pieces", tuple(pieces))

    @property
    def n_max(self):
        return self.family.size

    @property
    def net(self):
        return self.family.net

    @property
    def t_cap(self):
        return 2.0 ** (2 * self.n_max ** 2 + 2)

    def support(self, t):
        t = float(t)
        if t < 0:
            raise InvalidParameter("t must be >= 0")
        H = self.family.supports
        coef = np.array([float(alpha(n, t)) for n in range(1, self.n_max + 1)])
        return coef @ H

    def truncation(self, t):
        """``sum_{j > N} alpha_j(t) * 2d``: support gap to any longer John family."""
        total, j = 0.0, self.n_max + 1
        while True:
            term = float(alpha(j, t)) * 2 * self.family.dim
            total += term
            if term <= 1e-17 * max(total, 1e-300) or j > self.n_max + 60:
                return total
            j += 1

    def envelope_radius(self):
        """Circumradius of ``sum 2^{-n^2} K_n``; ``kappa(t)`` lies in ``t`` times it."""
        h = sum(2.0 ** (-n * n) * K.h for n, K in enumerate(self.family.bodies, start=1))
        return circumradius(SupportBody(self.net, np.zeros(self.family.dim), h))


def kappa_at(kmap, t):
    """``kappa(t)`` as a support body about the origin, with its truncation bound in ``meta``."""
    h = kmap.support(t)
    return SupportBody(kmap.net, np.zeros(kmap.family.dim), h, {"t": float(t), "truncation": kmap.truncation(t)})


def _g_exact(kmap, x):
    """Exact inverse of the piecewise-affine support map; ``inf`` outside ``kappa(T_N)``."""
    x = np.atleast_2d(np.asarray(x, float))
    proj = x @ kmap.net.directions.T
    g = np.full(len(x), np.inf)
    todo = np.ones(len(x), bool)
    for lo, hi, slope, offset in kmap._pieces:
        if not todo.any():
            break
        need = np.max((proj[todo] - offset) / slope, axis=1)
        hit = need <= hi * (1 + 1e-15)
        idx = np.flatnonzero(todo)[hit]
        g[idx] = np.clip(need[hit], lo, hi)
        todo[idx] = False
    return g


def g_eval(obj, x):
    """``g(x) = inf{t >= 0 : x in kappa(t)}`` for a ``KappaMap`` or ``UniversalDensity``.

    Raises ``CapExceeded`` when some point lies outside ``kappa(t)`` for every
    ``t`` up to the cap.
    """
    kmap = obj.kappa if isinstance(obj, UniversalDensity) else obj
    scalar = np.ndim(x) == 1
    g = _g_exact(kmap, x)
    if not np.all(np.isfinite(g)):
        raise CapExceeded(f"point lies outside kappa(t) for t <= {kmap.t_cap:g}", kmap.t_cap)
    return float(g[0]) if scalar else g


def g_eval_bisect(kmap, x, iterations=200):
    """Reference ``g`` by bisection on monotone membership ``x in kappa(t)``."""
    x = np.asarray(x, float)
    proj = kmap.net.directions @ x
    lo, hi = 0.0, kmap.t_cap
    if np.any(proj > kmap.support(hi)):
        raise CapExceeded("point outside kappa(t_cap)", kmap.t_cap)
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        if np.all(proj <= kmap.support(mid)):
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-15 * max(hi, 1e-300):
            break
    return hi


class UniversalDensity:
    """``f(x) = 2^{-g(c x)}`` with ``c`` chosen so that ``f`` has unit mass.

    Mass and first moment come from the layer-cake identity
    ``int 2^{-g} = int_0^inf ln2 2^{-t} vol(kappa(t)) dt``.
    """

    classification = "universal"

    def __init__(self, kappa, c=None):
        self.kappa = kappa
        self.dim = kappa.family.dim
        mass, moment = self._layer_integrals()
        self.c = float(mass ** (1.0 / self.dim)) if c is None else float(c)
        self._centroid = moment / mass / self.c

    def _layer_integrals(self):
        d = self.dim
        cache = {}

        def layer(t):
            if t not in cache:
                if t <= 0:
                    cache[t] = (0.0, np.zeros(d))
                else:
                    K = kappa_at(self.kappa, t)
                    cache[t] = (volume(K), centroid(K))
            return cache[t]

        breaks = [0.0] + [breakpoint_time(k) for k in range(1, self.kappa.n_max + 1)]
        end = 2000.0  # 2^{-t} below 1e-600 from here on
        segs = [b for b in breaks if b < end] + [end]
        mass = 0.0
        moment = np.zeros(d)
        for a, b in zip(segs[:-1], segs[1:]):
            mass += integrate.quad(lambda t: LN2 * 2.0 ** -t * layer(t)[0], a, b, limit=200, epsrel=1e-12)[0]
            for i in range(d):
                moment[i] += integrate.quad(lambda t: LN2 * 2.0 ** -t * layer(t)[0] * layer(t)[1][i],
                                            a, b, limit=200, epsrel=1e-12, epsabs=1e-14)[0]
        return mass, moment

    @property
    def mode(self):
        return np.zeros(self.dim)

    @property
    def centroid(self):
        return self._centroid.copy()

    def logpdf(self, x):
        return -LN2 * _g_exact(self.kappa, np.asarray(x, float) * self.c).reshape(np.shape(x)[:-1])

    def pdf(self, x):
        return np.exp(self.logpdf(x))

    def g(self, x):
        return -self.logpdf(x)

    def envelope_rate(self):
        """``m`` with ``f(x) <= exp(-m |x|)``."""
        return self.c * LN2 / self.kappa.envelope_radius()

    def sample(self, rng, n, batch=None):
        """Rejection sampling against the radial envelope ``exp(-m |x|)``."""
        m = self.envelope_rate()
        out = []
        have = 0
        tried = 0
        batch = batch or max(1024, 4 * n)
        while have < n:
            r = rng.gamma(self.dim, 1.0 / m, size=batch)
            x = unit_vectors(rng, batch, self.dim) * r[:, None]
            u = rng.random(batch)
            keep = np.log(u) <= self.logpdf(x) + m * r
            out.append(x[keep])
            have += int(keep.sum())
            tried += batch
            if tried >= 10 * batch and have < 1e-4 * tried:
                raise EnvelopeFailure(f"acceptance rate {have / tried:.2e} below 1e-4")
        return np.vstack(out)[:n]

    def spec(self):
        return {"class": "universal", "dim": self.dim, "family": list(self.kappa.family.names), "c": self.c}


def dominance_ratio(n):
    """``sum_{j != n} alpha_j(T) / alpha_n(T)`` at ``T = 2^{2 n^2}``, summed to convergence."""
    T = breakpoint_time(n)
    total = 0.0
    j = 1
    while True:
        if j != n:
            term = float(alpha(j, T))
            total += term
            if j > n and term < 1e-18 * total:
                break
        j += 1
    return total / float(alpha(n, T))


def bm_density_bound(n, dim):
    return 1.0 + 2.0 ** (-n + 2) * dim


def bm_density_check(kmap, n):
    """Banach-Mazur upper bound between ``kappa(2^{2 n^2})`` and ``K_n``."""
    if not 1 <= n <= kmap.n_max:
        raise OutOfFamily(f"n={n} outside the family 1..{kmap.n_max}")
    K = kappa_at(kmap, breakpoint_time(n))
    return bm_upper_scaled(K, kmap.family.bodies[n - 1])[0]


def level_set_identity_check(density, n, net=None):
    """``d_L`` between the computed level set ``{f >= 2^{-n}}`` and ``kappa(n) / c``."""
    net = net or density.kappa.net
    D = level_set_body(density, net, 2.0 ** (-n))
    K = SupportBody(density.kappa.net, np.zeros(density.dim), density.kappa.support(n) / density.c)
    return log_hausdorff(D, K)[0]
