"""Log-concave density models and their one-dimensional marginals.

Every d-dimensional model exposes, for a unit direction ``theta``, the tail
``mu{x : <x, theta> >= t}``, its quantile, and the hyperplane integral
``Rf(<x, theta> = t)`` (the marginal density).  Which numerical route is used
depends on the model:

==========  ===============================================================
gaussian    closed form (normal law of ``<x, theta>``)
sz/product  closed form along a single axis, one adaptive quadrature when two
            coordinates are active, FFT grid convolution beyond that
radial      one quadrature against the law of a uniform direction
general     nested adaptive quadrature (dim <= 3)
any         Monte Carlo with a 99% binomial interval, on request
==========  ===============================================================
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from scipy import integrate, optimize, special, stats

from .errors import InvalidParameter, OutOfDomain, ParameterRegime, UnsupportedDensity

QUAD_ABS = 1e-10
BACKENDS = (None, "exact", "monte-carlo")
Z99 = stats.norm.ppf(0.995)


def _quad(f, a, b, points=None, epsabs=QUAD_ABS, epsrel=1e-11):
    if points is not None:
        points = [p for p in points if a < p < b] or None
    if points is not None and (math.isinf(a) or math.isinf(b)):
        # quad refuses break points on infinite ranges
        pts = sorted(points)
        parts = [a] + pts + [b]
        return sum(_quad(f, lo, hi, None, epsabs, epsrel) for lo, hi in zip(parts[:-1], parts[1:]))
    val, _ = integrate.quad(f, a, b, points=points, epsabs=epsabs, epsrel=epsrel, limit=500)
    return val


# --------------------------------------------------------------------------
# one-dimensional models
# --------------------------------------------------------------------------

class Density1D:
    """Log-concave density ``f = exp(-g)`` on the line.

    Subclasses provide ``logpdf``, ``sf`` (``1 - J``) and ``logsf``; the
    generic quantile inverts ``sf`` by bracketed root finding.
    """

    name = "density1d"
    mean = 0.0
    lo, hi = -math.inf, math.inf
    kinks: tuple = ()

    def pdf(self, t):
        return np.exp(self.logpdf(t))

    def g(self, t):
        return -self.logpdf(t)

    def cdf(self, t):
        return 1.0 - self.sf(t)

    def u(self, t):
        """``-log(1 - J(t))``; convex for every log-concave law."""
        return -self.logsf(t)

    def isf(self, p):
        """Point ``t`` with ``sf(t) = p``."""
        return _invert_sf(self.sf, p, self.mean, self.scale, self.lo, self.hi)

    def ppf(self, q):
        return self.isf(1.0 - q)

    @property
    def scale(self):
        return 1.0

    def effective_range(self, tol=1e-17):
        """Interval outside which each tail carries less than ``tol`` mass."""
        a, b, step = self.mean, self.mean, self.scale
        while math.isinf(self.lo) and self.cdf(a) > tol:
            a -= step
            step *= 2.0
        step = self.scale
        while math.isinf(self.hi) and self.sf(b) > tol:
            b += step
            step *= 2.0
        return (a if math.isinf(self.lo) else self.lo), (b if math.isinf(self.hi) else self.hi)


def _invert_sf(sf, p, start, scale, lo=-math.inf, hi=math.inf):
    if not (0.0 < p < 1.0):
        raise InvalidParameter(f"probability must lie in (0, 1), got {p!r}")
    a = b = start
    step = scale
    # doubling bracket outward from the centre; sf is decreasing
    while sf(b) > p:
        b = min(b + step, hi) if math.isfinite(hi) else b + step
        step *= 2.0
        if step > 1e8 * scale:
            raise OutOfDomain("quantile bracket diverged")
    step = scale
    while sf(a) < p:
        a = max(a - step, lo) if math.isfinite(lo) else a - step
        step *= 2.0
        if step > 1e8 * scale:
            raise OutOfDomain("quantile bracket diverged")
    if a == b:
        return a
    return optimize.brentq(lambda t: sf(t) - p, a, b, xtol=1e-13 * scale, rtol=1e-15, maxiter=500)


class Gaussian1D(Density1D):
    name = "gaussian"

    def __init__(self, loc=0.0, scale=1.0):
        self.mean = float(loc)
        self._scale = float(scale)

    @property
    def scale(self):
        return self._scale

    def logpdf(self, t):
        z = (np.asarray(t, float) - self.mean) / self._scale
        return -0.5 * z * z - 0.5 * math.log(2 * math.pi) - math.log(self._scale)

    def sf(self, t):
        return special.ndtr(-(np.asarray(t, float) - self.mean) / self._scale)

    def logsf(self, t):
        return special.log_ndtr(-(np.asarray(t, float) - self.mean) / self._scale)

    def isf(self, p):
        if not (0.0 < p < 1.0):
            raise InvalidParameter(f"probability must lie in (0, 1), got {p!r}")
        return self.mean - self._scale * special.ndtri(p)

    def sample(self, rng, n):
        return self.mean + self._scale * rng.standard_normal(n)


def _log_upper_gamma_asymptotic(a, x, terms=10):
    """``log Q(a, x)`` for large ``x`` from ``x^{a-1} e^{-x} sum_k (a-1)..(a-k) / x^k``."""
    x = np.maximum(np.asarray(x, float), 1.0)
    total, term = np.ones_like(x), np.ones_like(x)
    for k in range(1, terms + 1):
        term = term * (a - k) / x
        total = total + term
    return (a - 1.0) * np.log(x) - x + np.log(total) - special.gammaln(a)


class ExpPower1D(Density1D):
    """Density proportional to ``exp(-|t|^p)``, ``p >= 1``.

    The normaliser is computed by quadrature and kept in ``constant``.
    """

    name = "exp-power"
    kinks = (0.0,)

    def __init__(self, p):
        if not p >= 1:
            raise InvalidParameter(f"exponential-power needs p >= 1, got {p!r}")
        self.p = float(p)
        half = _quad(lambda s: math.exp(-s ** self.p), 0.0, math.inf, epsabs=1e-14, epsrel=1e-13)
        self.constant = 1.0 / (2.0 * half)

    @property
    def scale(self):
        return 1.0

    def logpdf(self, t):
        return math.log(self.constant) - np.abs(np.asarray(t, float)) ** self.p

    def sf(self, t):
        t = np.asarray(t, float)
        upper = 0.5 * special.gammaincc(1.0 / self.p, np.abs(t) ** self.p)
        return np.where(t >= 0, upper, 1.0 - upper)

    def logsf(self, t):
        t = np.asarray(t, float)
        x = np.abs(t) ** self.p
        upper = special.gammaincc(1.0 / self.p, x)
        with np.errstate(divide="ignore"):
            pos = math.log(0.5) + np.where(x < 500.0, np.log(upper), _log_upper_gamma_asymptotic(1.0 / self.p, x))
        return np.where(t >= 0, pos, np.log1p(-0.5 * upper))

    def isf(self, p):
        if not (0.0 < p < 1.0):
            raise InvalidParameter(f"probability must lie in (0, 1), got {p!r}")
        if p <= 0.5:
            return float(special.gammainccinv(1.0 / self.p, 2.0 * p) ** (1.0 / self.p))
        return -float(special.gammainccinv(1.0 / self.p, 2.0 * (1.0 - p)) ** (1.0 / self.p))

    def sample(self, rng, n):
        # |X|^p is Gamma(1/p) distributed; the sign is a fair coin
        mag = rng.standard_gamma(1.0 / self.p, n) ** (1.0 / self.p)
        sign = np.where(rng.random(n) < 0.5, -1.0, 1.0)
        return sign * mag


class Uniform1D(Density1D):
    name = "uniform"

    def __init__(self, a=0.0, b=1.0):
        if not b > a:
            raise InvalidParameter("uniform interval must have b > a")
        self.lo, self.hi = float(a), float(b)
        self.mean = 0.5 * (self.lo + self.hi)
        self.kinks = (self.lo, self.hi)

    @property
    def scale(self):
        return self.hi - self.lo

    def logpdf(self, t):
        t = np.asarray(t, float)
        with np.errstate(divide="ignore"):
            return np.where((t >= self.lo) & (t <= self.hi), -math.log(self.hi - self.lo), -np.inf)

    def sf(self, t):
        return np.clip((self.hi - np.asarray(t, float)) / (self.hi - self.lo), 0.0, 1.0)

    def logsf(self, t):
        with np.errstate(divide="ignore"):
            return np.log(self.sf(t))

    def isf(self, p):
        if not (0.0 < p < 1.0):
            raise InvalidParameter(f"probability must lie in (0, 1), got {p!r}")
        return self.hi - p * (self.hi - self.lo)

    def sample(self, rng, n):
        return rng.uniform(self.lo, self.hi, n)


class LogConcave1D(Density1D):
    """User-supplied convex potential ``g``; normalised and integrated numerically."""

    name = "general1d"

    def __init__(self, g: Callable[[float], float], mode=0.0, scale=1.0):
        self._g = g
        self._scale = float(scale)
        self.mode = float(mode)
        mass = _quad(lambda s: math.exp(-g(s)), -math.inf, math.inf)
        self._logc = -math.log(mass)
        self.mean = _quad(lambda s: s * math.exp(-g(s) + self._logc), -math.inf, math.inf)

    @property
    def scale(self):
        return self._scale

    def logpdf(self, t):
        return -np.vectorize(self._g)(t) + self._logc

    def sf(self, t):
        f = lambda s: math.exp(-self._g(s) + self._logc)
        if np.ndim(t):
            return np.array([self.sf(v) for v in np.ravel(t)]).reshape(np.shape(t))
        t = float(t)
        if t >= self.mode:
            return _quad(f, t, math.inf)
        return 1.0 - _quad(f, -math.inf, t)

    def logsf(self, t):
        return np.log(self.sf(t))


def density1d_from_name(name, **kw):
    if name == "gaussian":
        return Gaussian1D(kw.get("loc", 0.0), kw.get("scale", 1.0))
    if name in ("ep", "exp-power"):
        return ExpPower1D(kw["p"])
    if name == "uniform":
        return Uniform1D(kw.get("a", 0.0), kw.get("b", 1.0))
    raise UnsupportedDensity(f"unknown 1-D density {name!r}")


# --------------------------------------------------------------------------
# extreme-value machinery on the line
# --------------------------------------------------------------------------

class MaximumInterval(NamedTuple):
    lo: float
    hi: float
    prob: float


def maximum_interval_constants(n, q):
    """``a = (log n)^{-q}`` and ``b = q log n``."""
    ln = math.log(n)
    return ln ** (-q), q * ln


def gnedenko_interval(density1d, n, q):
    """Interval ``[J^{-1}(1 - b/n), J^{-1}(1 - a/n)]`` for the sample maximum.

    ``prob`` is the exact probability ``(1 - a/n)^n - (1 - b/n)^n`` that the
    maximum of ``n`` draws falls inside; it is at least ``1 - a - e^{-b}``.
    """
    if n < 3:
        raise ParameterRegime(f"n must be >= 3, got {n}")
    if not q > 0:
        raise InvalidParameter(f"q must be positive, got {q}")
    a, b = maximum_interval_constants(n, q)
    if a >= 1 or b >= n:
        raise ParameterRegime(f"n={n} too small for q={q}: a={a:.4g}, b={b:.4g}")
    lo = float(density1d.isf(b / n))
    hi = float(density1d.isf(a / n))
    prob = math.exp(n * math.log1p(-a / n)) - math.exp(n * math.log1p(-b / n))
    return MaximumInterval(lo, hi, prob)


def relative_deviation_bound(n, q):
    """``(log b - log a) / (log n - log b - 1)``: width of the interval over its offset from the mean."""
    a, b = maximum_interval_constants(n, q)
    denom = math.log(n) - math.log(b) - 1.0
    if denom <= 0:
        raise ParameterRegime("log n - log b - 1 must be positive")
    return (math.log(b) - math.log(a)) / denom


def tail_bracket(p, t):
    """Bounds on ``int_t^inf exp(-s^p) ds`` valid for ``t >= 1``.

    Returns ``((2p-1)^{-1} t^{1-p} e^{-t^p}, p^{-1} t^{1-p} e^{-t^p})``.
    """
    if t < 1:
        raise OutOfDomain(f"bracket holds for t >= 1, got {t}")
    if p < 1:
        raise InvalidParameter(f"p must be >= 1, got {p}")
    core = t ** (1.0 - p) * math.exp(-t ** p)
    return core / (2.0 * p - 1.0), core / p


def u_convexity_report(density1d, grid):
    """Largest amount by which ``u = -log(1 - J)`` rises above its chords.

    Each interior grid point is compared with the chord through its two
    neighbours; a convex ``u`` gives a non-positive excess everywhere.
    """
    x = np.asarray(grid, float)
    u = np.asarray(density1d.u(x), float)
    left, mid, right = x[:-2], x[1:-1], x[2:]
    w = (right - mid) / (right - left)
    chord = w * u[:-2] + (1.0 - w) * u[2:]
    excess = u[1:-1] - chord
    return float(max(0.0, np.max(excess))) if len(excess) else 0.0


# --------------------------------------------------------------------------
# d-dimensional models
# --------------------------------------------------------------------------

class DensityND:
    classification = "general"
    dim: int

    @property
    def mode(self):
        return np.zeros(self.dim)

    @property
    def centroid(self):
        return np.zeros(self.dim)

    def pdf(self, x):
        return np.exp(self.logpdf(x))

    def g(self, x):
        return -self.logpdf(x)

    def spec(self):
        return {"class": self.classification, "dim": self.dim}

    def __repr__(self):
        return f"{type(self).__name__}({self.spec()})"


class Gaussian(DensityND):
    """Normal law with mean ``mean`` and covariance ``cov`` (identity by default)."""

    classification = "gaussian"

    def __init__(self, dim, mean=None, cov=None):
        self.dim = int(dim)
        self.mean = np.zeros(self.dim) if mean is None else np.asarray(mean, float)
        self.cov = np.eye(self.dim) if cov is None else np.asarray(cov, float)
        self._chol = np.linalg.cholesky(self.cov)
        self._prec = np.linalg.inv(self.cov)
        self._logc = -0.5 * self.dim * math.log(2 * math.pi) - np.log(np.diag(self._chol)).sum()

    @property
    def mode(self):
        return self.mean.copy()

    @property
    def centroid(self):
        return self.mean.copy()

    def logpdf(self, x):
        y = np.asarray(x, float) - self.mean
        return self._logc - 0.5 * np.einsum("...i,ij,...j->...", y, self._prec, y)

    def sample(self, rng, n):
        return self.mean + rng.standard_normal((n, self.dim)) @ self._chol.T

    def spec(self):
        out = {"class": "gaussian", "dim": self.dim}
        if np.any(self.mean != 0):
            out["mean"] = self.mean.tolist()
        if np.any(self.cov != np.eye(self.dim)):
            out["cov"] = self.cov.tolist()
        return out


class ProductDensity(DensityND):
    """Independent coordinates with the given one-dimensional laws."""

    classification = "product"

    def __init__(self, factors):
        self.factors = list(factors)
        self.dim = len(self.factors)

    @property
    def mode(self):
        return np.array([getattr(f, "mode", f.mean) for f in self.factors], float)

    @property
    def centroid(self):
        return np.array([f.mean for f in self.factors], float)

    def logpdf(self, x):
        x = np.asarray(x, float)
        return sum(f.logpdf(x[..., i]) for i, f in enumerate(self.factors))

    def sample(self, rng, n):
        return np.column_stack([f.sample(rng, n) for f in self.factors])

    def spec(self):
        return {"class": "product", "dim": self.dim,
                "factors": [_factor_spec(f) for f in self.factors]}


def _factor_spec(f):
    if isinstance(f, Gaussian1D):
        return {"name": "gaussian", "loc": f.mean, "scale": f.scale}
    if isinstance(f, ExpPower1D):
        return {"name": "ep", "p": f.p}
    if isinstance(f, Uniform1D):
        return {"name": "uniform", "a": f.lo, "b": f.hi}
    return {"name": f.name}


class SchechtmanZinn(ProductDensity):
    """Density ``c^d exp(-||x||_p^p)``: independent exponential-power coordinates.

    ``constant`` holds the numerically computed one-dimensional normaliser
    ``c`` (it equals ``p / (2 Gamma(1/p))``).
    """

    classification = "sz"

    def __init__(self, dim, p):
        factor = ExpPower1D(p)
        super().__init__([factor] * int(dim))
        self.p = float(p)
        self.constant = factor.constant

    @property
    def mode(self):
        return np.zeros(self.dim)

    def level_radius(self, delta):
        """``(log(c^d / delta))^{1/p}``, the ``l_p`` radius of ``{f >= delta}``."""
        return math.log(self.constant ** self.dim / delta) ** (1.0 / self.p)

    def spec(self):
        return {"class": "sz", "dim": self.dim, "p": self.p}


def sphere_area(k):
    """Surface measure of the unit ``k``-sphere ``S^k`` in ``R^{k+1}``."""
    return 2.0 * math.pi ** ((k + 1) / 2.0) / math.gamma((k + 1) / 2.0)


class RadialDensity(DensityND):
    """``f(x) = phi(|x|)`` for a non-increasing log-concave profile ``phi``.

    ``profile`` may be unnormalised; the constant is fixed by quadrature.
    """

    classification = "radial"

    def __init__(self, dim, profile: Callable[[np.ndarray], np.ndarray], log_profile=None, name="radial"):
        self.dim = int(dim)
        self.name = name
        self._raw = profile
        self._raw_log = log_profile
        mass = sphere_area(self.dim - 1) * _quad(lambda r: r ** (self.dim - 1) * float(profile(r)), 0.0, math.inf)
        self._logc = -math.log(mass)

    def phi(self, r):
        return np.exp(self.log_phi(r))

    def log_phi(self, r):
        r = np.asarray(r, float)
        if self._raw_log is not None:
            return self._raw_log(r) + self._logc
        with np.errstate(divide="ignore"):
            return np.log(self._raw(r)) + self._logc

    def logpdf(self, x):
        return self.log_phi(np.linalg.norm(np.asarray(x, float), axis=-1))

    def radius_density(self, r):
        return sphere_area(self.dim - 1) * np.asarray(r, float) ** (self.dim - 1) * self.phi(r)

    def sample(self, rng, n, table=4096):
        from .net import unit_vectors
        radii = _tabulated_inverse(self.radius_density, self._radius_range(), table)(rng.random(n))
        return radii[:, None] * unit_vectors(rng, n, self.dim)

    def _radius_range(self):
        r = 1.0
        while self.radius_density(r) > 1e-300 and r < 1e6:
            if float(self.log_phi(r) - self.log_phi(0.0)) < -745.0:
                break
            r *= 1.5
        return 0.0, r

    def spec(self):
        return {"class": "radial", "dim": self.dim, "profile": self.name}


def _tabulated_inverse(density, rng_range, size):
    lo, hi = rng_range
    grid = np.linspace(lo, hi, size * 16 + 1)
    pdf = density(grid)
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (pdf[1:] + pdf[:-1]) * np.diff(grid))])
    cdf /= cdf[-1]
    keep = np.concatenate([[True], np.diff(cdf) > 0])
    return lambda u: np.interp(u, cdf[keep], grid[keep])


def gaussian_radial(dim):
    """Standard normal law written in the radial class."""
    return RadialDensity(dim, lambda r: np.exp(-0.5 * np.asarray(r) ** 2),
                         log_profile=lambda r: -0.5 * np.asarray(r) ** 2, name="gaussian")


def gaussian_product(dim):
    return ProductDensity([Gaussian1D()] * dim)


class GeneralDensity(DensityND):
    """Arbitrary convex potential ``g`` in dimension <= 3.

    ``point`` must have finite ``g``; the mode is found by downhill search
    from it and the normaliser by cubature.
    """

    classification = "general"

    def __init__(self, dim, g: Callable, point=None, normalize=True, radius=None):
        if dim > 3:
            raise UnsupportedDensity("general densities are supported for dim <= 3")
        self.dim = int(dim)
        self._g = g
        x0 = np.zeros(self.dim) if point is None else np.asarray(point, float)
        if not math.isfinite(g(x0)):
            raise InvalidParameter("g must be finite at the starting point")
        res = optimize.minimize(lambda x: g(x), x0, method="Nelder-Mead",
                                options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 4000})
        self._mode = np.asarray(res.x, float)
        self.radius = radius or self._extent()
        self._logc = 0.0
        if normalize:
            mass = self._integrate(lambda x: math.exp(-self._g(x)))
            self._logc = -math.log(mass)
        self._centroid = None

    @property
    def mode(self):
        return self._mode.copy()

    @property
    def centroid(self):
        if self._centroid is None:
            self._centroid = np.array([
                self._integrate(lambda x, i=i: x[i] * math.exp(-self._g(x) + self._logc))
                for i in range(self.dim)])
        return self._centroid

    def _extent(self):
        g0 = self._g(self._mode)
        r = 1.0
        while True:
            vals = [self._g(self._mode + r * e) for e in np.vstack([np.eye(self.dim), -np.eye(self.dim)])]
            if min(vals) - g0 > 60.0 or r > 1e6:
                return r
            r *= 1.5

    def _integrate(self, fx):
        m, r = self._mode, self.radius
        if self.dim == 1:
            return _quad(lambda s: fx(np.array([s])), m[0] - r, m[0] + r)
        if self.dim == 2:
            return integrate.dblquad(lambda y, x: fx(np.array([x, y])), m[0] - r, m[0] + r,
                                     m[1] - r, m[1] + r, epsabs=1e-10, epsrel=1e-9)[0]
        return integrate.tplquad(lambda z, y, x: fx(np.array([x, y, z])), m[0] - r, m[0] + r,
                                 m[1] - r, m[1] + r, m[2] - r, m[2] + r, epsabs=1e-9, epsrel=1e-8)[0]

    def logpdf(self, x):
        x = np.asarray(x, float)
        if x.ndim == 1:
            return -self._g(x) + self._logc
        return np.array([-self._g(row) for row in x.reshape(-1, self.dim)]).reshape(x.shape[:-1]) + self._logc

    def spec(self):
        return {"class": "general", "dim": self.dim}


def density_from_spec(spec):
    """Build a model from the config form ``{class, dim, p?, ...}``."""
    cls = spec.get("class")
    dim = int(spec.get("dim", 2))
    if cls == "gaussian":
        return Gaussian(dim, spec.get("mean"), spec.get("cov"))
    if cls == "sz":
        if "p" not in spec:
            raise InvalidParameter("sz density needs p")
        return SchechtmanZinn(dim, float(spec["p"]))
    if cls == "radial":
        profile = spec.get("profile", "gaussian")
        if profile == "gaussian":
            return gaussian_radial(dim)
        if profile == "laplace":
            return RadialDensity(dim, lambda r: np.exp(-np.asarray(r)), lambda r: -np.asarray(r), "laplace")
        raise UnsupportedDensity(f"unknown radial profile {profile!r}")
    if cls == "product":
        factors = spec.get("factors") or [{"name": "gaussian"}] * dim
        return ProductDensity([density1d_from_name(f.pop("name"), **f) for f in map(dict, factors)])
    raise UnsupportedDensity(f"unsupported density class {cls!r}")


def is_log_concave(density, rng, trials=200, scale=3.0):
    """Spot-check ``f(l x + (1-l) y) >= f(x)^l f(y)^(1-l)`` on random segments."""
    worst = 0.0
    for _ in range(trials):
        x, y = scale * rng.standard_normal((2, density.dim))
        lam = rng.random()
        lhs = density.logpdf(lam * x + (1 - lam) * y)
        rhs = lam * density.logpdf(x) + (1 - lam) * density.logpdf(y)
        if np.isfinite(rhs):
            worst = max(worst, float(rhs - lhs))
    return worst


# --------------------------------------------------------------------------
# marginals
# --------------------------------------------------------------------------

@dataclass
class MarginalModel:
    """Law of ``<x, theta>`` under ``parent``.

    ``tail(t)`` is ``mu{<x, theta> >= t}`` and ``pdf(t)`` the hyperplane
    integral of the parent density over ``<x, theta> = t``.
    """

    parent: DensityND
    theta: np.ndarray
    backend: str
    _tail: Callable
    _pdf: Callable
    scale: float
    center: float
    _isf: Callable = None
    _ci: Callable = None

    def tail(self, t):
        return float(self._tail(float(t)))

    def pdf(self, t):
        return float(self._pdf(float(t)))

    def ci(self, t):
        """Half-width of the 99% interval on ``tail(t)`` (quadrature error for deterministic backends)."""
        return float(self._ci(float(t))) if self._ci else 1e-9

    def quantile(self, q):
        if not (0.0 < q < 1.0):
            raise InvalidParameter(f"q must lie in (0, 1), got {q!r}")
        if self._isf is not None:
            return float(self._isf(1.0 - q))
        return _invert_sf(self._tail, 1.0 - q, self.center, self.scale)


def _unit(theta, dim):
    theta = np.asarray(theta, float).reshape(dim)
    n = np.linalg.norm(theta)
    if not abs(n - 1.0) < 1e-9:
        raise InvalidParameter("theta must be a unit vector")
    return theta


_MARGINAL_CACHE: dict = {}


def marginal(density, theta, backend=None, context=None):
    """Marginal model of ``density`` along the unit vector ``theta``.

    ``backend`` forces ``"monte-carlo"`` (needs ``context``); otherwise the
    model's natural route is used.
    """
    theta = _unit(theta, density.dim)
    if backend not in BACKENDS:
        raise InvalidParameter(f"unknown backend {backend!r}; expected one of {BACKENDS}")
    if backend == "monte-carlo":
        if context is None:
            raise InvalidParameter("the Monte Carlo backend needs an evaluation context")
        return context.marginal(density, theta)
    key = (id(density), theta.tobytes(), backend)
    hit = _MARGINAL_CACHE.get(key)
    if hit is not None and hit.parent is density:
        return hit
    model = _build_marginal(density, theta)
    if len(_MARGINAL_CACHE) > 20000:
        _MARGINAL_CACHE.clear()
    _MARGINAL_CACHE[key] = model
    return model


def _build_marginal(density, theta):
    if isinstance(density, Gaussian):
        m = float(density.mean @ theta)
        s = math.sqrt(float(theta @ density.cov @ theta))
        law = Gaussian1D(m, s)
        return MarginalModel(density, theta, "closed-form", law.sf, law.pdf, s, m, law.isf)
    if isinstance(density, ProductDensity):
        return _product_marginal(density, theta)
    if isinstance(density, RadialDensity):
        return _radial_marginal(density, theta)
    if isinstance(density, GeneralDensity) or hasattr(density, "logpdf"):
        if density.dim > 3:
            raise UnsupportedDensity("general densities are supported for dim <= 3")
        return _general_marginal(density, theta)
    raise UnsupportedDensity(f"no tail backend for {density!r}")


def _scaled_factor(f, c):
    """sf and pdf of ``c X`` for a 1-D law ``X`` and ``c != 0``."""
    if c > 0:
        return (lambda s: f.sf(s / c)), (lambda s: f.pdf(s / c) / c)
    return (lambda s: f.cdf(s / c)), (lambda s: f.pdf(s / c) / -c)


def _product_marginal(density, theta):
    active = [(f, float(c)) for f, c in zip(density.factors, theta) if abs(c) > 1e-15]
    if len(active) == 1:
        f, c = active[0]
        sf, pdf = _scaled_factor(f, c)
        if c > 0:
            isf = lambda p: c * f.isf(p)
        else:
            isf = lambda p: c * f.isf(1.0 - p)
        return MarginalModel(density, theta, "closed-form", sf, pdf, abs(c) * f.scale, c * f.mean, isf)
    center = sum(c * f.mean for f, c in active)
    scale = math.sqrt(sum((c * f.scale) ** 2 for f, c in active))
    if len(active) == 2:
        (f1, c1), (f2, c2) = active
        sf2, pdf2 = _scaled_factor(f2, c2)
        lo, hi = f1.effective_range()
        kinks = list(f1.kinks)

        def tail(t):
            inner_kinks = [(t - k * c2) / c1 for k in f2.kinks]
            return _quad(lambda x: f1.pdf(x) * sf2(t - c1 * x), lo, hi, kinks + inner_kinks, epsabs=1e-14)

        def pdf(t):
            inner_kinks = [(t - k * c2) / c1 for k in f2.kinks]
            return _quad(lambda x: f1.pdf(x) * pdf2(t - c1 * x), lo, hi, kinks + inner_kinks, epsabs=1e-14)

        return MarginalModel(density, theta, "quadrature", tail, pdf, scale, center)
    return _grid_marginal(density, theta, active, center, scale)


def _grid_marginal(density, theta, active, center, scale):
    """Convolve the scaled coordinate laws on a common grid (all but the last),
    then integrate the last one in closed form against the grid density."""
    *head, (fl, cl) = active
    ranges = [(min(c * a, c * b), max(c * a, c * b)) for f, c in head for a, b in [f.effective_range(1e-16)]]
    span = sum(b - a for a, b in ranges)
    h = min(c_ * f.scale for f, c_ in ((f, abs(c)) for f, c in head)) / 400.0
    h = max(h, span / 2 ** 20)
    lo_total = sum(a for a, _ in ranges)
    dens = None
    for (f, c), (a, b) in zip(head, ranges):
        grid = np.arange(a, b + h, h)
        piece = np.nan_to_num(f.pdf(grid / c) / abs(c))
        piece /= piece.sum() * h
        dens = piece if dens is None else np.convolve(dens, piece) * h
    ygrid = lo_total + h * np.arange(len(dens))
    sfl, pdfl = _scaled_factor(fl, cl)

    def tail(t):
        return float(np.trapezoid(dens * sfl(t - ygrid), ygrid))

    def pdf(t):
        return float(np.trapezoid(dens * pdfl(t - ygrid), ygrid))

    return MarginalModel(density, theta, "grid-convolution", tail, pdf, scale, center,
                         _ci=lambda t: 1e-7)


def _uniform_direction_sf(a, dim):
    """``P(<U, e1> >= a)`` for ``U`` uniform on ``S^{dim-1}``."""
    if a >= 1:
        return 0.0
    if a <= -1:
        return 1.0
    if dim == 2:
        return math.acos(a) / math.pi
    half = 0.5 * special.betainc((dim - 1) / 2.0, 0.5, 1.0 - a * a)
    return half if a >= 0 else 1.0 - half


def _radial_marginal(density, theta):
    d = density.dim
    area = sphere_area(d - 1)
    rmax = density._radius_range()[1]

    def tail(t):
        if d == 1:
            return _quad(lambda s: float(density.phi(abs(s))), t, rmax) if t >= 0 else \
                1.0 - _quad(lambda s: float(density.phi(abs(s))), -rmax, t)
        if t < 0:
            return 1.0 - tail(-t)
        return _quad(lambda r: area * r ** (d - 1) * float(density.phi(r)) * _uniform_direction_sf(t / r, d),
                     t, rmax, epsabs=1e-15)

    def pdf(t):
        if d == 1:
            return float(density.phi(abs(t)))
        sigma = sphere_area(d - 2)
        return sigma * _quad(lambda r: r ** (d - 2) * float(density.phi(math.hypot(t, r))), 0.0, rmax,
                             epsabs=1e-15)

    std = math.sqrt(_quad(lambda r: r ** 2 * float(density.radius_density(r)), 0.0, rmax) / d)
    # direction independent: share results across theta
    return MarginalModel(density, theta, "radial-reduction", _memo(tail), _memo(pdf), std, 0.0)


def _memo(fn):
    cache = {}

    def wrapped(t):
        v = cache.get(t)
        if v is None:
            v = cache[t] = fn(t)
        return v
    return wrapped


def _general_marginal(density, theta):
    d = density.dim
    basis = _orthonormal_complement(theta)
    mode = density.mode
    r = getattr(density, "radius", None) or 30.0
    t0 = float(mode @ theta)
    centre = mode - t0 * theta

    def pdf(t):
        base = centre + t * theta
        if d == 1:
            return float(density.pdf(base))
        if d == 2:
            return _quad(lambda s: float(density.pdf(base + s * basis[0])), -r, r, epsabs=1e-13)
        return integrate.dblquad(lambda b, a: float(density.pdf(base + a * basis[0] + b * basis[1])),
                                 -r, r, -r, r, epsabs=1e-11, epsrel=1e-9)[0]

    def tail(t):
        if t >= t0:
            return _quad(pdf, t, t0 + r, epsabs=1e-12)
        return 1.0 - _quad(pdf, t0 - r, t, epsabs=1e-12)

    scale = r / 10.0
    return MarginalModel(density, theta, "cubature", _memo(tail), _memo(pdf), scale, t0)


def _orthonormal_complement(theta):
    d = len(theta)
    q, _ = np.linalg.qr(np.column_stack([theta, np.eye(d)]))
    return q[:, 1:d].T


class MonteCarloContext:
    """Caller-owned state for the Monte Carlo tail backend.

    Samples are drawn once per density from a stream derived from
    ``(seed, density spec, call counter)`` and shared by every direction.
    """

    def __init__(self, seed=0, samples=1_000_000):
        self.seed = int(seed)
        self.samples = int(samples)
        self.counter = 0
        self._cache = {}

    def points(self, density):
        key = id(density)
        if key not in self._cache:
            stream = np.random.default_rng([self.seed, _spec_hash(density), self.counter])
            self.counter += 1
            self._cache[key] = (density, density.sample(stream, self.samples))
        return self._cache[key][1]

    def marginal(self, density, theta):
        proj = np.sort(self.points(density) @ theta)
        n = len(proj)

        def tail(t):
            return 1.0 - np.searchsorted(proj, t, side="left") / n

        def ci(t):
            p = tail(t)
            return Z99 * math.sqrt(max(p * (1 - p), 1.0 / n) / n)

        def isf(p):
            return float(np.quantile(proj, 1.0 - p))

        def pdf(t):
            bw = 1.06 * proj.std() * n ** (-0.2)
            return float(np.mean(stats.norm.pdf((t - proj) / bw)) / bw)

        return MarginalModel(density, theta, "monte-carlo", tail, pdf, float(proj.std()),
                             float(proj.mean()), isf, ci)


def _spec_hash(density):
    blob = json.dumps(density.spec(), sort_keys=True, default=str).encode()
    return int.from_bytes(hashlib.sha256(blob).digest()[:8], "little")


def tail(density, theta, t, backend=None, context=None):
    """``mu{x : <x, theta> >= t}``."""
    return marginal(density, theta, backend, context).tail(t)


def quantile(density, theta, q, backend=None, context=None):
    """``t`` with ``tail(theta, t) = 1 - q``."""
    return marginal(density, theta, backend, context).quantile(q)


def radon(density, theta, t, backend=None, context=None):
    """Integral of the density over the hyperplane ``<x, theta> = t``."""
    return marginal(density, theta, backend, context).pdf(t)
