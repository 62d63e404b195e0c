"""Seeded, parallel experiment sweeps with CSV output.

Every trial draws from its own stream derived from ``(master_seed, key, trial)``
so results do not depend on scheduling; rows are collected in task order and
written by a single aggregator.  A failing trial becomes an error row.
"""
from __future__ import annotations

import csv
import functools
import io
import json
import math
import os
import re
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .body import hausdorff_distance, log_hausdorff, bm_upper_scaled, diameter
from .density import density1d_from_name, density_from_spec, gnedenko_interval, marginal
from .errors import ConfigError, DegenerateHull, FloatPolyError
from .floating import floating_polytope, level_set_body, radon_body, radon_floating_roots, radon_gap_constant, zeta
from .net import build_net, angular_count
from .sampler import hull_ball_hausdorff_2d, random_polytope, sample, vertex_count_2d
from .universal import (
    KappaMap, UniversalDensity, bm_density_bound, bm_density_check, family_from_spec,
)

EXPERIMENTS = ("thm1", "thm2", "thm3", "lemma2", "lower-bounds", "universal", "zeta")
COLUMNS = ("experiment", "row", "dim", "p", "n", "delta", "trial", "seed", "eps", "d_log", "d_haus",
           "f0", "scaled_rate", "metric", "value", "runtime_ms", "budget_warning", "error")
WORKERS_ENV = "FLOATPOLY_WORKERS"
MAX_NET = 100_000
UNIVERSAL_EPS = 0.066  # 48 directions: contains the normals of squares and equilateral triangles
THM3_EPS = 0.05


@dataclass
class ExperimentConfig:
    experiment: str
    density: dict = field(default_factory=lambda: {"class": "gaussian"})
    dim: int = 2
    p: float | None = None
    n_grid: list = field(default_factory=list)
    delta_grid: list = field(default_factory=list)
    epsilon_grid: list = field(default_factory=list)
    trials: int = 1
    q: float = 1.0
    eps: object = "auto"
    master_seed: int = 0
    output: str | None = None
    family: list = field(default_factory=lambda: ["square", "disk", "triangle"])
    samples: int = 100_000
    workers: int | None = None
    timing: bool = False

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object", "<root>")
        known = set(cls.__dataclass_fields__)
        for key in data:
            if key not in known:
                raise ConfigError("unknown field", key)
        if "experiment" not in data:
            raise ConfigError("required", "experiment")
        cfg = cls(**data)
        cfg.validate()
        return cfg

    def to_dict(self):
        return asdict(self)

    def validate(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"must be one of {', '.join(EXPERIMENTS)}", "experiment")
        _require(isinstance(self.dim, int) and 1 <= self.dim <= 3, "dim", "must be an integer in 1..3")
        limit = 100_000 if self.experiment == "lemma2" else 1000
        _require(isinstance(self.trials, int) and 1 <= self.trials <= limit, "trials",
                 f"must be an integer in 1..{limit}")
        _require(isinstance(self.master_seed, int) and self.master_seed >= 0, "master_seed",
                 "must be a non-negative integer")
        _require(isinstance(self.q, (int, float)) and self.q > 0, "q", "must be positive")
        if self.eps != "auto":
            _require(isinstance(self.eps, (int, float)) and 0 < self.eps < 1, "eps", "must be 'auto' or in (0, 1)")
        if self.workers is not None:
            _require(isinstance(self.workers, int) and self.workers >= 1, "workers", "must be >= 1")
        _require(isinstance(self.density, dict) and "class" in self.density, "density.class", "required")
        if self.experiment in ("thm1", "thm2", "lemma2", "lower-bounds", "universal"):
            _check_grid(self.n_grid, "n_grid", lambda v: isinstance(v, int) and 1 <= v <= 10 ** 6,
                        "entries must be integers in 1..1e6")
        if self.experiment == "thm3":
            _check_grid(self.delta_grid, "delta_grid", lambda v: isinstance(v, (int, float)) and 0 < v < math.exp(-1),
                        "entries must lie in (0, 1/e)", increasing=False)
        if self.experiment == "zeta":
            _check_grid(self.epsilon_grid, "epsilon_grid", lambda v: isinstance(v, (int, float)) and v > 0,
                        "entries must be positive", increasing=False)
            _require(isinstance(self.samples, int) and self.samples >= 1, "samples", "must be >= 1")
        if self.p is not None:
            _require(isinstance(self.p, (int, float)) and self.p >= 1, "p", "must be >= 1")
        if self.experiment == "lower-bounds":
            _require(self.dim == 2, "dim", "lower-bound experiment is planar")
        if self.experiment == "universal":
            _require(isinstance(self.family, list) and self.family, "family", "must be a non-empty list")
        try:
            if self.experiment == "lemma2":
                _density_1d(self.density)
            elif self.experiment != "universal":
                density_from_spec({**self.density, "dim": self.dim})
        except (FloatPolyError, KeyError, TypeError, ValueError) as exc:
            raise ConfigError(str(exc), "density") from None

    @property
    def tail_exponent(self):
        """``p`` of the p-log-concave class: explicit, else from the density."""
        if self.p is not None:
            return float(self.p)
        if self.density.get("class") == "sz":
            return float(self.density["p"])
        return 2.0 if self.density.get("class") in ("gaussian", "radial") else 1.0


def _require(ok, name, message):
    if not ok:
        raise ConfigError(message, name)


def _check_grid(grid, name, valid, message, increasing=True):
    _require(isinstance(grid, list) and len(grid) > 0, name, "must be a non-empty list")
    for i, v in enumerate(grid):
        _require(valid(v), f"{name}[{i}]", message)
    pairs = zip(grid[:-1], grid[1:])
    ordered = all(a < b for a, b in pairs) if increasing else all(a > b for a, b in pairs)
    _require(ordered, name, "must be strictly " + ("increasing" if increasing else "decreasing"))


def _density_1d(spec):
    name = spec["class"]
    kw = {k: v for k, v in spec.items() if k not in ("class", "dim")}
    return density1d_from_name(name, **kw)


def load_config(path, overrides=None):
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(str(exc), "--config") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}", "--config") from None
    if isinstance(data, dict):
        data.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return ExperimentConfig.from_dict(data)


# --------------------------------------------------------------------------
# helpers shared by the sweeps
# --------------------------------------------------------------------------

def resolve_eps(eps, n, dim):
    """``1 / log n`` for ``'auto'``, loosened until the net has at most ``MAX_NET`` directions."""
    if eps != "auto":
        return float(eps)
    e = min(0.9, 1.0 / math.log(max(n, 3)))
    while _net_size_estimate(dim, e) > MAX_NET:
        e *= 1.1
    return e


def _net_size_estimate(dim, eps):
    if dim == 2:
        return angular_count(eps)
    if dim == 1:
        return 2
    return 9.0 / eps ** (dim - 1)


def trial_seed(master, key, trial):
    """63-bit seed of the stream for one trial."""
    state = np.random.SeedSequence([int(master), int(key), int(trial)]).generate_state(2, np.uint32)
    return int((int(state[0]) << 31) ^ int(state[1]))


def error_kind(exc):
    return re.sub(r"(?<!^)(?=[A-Z])", "-", type(exc).__name__).lower()


def _row(cfg, **kw):
    row = dict.fromkeys(COLUMNS)
    row.update(experiment=cfg["experiment"], dim=cfg["dim"], p=cfg.get("p"), budget_warning=0)
    row.update(kw)
    return row


@functools.lru_cache(maxsize=32)
def _floating_cached(spec_json, dim, n, eps):
    density = density_from_spec({**json.loads(spec_json), "dim": dim})
    net = build_net(dim, eps)
    return density, net, floating_polytope(density, net, 1.0 / n)


def _median(values):
    v = [x for x in values if x is not None and math.isfinite(x)]
    return float(np.median(v)) if v else math.nan


# --------------------------------------------------------------------------
# per-task workers (module level so they pickle)
# --------------------------------------------------------------------------

def _hull_trial(cfg, n, trial):
    start = time.perf_counter()
    dim = cfg["dim"]
    seed = trial_seed(cfg["master_seed"], n, trial)
    eps = resolve_eps(cfg["eps"], n, dim)
    base = dict(n=n, trial=trial, seed=seed, eps=eps, row="trial")
    try:
        if n < dim + 2:
            raise DegenerateHull(f"n={n} is below dim + 2; no full-dimensional hull is guaranteed")
        density, net, F = _floating_cached(json.dumps(cfg["density"], sort_keys=True), dim, n, eps)
        S = sample(density, n, seed)
        P = random_polytope(S, net)
        d_haus = hausdorff_distance(P, F)
        f0 = vertex_count_2d(S) if dim == 2 else None
        lln = math.log(math.log(n))
        if cfg["experiment"] == "thm1":
            d_log = log_hausdorff(P, F)[0]
            rate = (d_log - 1.0) * math.log(n) / lln
        else:
            d_log = None
            rate = d_haus * math.log(n) ** (1.0 - 1.0 / cfg["p"]) / lln
        row = _row(cfg, **base, d_log=d_log, d_haus=d_haus, f0=f0, scaled_rate=rate)
    except Exception as exc:  # noqa: BLE001 - every failure becomes an error row
        row = _row(cfg, **{**base, "row": "error"}, error=f"{error_kind(exc)}: {exc}")
    if cfg["timing"]:
        row["runtime_ms"] = 1000.0 * (time.perf_counter() - start)
    return [row]


def _lemma2_task(cfg, n):
    dist = _density_1d(cfg["density"])
    try:
        interval = gnedenko_interval(dist, n, cfg["q"])
    except FloatPolyError as exc:
        return [_row(cfg, row="error", n=n, error=f"{error_kind(exc)}: {exc}")]
    hits = 0
    T = cfg["trials"]
    for trial in range(T):
        rng = np.random.default_rng(trial_seed(cfg["master_seed"], n, trial))
        m = float(np.max(dist.sample(rng, n)))
        hits += interval.lo <= m <= interval.hi
    freq = hits / T
    se = math.sqrt(interval.prob * (1 - interval.prob) / T)
    z = (freq - interval.prob) / se if se > 0 else 0.0
    out = []
    for metric, value in (("exact", interval.prob), ("frequency", freq), ("z", z),
                          ("lo", interval.lo), ("hi", interval.hi)):
        out.append(_row(cfg, row="summary", n=n, trial=T, metric=metric, value=value))
    return out


def _thm3_task(cfg, index, delta):
    dim = cfg["dim"]
    eps = THM3_EPS if cfg["eps"] == "auto" else float(cfg["eps"])
    density = density_from_spec({**cfg["density"], "dim": dim})
    net = build_net(dim, eps)
    base = dict(delta=delta, eps=eps, row="trial", trial=0)
    try:
        F = floating_polytope(density, net, delta)
        D = level_set_body(density, net, delta)
        R = radon_body(density, net, delta)
        d_fd = log_hausdorff(F, D)[0]
        d_fr = log_hausdorff(F, R)[0]
    except Exception as exc:  # noqa: BLE001
        return [_row(cfg, **{**base, "row": "error"}, error=f"{error_kind(exc)}: {exc}")]
    rows = [_row(cfg, **base, d_log=d_fd, metric="d_FD", value=d_fd),
            _row(cfg, **base, d_log=d_fr, metric="d_FR", value=d_fr)]
    if cfg["density"]["class"] == "sz":
        p = float(cfg["density"]["p"])
        radius = math.log(density.constant ** dim / delta) ** (1.0 / p)
        expected = radius / np.sum(np.abs(net.directions) ** p, axis=1) ** (1.0 / p)
        rows.append(_row(cfg, **base, metric="level_radius_error", value=float(np.max(np.abs(D.rho - expected)))))
    if cfg["density"]["class"] in ("radial", "gaussian"):
        theta = np.eye(dim)[0]
        s, t = radon_floating_roots(density, theta, delta)
        rows.append(_row(cfg, **base, metric="root_gap", value=abs(s - t)))
        rows.append(_row(cfg, **base, metric="gap_constant", value=radon_gap_constant(density, theta, 1.0)))
    return rows


def _lower_bound_trial(cfg, n, trial):
    seed = trial_seed(cfg["master_seed"], n, trial)
    base = dict(n=n, trial=trial, seed=seed, row="trial")
    try:
        density = density_from_spec({**cfg["density"], "dim": 2})
        radius = marginal(density, np.array([1.0, 0.0])).quantile(1.0 - 1.0 / n)
        S = sample(density, n, seed)
        f0 = vertex_count_2d(S)
        d_h = hull_ball_hausdorff_2d(S, radius)
        rate = d_h * math.log(n) ** (0.5 + cfg["q"])
        return [_row(cfg, **base, d_haus=d_h, f0=f0, scaled_rate=rate,
                     metric="f0_scaled", value=f0 / math.sqrt(math.log(n)))]
    except Exception as exc:  # noqa: BLE001
        return [_row(cfg, **{**base, "row": "error"}, error=f"{error_kind(exc)}: {exc}")]


@functools.lru_cache(maxsize=4)
def _universal_cached(family_json, eps):
    net = build_net(2, eps)
    kmap = KappaMap(family_from_spec(json.loads(family_json), net))
    return kmap, UniversalDensity(kmap)


def _universal_trial(cfg, n, trial):
    seed = trial_seed(cfg["master_seed"], n, trial)
    eps = UNIVERSAL_EPS if cfg["eps"] == "auto" else float(cfg["eps"])
    base = dict(n=n, trial=trial, seed=seed, eps=eps, row="trial")
    try:
        kmap, density = _universal_cached(json.dumps(cfg["family"]), eps)
        P = random_polytope(sample(density, n, seed), kmap.net)
        rows = []
        for name, K in zip(kmap.family.names, kmap.family.bodies):
            rows.append(_row(cfg, **base, metric=f"bm_{name}", value=bm_upper_scaled(P, K)[0]))
        return rows
    except Exception as exc:  # noqa: BLE001
        return [_row(cfg, **{**base, "row": "error"}, error=f"{error_kind(exc)}: {exc}")]


def _zeta_task(cfg, index, epsilon):
    density = density_from_spec({**cfg["density"], "dim": cfg["dim"]})
    seed = trial_seed(cfg["master_seed"], index, 0)
    est, ci = zeta(density, epsilon, cfg["samples"], seed)
    scale = epsilon * math.log(1.0 / epsilon) ** cfg["dim"] if epsilon < 1 else math.nan
    base = dict(delta=epsilon, seed=seed, row="trial", trial=0)
    return [_row(cfg, **base, metric="zeta", value=est),
            _row(cfg, **base, metric="ci", value=ci),
            _row(cfg, **base, metric="zeta_scaled", value=est / scale if scale > 0 else math.nan)]


# --------------------------------------------------------------------------
# sweeps
# --------------------------------------------------------------------------

@dataclass
class ExperimentResult:
    config: ExperimentConfig
    rows: list

    def select(self, row=None, metric=None, n=None):
        return [r for r in self.rows
                if (row is None or r["row"] == row) and (metric is None or r["metric"] == metric)
                and (n is None or r["n"] == n)]

    def value(self, metric, n=None, delta=None):
        for r in self.rows:
            if r["metric"] == metric and (n is None or r["n"] == n) and (delta is None or r["delta"] == delta):
                return r["value"]
        raise KeyError(metric)

    def csv(self):
        return to_csv(self.rows)


def _format(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def to_csv(rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS)
    for r in rows:
        writer.writerow([_format(r.get(c)) for c in COLUMNS])
    return buf.getvalue()


def default_workers():
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def _execute(tasks, workers):
    """Run ``(fn, args)`` tasks, returning their row lists in task order."""
    if workers <= 1 or len(tasks) <= 1:
        return [fn(*args) for fn, args in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(fn, *args) for fn, args in tasks]
        return [f.result() for f in futures]


def _plain(cfg):
    d = cfg.to_dict()
    d["p"] = cfg.tail_exponent if cfg.experiment in ("thm1", "thm2") else cfg.p
    if cfg.experiment == "lemma2":
        d["dim"] = 1  # maxima of a one-dimensional law
    return d


def _finish(cfg, rows):
    result = ExperimentResult(cfg, rows)
    if cfg.output:
        with open(cfg.output, "w", newline="") as fh:
            fh.write(result.csv())
    return result


def _hull_summary(cfg, plain, trial_rows):
    key = "d_log" if cfg.experiment == "thm1" else "d_haus"
    out = []
    medians = {}
    for n in cfg.n_grid:
        rows = [r for r in trial_rows if r["n"] == n and r["row"] == "trial"]
        if not rows:
            continue
        eps = rows[0]["eps"]
        med = _median([r[key] for r in rows])
        rate = _median([r["scaled_rate"] for r in rows])
        medians[n] = (med, rate)
        net_slack = 1.0 / (1.0 - eps) - 1.0
        if cfg.experiment == "thm1":
            warn = int(net_slack > 0.1 * (med - 1.0))
        else:
            _, _, F = _floating_cached(json.dumps(plain["density"], sort_keys=True), cfg.dim, n, eps)
            warn = int(net_slack * diameter(F) / 2 > 0.1 * med)
        common = dict(row="summary", n=n, eps=eps, trial=len(rows), budget_warning=warn)
        out.append(_row(plain, **common, metric=f"median_{key}", value=med, scaled_rate=rate, **{key: med}))
        out.append(_row(plain, **common, metric="median_scaled_rate", value=rate))
        f0 = [r["f0"] for r in rows if r["f0"] is not None]
        if f0:
            out.append(_row(plain, **common, metric="mean_f0", value=float(np.mean(f0))))
        if cfg.experiment == "thm2" and cfg.tail_exponent == 2.0:
            _, _, F = _floating_cached(json.dumps(plain["density"], sort_keys=True), cfg.dim, n, eps)
            diam = diameter(F)
            out.append(_row(plain, **common, metric="diam_F", value=diam))
            out.append(_row(plain, **common, metric="diam_F_scaled", value=diam / math.sqrt(math.log(n))))
    if medians:
        fitted = max(rate for _, rate in medians.values())
        out.append(_row(plain, row="summary", metric="fitted_c", value=fitted))
        vals = [medians[n][0] for n in cfg.n_grid if n in medians]
        out.append(_row(plain, row="summary", metric="decreasing", value=float(all(a > b for a, b in zip(vals, vals[1:])))))
        rates = [rate for _, rate in medians.values()]
        out.append(_row(plain, row="summary", metric="rate_spread",
                        value=max(rates) / min(rates) if min(rates) > 0 else math.inf))
        for n in medians:
            rows = [r for r in trial_rows if r["n"] == n and r["row"] == "trial"]
            exceed = float(np.mean([r["scaled_rate"] > fitted for r in rows]))
            out.append(_row(plain, row="summary", n=n, metric="exceedance", value=exceed))
    return out


def run_hull(cfg):
    plain = _plain(cfg)
    tasks = [(_hull_trial, (plain, n, t)) for n in cfg.n_grid for t in range(cfg.trials)]
    rows = [r for chunk in _execute(tasks, cfg.workers or default_workers()) for r in chunk]
    return _finish(cfg, rows + _hull_summary(cfg, plain, rows))


def run_thm1(cfg):
    """Sample hulls against floating polytopes in the logarithmic Hausdorff distance."""
    return run_hull(cfg)


def run_thm2(cfg):
    """Sample hulls against floating polytopes in the Hausdorff distance."""
    return run_hull(cfg)


def run_lemma2(cfg):
    plain = _plain(cfg)
    tasks = [(_lemma2_task, (plain, n)) for n in cfg.n_grid]
    rows = [r for chunk in _execute(tasks, cfg.workers or default_workers()) for r in chunk]
    return _finish(cfg, rows)


def run_thm3(cfg):
    plain = _plain(cfg)
    tasks = [(_thm3_task, (plain, i, d)) for i, d in enumerate(cfg.delta_grid)]
    rows = [r for chunk in _execute(tasks, cfg.workers or default_workers()) for r in chunk]
    for metric in ("d_FD", "d_FR"):
        vals = [r["value"] for r in rows if r["metric"] == metric]
        ups = sum(b > a for a, b in zip(vals, vals[1:]))
        rows.append(_row(plain, row="summary", metric=f"{metric}_increases", value=float(ups)))
        if vals:
            rows.append(_row(plain, row="summary", metric=f"{metric}_final", value=vals[-1]))
    return _finish(cfg, rows)


def run_lower_bounds(cfg):
    plain = _plain(cfg)
    tasks = [(_lower_bound_trial, (plain, n, t)) for n in cfg.n_grid for t in range(cfg.trials)]
    rows = [r for chunk in _execute(tasks, cfg.workers or default_workers()) for r in chunk]
    means = {}
    for n in cfg.n_grid:
        trial = [r for r in rows if r["n"] == n and r["row"] == "trial"]
        if not trial:
            continue
        f0 = float(np.mean([r["f0"] for r in trial]))
        scaled = _median([r["scaled_rate"] for r in trial])
        means[n] = f0
        common = dict(row="summary", n=n, trial=len(trial))
        rows.append(_row(plain, **common, metric="mean_f0", value=f0, f0=f0))
        rows.append(_row(plain, **common, metric="median_scaled_d_haus", value=scaled, scaled_rate=scaled))
    scaled = [r["value"] for r in rows if r["metric"] == "median_scaled_d_haus"]
    if scaled:
        rows.append(_row(plain, row="summary", metric="min_scaled_d_haus", value=min(scaled)))
    ns = [n for n in cfg.n_grid if n in means]
    if len(ns) >= 2:
        lo, hi = ns[0], ns[-1]
        observed = means[hi] / means[lo]
        predicted = math.sqrt(math.log(hi) / math.log(lo))
        rows.append(_row(plain, row="summary", metric="f0_ratio", value=observed))
        rows.append(_row(plain, row="summary", metric="f0_ratio_predicted", value=predicted))
    return _finish(cfg, rows)


def run_universal(cfg):
    plain = _plain(cfg)
    tasks = [(_universal_trial, (plain, n, t)) for n in cfg.n_grid for t in range(cfg.trials)]
    rows = [r for chunk in _execute(tasks, cfg.workers or default_workers()) for r in chunk]
    eps = UNIVERSAL_EPS if cfg.eps == "auto" else float(cfg.eps)
    kmap, _ = _universal_cached(json.dumps(cfg.family), eps)
    for j in range(1, kmap.n_max + 1):
        rows.append(_row(plain, row="summary", n=j, metric="bm_density_check", value=bm_density_check(kmap, j)))
        rows.append(_row(plain, row="summary", n=j, metric="bm_density_bound", value=bm_density_bound(j, 2)))
    return _finish(cfg, rows)


def run_zeta(cfg):
    plain = _plain(cfg)
    tasks = [(_zeta_task, (plain, i, e)) for i, e in enumerate(cfg.epsilon_grid)]
    rows = [r for chunk in _execute(tasks, cfg.workers or default_workers()) for r in chunk]
    return _finish(cfg, rows)


RUNNERS = {
    "thm1": run_thm1,
    "thm2": run_thm2,
    "thm3": run_thm3,
    "lemma2": run_lemma2,
    "lower-bounds": run_lower_bounds,
    "universal": run_universal,
    "zeta": run_zeta,
}


def run(cfg):
    if isinstance(cfg, dict):
        cfg = ExperimentConfig.from_dict(cfg)
    return RUNNERS[cfg.experiment](cfg)
