"""Command-line entry point: ``floatpoly {net,body,distance,experiment}``.

Exit codes: 0 success, 2 configuration error, 3 runtime failure.
"""
from __future__ import annotations

import argparse
import json
import sys

from .body import SupportBody, ball, body_from_json, bm_upper_scaled, hausdorff_distance, log_hausdorff
from .density import density_from_spec
from .errors import ConfigError
from .floating import floating_polytope, level_set_body, radon_body
from .lab import EXPERIMENTS, ExperimentConfig, default_workers, error_kind, load_config, run
from .net import build_net, validate

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3


def _emit(text, out):
    if out:
        with open(out, "w") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _json_arg(text, name):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}", name) from None


def cmd_net(args):
    net = build_net(args.dim, args.eps, args.seed or 0)
    if args.check:
        report = validate(net.directions, net.eps)
        sys.stderr.write(json.dumps(report) + "\n")
    _emit(net.to_json(), args.out)


def cmd_body(args):
    net = build_net(args.dim, args.eps, args.seed or 0)
    if args.kind == "ball":
        body = ball(net, args.delta or 1.0)
    else:
        if args.delta is None:
            raise ConfigError("required for this body kind", "--delta")
        density = density_from_spec({**_json_arg(args.density, "--density"), "dim": args.dim})
        make = {"floating": floating_polytope, "level-set": level_set_body, "radon": radon_body}[args.kind]
        body = make(density, net, args.delta)
    _emit(body.to_json(), args.out)


def _load_body(path):
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(str(exc), path) from None
    try:
        _, dim, eps, seed = data["net_ref"].split(":")
        net = build_net(int(dim), float(eps), int(seed))
        return body_from_json(json.dumps(data), net)
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"not a body file: {exc}", path) from None


def cmd_distance(args):
    K, L = _load_body(args.first), _load_body(args.second)
    if args.metric == "hausdorff":
        out = {"metric": "hausdorff", "value": hausdorff_distance(_as_support(K), _as_support(L))}
    elif args.metric == "log-hausdorff":
        value, x = log_hausdorff(K, L)
        out = {"metric": "log-hausdorff", "value": value, "center": x.tolist()}
    else:
        value, x = bm_upper_scaled(K, L)
        out = {"metric": "bm-upper", "value": value, "center": x.tolist()}
    _emit(json.dumps(out), args.out)


def _as_support(body):
    return body if isinstance(body, SupportBody) else body.to_support()


def cmd_experiment(args):
    overrides = {"master_seed": args.seed, "output": args.out, "workers": args.workers, "dim": args.dim,
                 "trials": args.trials, "eps": args.eps}
    if args.n is not None:
        overrides["n_grid"] = args.n
    if args.config:
        cfg = load_config(args.config, overrides)
        if cfg.experiment != args.name:
            raise ConfigError(f"config names {cfg.experiment!r} but {args.name!r} was requested", "experiment")
    else:
        data = {"experiment": args.name, **{k: v for k, v in overrides.items() if v is not None}}
        cfg = ExperimentConfig.from_dict(data)
    if cfg.workers is None:
        cfg.workers = default_workers()
    result = run(cfg)
    if not cfg.output:
        sys.stdout.write(result.csv())


def _eps(text):
    return text if text == "auto" else float(text)


def build_parser():
    parser = argparse.ArgumentParser(prog="floatpoly", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("net", help="build an eps-net on the sphere and print it as JSON")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--check", action="store_true", help="print the validation report to stderr")
    p.add_argument("--out")
    p.set_defaults(func=cmd_net)

    p = sub.add_parser("body", help="build a body on a net and print it as JSON")
    p.add_argument("kind", choices=["floating", "level-set", "radon", "ball"])
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--eps", type=float, default=0.05)
    p.add_argument("--seed", type=int)
    p.add_argument("--density", default='{"class": "gaussian"}', help="density spec as JSON")
    p.add_argument("--delta", type=float, help="level (radius for 'ball')")
    p.add_argument("--out")
    p.set_defaults(func=cmd_body)

    p = sub.add_parser("distance", help="distance between two body JSON files")
    p.add_argument("first")
    p.add_argument("second")
    p.add_argument("--metric", choices=["log-hausdorff", "hausdorff", "bm"], default="log-hausdorff")
    p.add_argument("--out")
    p.set_defaults(func=cmd_distance)

    p = sub.add_parser("experiment", help="run an experiment sweep and write CSV")
    p.add_argument("name", choices=EXPERIMENTS)
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("--workers", type=int)
    p.add_argument("--dim", type=int)
    p.add_argument("--n", type=int, nargs="+", help="sample sizes (replaces n_grid)")
    p.add_argument("--trials", type=int)
    p.add_argument("--eps", type=_eps)
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        args.func(args)
    except ConfigError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - any other failure is a runtime failure
        sys.stderr.write(f"{error_kind(exc)}: {exc}\n")
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
