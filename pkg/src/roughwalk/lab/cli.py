"""Command line entry point: ``lab <kind> [options]``.

Exit status is 0 when every check passes, 1 on a statistical failure and 2
on a configuration or model error.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from ..hmw.model import ModelError, validate
from ..signatures import (discrete_signature, level_tensor_to_json, path_lift, read_path_csv,
                          signed_area)
from ..words import parse_word
from .config import DEFAULT_GRID, KINDS, ConfigError, ExperimentConfig, builtin_models, resolve_model
from .experiments import run

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2

# per-kind defaults for (n, k, replicas)
_DEFAULTS = {
    "anomaly": (2**14, 100_000, 1),
    "donsker": (2**14, 20_000, 2000),
    "nongeo": (2**14, 20_000, 2000),
    "occupation": (10_000, 20_000, 200),
    "compare-embeddings": (2**14, 100_000, 1),
    "holder": (2**14, 1, 50),
}


def _floats(text):
    try:
        return tuple(float(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text):
    try:
        return tuple(int(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _tolerance(text):
    name, sep, value = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected NAME=VALUE, got {text!r}")
    try:
        return name.strip(), float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"tolerance {name!r} needs a number") from None


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser():
    parser = _Parser(prog="lab", description="Seeded experiments on hidden Markov walks.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for kind in KINDS:
        p = sub.add_parser(kind, help=f"run the {kind} experiment")
        p.add_argument("--model", default="rotating-bernoulli",
                       help="model JSON file or shipped model name (see 'lab models')")
        p.add_argument("--n", type=int, help="path length N")
        p.add_argument("--k", type=int, help="number of excursions K")
        p.add_argument("--replicas", type=int, help="number of replicas R")
        p.add_argument("--seed", type=int, default=7, help="unsigned 64-bit seed")
        p.add_argument("--grid", type=_floats, default=DEFAULT_GRID, help="times t1,t2,... in [0,1]")
        p.add_argument("--out", help="output file (default: stdout)")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--exact-horizon", type=int, dest="exact_horizon",
                       help="use truncated path enumeration for the exact values")
        p.add_argument("--no-isotropize", action="store_false", dest="isotropize",
                       help="skip the isotropizing linear map")
        p.add_argument("--word", help="comma-separated state labels (occupation)")
        p.add_argument("--holder-ns", type=_ints, dest="holder_ns",
                       help="path lengths for the Hoelder statistic")
        p.add_argument("--workers", type=int, default=1, help="worker processes")
        p.add_argument("--tol", type=_tolerance, action="append", default=[],
                       help="tolerance override NAME=VALUE (z, cov, slope, scaling, identity, control)")
        p.set_defaults(kind=kind)

    p = sub.add_parser("validate", help="validate a model file")
    p.add_argument("model")
    sub.add_parser("models", help="list shipped models")
    p = sub.add_parser("signature", help="level-2 features of a path CSV")
    p.add_argument("path", help="CSV with one point per row (a header row is allowed)")
    p.add_argument("--level", type=int, default=2)
    p.add_argument("--kind", choices=("iterated", "geometric", "area"), default="iterated")
    return parser


def config_from_args(args) -> ExperimentConfig:
    n, k, r = _DEFAULTS[args.kind]
    extra = {}
    if args.holder_ns is not None:
        extra["holder_ns"] = args.holder_ns
    word = None
    if args.word is not None:
        word = parse_word(args.word, resolve_model(args.model).chain.states)
    return ExperimentConfig(
        kind=args.kind, model=args.model,
        n=args.n if args.n is not None else n,
        k=args.k if args.k is not None else k,
        replicas=args.replicas if args.replicas is not None else r,
        seed=args.seed, grid=args.grid, out=args.out, format=args.format,
        exact_horizon=args.exact_horizon, isotropize=args.isotropize, word=word,
        workers=args.workers, tolerances=dict(args.tol), **extra)


def _signature(args):
    path = read_path_csv(args.path)
    if args.kind == "iterated":
        levels = discrete_signature(np.diff(path.points, axis=0), args.level)
        out = [json.loads(level_tensor_to_json(t)) for t in levels]
    elif args.kind == "geometric":
        end = path_lift(path).endpoint
        out = json.loads(end.to_json())
    else:
        out = json.loads(level_tensor_to_json(signed_area(path)))
    print(json.dumps(out))
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "models":
            print("\n".join(builtin_models()))
            return EXIT_OK
        if args.command == "validate":
            report = validate(resolve_model(args.model))
            print(json.dumps(report.__dict__))
            return EXIT_OK
        if args.command == "signature":
            return _signature(args)
        cfg = config_from_args(args)
        report = run(cfg)
    except (ConfigError, ModelError, ValueError, OSError) as exc:
        print(f"lab: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for note in report.notices:
        print(f"lab: notice: {note}", file=sys.stderr)
    if cfg.out:
        report.write(cfg.out, cfg.format)
    else:
        sys.stdout.write(report.to_json() if cfg.format == "json" else report.to_csv())
    print(report.summary(), file=sys.stderr)
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
