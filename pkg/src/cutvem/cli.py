"""Command-line interface.

    cutvem <agglomerate|ensemble|refinement|convergence|quality>
           --config FILE [--seed S] [--out DIR] [--n N] [--sigma-eps V]
           [--beta V] [--iters K] [--method fem|vem] [--agg on|off]
           [--levels L] [--jobs J] ...

Flags override values from the config file. See cutvem.config for the
config-file grammar (including the level-set stack language).
"""

import argparse
import sys

from .config import ExperimentConfig, apply_pair, load_config
from .errors import CutVemError
from .experiments import (cmd_agglomerate, cmd_convergence, cmd_ensemble,
                          cmd_quality, cmd_refinement)

_COMMANDS = {
    "agglomerate": cmd_agglomerate,
    "ensemble": cmd_ensemble,
    "refinement": cmd_refinement,
    "convergence": cmd_convergence,
    "quality": cmd_quality,
}

# CLI flag -> config key (flags mirror the config grammar)
_FLAG_KEYS = [
    ("--seed", "seed"), ("--out", "out"), ("--n", "n"),
    ("--sigma-eps", "sigma_eps"), ("--beta", "beta"), ("--iters", "num_iter"),
    ("--method", "method"), ("--agg", "agg"), ("--levels", "levels"),
    ("--base", "base"), ("--jobs", "jobs"), ("--problem", "problem"),
    ("--ratio", "ratio"), ("--sequence", "sequence"),
    ("--background", "background"), ("--mesh", "mesh"),
    ("--levelset", "levelset"), ("--grid", "grid"),
]


def build_parser():
    parser = argparse.ArgumentParser(
        prog="cutvem",
        description="First-order VEM on polygonal meshes with "
                    "stability-ratio-driven agglomeration")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", default=None, help="key = value file")
        for flag, key in _FLAG_KEYS:
            if key == "levelset":
                p.add_argument(flag, action="append", default=None,
                               metavar="SPEC")
            else:
                p.add_argument(flag, default=None, metavar=key.upper())
    return parser


def config_from_args(args):
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    for flag, key in _FLAG_KEYS:
        value = getattr(args, flag.lstrip("-").replace("-", "_"), None)
        if value is None:
            continue
        if key == "levelset":
            for spec in value:
                apply_pair(cfg, "levelset", spec)
        else:
            apply_pair(cfg, key, value)
    return cfg


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        return _COMMANDS[args.command](cfg)
    except CutVemError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
