"""Command line front end for the experiment runner.

Subcommands group the experiment kinds: `spectra` (channel spectra),
`variance` (MPS / MERA / global-unitary gradient variances), `optimize`
(trainability demos), `checks` (Haar-moment MC checks), `norm-stats`
(unnormalized MPS norm statistics).  Each takes a JSON config via
--config plus seed/samples/out/workers overrides; subcommands with an
obvious default run without a config.  Exit codes follow the runner:
0 all gates passed, 1 a gate failed, 2 invalid configuration.
"""

import argparse
import json
import os
import sys

from .experiments import ExperimentConfig, run

SUBCOMMAND_KINDS = {
    "spectra": ("channel-spectra",),
    "variance": ("mps-variance", "mera-variance", "global-variance"),
    "optimize": ("optimize",),
    "checks": ("weingarten",),
    "norm-stats": ("norm-stats",),
}

_DEFAULT_CONFIGS = {
    "spectra": {
        "kind": "channel-spectra",
        "parameters": {"family": "binary1d", "flavor": "mera", "chi": 2,
                       "seed": 0},
    },
    "checks": {
        "kind": "weingarten",
        "parameters": {"n": [2, 3, 4], "samples": 20000, "seed": 0},
    },
    "norm-stats": {
        "kind": "norm-stats",
        "parameters": {"L": 8, "d": 2, "m": 2, "samples": 2000, "seed": 0},
    },
    "optimize": {
        "kind": "optimize",
        "parameters": {"ansatz": "mps", "L": 8, "m": 4, "method": "lbfgs",
                       "max_iters": 500, "seed": 0},
    },
}

_SAMPLED_KINDS = {"weingarten", "mps-variance", "mera-variance",
                  "global-variance", "norm-stats"}
_WORKER_KINDS = {"mps-variance", "mera-variance", "global-variance",
                 "norm-stats"}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="tnsp",
        description="Seeded tensor-network gradient experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in sorted(SUBCOMMAND_KINDS):
        p = sub.add_parser(name, help="run a %s experiment" % name)
        p.add_argument("--config", help="JSON experiment config file")
        p.add_argument("--seed", type=int, help="override the run seed")
        p.add_argument("--samples", type=int,
                       help="override the sample count")
        p.add_argument("--out", help="override the output directory")
        p.add_argument("--workers", type=int,
                       help="worker processes (default: TNSP_WORKERS)")
    return parser


def _load_config(args):
    if args.config is not None:
        with open(args.config) as fh:
            data = json.load(fh)
    else:
        if args.command not in _DEFAULT_CONFIGS:
            raise ValueError(
                "the %s subcommand needs --config to pick the experiment"
                % args.command)
        base = _DEFAULT_CONFIGS[args.command]
        data = {"kind": base["kind"],
                "parameters": dict(base["parameters"])}
    config = ExperimentConfig.from_dict(data)
    allowed = SUBCOMMAND_KINDS[args.command]
    if config.kind not in allowed:
        raise ValueError(
            "config kind %r does not belong to the %s subcommand (wants %s)"
            % (config.kind, args.command, " or ".join(allowed)))
    if args.seed is not None:
        config.parameters["seed"] = int(args.seed)
    if args.samples is not None and config.kind in _SAMPLED_KINDS:
        config.parameters["samples"] = int(args.samples)
    workers = args.workers
    if workers is None:
        env = os.environ.get("TNSP_WORKERS")
        if env is not None:
            workers = int(env)
    if workers is not None and config.kind in _WORKER_KINDS:
        config.parameters["workers"] = int(workers)
    if args.out is not None:
        config.output = args.out
    return config


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        config = _load_config(args)
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print("invalid experiment config: %s" % (exc,), file=sys.stderr)
        return 2
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
