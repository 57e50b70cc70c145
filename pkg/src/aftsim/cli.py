"""Command-line interface for running and verifying the built-in scenarios.

Exit codes: 0 on success (all verify rules pass), 1 when a verify rule
fails, 2 on usage or configuration errors (including missing artifacts).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .scenarios import (
    REGISTRY,
    ArtifactsMissing,
    run_config_file,
    run_scenario,
    verify_scenario,
)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="aftsim",
        description=(
            "Simulate survival cohorts with frailty, heterogeneous treatment "
            "effects and confounding; compare estimated acceleration curves "
            "and hazard ratios against analytic ground truth."
        ),
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    run_p = sub.add_parser(
        "run", help="run a scenario (or a JSON config file) and write artifacts"
    )
    run_p.add_argument(
        "scenario", help="registered scenario name, or path to a JSON config file"
    )
    run_p.add_argument("--n-obs", type=int, default=None, help="cohort size override")
    run_p.add_argument(
        "--n-sim", type=int, default=None, help="replication count override"
    )
    run_p.add_argument("--seed", type=int, default=None, help="root seed override")
    run_p.add_argument("--out", default="artifacts", help="artifact root directory")
    run_p.add_argument(
        "--threads",
        type=int,
        default=1,
        help="worker processes for cell-level parallelism (results are "
        "identical to a serial run)",
    )

    verify_p = sub.add_parser(
        "verify", help="grade a scenario's artifacts against its verify rules"
    )
    verify_p.add_argument("scenario", help="registered scenario name, or 'all'")
    verify_p.add_argument("--out", default="artifacts", help="artifact root directory")

    sub.add_parser("list", help="list registered scenarios")

    describe_p = sub.add_parser(
        "describe", help="show a scenario's description and default inputs"
    )
    describe_p.add_argument("scenario")
    return parser


def _cmd_list():
    width = max(len(name) for name in REGISTRY)
    for name, scenario in REGISTRY.items():
        print(f"{name:<{width}}  {scenario.description}")
    return 0


def _cmd_describe(name):
    if name not in REGISTRY:
        print(f"unknown scenario {name!r}", file=sys.stderr)
        return 2
    scenario = REGISTRY[name]
    print(f"name:        {scenario.name}")
    print(f"description: {scenario.description}")
    print(f"n_obs:       {scenario.n_obs}")
    print(f"n_sim:       {scenario.n_sim}")
    print(f"seed:        {scenario.seed}")
    print("artifacts:   estimates.csv, oracle.csv, summary.csv, manifest.json")
    return 0


def _cmd_run(args):
    target = args.scenario
    try:
        if target in REGISTRY:
            out_dir = run_scenario(
                target,
                args.out,
                n_obs=args.n_obs,
                n_sim=args.n_sim,
                seed=args.seed,
                workers=args.threads,
            )
        else:
            path = Path(target)
            if not path.exists():
                print(
                    f"unknown scenario {target!r} and no such config file; "
                    f"registered: {', '.join(REGISTRY)}",
                    file=sys.stderr,
                )
                return 2
            out_dir = run_config_file(
                path,
                args.out,
                n_obs=args.n_obs,
                n_sim=args.n_sim,
                seed=args.seed,
                workers=args.threads,
            )
    except (ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote artifacts to {out_dir}")
    return 0


def _cmd_verify(args):
    names = list(REGISTRY) if args.scenario == "all" else [args.scenario]
    unknown = [n for n in names if n not in REGISTRY]
    if unknown:
        print(f"unknown scenario {unknown[0]!r}", file=sys.stderr)
        return 2
    any_failed = False
    for name in names:
        try:
            checks = verify_scenario(name, args.out)
        except ArtifactsMissing as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        print(f"== {name} ==")
        for check in checks:
            print(check.line())
        any_failed = any_failed or not all(c.passed for c in checks)
    return 1 if any_failed else 0


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.verb == "list":
        return _cmd_list()
    if args.verb == "describe":
        return _cmd_describe(args.scenario)
    if args.verb == "run":
        return _cmd_run(args)
    if args.verb == "verify":
        return _cmd_verify(args)
    return 2


if __name__ == "__main__":
    sys.exit(main())
