"""``flowsim`` command line entry point."""

from __future__ import annotations

import argparse
import csv
import logging
import sys

from ..errors import ConfigError, FlowSimError
from ..topology import Scenario, place_random
from ..verifier import MUTANTS
from .experiment import default_jobs, emit_results, run_experiment, verify_workflow
from .specfile import load_spec, shipped_specs


def _cmd_run(args: argparse.Namespace) -> int:
    try:
        spec = load_spec(args.spec)
    except ConfigError as exc:
        print(f"flowsim: config error in {args.spec}: {exc}", file=sys.stderr)
        return 2
    jobs = default_jobs(args.jobs)
    result = run_experiment(spec, jobs=jobs)
    try:
        paths = emit_results(result.rows, args.out, result.actions if spec.gateway else None)
    except OSError as exc:
        print(f"flowsim: cannot write results: {exc}", file=sys.stderr)
        return 1
    for p in paths:
        print(p)
    return 0


def _cmd_verify(args: argparse.Namespace) -> int:
    if args.tasks < 1:
        print("flowsim: --tasks must be >= 1", file=sys.stderr)
        return 2
    report, ok = verify_workflow(args.tasks, args.mutate)
    sys.stdout.write(report)
    return 0 if ok else 1


def _cmd_topo(args: argparse.Namespace) -> int:
    scenario = Scenario(args.scenario)
    n_aps = args.aps if args.aps is not None else (1 if scenario is Scenario.INTER_NETWORK else 4)
    topo = place_random(args.sensors, n_aps, args.side, args.seed, scenario, args.networks)
    out = open(args.out, "w", newline="", encoding="utf-8") if args.out else sys.stdout
    try:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["id", "kind", "x", "y", "network_id"])
        for n in topo.nodes:
            writer.writerow([n.id, n.kind.value, repr(n.pos.x), repr(n.pos.y), n.network_id])
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def _cmd_specs(args: argparse.Namespace) -> int:
    for p in shipped_specs():
        print(p.stem, p, sep="\t")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="flowsim", description="Flow-sensor network virtualization simulator")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment spec and write results")
    run.add_argument("--spec", required=True, help="spec file, or the name of a shipped spec (fig13 ...)")
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--jobs", type=int, default=None, help="parallel worker processes (FLOWSIM_JOBS overrides)")
    run.set_defaults(func=_cmd_run)

    ver = sub.add_parser("verify", help="check LTL1-3 on the workflow model")
    ver.add_argument("--tasks", type=int, default=3)
    ver.add_argument("--mutate", choices=sorted(MUTANTS), default=None)
    ver.set_defaults(func=_cmd_verify)

    topo = sub.add_parser("topo", help="dump a random topology as CSV")
    topo.add_argument("--seed", type=int, required=True)
    topo.add_argument("--scenario", choices=[s.value for s in Scenario], default=Scenario.INTER_NETWORK.value)
    topo.add_argument("--sensors", type=int, default=100)
    topo.add_argument("--aps", type=int, default=None)
    topo.add_argument("--side", type=float, default=100.0)
    topo.add_argument("--networks", type=int, default=4)
    topo.add_argument("--out", default=None)
    topo.set_defaults(func=_cmd_topo)

    specs = sub.add_parser("specs", help="list the shipped experiment specs")
    specs.set_defaults(func=_cmd_specs)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except FlowSimError as exc:
        print(f"flowsim: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
