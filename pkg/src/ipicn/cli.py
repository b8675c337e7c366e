"""Command-line entry point: run scenarios and validate topologies.

Exit codes: 0 success, 2 invalid input files, 3 scenario references
undefined entities. Reports are written atomically (write-then-rename) so
a crash never leaves a partial file behind.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from pathlib import Path

from . import simnet
from .simnet import ScenarioError, Scenario, UnknownClientError, load_scenario
from .topology import TopologyDoc, TopologyError, load_topology_doc

EXIT_OK = 0
EXIT_BAD_INPUT = 2
EXIT_BAD_REFERENCE = 3


def _write_atomic(path: str, text: str) -> None:
    target = Path(path)
    fd, tmp = tempfile.mkstemp(dir=target.parent or Path("."), prefix=target.name)
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _load_inputs(args) -> tuple[TopologyDoc, Scenario, int]:
    scenario = load_scenario(Path(args.scenario).read_text())
    seed = args.seed if args.seed is not None else scenario.seed
    topo = load_topology_doc(Path(args.topology).read_text(), seed)
    return topo, scenario, seed


def cmd_run(args) -> int:
    try:
        topo, scenario, seed = _load_inputs(args)
    except (OSError, TopologyError, ScenarioError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT

    collect_trace = args.trace is not None
    try:
        if args.mode == "icn":
            sim = simnet.IcnSimulation(
                topo, scenario, window_us=args.window_us,
                ideal_control=args.ideal_control, collect_trace=collect_trace,
            )
            text = sim.run().to_canonical_json()
            trace = sim.trace
        elif args.mode == "ip":
            sim = simnet.BaselineSimulation(
                topo, scenario, collect_trace=collect_trace
            )
            text = sim.run().to_canonical_json()
            trace = sim.trace
        else:
            report = simnet.compare(
                scenario, topo, seed=seed, window_us=args.window_us,
                ideal_control=args.ideal_control,
            )
            text = report.to_canonical_json()
            trace = None
    except UnknownClientError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_REFERENCE
    except (ScenarioError, TopologyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT

    _write_atomic(args.out, text + "\n")
    if collect_trace and trace is not None:
        _write_atomic(args.trace, "\n".join(trace) + ("\n" if trace else ""))
    return EXIT_OK


def cmd_validate(args) -> int:
    try:
        text = Path(args.topology).read_text()
        doc = json.loads(text)
        topo = load_topology_doc(doc, seed=1)
    except (OSError, json.JSONDecodeError, TopologyError) as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    graph = topo.graph
    print(
        f"nodes={len(graph.nodes)} links={len(graph.links)} "
        f"naps={len(topo.naps)} border={'yes' if topo.border else 'no'}"
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ipicn",
        description="IP-over-ICN network simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a scenario and write the KPI report")
    run_p.add_argument("--topology", required=True, help="topology JSON path")
    run_p.add_argument("--scenario", required=True, help="scenario JSON path")
    run_p.add_argument("--mode", required=True, choices=("icn", "ip", "compare"))
    run_p.add_argument("--seed", type=int, default=None,
                       help="link-mask seed (defaults to the scenario's, then 1)")
    run_p.add_argument("--out", required=True, help="report output path")
    run_p.add_argument("--trace", default=None, help="forwarding trace output path")
    run_p.add_argument("--window-us", type=int, default=None,
                       help="HTTP coalescing window override")
    run_p.add_argument("--ideal-control", action="store_true",
                       help="deliver control messages instantly at zero byte cost")
    run_p.set_defaults(func=cmd_run)

    val_p = sub.add_parser("validate", help="check a topology document")
    val_p.add_argument("topology", help="topology JSON path")
    val_p.set_defaults(func=cmd_validate)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
