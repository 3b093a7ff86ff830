"""Command line: ``stepnet run|compare|topo``."""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional

from .qdisc import VOICE_TOS
from .scenario import (ParseError, ValidationError, compare_disciplines, load_scenario,
                       run_scenario, run_sweep)
from .topology import build_step_topology


def _overrides(args) -> dict[str, str]:
    out = {}
    for item in args.set or []:
        if "=" not in item:
            raise ParseError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        out[key.strip()] = value.strip()
    if getattr(args, "seed", None) is not None:
        out["run.seed"] = str(args.seed)
    if getattr(args, "duration", None) is not None:
        out["run.duration"] = str(args.duration)
    if getattr(args, "qdisc", None) is not None:
        out["qdisc.kind"] = args.qdisc
    return out


def _voice_line(label: str, summary: dict) -> str:
    v = summary["per_tos"].get(str(VOICE_TOS))
    if v is None:
        return f"{label}: no voice traffic"
    delay = v["delay_mean_s"]
    delay_ms = "n/a" if delay is None else f"{delay * 1e3:.3f} ms"
    return (f"{label}: voice sent={v['sent_packets']} received={v['received_packets']} "
            f"dropped={v['dropped_buffer_full']} errored={v['dropped_bit_error']} "
            f"mean delay={delay_ms}")


def cmd_run(args) -> int:
    scenario = load_scenario(args.scenario, _overrides(args))
    if scenario.sweeps:
        for row in run_sweep(scenario, args.out):
            print(_voice_line(f"{row['key']}={row['value']}", row["summary"]))
        return 0
    result = run_scenario(scenario, args.out)
    print(_voice_line(scenario.qdisc.kind.value, result.summary))
    print(f"conservation: {'ok' if result.summary['conservation'] else 'VIOLATED'}")
    return 0 if result.summary["conservation"] else 1


def cmd_compare(args) -> int:
    scenario = load_scenario(args.scenario, _overrides(args))
    report = compare_disciplines(scenario, args.out)
    for kind, summary in report.summaries.items():
        print(_voice_line(kind, summary))
    for v in report.verdicts:
        status = "PASS" if v.passed else "FAIL"
        tie = "" if v.strict or not v.passed else " (tie)"
        print(f"{v.name}: {status}{tie} {json.dumps(v.values, sort_keys=True)}")
    return 0 if report.passed else 1


def cmd_topo(args) -> int:
    scenario = load_scenario(args.scenario, _overrides(args))
    sys.stdout.write(build_step_topology(scenario.step_spec).dump())
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stepnet", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_default: Optional[str] = "out"):
        p.add_argument("--scenario", required=True,
                       help="scenario file, or the name of a bundled scenario")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override any scenario key, e.g. voip.0.clients=10")
        if out_default is not None:
            p.add_argument("--seed", type=int)
            p.add_argument("--duration", type=float)
            p.add_argument("--out", default=out_default)

    p = sub.add_parser("run", help="run one scenario and export its metrics")
    common(p)
    p.add_argument("--qdisc", choices=["fifo", "pq", "wfq"])
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", help="run FIFO, PQ and WFQ and check the orderings")
    common(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("topo", help="print the link adjacency dump")
    common(p, out_default=None)
    p.set_defaults(func=cmd_topo)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, ValidationError, FileNotFoundError) as exc:
        print(f"stepnet: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
