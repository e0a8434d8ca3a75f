"""Command line front end: ``dssd run|analyze|events|plot-data|list``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import scenario as scn
from .jls import JlsRefusal
from .trace import detect_events, emit_plot_data, read_trace_states, read_truth, write_events


def _nodes(text: str) -> list[int]:
    return [int(t) for t in text.split(",") if t.strip()]


def cmd_run(args) -> int:
    res = scn.run_scenario(args.config, seed=args.seed, out=args.out)
    s = res.summary
    if res.trace is None:
        print(f"{s['name']}: analysis written to {res.out_dir / 'analysis.json'}")
    else:
        print(f"{s['name']}: {s['steps']} steps, {s['events']} events, "
              f"{len(s['separation_delays'])} separations detected, {s['false_alarms']} false alarms")
        print(f"artifacts in {res.out_dir}")
    return 0


def cmd_analyze(args) -> int:
    sc = scn.load_scenario(args.config)
    rep = scn.analyze_scenario(sc)
    text = json.dumps(rep, indent=1)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    return 0 if rep["reachability_match"] or not rep["transition_matrix_positive"] else 1


def cmd_events(args) -> int:
    events = detect_events(read_trace_states(args.trace), read_truth(args.truth), args.eps)
    if args.out:
        write_events(events, args.out)
    else:
        for e in events:
            print(f"{e.step}\t{e.node}\t{e.kind}\ttruth={e.truth_step}\tdelay={e.delay}")
    return 0


def cmd_plot_data(args) -> int:
    emit_plot_data(read_trace_states(args.trace), _nodes(args.nodes), args.eps, args.out)
    return 0


def cmd_list(args) -> int:
    for name in scn.bundled_scenarios():
        print(name)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dssd", description="Distributed source separation detection simulator")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a scenario config (path or bundled name)")
    r.add_argument("config")
    r.add_argument("--seed", type=int, default=None, help="override the config's seed")
    r.add_argument("--out", default=None, help=f"output directory (default ${scn.OUTPUT_ROOT_ENV}/<name>)")
    r.set_defaults(func=cmd_run)

    a = sub.add_parser("analyze", help="closed-form mean/correlation report for a Markov scenario")
    a.add_argument("config")
    a.add_argument("--out", default=None)
    a.set_defaults(func=cmd_analyze)

    e = sub.add_parser("events", help="detection events from a trace and a ground-truth file")
    e.add_argument("trace")
    e.add_argument("truth")
    e.add_argument("--eps", type=float, default=1e-2)
    e.add_argument("--out", default=None)
    e.set_defaults(func=cmd_events)

    d = sub.add_parser("plot-data", help="per-node state series for plotting")
    d.add_argument("trace")
    d.add_argument("--nodes", default="", help="comma separated node ids")
    d.add_argument("--eps", type=float, default=1e-2)
    d.add_argument("--out", default="plot_data.csv")
    d.set_defaults(func=cmd_plot_data)

    ls = sub.add_parser("list", help="list bundled scenarios")
    ls.set_defaults(func=cmd_list)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (scn.ScenarioError, JlsRefusal, ValueError, OSError) as exc:
        print(f"dssd: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
