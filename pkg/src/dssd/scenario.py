"""Declarative scenarios: TOML config in, trace/events/summary files out.

Top-level keys::

    name, engine ("sync" | "async" | "markov-analysis"), seed, s, eps, steps,
    output_dir (relative to the output root)

Sections: ``[graph]`` (required, ``kind`` selects the source), ``[failures]``,
``[async]``, ``[report]``. See ``docs/scenario-schema.md`` for every field.
"""

from __future__ import annotations

import json
import logging
import os
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import jls
from .async_protocol import AsyncParams, BernoulliLoss, BurstLoss, run_async
from .graph import Graph, GraphSet, is_connected, random_geometric_graph, read_edgelist, write_edgelist
from .process import (FailureSchedule, LinkFailureProcess, MarkovChainSpec, MarkovProcess, MobilityConfig,
                      MobilityProcess, ScriptedProcess, StaticProcess, band_failures, link_failure_chain)
from .sim import simulate_sync
from .trace import SEPARATION, Trace, detect_events, emit_plot_data, write_events, write_trace, write_truth

log = logging.getLogger(__name__)

ENGINES = ("sync", "async", "markov-analysis")
GRAPH_KINDS = ("static", "geometric", "mobility", "markov", "link-failure", "scripted")
OUTPUT_ROOT_ENV = "DSSD_OUTPUT_ROOT"
MAX_LAYOUT_TRIES = 1000


class ScenarioError(ValueError):
    pass


@dataclass
class Scenario:
    name: str
    engine: str
    graph: dict[str, Any]
    s: float
    eps: float
    steps: int
    seed: int = 0
    failures: dict[str, Any] = field(default_factory=dict)
    async_: dict[str, Any] = field(default_factory=dict)
    report: dict[str, Any] = field(default_factory=dict)
    output_dir: str | None = None
    base_dir: Path = field(default_factory=Path.cwd)


def _req(d: dict, key: str, where: str, kind=None):
    if key not in d:
        raise ScenarioError(f"missing required field '{where}{key}'")
    v = d[key]
    if kind is not None and not isinstance(v, kind):
        raise ScenarioError(f"field '{where}{key}' has wrong type {type(v).__name__}")
    return v


def bundled_scenarios() -> list[str]:
    root = resources.files("dssd") / "scenarios"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".toml"))


def resolve_config(path_or_name: str | Path) -> Path:
    p = Path(path_or_name)
    if p.exists():
        return p
    bundled = resources.files("dssd") / "scenarios" / f"{path_or_name}.toml"
    if bundled.is_file():
        return Path(str(bundled))
    raise ScenarioError(f"no config file or bundled scenario named '{path_or_name}'")


def load_scenario(path_or_name: str | Path) -> Scenario:
    path = resolve_config(path_or_name)
    try:
        raw = tomllib.loads(path.read_text())
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioError(f"{path}: {exc}") from exc
    return parse_scenario(raw, base_dir=path.parent)


def parse_scenario(raw: dict, base_dir: Path | None = None) -> Scenario:
    engine = _req(raw, "engine", "", str)
    if engine not in ENGINES:
        raise ScenarioError(f"field 'engine' must be one of {ENGINES}, got {engine!r}")
    graph = _req(raw, "graph", "", dict)
    kind = _req(graph, "kind", "graph.", str)
    if kind not in GRAPH_KINDS:
        raise ScenarioError(f"field 'graph.kind' must be one of {GRAPH_KINDS}, got {kind!r}")
    if engine == "markov-analysis" and kind not in ("markov", "link-failure"):
        raise ScenarioError(f"engine 'markov-analysis' needs graph.kind 'markov' or 'link-failure', got {kind!r}")
    s = float(_req(raw, "s", "", (int, float)))
    eps = float(raw.get("eps", 1e-2))
    if s <= 0:
        raise ScenarioError("field 's' must be positive")
    if eps <= 0:
        raise ScenarioError("field 'eps' must be positive")
    steps = raw.get("steps", 0 if engine == "markov-analysis" else None)
    if steps is None:
        raise ScenarioError("missing required field 'steps'")
    if not isinstance(steps, int) or steps < 0:
        raise ScenarioError("field 'steps' must be a nonnegative integer")
    sc = Scenario(
        name=str(raw.get("name", "scenario")), engine=engine, graph=graph, s=s, eps=eps, steps=steps,
        seed=int(raw.get("seed", 0)), failures=raw.get("failures", {}), async_=raw.get("async", {}),
        report=raw.get("report", {}), output_dir=raw.get("output_dir"),
        base_dir=Path(base_dir) if base_dir else Path.cwd(),
    )
    if kind == "static":
        f = sc.base_dir / _req(graph, "file", "graph.", str)
        if not f.exists():
            raise ScenarioError(f"field 'graph.file' names a missing file: {f}")
    return sc


# -- building the pieces ------------------------------------------------------------

def _layout(rng: np.random.Generator, g: dict) -> np.ndarray:
    n = int(_req(g, "n", "graph.", int))
    rng_ = float(_req(g, "range", "graph.", (int, float)))
    src = g.get("source_position")
    for _ in range(MAX_LAYOUT_TRIES):
        pts = rng.random((n, 2))
        if src is not None:
            pts[0] = src
        if not g.get("require_connected", True) or is_connected(random_geometric_graph(pts, rng_)):
            return pts
    raise ScenarioError(f"no connected layout found in {MAX_LAYOUT_TRIES} draws; increase graph.range")


def _edges(raw, where: str) -> list[tuple[int, int]]:
    try:
        return [(int(a), int(b)) for a, b in raw]
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"field '{where}' must be a list of [i, j] pairs") from exc


def markov_spec(g: dict) -> MarkovChainSpec:
    if g["kind"] == "link-failure":
        base = Graph(int(_req(g, "n", "graph.", int)), _edges(_req(g, "edges", "graph.", list), "graph.edges"))
        return link_failure_chain(base, float(_req(g, "p_fail", "graph.", (int, float))))
    n = int(_req(g, "n", "graph.", int))
    graphs = [Graph(n, _edges(es, f"graph.graphs[{i}]")) for i, es in enumerate(_req(g, "graphs", "graph.", list))]
    try:
        return MarkovChainSpec(GraphSet(graphs), _req(g, "P", "graph.", list), g.get("initial"))
    except ValueError as exc:
        raise ScenarioError(f"graph.P: {exc}") from exc


def build_process(sc: Scenario, rng: np.random.Generator):
    """Return ``(process, positions or None)`` for the scenario's graph source."""
    g = sc.graph
    kind = g["kind"]
    if kind == "static":
        return StaticProcess(read_edgelist(sc.base_dir / g["file"])), None
    if kind == "geometric":
        pts = _layout(rng, g)
        return StaticProcess(random_geometric_graph(pts, float(g["range"]))), pts
    if kind == "mobility":
        groups = _req(g, "groups", "graph.", list)
        assignment: list[int] = []
        for gi, grp in enumerate(groups):
            assignment += [gi] * int(_req(grp, "count", f"graph.groups[{gi}].", int))
        if len(assignment) != int(_req(g, "n", "graph.", int)):
            raise ScenarioError("group counts in 'graph.groups' must add up to graph.n")
        cfg = MobilityConfig(tuple(assignment),
                             tuple(tuple(map(float, grp["mean"])) for grp in groups),
                             tuple(float(grp["variance"]) for grp in groups),
                             float(g["range"]))
        pts = _layout(rng, g)
        return MobilityProcess(cfg, pts), pts
    if kind == "markov":
        return MarkovProcess(markov_spec(g)), None
    if kind == "link-failure":
        base = Graph(int(g["n"]), _edges(_req(g, "edges", "graph.", list), "graph.edges"))
        return LinkFailureProcess(base, float(g["p_fail"])), None
    if kind == "scripted":
        n = int(_req(g, "n", "graph.", int))
        segs = [(int(_req(seg, "start", "graph.segments[].", int)), Graph(n, _edges(seg.get("edges", []), "graph.segments[].edges")))
                for seg in _req(g, "segments", "graph.", list)]
        try:
            return ScriptedProcess(segs), None
        except ValueError as exc:
            raise ScenarioError(f"graph.segments: {exc}") from exc
    raise ScenarioError(f"unsupported graph.kind {kind!r}")


def build_failures(sc: Scenario, positions: np.ndarray | None) -> FailureSchedule:
    f = sc.failures
    pairs = [tuple(p) for p in f.get("nodes", [])]
    band = f.get("band")
    if band is not None:
        if positions is None:
            raise ScenarioError("'failures.band' needs a graph source with node positions")
        axis = {"x": 0, "y": 1}[_req(band, "axis", "failures.band.", str)]
        pairs += band_failures(positions, axis, float(band["lo"]), float(band["hi"]),
                               int(_req(band, "step", "failures.band.", int))).failures
    try:
        return FailureSchedule(tuple(pairs))
    except ValueError as exc:
        raise ScenarioError(f"failures: {exc}") from exc


def build_async(sc: Scenario):
    a = dict(sc.async_)
    loss_kind = a.pop("loss_model", "bernoulli")
    loss_rate = float(a.pop("loss", 0.0))
    burst = a.pop("burst", {})
    if loss_kind == "bernoulli":
        loss = BernoulliLoss(loss_rate)
    elif loss_kind == "burst":
        loss = BurstLoss(float(burst.get("p_good_to_bad", 0.05)), float(burst.get("p_bad_to_good", 0.5)),
                         float(burst.get("loss_good", 0.0)), float(burst.get("loss_bad", 1.0)))
    else:
        raise ScenarioError(f"field 'async.loss_model' must be 'bernoulli' or 'burst', got {loss_kind!r}")
    try:
        return AsyncParams(**a), loss
    except TypeError as exc:
        raise ScenarioError(f"unknown field in [async]: {exc}") from exc
    except ValueError as exc:
        raise ScenarioError(f"async: {exc}") from exc


# -- running -----------------------------------------------------------------------

@dataclass
class RunResult:
    scenario: Scenario
    trace: Trace | None
    failures: FailureSchedule
    summary: dict
    out_dir: Path
    positions: np.ndarray | None = None


def output_dir(sc: Scenario, out: str | Path | None = None) -> Path:
    if out is not None:
        return Path(out)
    root = Path(os.environ.get(OUTPUT_ROOT_ENV, "runs"))
    return root / (sc.output_dir or sc.name)


def simulate(sc: Scenario):
    """Run the scenario in memory; returns ``(trace, failures, positions)``."""
    rng = np.random.default_rng(sc.seed)
    proc, positions = build_process(sc, rng)
    failures = build_failures(sc, positions)
    graphs = proc.sequence(sc.steps, rng)
    if sc.engine == "sync":
        trace = simulate_sync(graphs, sc.s, sc.eps, failures)
    else:
        params, loss = build_async(sc)
        trace = run_async(graphs, sc.s, sc.eps, rng, params, loss, failures).trace
    return trace, failures, positions


def summarize(sc: Scenario, trace: Trace, failures: FailureSchedule):
    alive = [v for v in range(1, trace.n + 1) if v not in failures.nodes]
    truth = trace.truth()
    events = detect_events(trace.states, truth, sc.eps, alive)
    separations = [e for e in events if e.kind == SEPARATION and not e.false_alarm]
    return {
        "name": sc.name,
        "engine": sc.engine,
        "seed": sc.seed,
        "n": trace.n,
        "steps": trace.steps,
        "s": sc.s,
        "eps": sc.eps,
        "failed_nodes": sorted(failures.nodes),
        "separated_at_end": [v for v in alive if not truth[-1, v - 1]],
        "separation_delays": {str(e.node): e.delay for e in separations},
        "events": len(events),
        "false_alarms": sum(e.false_alarm for e in events),
    }, events


def run_scenario(path_or_name: str | Path, seed: int | None = None, out: str | Path | None = None) -> RunResult:
    sc = load_scenario(path_or_name)
    if seed is not None:
        sc.seed = seed
    dest = output_dir(sc, out)
    dest.mkdir(parents=True, exist_ok=True)
    if sc.engine == "markov-analysis":
        rep = analyze_scenario(sc)
        (dest / "analysis.json").write_text(json.dumps(rep, indent=1) + "\n")
        return RunResult(sc, None, FailureSchedule(), rep, dest)

    trace, failures, positions = simulate(sc)
    summary, events = summarize(sc, trace, failures)
    write_trace(trace, dest / "trace.csv")
    write_truth(trace.truth(), dest / "truth.csv")
    write_events(events, dest / "events.json")
    write_edgelist(trace.graphs[0], dest / "graph0.edgelist")
    if positions is not None:
        np.savetxt(dest / "positions0.csv", positions, delimiter=",", header="x,y", comments="", fmt="%.17g")
    plot_nodes = [int(v) for v in sc.report.get("plot_nodes", [])]
    if plot_nodes:
        emit_plot_data(trace.states, plot_nodes, sc.eps, dest / "plot_data.csv")
    (dest / "summary.json").write_text(json.dumps(summary, indent=1) + "\n")
    log.info("scenario %s: wrote %s", sc.name, dest)
    return RunResult(sc, trace, failures, summary, dest, positions)


def analyze_scenario(sc: Scenario) -> dict:
    if sc.graph["kind"] not in ("markov", "link-failure"):
        raise ScenarioError("analysis needs graph.kind 'markov' or 'link-failure'")
    spec = markov_spec(sc.graph)
    system = jls.build_system(spec, sc.s)
    pred = jls.predict(system)
    rep = jls.report(system, pred)
    rep["name"] = sc.name
    return rep
