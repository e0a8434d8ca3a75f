"""Simulation traces, ground truth, detection events and plot-ready series."""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .graph import Graph, component_labels

TRACE_HEADER = ("k", "node", "state", "cut_belief", "component")
TRUTH_HEADER = ("k", "node", "connected")


@dataclass(frozen=True)
class TraceRecord:
    k: int
    node: int
    state: float
    cut_belief: int
    component: int


@dataclass(eq=False)
class Trace:
    """States ``x(0..steps)`` plus the graphs ``G(0..steps)`` they were run on.

    ``states[k]`` is the state vector at iteration ``k``; it was produced
    from ``x(k-1)`` on ``graphs[k-1]``. Ground truth at step ``k`` is the
    connectivity of ``graphs[k]``.
    """

    states: np.ndarray
    graphs: list[Graph]
    eps: float
    s: float
    failed: list[frozenset[int]] = field(default_factory=list)

    @property
    def steps(self) -> int:
        return len(self.states) - 1

    @property
    def n(self) -> int:
        return self.states.shape[1]

    def beliefs(self) -> np.ndarray:
        return (self.states <= self.eps).astype(np.int8)

    def components(self) -> np.ndarray:
        return np.array([component_labels(g) for g in self.graphs])

    def truth(self) -> np.ndarray:
        """``truth[k, i-1]`` is True iff node ``i`` reaches the source in ``G(k)``."""
        return self.components() == 0

    def records(self) -> Iterable[TraceRecord]:
        beliefs = self.beliefs()
        comps = self.components()
        for k in range(self.steps + 1):
            for i in range(self.n):
                yield TraceRecord(k, i + 1, float(self.states[k, i]), int(beliefs[k, i]), int(comps[k, i]))


def _fmt(x: float) -> str:
    return repr(float(x))


def write_trace(trace: Trace, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_HEADER)
        for r in trace.records():
            w.writerow((r.k, r.node, _fmt(r.state), r.cut_belief, r.component))


def write_truth(truth: np.ndarray, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRUTH_HEADER)
        for k, row in enumerate(truth):
            for i, c in enumerate(row):
                w.writerow((k, i + 1, int(c)))


def _read_grid(path: str | Path, column: str) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        return np.zeros((0, 0))
    steps = max(int(r["k"]) for r in rows) + 1
    n = max(int(r["node"]) for r in rows)
    out = np.zeros((steps, n))
    seen = np.zeros((steps, n), dtype=bool)
    for r in rows:
        k, i = int(r["k"]), int(r["node"]) - 1
        out[k, i] = float(r[column])
        seen[k, i] = True
    if not seen.all():
        raise ValueError(f"{path}: incomplete grid, expected one record per node per step")
    return out


def read_trace_states(path: str | Path) -> np.ndarray:
    return _read_grid(path, "state")


def read_truth(path: str | Path) -> np.ndarray:
    return _read_grid(path, "connected").astype(bool)


# -- detection events -----------------------------------------------------------

SEPARATION = "separation_detected"
RECONNECTION = "reconnection_detected"


@dataclass(frozen=True)
class DetectionEvent:
    node: int
    kind: str
    step: int
    truth_step: int | None
    delay: int | None

    @property
    def false_alarm(self) -> bool:
        return self.truth_step is None


def detect_events(states: np.ndarray, truth: np.ndarray, eps: float,
                  nodes: Iterable[int] | None = None) -> list[DetectionEvent]:
    """Belief transitions, each paired with the ground-truth change that explains it.

    A separation event fires at the first step where a node's belief goes
    0 -> 1, a reconnection event where it goes 1 -> 0. Each is paired with
    the latest ground-truth transition in the same direction at or before the
    detection step; before step 0 every node counts as disconnected, so a
    node connected at step 0 has a connection transition at step 0.
    Events without such a transition have no truth step (false alarms).
    """
    states = np.asarray(states, dtype=float)
    truth = np.asarray(truth, dtype=bool)
    if states.shape != truth.shape:
        raise ValueError(f"trace shape {states.shape} does not match truth shape {truth.shape}")
    beliefs = states <= eps
    steps, n = states.shape
    nodes = range(1, n + 1) if nodes is None else nodes
    events = []
    for node in nodes:
        b = beliefs[:, node - 1]
        t = truth[:, node - 1]
        last_conn = 0 if t[0] else None
        last_sep = None
        for k in range(steps):
            if k > 0 and t[k] != t[k - 1]:
                if t[k]:
                    last_conn = k
                else:
                    last_sep = k
            if k == 0 or b[k] == b[k - 1]:
                continue
            if b[k]:
                kind, ref = SEPARATION, last_sep
            else:
                kind, ref = RECONNECTION, last_conn
            events.append(DetectionEvent(node, kind, k, ref, None if ref is None else k - ref))
    events.sort(key=lambda e: (e.step, e.node))
    return events


def write_events(events: Sequence[DetectionEvent], path: str | Path) -> None:
    payload = [asdict(e) for e in events]
    Path(path).write_text(json.dumps(payload, indent=1) + "\n")


# -- plot data --------------------------------------------------------------------

def emit_plot_data(states: np.ndarray, nodes: Sequence[int], eps: float, path: str | Path) -> None:
    """Write ``k, epsilon, x_<node>...`` columns, one row per iteration.

    With no nodes requested only the header line is written.
    """
    states = np.asarray(states)
    n = states.shape[1] if states.ndim == 2 else 0
    for v in nodes:
        if not 1 <= v <= n:
            raise ValueError(f"unknown node id {v}; trace has nodes 1..{n}")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "epsilon"] + [f"x_{v}" for v in nodes])
        if not nodes:
            return
        for k, row in enumerate(states):
            w.writerow([k, _fmt(eps)] + [_fmt(row[v - 1]) for v in nodes])
