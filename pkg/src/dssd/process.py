"""Time-varying graph sequences G(0), G(1), ...

Four sources of topology change are supported: node failures on a static
graph, two-group random-walk mobility with a unit-disk radio model, an
explicit Markov chain over a finite set of graphs, and independent
per-step link failures. Randomness always comes from an explicitly passed
``numpy.random.Generator``.

Graph indices inside a Markov chain are 0-based; node indices are 1-based
like everywhere else in the package.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .graph import Graph, GraphSet, random_geometric_graph


class NonErgodicChainError(ValueError):
    pass


# -- node failures -------------------------------------------------------------

@dataclass(frozen=True)
class FailureSchedule:
    """Nodes that die at given steps; from that step on they have no edges."""

    failures: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        fs = tuple((int(v), int(k)) for v, k in self.failures)
        for v, k in fs:
            if v == 1:
                raise ValueError("the source node (1) cannot be scheduled to fail")
            if v < 1:
                raise ValueError(f"invalid node index {v}")
            if k < 1:
                raise ValueError(f"failure step must be >= 1, got {k} for node {v}")
        object.__setattr__(self, "failures", fs)

    def failed_by(self, k: int) -> frozenset[int]:
        return frozenset(v for v, when in self.failures if when <= k)

    @property
    def nodes(self) -> frozenset[int]:
        return frozenset(v for v, _ in self.failures)


def apply_failures(g: Graph, schedule: FailureSchedule, k: int) -> Graph:
    dead = schedule.failed_by(k)
    if not dead:
        return g
    if max(dead) > g.n:
        raise ValueError(f"failure schedule names node {max(dead)} but graph has {g.n} nodes")
    return g.without_nodes(dead)


def band_failures(positions, axis: int, lo: float, hi: float, step: int) -> FailureSchedule:
    """Fail every non-source node whose coordinate on ``axis`` lies in ``[lo, hi]``."""
    pts = np.asarray(positions, dtype=float)
    inside = (pts[:, axis] >= lo) & (pts[:, axis] <= hi)
    return FailureSchedule(tuple((int(i) + 1, step) for i in np.flatnonzero(inside) if i != 0))


# -- mobility ------------------------------------------------------------------

@dataclass(frozen=True)
class MobilityConfig:
    """Per-group Gaussian random walk; nodes link when closer than ``comm_range``.

    ``groups[i]`` is the group of node ``i+1``. Increments on each axis are
    drawn independently with the group's mean and variance.
    """

    groups: tuple[int, ...]
    means: tuple[tuple[float, float], ...]
    variances: tuple[float, ...]
    comm_range: float

    def __post_init__(self):
        if self.comm_range <= 0:
            raise ValueError("comm_range must be positive")
        if any(v < 0 for v in self.variances):
            raise ValueError("variances must be nonnegative")
        if len(self.means) != len(self.variances):
            raise ValueError("need one mean and one variance per group")
        if self.groups and (min(self.groups) < 0 or max(self.groups) >= len(self.means)):
            raise ValueError("group index out of range")

    @property
    def n(self) -> int:
        return len(self.groups)


def mobility_step(positions, cfg: MobilityConfig, rng: np.random.Generator):
    pts = np.asarray(positions, dtype=float)
    if pts.shape != (cfg.n, 2):
        raise ValueError(f"expected positions of shape ({cfg.n}, 2), got {pts.shape}")
    g = np.asarray(cfg.groups)
    mean = np.asarray(cfg.means, dtype=float)[g]
    std = np.sqrt(np.asarray(cfg.variances, dtype=float))[g]
    new = pts + mean + std[:, None] * rng.standard_normal((cfg.n, 2))
    return new, random_geometric_graph(new, cfg.comm_range)


# -- Markov chains over graph sets --------------------------------------------

def _reachable(pattern: np.ndarray, start: int) -> np.ndarray:
    seen = np.zeros(len(pattern), dtype=bool)
    seen[start] = True
    stack = [start]
    while stack:
        u = stack.pop()
        for v in np.flatnonzero(pattern[u]):
            if not seen[v]:
                seen[v] = True
                stack.append(v)
    return seen


def chain_period(P: np.ndarray) -> int:
    """Period of an irreducible chain: gcd of ``level(u) + 1 - level(v)`` over arcs."""
    pattern = np.asarray(P) > 0
    level = np.full(len(P), -1)
    level[0] = 0
    order = [0]
    for u in order:
        for v in np.flatnonzero(pattern[u]):
            if level[v] < 0:
                level[v] = level[u] + 1
                order.append(v)
    d = 0
    for u, v in zip(*np.nonzero(pattern)):
        if level[u] >= 0 and level[v] >= 0:
            d = math.gcd(d, int(level[u] + 1 - level[v]))
    return d


@dataclass(frozen=True, eq=False)
class MarkovChainSpec:
    graph_set: GraphSet
    P: np.ndarray
    initial: np.ndarray | None = None

    def __post_init__(self):
        gs = self.graph_set if isinstance(self.graph_set, GraphSet) else GraphSet(self.graph_set)
        P = np.array(self.P, dtype=float)
        N = len(gs)
        if P.shape != (N, N):
            raise ValueError(f"transition matrix must be {N}x{N}, got {P.shape}")
        if np.any(P < 0):
            raise ValueError("transition probabilities must be nonnegative")
        if np.any(np.abs(P.sum(axis=1) - 1.0) > 1e-12):
            raise ValueError("rows of the transition matrix must sum to 1")
        object.__setattr__(self, "graph_set", gs)
        object.__setattr__(self, "P", P)
        if self.initial is not None:
            init = np.array(self.initial, dtype=float)
            if init.shape != (N,) or np.any(init < 0) or abs(init.sum() - 1) > 1e-12:
                raise ValueError("initial distribution must be a probability vector of length N")
            object.__setattr__(self, "initial", init)

    @property
    def N(self) -> int:
        return len(self.graph_set)

    @property
    def n(self) -> int:
        return self.graph_set.n

    @property
    def is_irreducible(self) -> bool:
        pattern = self.P > 0
        return bool(_reachable(pattern, 0).all() and _reachable(pattern.T, 0).all())

    @property
    def is_aperiodic(self) -> bool:
        return self.is_irreducible and chain_period(self.P) == 1

    @property
    def is_ergodic(self) -> bool:
        return self.is_irreducible and self.is_aperiodic

    @property
    def is_positive(self) -> bool:
        return bool(np.all(self.P > 0))

    def check_ergodic(self) -> None:
        if not self.is_irreducible:
            raise NonErgodicChainError("Markov chain is not irreducible")
        period = chain_period(self.P)
        if period != 1:
            raise NonErgodicChainError(f"Markov chain is periodic with period {period}")

    def initial_distribution(self) -> np.ndarray:
        return self.initial if self.initial is not None else stationary_distribution(self)


def stationary_distribution(spec: MarkovChainSpec) -> np.ndarray:
    """Solve ``pi P = pi``, ``sum(pi) = 1`` for an ergodic chain."""
    spec.check_ergodic()
    N = spec.N
    a = spec.P.T - np.eye(N)
    a[-1, :] = 1.0
    b = np.zeros(N)
    b[-1] = 1.0
    pi = np.linalg.solve(a, b)
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


def markov_step(current: int, spec: MarkovChainSpec, rng: np.random.Generator) -> int:
    return int(rng.choice(spec.N, p=spec.P[current]))


def sample_chain(spec: MarkovChainSpec, steps: int, rng: np.random.Generator,
                 start: int | None = None) -> np.ndarray:
    """Indices ``theta(0..steps)``; ``theta(0)`` drawn from the initial distribution unless given."""
    cum = np.cumsum(spec.P, axis=1)
    cum[:, -1] = 1.0
    out = np.empty(steps + 1, dtype=int)
    if start is None:
        init = np.cumsum(spec.initial_distribution())
        init[-1] = 1.0
        start = int(np.searchsorted(init, rng.random(), side="right"))
    out[0] = start
    u = rng.random(steps)
    rows = [list(r) for r in cum]
    cur = start
    for k in range(steps):
        row = rows[cur]
        nxt = 0
        while u[k] >= row[nxt]:
            nxt += 1
        out[k + 1] = cur = nxt
    return out


def link_failure_chain(base: Graph, p_fail: float, max_edges: int = 10) -> MarkovChainSpec:
    """I.i.d. link failures on ``base`` written as an explicit chain over all edge subsets.

    Every row of ``P`` is the same product distribution, so for ``0 < p_fail < 1``
    the chain is entrywise positive.
    """
    if not 0 <= p_fail <= 1:
        raise ValueError("p_fail must lie in [0, 1]")
    edges = sorted(base.edges)
    if len(edges) > max_edges:
        raise ValueError(f"{len(edges)} edges gives 2^{len(edges)} graphs; limit is {max_edges} edges")
    graphs, probs = [], []
    for keep in itertools.product((True, False), repeat=len(edges)):
        graphs.append(Graph(base.n, [e for e, kept in zip(edges, keep) if kept]))
        up = sum(keep)
        probs.append((1 - p_fail) ** up * p_fail ** (len(edges) - up))
    row = np.array(probs)
    return MarkovChainSpec(GraphSet(graphs), np.tile(row / row.sum(), (len(graphs), 1)))


# -- process objects used by the simulators -------------------------------------

class StaticProcess:
    def __init__(self, graph: Graph):
        self.graph = graph
        self.n = graph.n

    def sequence(self, steps: int, rng: np.random.Generator) -> list[Graph]:
        return [self.graph] * (steps + 1)


@dataclass
class MobilityProcess:
    cfg: MobilityConfig
    initial_positions: np.ndarray
    positions: list[np.ndarray] = field(default_factory=list, repr=False)

    @property
    def n(self) -> int:
        return self.cfg.n

    def sequence(self, steps: int, rng: np.random.Generator) -> list[Graph]:
        pts = np.asarray(self.initial_positions, dtype=float)
        self.positions = [pts]
        graphs = [random_geometric_graph(pts, self.cfg.comm_range)]
        for _ in range(steps):
            pts, g = mobility_step(pts, self.cfg, rng)
            self.positions.append(pts)
            graphs.append(g)
        return graphs


class MarkovProcess:
    def __init__(self, spec: MarkovChainSpec):
        self.spec = spec
        self.n = spec.n
        self.indices: np.ndarray | None = None

    def sequence(self, steps: int, rng: np.random.Generator) -> list[Graph]:
        self.indices = sample_chain(self.spec, steps, rng)
        return [self.spec.graph_set[i] for i in self.indices]


class LinkFailureProcess:
    """Each edge of ``base`` is independently down with probability ``p_fail`` at every step."""

    def __init__(self, base: Graph, p_fail: float):
        if not 0 <= p_fail <= 1:
            raise ValueError("p_fail must lie in [0, 1]")
        self.base = base
        self.p_fail = p_fail
        self.n = base.n

    def sequence(self, steps: int, rng: np.random.Generator) -> list[Graph]:
        edges = sorted(self.base.edges)
        out = []
        for _ in range(steps + 1):
            up = rng.random(len(edges)) >= self.p_fail
            out.append(Graph(self.n, [e for e, ok in zip(edges, up) if ok]))
        return out


class ScriptedProcess:
    """Piecewise-constant topology: ``segments`` are ``(start_step, graph)`` pairs."""

    def __init__(self, segments: Sequence[tuple[int, Graph]]):
        segs = sorted(segments, key=lambda s: s[0])
        if not segs or segs[0][0] != 0:
            raise ValueError("scripted topology must define a graph at step 0")
        n = segs[0][1].n
        if any(g.n != n for _, g in segs):
            raise ValueError("all scripted graphs must share the node set")
        self.segments = segs
        self.n = n

    def graph_at(self, k: int) -> Graph:
        current = self.segments[0][1]
        for start, g in self.segments:
            if start > k:
                break
            current = g
        return current

    def sequence(self, steps: int, rng: np.random.Generator) -> list[Graph]:
        return [self.graph_at(k) for k in range(steps + 1)]


def with_failures(graphs: Iterable[Graph], schedule: FailureSchedule) -> list[Graph]:
    return [apply_failures(g, schedule, k) for k, g in enumerate(graphs)]
