"""Undirected graphs on a fixed, 1-based node set.

Node 1 is always the source. Graphs are immutable; every "modification"
(removing failed nodes, taking unions) returns a new instance.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

SOURCE = 1


def _normalize(i: int, j: int) -> tuple[int, int]:
    return (i, j) if i < j else (j, i)


@dataclass(frozen=True)
class Graph:
    """Undirected graph with nodes ``1..n`` and edges stored as pairs ``i < j``."""

    n: int
    edges: frozenset[tuple[int, int]]

    def __init__(self, n: int, edges: Iterable[tuple[int, int]] = ()):
        if n < 1:
            raise ValueError(f"graph needs at least one node, got n={n}")
        normalized = set()
        for i, j in edges:
            i, j = int(i), int(j)
            if i == j:
                raise ValueError(f"self-loop at node {i}")
            if not (1 <= i <= n and 1 <= j <= n):
                raise ValueError(f"edge ({i}, {j}) out of range 1..{n}")
            normalized.add(_normalize(i, j))
        object.__setattr__(self, "n", int(n))
        object.__setattr__(self, "edges", frozenset(normalized))
        adj: list[list[int]] = [[] for _ in range(n + 1)]
        for i, j in normalized:
            adj[i].append(j)
            adj[j].append(i)
        object.__setattr__(self, "_adj", tuple(tuple(sorted(a)) for a in adj))

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, edges={sorted(self.edges)})"

    def _check(self, i: int) -> None:
        if not 1 <= i <= self.n:
            raise IndexError(f"node {i} out of range 1..{self.n}")

    def neighbors(self, i: int) -> frozenset[int]:
        self._check(i)
        return frozenset(self._adj[i])

    def sorted_neighbors(self, i: int) -> tuple[int, ...]:
        """Neighbors of ``i`` in increasing index order (the summation order used by updates)."""
        self._check(i)
        return self._adj[i]

    def degree(self, i: int) -> int:
        self._check(i)
        return len(self._adj[i])

    def degrees(self) -> np.ndarray:
        return np.array([len(self._adj[i]) for i in range(1, self.n + 1)], dtype=float)

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.n, self.n))
        for i, j in self.edges:
            a[i - 1, j - 1] = a[j - 1, i - 1] = 1.0
        return a

    def has_edge(self, i: int, j: int) -> bool:
        return _normalize(i, j) in self.edges

    def without_nodes(self, nodes: Iterable[int]) -> "Graph":
        """Drop every edge incident to ``nodes``; the vertices themselves stay."""
        dead = set(nodes)
        return Graph(self.n, (e for e in self.edges if e[0] not in dead and e[1] not in dead))


def neighbors(g: Graph, i: int) -> frozenset[int]:
    return g.neighbors(i)


def component_labels(g: Graph) -> np.ndarray:
    """Label connected components; index ``i-1`` holds node ``i``'s label.

    Labels are assigned in order of the smallest node in each component,
    so the source's component is always label 0.
    """
    labels = np.full(g.n, -1, dtype=int)
    current = 0
    for start in range(1, g.n + 1):
        if labels[start - 1] >= 0:
            continue
        labels[start - 1] = current
        queue = deque([start])
        while queue:
            u = queue.popleft()
            for v in g.sorted_neighbors(u):
                if labels[v - 1] < 0:
                    labels[v - 1] = current
                    queue.append(v)
        current += 1
    return labels


def connected_to_source(g: Graph) -> np.ndarray:
    """Boolean vector, entry ``i-1`` true iff node ``i`` has a path to node 1."""
    return component_labels(g) == 0


def is_connected(g: Graph) -> bool:
    return bool(connected_to_source(g).all())


def union_graph(graphs: Sequence[Graph]) -> Graph:
    if not graphs:
        raise ValueError("union of an empty graph set")
    n = graphs[0].n
    if any(g.n != n for g in graphs):
        raise ValueError("graphs in a union must share the node set")
    edges: set[tuple[int, int]] = set()
    for g in graphs:
        edges |= g.edges
    return Graph(n, edges)


def random_geometric_graph(positions, comm_range: float) -> Graph:
    """Unit-disk graph: ``i ~ j`` iff their Euclidean distance is strictly below ``comm_range``."""
    pts = np.asarray(positions, dtype=float).reshape(-1, 2)
    if comm_range <= 0:
        raise ValueError("communication range must be positive")
    if not np.all(np.isfinite(pts)):
        raise ValueError("positions must be finite")
    diff = pts[:, None, :] - pts[None, :, :]
    dist = np.sqrt((diff ** 2).sum(axis=-1))
    ii, jj = np.nonzero(np.triu(dist < comm_range, k=1))
    return Graph(len(pts), zip((ii + 1).tolist(), (jj + 1).tolist()))


class GraphSet(tuple):
    """Ordered, nonempty collection of graphs over one node set."""

    def __new__(cls, graphs: Iterable[Graph]):
        graphs = tuple(graphs)
        if not graphs:
            raise ValueError("a graph set needs at least one graph")
        n = graphs[0].n
        if any(g.n != n for g in graphs):
            raise ValueError("graphs in a set must share the node set")
        return super().__new__(cls, graphs)

    @property
    def n(self) -> int:
        return self[0].n

    def union(self) -> Graph:
        return union_graph(self)


# -- edge-list text format ---------------------------------------------------

def format_edgelist(g: Graph) -> str:
    lines = [f"n={g.n}"]
    lines += [f"{i} {j}" for i, j in sorted(g.edges)]
    return "\n".join(lines) + "\n"


def parse_edgelist(text: str) -> Graph:
    rows = [ln.strip() for ln in text.splitlines()]
    rows = [ln for ln in rows if ln and not ln.startswith("#")]
    if not rows or not rows[0].startswith("n="):
        raise ValueError("edge list must start with a line 'n=<count>'")
    n = int(rows[0][2:])
    edges = []
    for ln in rows[1:]:
        parts = ln.split()
        if len(parts) != 2:
            raise ValueError(f"malformed edge line: {ln!r}")
        edges.append((int(parts[0]), int(parts[1])))
    return Graph(n, edges)


def read_edgelist(path: str | Path) -> Graph:
    return parse_edgelist(Path(path).read_text())


def write_edgelist(g: Graph, path: str | Path) -> None:
    Path(path).write_text(format_edgelist(g))
