"""Synchronous DSSD iteration and cut-belief thresholding.

Every node holds a scalar state. One iteration replaces each state with
the sum of its neighbors' states divided by ``degree + 1``; the source
also adds the source strength ``s`` to that sum. States of nodes that can
reach the source settle at positive potentials, states of cut-off nodes
decay to zero, and a node flags itself as separated once its state drops
to the threshold ``eps`` or below.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .graph import Graph

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class StateVector:
    x: np.ndarray
    s: float
    k: int = 0
    source_index: int = 1

    def __post_init__(self):
        if self.s <= 0:
            raise ValueError(f"source strength must be positive, got {self.s}")
        x = np.array(self.x, dtype=float)
        x.setflags(write=False)
        object.__setattr__(self, "x", x)

    @classmethod
    def zeros(cls, n: int, s: float) -> "StateVector":
        return cls(np.zeros(n), s)

    @property
    def n(self) -> int:
        return len(self.x)


@dataclass(frozen=True)
class CutBeliefVector:
    beliefs: np.ndarray
    eps: float


def update_value(neighbor_states: Sequence[float], is_source: bool, s: float) -> float:
    """Single-node update: neighbor states in, new state out.

    Shared by the synchronous and asynchronous engines so both evaluate the
    same floating point expression in the same order.
    """
    total = 0.0
    for v in neighbor_states:
        total += v
    if is_source:
        total += s
    return total / (len(neighbor_states) + 1)


def _check_dims(state: StateVector, g: Graph) -> None:
    if state.n != g.n:
        raise ValueError(f"state has {state.n} entries but graph has {g.n} nodes")


def step(state: StateVector, g: Graph) -> StateVector:
    _check_dims(state, g)
    x = state.x
    new = np.empty(g.n)
    for i in range(1, g.n + 1):
        nbrs = g.sorted_neighbors(i)
        new[i - 1] = update_value([x[j - 1] for j in nbrs], i == 1, state.s)
    return replace(state, x=new, k=state.k + 1)


def step_vectorized(state: StateVector, g: Graph) -> StateVector:
    """Matrix form ``x <- (D + I)^-1 (A x + s e1)``."""
    _check_dims(state, g)
    a = g.adjacency()
    rhs = a @ state.x
    rhs[0] += state.s
    return replace(state, x=rhs / (g.degrees() + 1.0), k=state.k + 1)


def cut_beliefs(state: StateVector | np.ndarray, eps: float) -> CutBeliefVector:
    if eps <= 0:
        raise ValueError(f"cut detection threshold must be positive, got {eps}")
    x = state.x if isinstance(state, StateVector) else np.asarray(state, dtype=float)
    return CutBeliefVector((x <= eps).astype(np.int8), eps)


def iteration_matrix(g: Graph) -> np.ndarray:
    """``(D + I)^-1 A``, the state-transition part of the update."""
    return g.adjacency() / (g.degrees() + 1.0)[:, None]


def run_to_convergence(g: Graph, s: float, tol: float = 1e-10,
                       max_iter: int = 100_000) -> tuple[StateVector, bool]:
    """Iterate from zero until ``max|x(k+1) - x(k)| <= tol * s``.

    Returns the final state and whether the stopping rule was met within
    ``max_iter`` iterations.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")
    state = StateVector.zeros(g.n, s)
    j = iteration_matrix(g)
    b = np.zeros(g.n)
    b[0] = s / (g.degree(1) + 1.0)
    x = state.x
    for k in range(1, max_iter + 1):
        nxt = j @ x + b
        if np.max(np.abs(nxt - x)) <= tol * s:
            return StateVector(nxt, s, k=k), True
        x = nxt
    log.warning("DSSD iteration did not converge in %d iterations", max_iter)
    return StateVector(x, s, k=max_iter), False
