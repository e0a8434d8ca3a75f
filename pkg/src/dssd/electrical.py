"""Node potentials of the grounded resistor network built from a graph.

Every edge is a 1 ohm resistor, every node is additionally tied to a
common ground through 1 ohm, and ``s`` amperes are injected at node 1.
Kirchhoff's current law gives ``(D + I - A) v = s e1``; the matrix is
strictly diagonally dominant, so the system always has a unique solution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import Graph


def grounded_laplacian(g: Graph) -> np.ndarray:
    return np.diag(g.degrees() + 1.0) - g.adjacency()


def potentials(g: Graph, s: float) -> np.ndarray:
    if s <= 0:
        raise ValueError("source strength must be positive")
    rhs = np.zeros(g.n)
    rhs[0] = s
    return np.linalg.solve(grounded_laplacian(g), rhs)


@dataclass(frozen=True)
class FixedPointReport:
    residual: float
    tol: float

    @property
    def ok(self) -> bool:
        return self.residual <= self.tol


def check_fixed_point(g: Graph, x, s: float, tol: float = 1e-8) -> FixedPointReport:
    """Scaled KCL residual ``max|(D + I - A) x - s e1| / s``."""
    x = np.asarray(x, dtype=float)
    if x.shape != (g.n,):
        raise ValueError(f"expected a vector of length {g.n}, got shape {x.shape}")
    r = grounded_laplacian(g) @ x
    r[0] -= s
    return FixedPointReport(float(np.max(np.abs(r)) / s), tol)
