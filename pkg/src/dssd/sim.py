"""Synchronous (lock-step) DSSD runs over a precomputed graph sequence."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .core import StateVector, step
from .graph import Graph
from .process import FailureSchedule, with_failures
from .trace import Trace


def simulate_sync(graphs: Sequence[Graph], s: float, eps: float,
                  failures: FailureSchedule | None = None) -> Trace:
    """Run ``len(graphs) - 1`` iterations; ``x(k+1)`` is computed on ``graphs[k]``.

    Failed nodes lose all their edges from their failure step on, so their
    own state drops to zero one step later.
    """
    failures = failures or FailureSchedule()
    graphs = with_failures(graphs, failures)
    n = graphs[0].n
    state = StateVector.zeros(n, s)
    states = np.empty((len(graphs), n))
    states[0] = state.x
    for k in range(len(graphs) - 1):
        state = step(state, graphs[k])
        states[k + 1] = state.x
    return Trace(states, graphs, eps, s, [failures.failed_by(k) for k in range(len(graphs))])
