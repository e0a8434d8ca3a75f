"""Asynchronous DSSD with beacon-based neighbor discovery and a stale-state buffer.

Execution is organised in logical iterations inside one deterministic
event loop. In iteration ``k``:

1. On discovery iterations (every ``discovery_period`` steps, starting at 0)
   every live node sends ``beacons_per_window`` beacons. A receiver admits a
   sender into its neighbor table when the packet reception ratio of that
   window is strictly above ``prr_threshold``.
2. Every live node broadcasts ``x_i(k)`` over the links of ``G(k)``. The
   loss model may drop each message; surviving messages are queued for
   delivery at ``k + delay`` and delivered in ``(step, sender, receiver)``
   order.
3. Every live node evicts neighbors silent for ``evict_limit`` or more
   iterations, then applies the DSSD update over its table using the most
   recent state buffered for each neighbor. Neighbors silent for
   ``stale_limit`` or more iterations are marked stale; their buffered
   value is still used.

With no loss, no delay and a static graph this reproduces the
synchronous engine exactly.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import update_value
from .graph import Graph
from .process import FailureSchedule, with_failures
from .trace import Trace

BEACON = "beacon"
STATE = "state_broadcast"


def compute_prr(received: int, sent: int) -> float:
    if sent < 1:
        raise ValueError("PRR undefined when no beacons were sent")
    if not 0 <= received <= sent:
        raise ValueError(f"received count {received} outside 0..{sent}")
    return received / sent


def is_reliable(prr: float, threshold: float = 0.8) -> bool:
    return prr > threshold


@dataclass(frozen=True)
class AsyncParams:
    prr_threshold: float = 0.8
    stale_limit: int = 2
    evict_limit: int = 4
    beacons_per_window: int = 10
    discovery_period: int = 10
    rediscovery: bool = True
    # Drop admitted neighbors whose PRR falls to the threshold or below at a later window.
    drop_unreliable: bool = False
    max_delay: int = 0

    def __post_init__(self):
        if not 0 <= self.prr_threshold < 1:
            raise ValueError("prr_threshold must lie in [0, 1)")
        if self.stale_limit < 1:
            raise ValueError("stale_limit must be at least 1")
        if self.evict_limit < self.stale_limit:
            raise ValueError("evict_limit must be >= stale_limit")
        if self.beacons_per_window < 1 or self.discovery_period < 1:
            raise ValueError("beacons_per_window and discovery_period must be positive")
        if self.max_delay < 0:
            raise ValueError("max_delay must be nonnegative")


@dataclass
class NeighborEntry:
    state: float | None = None
    sent_step: int = -1
    last_heard: int = 0
    beacons: int = 0
    reliable: bool = True

    def silence(self, k: int) -> int:
        return k - self.last_heard


@dataclass
class NodeRuntime:
    node: int
    state: float = 0.0
    params: AsyncParams = field(default_factory=AsyncParams)
    table: dict[int, NeighborEntry] = field(default_factory=dict)
    evicted: set[int] = field(default_factory=set)
    k: int = 0

    def is_stale(self, j: int) -> bool:
        return self.table[j].silence(self.k) >= self.params.stale_limit

    def admit(self, j: int, received: int, sent: int) -> None:
        prr = compute_prr(received, sent)
        ok = is_reliable(prr, self.params.prr_threshold)
        entry = self.table.get(j)
        if entry is not None:
            entry.beacons = received
            entry.reliable = ok
            if not ok and self.params.drop_unreliable:
                del self.table[j]
            return
        if not ok or (j in self.evicted and not self.params.rediscovery):
            return
        self.table[j] = NeighborEntry(last_heard=self.k, beacons=received)

    def receive(self, sender: int, state: float, sent_step: int) -> bool:
        entry = self.table.get(sender)
        if entry is None:
            return False
        entry.last_heard = self.k
        if sent_step >= entry.sent_step:
            entry.state = state
            entry.sent_step = sent_step
        return True

    def evict_silent(self) -> list[int]:
        gone = [j for j, e in self.table.items() if e.silence(self.k) >= self.params.evict_limit]
        for j in gone:
            del self.table[j]
            self.evicted.add(j)
        return gone


def local_update(rt: NodeRuntime, is_source: bool, s: float) -> float:
    """Evict long-silent neighbors, then apply the DSSD update to the buffered view.

    Neighbors admitted but not yet heard from (no buffered state) are left
    out of both the sum and the degree.
    """
    rt.evict_silent()
    vals = [rt.table[j].state for j in sorted(rt.table) if rt.table[j].state is not None]
    rt.state = update_value(vals, is_source, s)
    return rt.state


# -- loss models ------------------------------------------------------------------

class BernoulliLoss:
    """Each message is dropped independently with probability ``p``."""

    def __init__(self, p: float = 0.0):
        if not 0 <= p <= 1:
            raise ValueError("loss probability must lie in [0, 1]")
        self.p = p

    def drops(self, sender: int, receiver: int, count: int, rng: np.random.Generator) -> np.ndarray:
        if self.p == 0.0:
            return np.zeros(count, dtype=bool)
        return rng.random(count) < self.p

    def drops_broadcast(self, sender: int, receivers: Sequence[int], rng: np.random.Generator) -> np.ndarray:
        return self.drops(sender, -1, len(receivers), rng)


class BurstLoss:
    """Two-state (good/bad) loss per directed link, advanced once per message."""

    def __init__(self, p_good_to_bad: float, p_bad_to_good: float,
                 loss_good: float = 0.0, loss_bad: float = 1.0):
        self.p_gb, self.p_bg = p_good_to_bad, p_bad_to_good
        self.loss_good, self.loss_bad = loss_good, loss_bad
        self._bad: dict[tuple[int, int], bool] = {}

    def drops(self, sender: int, receiver: int, count: int, rng: np.random.Generator) -> np.ndarray:
        bad = self._bad.get((sender, receiver), False)
        out = np.empty(count, dtype=bool)
        u = rng.random((count, 2))
        for m in range(count):
            bad = u[m, 0] >= self.p_bg if bad else u[m, 0] < self.p_gb
            out[m] = u[m, 1] < (self.loss_bad if bad else self.loss_good)
        self._bad[(sender, receiver)] = bad
        return out

    def drops_broadcast(self, sender: int, receivers: Sequence[int], rng: np.random.Generator) -> np.ndarray:
        return np.array([self.drops(sender, j, 1, rng)[0] for j in receivers], dtype=bool)


@dataclass(frozen=True, order=True)
class MessageEvent:
    delivery_step: int
    sender: int
    receiver: int
    kind: str = STATE
    payload: float = 0.0
    sent_step: int = 0
    dropped: bool = False


@dataclass
class AsyncRun:
    trace: Trace
    runtimes: list[NodeRuntime]
    messages: list[MessageEvent]


def run_async(graphs: Sequence[Graph], s: float, eps: float, rng: np.random.Generator,
              params: AsyncParams | None = None, loss=None,
              failures: FailureSchedule | None = None,
              record_messages: bool = False) -> AsyncRun:
    params = params or AsyncParams()
    loss = loss or BernoulliLoss(0.0)
    failures = failures or FailureSchedule()
    graphs = with_failures(graphs, failures)
    n = graphs[0].n
    rts = [NodeRuntime(i, params=params) for i in range(1, n + 1)]
    states = np.zeros((len(graphs), n))
    queue: list[MessageEvent] = []
    log: list[MessageEvent] = []
    sent_b = params.beacons_per_window

    for k in range(len(graphs) - 1):
        g = graphs[k]
        dead = failures.failed_by(k)
        for rt in rts:
            rt.k = k

        if k % params.discovery_period == 0:
            for i in range(1, n + 1):
                if i in dead:
                    continue
                for j in g.sorted_neighbors(i):
                    lost = loss.drops(i, j, sent_b, rng)
                    if record_messages:
                        log.extend(MessageEvent(k, i, j, BEACON, 0.0, k, bool(d)) for d in lost)
                    rts[j - 1].admit(i, int(sent_b - lost.sum()), sent_b)

        for i in range(1, n + 1):
            if i in dead:
                continue
            nbrs = g.sorted_neighbors(i)
            lost = loss.drops_broadcast(i, nbrs, rng)
            delays = (rng.integers(0, params.max_delay + 1, len(nbrs))
                      if params.max_delay else np.zeros(len(nbrs), dtype=int))
            x_i = rts[i - 1].state
            for j, d, dl in zip(nbrs, lost, delays):
                ev = MessageEvent(k + int(dl), i, j, STATE, x_i, k, bool(d))
                if record_messages:
                    log.append(ev)
                if not d:
                    heapq.heappush(queue, ev)

        while queue and queue[0].delivery_step <= k:
            ev = heapq.heappop(queue)
            if ev.receiver not in dead:
                rts[ev.receiver - 1].receive(ev.sender, ev.payload, ev.sent_step)

        for rt in rts:
            if rt.node in dead:
                rt.state = 0.0
                rt.table.clear()
            else:
                local_update(rt, rt.node == 1, s)
        states[k + 1] = [rt.state for rt in rts]

    return AsyncRun(Trace(states, graphs, eps, s, [failures.failed_by(k) for k in range(len(graphs))]),
                    rts, log)
