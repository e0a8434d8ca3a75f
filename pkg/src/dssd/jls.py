"""Mean and second-moment analysis of DSSD on Markov-switching topologies.

With the graph driven by a Markov chain over ``G_1..G_N`` the state obeys
the jump linear system

    x(k+1) = J_theta(k) x(k) + B_theta(k) w,   J_i = (D_i + I)^-1 A_i,
                                               B_i = (D_i + I)^-1, w = s e1.

Conditioning on the current mode gives linear recursions for the
mode-split first moments ``q_j(k) = E[x(k) 1{theta(k) = j}]`` and second
moments ``Q_j(k) = E[x(k) x(k)^T 1{theta(k) = j}]``. Their limits are
fixed points of two linear maps whose matrices are ``C`` (size ``Nn``)
and ``D`` (size ``Nn^2``); block ``(j, i)`` of ``C`` is ``p_ij J_i`` and
block ``(j, i)`` of ``D`` is ``p_ij kron(J_i, J_i)``. The limiting mean
and correlation are the sums over modes.

Matrices are stacked column-major (``vec``), so ``vec(J Q J^T) =
kron(J, J) vec(Q)``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .graph import Graph, GraphSet, connected_to_source
from .process import MarkovChainSpec, NonErgodicChainError, stationary_distribution

log = logging.getLogger(__name__)

DEFAULT_MAX_D_ROWS = 20_000


class JlsRefusal(ValueError):
    """Raised when the closed forms do not apply (non-ergodic chain, rho(D) >= 1, size cap)."""


@dataclass(frozen=True, eq=False)
class JlsSystem:
    J: tuple[np.ndarray, ...]
    B: tuple[np.ndarray, ...]
    w: np.ndarray
    chain: MarkovChainSpec
    s: float

    @property
    def n(self) -> int:
        return len(self.w)

    @property
    def N(self) -> int:
        return len(self.J)

    @property
    def P(self) -> np.ndarray:
        return self.chain.P


@dataclass(frozen=True, eq=False)
class JlsPrediction:
    mu: np.ndarray
    Q: np.ndarray
    rho_C: float
    rho_D: float
    q: np.ndarray
    Q_blocks: tuple[np.ndarray, ...]
    pi: np.ndarray


def build_system(chain: MarkovChainSpec, s: float) -> JlsSystem:
    if s <= 0:
        raise ValueError("source strength must be positive")
    Js, Bs = [], []
    for g in chain.graph_set:
        inv = 1.0 / (g.degrees() + 1.0)
        Js.append(g.adjacency() * inv[:, None])
        Bs.append(np.diag(inv))
    w = np.zeros(chain.n)
    w[0] = s
    return JlsSystem(tuple(Js), tuple(Bs), w, chain, float(s))


def block_diag(blocks: Sequence[np.ndarray]) -> np.ndarray:
    m = blocks[0].shape[0]
    out = np.zeros((m * len(blocks), m * len(blocks)))
    for i, b in enumerate(blocks):
        out[i * m:(i + 1) * m, i * m:(i + 1) * m] = b
    return out


def build_C_D(sys: JlsSystem, max_rows: int = DEFAULT_MAX_D_ROWS) -> tuple[np.ndarray, np.ndarray]:
    n, N = sys.n, sys.N
    rows = N * n * n
    if rows > max_rows:
        raise JlsRefusal(f"second-moment matrix would be {rows}x{rows}; cap is {max_rows} rows")
    PT = sys.P.T
    C = np.kron(PT, np.eye(n)) @ block_diag(sys.J)
    D = np.kron(PT, np.eye(n * n)) @ block_diag([np.kron(J, J) for J in sys.J])
    return C, D


def spectral_radius(M: np.ndarray) -> float:
    if M.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(M))))


def power_iteration_radius(M: np.ndarray, iters: int = 5000, seed: int = 0) -> float:
    """Spectral radius of a nonnegative matrix from the growth rate of ``M^k v``.

    Uses ``||M^k v||^(1/k)`` with renormalisation, which converges for
    nonnegative matrices even when the dominant eigenvalue is not simple.
    """
    v = np.random.default_rng(seed).random(M.shape[0]) + 0.5
    tail = iters // 2
    acc = 0.0
    for k in range(iters):
        v = M @ v
        nrm = np.max(np.abs(v))
        if nrm == 0.0:
            return 0.0
        v /= nrm
        if k >= iters - tail:
            acc += np.log(nrm)
    return float(np.exp(acc / tail))


def spectral_radii(C: np.ndarray, D: np.ndarray) -> tuple[float, float]:
    return spectral_radius(C), spectral_radius(D)


def block_norm_matrix(M: np.ndarray, block: int, ord=np.inf) -> np.ndarray:
    """Matrix of induced norms of the ``block x block`` sub-blocks of ``M``."""
    m = M.shape[0] // block
    out = np.empty((m, m))
    for i in range(m):
        for j in range(m):
            out[i, j] = np.linalg.norm(M[i * block:(i + 1) * block, j * block:(j + 1) * block], ord)
    return out


# -- column stacking ------------------------------------------------------------

def phi(Y: np.ndarray) -> np.ndarray:
    return np.asarray(Y).reshape(-1, order="F")


def phi_hat(Ys: Sequence[np.ndarray]) -> np.ndarray:
    return np.concatenate([phi(Y) for Y in Ys])


def phi_hat_inv(v: np.ndarray, N: int, m: int, n: int | None = None) -> tuple[np.ndarray, ...]:
    n = m if n is None else n
    v = np.asarray(v)
    if v.shape != (N * m * n,):
        raise ValueError(f"expected a vector of length {N * m * n}, got {v.shape}")
    return tuple(v[i * m * n:(i + 1) * m * n].reshape((m, n), order="F") for i in range(N))


def neumann_solve(M: np.ndarray, b: np.ndarray, tol: float = 1e-14, max_terms: int = 1_000_000) -> np.ndarray:
    """``(I - M)^-1 b`` as the partial sums of ``sum_k M^k b``; needs rho(M) < 1."""
    total = b.astype(float).copy()
    term = total.copy()
    scale = max(np.max(np.abs(b)), 1e-300)
    for _ in range(max_terms):
        term = M @ term
        total += term
        if np.max(np.abs(term)) <= tol * scale:
            return total
    raise RuntimeError("Neumann series did not converge")


# -- closed forms ------------------------------------------------------------------

def _psi(sys: JlsSystem, pi: np.ndarray) -> np.ndarray:
    n, N, P = sys.n, sys.N, sys.P
    Bw = [B @ sys.w for B in sys.B]
    return np.concatenate([sum(P[i, j] * pi[i] * Bw[i] for i in range(N)) for j in range(N)])


def _R(sys: JlsSystem, q: Sequence[np.ndarray], pi: np.ndarray) -> list[np.ndarray]:
    N, P = sys.N, sys.P
    terms = []
    for i in range(N):
        Bw = sys.B[i] @ sys.w
        Jq = sys.J[i] @ q[i]
        terms.append(pi[i] * np.outer(Bw, Bw) + np.outer(Jq, Bw) + np.outer(Bw, Jq))
    return [sum(P[i, j] * terms[i] for i in range(N)) for j in range(N)]


def predict(sys: JlsSystem, max_rows: int = DEFAULT_MAX_D_ROWS) -> JlsPrediction:
    """Limiting mean ``mu`` and correlation ``Q`` of the state."""
    try:
        sys.chain.check_ergodic()
    except NonErgodicChainError as exc:
        raise JlsRefusal(str(exc)) from exc
    pi = stationary_distribution(sys.chain)
    n, N = sys.n, sys.N
    C, D = build_C_D(sys, max_rows)
    rho_C, rho_D = spectral_radii(C, D)
    if rho_D >= 1:
        raise JlsRefusal(f"rho(D) = {rho_D} >= 1; no mean-square limit")

    q = np.linalg.solve(np.eye(N * n) - C, _psi(sys, pi))
    q_blocks = [q[i * n:(i + 1) * n] for i in range(N)]
    mu = np.sum(q_blocks, axis=0)

    vecQ = np.linalg.solve(np.eye(N * n * n) - D, phi_hat(_R(sys, q_blocks, pi)))
    Q_blocks = tuple((Y + Y.T) / 2 for Y in phi_hat_inv(vecQ, N, n))
    Q = np.sum(Q_blocks, axis=0)
    return JlsPrediction(mu, Q, rho_C, rho_D, q, Q_blocks, pi)


def positivity_pattern(sys: JlsSystem, pred: JlsPrediction | None = None,
                       rel_tol: float = 1e-9) -> np.ndarray:
    """Nodes whose limiting mean state exceeds ``rel_tol * s``.

    For an entrywise positive transition matrix this coincides with
    reachability of node 1 in the union graph. Otherwise the result is
    still computed but carries no such guarantee.
    """
    if not sys.chain.is_positive:
        log.warning("transition matrix is not entrywise positive; "
                    "positivity need not match union-graph reachability")
    pred = predict(sys) if pred is None else pred
    return pred.mu > rel_tol * sys.s


def union_reachability(sys: JlsSystem) -> np.ndarray:
    return connected_to_source(sys.chain.graph_set.union())


def monte_carlo_moments(sys: JlsSystem, k_max: int, trials: int,
                        rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Empirical ``E[x(k_max)]`` and ``E[x(k_max) x(k_max)^T]`` over independent runs.

    Each run starts from ``x(0) = 0`` with ``theta(0)`` drawn from the chain's
    initial distribution (stationary unless configured).
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    n, N = sys.n, sys.N
    J = np.stack(sys.J)
    b = np.stack([B @ sys.w for B in sys.B])
    cum = np.cumsum(sys.P, axis=1)
    cum[:, -1] = 1.0
    init = np.cumsum(sys.chain.initial_distribution())
    init[-1] = 1.0
    theta = np.searchsorted(init, rng.random(trials), side="right")
    x = np.zeros((trials, n))
    for _ in range(k_max):
        x = np.einsum("tij,tj->ti", J[theta], x) + b[theta]
        u = rng.random(trials)
        theta = (u[:, None] >= cum[theta]).sum(axis=1)
    return x.mean(axis=0), x.T @ x / trials


def report(sys: JlsSystem, pred: JlsPrediction) -> dict:
    pattern = pred.mu > 1e-9 * sys.s
    reach = union_reachability(sys)
    return {
        "n": sys.n,
        "N": sys.N,
        "s": sys.s,
        "mu": pred.mu.tolist(),
        "diag_Q": np.diag(pred.Q).tolist(),
        "rho_C": pred.rho_C,
        "rho_D": pred.rho_D,
        "stationary_distribution": pred.pi.tolist(),
        "transition_matrix_positive": sys.chain.is_positive,
        "positivity_pattern": pattern.tolist(),
        "union_graph_reachability": reach.tolist(),
        "reachability_match": bool(np.array_equal(pattern, reach)),
    }


def alternating_pair() -> GraphSet:
    """The four-node pair: neither graph is connected, their union is."""
    return GraphSet([Graph(4, [(1, 2), (1, 3)]), Graph(4, [(2, 4), (3, 4)])])
