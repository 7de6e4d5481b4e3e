"""Product-form CSMA model over a conflict graph.

Valid network states are the independent sets of the conflict graph. With
Poisson scheduling rates ``alpha`` and packet completion rates ``mu`` the
chain is reversible and ``Q(x)`` is proportional to the product of
``alpha_j / mu_j`` over transmitting nodes. From ``Q`` we get the probability
that a *scheduled* packet of node i reaches at least one node of a set, and
hence the hyperarc rates fed to the rank dynamics.

States are stored as bitmasks (bit ``j - 1`` set when node j transmits).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .nodeset import NetworkSpec, NodeSet, n_subsets

MAX_CSMA_NODES = 20


@dataclass(frozen=True)
class ConflictGraph:
    """Symmetric neighbor sets ``neighbors[i - 1]`` as bitmasks."""

    neighbors: tuple[int, ...]

    def __post_init__(self):
        n = len(self.neighbors)
        for i, nb in enumerate(self.neighbors):
            if nb >> i & 1:
                raise ValueError(f"node {i + 1} lists itself as a neighbor")
            if nb >> n:
                raise ValueError(f"node {i + 1} has a neighbor outside 1..{n}")
            for j in NodeSet(nb):
                if not self.neighbors[j - 1] >> i & 1:
                    raise ValueError(
                        f"asymmetric neighbor lists: {j} in N_{i + 1} but {i + 1} not in N_{j}")

    @classmethod
    def from_lists(cls, adjacency: Mapping[int, Sequence[int]] | Sequence[Sequence[int]]):
        if isinstance(adjacency, Mapping):
            n = max(adjacency)
            lists = [adjacency.get(i, ()) for i in range(1, n + 1)]
        else:
            lists = list(adjacency)
        return cls(tuple(NodeSet.of(nb).mask for nb in lists))

    @classmethod
    def from_edges(cls, n: int, edges):
        nb = [0] * n
        for a, b in edges:
            nb[a - 1] |= 1 << (b - 1)
            nb[b - 1] |= 1 << (a - 1)
        return cls(tuple(nb))

    @property
    def n_nodes(self) -> int:
        return len(self.neighbors)

    def closed(self, i: int) -> int:
        """Mask of N_i* = N_i plus i itself."""
        return self.neighbors[i - 1] | 1 << (i - 1)

    def neighbor_lists(self) -> dict[int, list[int]]:
        return {i + 1: list(NodeSet(nb)) for i, nb in enumerate(self.neighbors)}


def enumerate_states(g: ConflictGraph) -> list[int]:
    """All independent sets of ``g`` as bitmasks, the empty set first."""
    n = g.n_nodes
    if n > MAX_CSMA_NODES:
        raise ValueError(f"{n} nodes exceeds the CSMA enumeration cap {MAX_CSMA_NODES}")
    out = []

    def grow(state: int, blocked: int, start: int):
        out.append(state)
        for j in range(start, n):
            if not blocked >> j & 1:
                grow(state | 1 << j, blocked | g.closed(j + 1), j + 1)

    grow(0, 0, 0)
    return out


def stationary(states: Sequence[int], v) -> np.ndarray:
    """Product-form probabilities ``Q(x) = Q(x0) * prod_{j in x} v_j``."""
    v = np.asarray(v, dtype=float)
    if np.any(v <= 0):
        raise ValueError("alpha/mu ratios must be positive")
    st = np.asarray(states, dtype=np.int64)
    on = (st[:, None] >> np.arange(len(v))[None, :]) & 1
    logw = on @ np.log(v)
    w = np.exp(logw - logw.max())
    return w / w.sum()


@dataclass(frozen=True)
class CsmaChain:
    graph: ConflictGraph
    states: np.ndarray
    Q: np.ndarray

    @classmethod
    def build(cls, g: ConflictGraph, alpha, mu, states: Sequence[int] | None = None):
        alpha = np.broadcast_to(np.asarray(alpha, dtype=float), (g.n_nodes,))
        mu = np.broadcast_to(np.asarray(mu, dtype=float), (g.n_nodes,))
        if np.any(mu <= 0):
            raise ValueError("completion rates must be positive")
        if states is None:
            states = enumerate_states(g)
        st = np.asarray(states, dtype=np.int64)
        st.setflags(write=False)
        Q = stationary(st, alpha / mu)
        Q.setflags(write=False)
        return cls(g, st, Q)

    def idle_matrix(self) -> np.ndarray:
        """``ok[x, j]``: every node of N_j* is idle in state x."""
        closed = np.array([self.graph.closed(j) for j in range(1, self.graph.n_nodes + 1)])
        return (self.states[:, None] & closed[None, :]) == 0


def prob_all_idle(X, chain: CsmaChain) -> float:
    """Probability that no node of ``X`` is transmitting."""
    mask = X.mask if isinstance(X, NodeSet) else NodeSet.of(X).mask
    return float(chain.Q[(chain.states & mask) == 0].sum())


def p_sched_pair(i: int, j: int, chain: CsmaChain) -> float:
    """P'_{i,j}: a packet scheduled at i is received by neighbor j."""
    g = chain.graph
    if not g.neighbors[i - 1] >> (j - 1) & 1:
        return 0.0
    return prob_all_idle(NodeSet(g.closed(i) | g.closed(j)), chain)


def p_sched_set(i: int, K, chain: CsmaChain) -> float:
    """P'_{i,K}: a scheduled packet of i is received by at least one node of K."""
    g = chain.graph
    kmask = K.mask if isinstance(K, NodeSet) else NodeSet.of(K).mask
    kp = kmask & g.neighbors[i - 1]
    if kp == 0:
        return 0.0
    st = chain.states
    event = (st & g.closed(i)) == 0
    any_rx = np.zeros(len(st), dtype=bool)
    for j in NodeSet(kp):
        any_rx |= (st & g.closed(j)) == 0
    return float(chain.Q[event & any_rx].sum())


def receiver_masks(chain: CsmaChain) -> np.ndarray:
    """``R[x, i]``: mask of neighbors j of i that can receive a packet scheduled by i in x."""
    g = chain.graph
    n = g.n_nodes
    ok = chain.idle_matrix()
    bits = 1 << np.arange(n)
    R = np.zeros((len(chain.states), n), dtype=np.int64)
    for i in range(n):
        nb_ok = ok & ((g.neighbors[i] & bits) != 0)[None, :]
        R[:, i] = np.where(ok[:, i], nb_ok @ bits, 0)
    return R


def p_sched_all(chain: CsmaChain) -> np.ndarray:
    """Matrix ``P[i, K-1]`` of P'_{i,K} over all nonempty K (i 0-based)."""
    n = chain.graph.n_nodes
    S = n_subsets(n)
    R = receiver_masks(chain)
    K = np.arange(1, S + 1)
    P = np.empty((n, S))
    for i in range(n):
        hit = (R[:, i][:, None] & K[None, :]) != 0
        P[i] = chain.Q @ hit
    return P


def hyperarc_rates_csma(alpha, mu, g: ConflictGraph, net: NetworkSpec | None = None,
                        chain: CsmaChain | None = None) -> np.ndarray:
    """Canonical z vector ``z_{i,K} = alpha_i * P'_{i,K}`` (alpha in pkt/ms)."""
    alpha = np.broadcast_to(np.asarray(alpha, dtype=float), (g.n_nodes,))
    if net is not None and net.n_nodes != g.n_nodes:
        raise ValueError("conflict graph and network disagree on node count")
    if chain is None:
        # zero-rate nodes never transmit: drop them from the chain, keep their row 0
        chain = CsmaChain.build(g, np.maximum(alpha, 1e-300), mu)
    P = p_sched_all(chain)
    z = alpha[:, None] * P
    K = np.arange(1, n_subsets(g.n_nodes) + 1)
    z[((K[None, :] >> np.arange(g.n_nodes)[:, None]) & 1).astype(bool)] = 0.0
    return z.ravel()


def generator_matrix(chain: CsmaChain, alpha, mu) -> np.ndarray:
    """Explicit CTMC generator over ``chain.states`` (rows sum to zero)."""
    g = chain.graph
    n = g.n_nodes
    alpha = np.broadcast_to(np.asarray(alpha, dtype=float), (n,))
    mu = np.broadcast_to(np.asarray(mu, dtype=float), (n,))
    index = {int(s): k for k, s in enumerate(chain.states)}
    G = np.zeros((len(index), len(index)))
    for s, a in index.items():
        for j in range(n):
            bit = 1 << j
            if s & bit:
                G[a, index[s ^ bit]] += mu[j]
            elif s & g.closed(j + 1) == 0:
                G[a, index[s | bit]] += alpha[j]
        G[a, a] = -G[a].sum()
    return G


def alpha_from_beta(beta) -> np.ndarray:
    """Scheduling rate in pkt/ms from aggressiveness beta = ln(alpha in pkt/s)."""
    return np.exp(np.asarray(beta, dtype=float)) / 1000.0


def beta_from_alpha(alpha) -> np.ndarray:
    return np.log(np.asarray(alpha, dtype=float) * 1000.0)
