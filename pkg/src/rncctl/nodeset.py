"""Node-set algebra, subset indexing and the joint-rank state.

Node sets are N-bit masks: node ``i`` (1-based) is bit ``i - 1``. Every
vector indexed by a nonempty subset (ranks, throughputs, one row of hyperarc
rates) uses position ``mask - 1``, so ``{1}, {2}, {1,2}, {3}, ...`` appear in
binary-counting order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator

import numpy as np

MAX_NODES = 12


class InvalidRankState(ValueError):
    pass


@dataclass(frozen=True)
class NodeSet:
    """Immutable set of 1-based node ids stored as a bitmask."""

    mask: int = 0

    @classmethod
    def of(cls, nodes: Iterable[int]) -> "NodeSet":
        m = 0
        for i in nodes:
            if i < 1:
                raise ValueError(f"node ids start at 1, got {i}")
            m |= 1 << (i - 1)
        return cls(m)

    @classmethod
    def from_index(cls, index: int) -> "NodeSet":
        if index < 1:
            raise ValueError("rank index must be >= 1")
        return cls(index)

    def __contains__(self, i: int) -> bool:
        return i >= 1 and bool(self.mask >> (i - 1) & 1)

    def __iter__(self) -> Iterator[int]:
        m, i = self.mask, 1
        while m:
            if m & 1:
                yield i
            m >>= 1
            i += 1

    def __len__(self) -> int:
        return bin(self.mask).count("1")

    def __or__(self, other: "NodeSet") -> "NodeSet":
        return NodeSet(self.mask | other.mask)

    def __and__(self, other: "NodeSet") -> "NodeSet":
        return NodeSet(self.mask & other.mask)

    def __sub__(self, other: "NodeSet") -> "NodeSet":
        return NodeSet(self.mask & ~other.mask)

    def add(self, i: int) -> "NodeSet":
        return NodeSet(self.mask | 1 << (i - 1))

    def __repr__(self) -> str:
        return "{" + ",".join(map(str, self)) + "}"


def subset_index(K: NodeSet | Iterable[int]) -> int:
    """Position (1-based) of subset ``K`` in every subset-indexed vector."""
    if not isinstance(K, NodeSet):
        K = NodeSet.of(K)
    if K.mask == 0:
        raise ValueError("empty subset has no rank index")
    return K.mask


def subset_of(index: int) -> NodeSet:
    return NodeSet.from_index(index)


def n_subsets(n_nodes: int) -> int:
    return (1 << n_nodes) - 1


@dataclass(frozen=True)
class NetworkSpec:
    """Multicast session: ``m`` packets from ``source`` to ``destinations`` over GF(q).

    ``rates`` holds the per-node transmission rate lambda_i (pkt/ms); it is only
    consulted by the PHY rate model.
    """

    n_nodes: int
    source: int
    destinations: tuple[int, ...]
    m: int
    q: int = 256
    rates: tuple[float, ...] = field(default=())

    def __post_init__(self):
        if not 1 <= self.n_nodes <= MAX_NODES:
            raise ValueError(f"node count {self.n_nodes} outside 1..{MAX_NODES}")
        if not 1 <= self.source <= self.n_nodes:
            raise ValueError(f"source {self.source} is not a node")
        dests = tuple(sorted(set(self.destinations)))
        if not dests:
            raise ValueError("destination set is empty")
        for d in dests:
            if not 1 <= d <= self.n_nodes:
                raise ValueError(f"destination {d} is not a node")
        object.__setattr__(self, "destinations", dests)
        if self.m < 1:
            raise ValueError("message count must be >= 1")
        if self.q < 2:
            raise ValueError("field size must be >= 2")
        rates = tuple(float(x) for x in self.rates) or (1.0,) * self.n_nodes
        if len(rates) != self.n_nodes:
            raise ValueError("one transmission rate per node required")
        if any(x <= 0 for x in rates):
            raise ValueError("transmission rates must be positive")
        object.__setattr__(self, "rates", rates)

    @property
    def n_sub(self) -> int:
        return n_subsets(self.n_nodes)

    @property
    def dest_set(self) -> NodeSet:
        return NodeSet.of(self.destinations)


@dataclass(frozen=True)
class RankState:
    """Fluid joint ranks ``V`` (length 2^N - 1, packets) at time ``t`` (ms)."""

    V: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        V = np.array(self.V, dtype=float)
        V.setflags(write=False)
        object.__setattr__(self, "V", V)

    def rank(self, K: NodeSet | Iterable[int]) -> float:
        return float(self.V[subset_index(K) - 1])


def init_rank_state(net: NetworkSpec) -> RankState:
    """Source-containing sets start at rank m, all others at 0."""
    idx = np.arange(1, net.n_sub + 1)
    V = np.where(idx & (1 << (net.source - 1)), float(net.m), 0.0)
    return RankState(V, 0.0)


def check_rank_state(V: np.ndarray, n_nodes: int, m: float, tol: float = 1e-9) -> None:
    """Raise InvalidRankState if V leaves [0, m] or is not monotone in K."""
    tol = tol * max(m, 1.0)
    if not np.all(np.isfinite(V)):
        raise InvalidRankState("invalid rank state: non-finite entries")
    if V.min() < -tol or V.max() > m + tol:
        raise InvalidRankState("invalid rank state: rank outside [0, m]")
    K = np.arange(1, n_subsets(n_nodes) + 1)
    for i in range(n_nodes):
        bit = 1 << i
        sel = (K & bit) == 0
        gap = V[K[sel] - 1] - V[(K[sel] | bit) - 1]
        if gap.max(initial=-np.inf) > tol:
            raise InvalidRankState(
                f"invalid rank state: V_K exceeds V_(K+{i + 1}) by {gap.max():.3g}")
