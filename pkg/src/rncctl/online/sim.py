"""Event-driven packet simulator with real GF(2^8) network coding.

Two channel models:

* ``LinkChannel`` / ``PhyChannel``: node i emits as a Poisson process of
  rate lambda_i; each emission reaches every other node j independently with
  probability P_ij (fixed, or from the SINR model at the current powers).
* ``CsmaChannel``: node i schedules packets as a Poisson process of rate
  alpha_i, transmits only if no neighbor is transmitting, and holds the
  channel for an exponential time of mean 1/mu_i. Neighbor j receives the
  packet iff no node of N_j* other than i is transmitting when it starts and
  none starts before it ends.

The loop is single threaded; ties in time are broken by insertion order.
"""

from __future__ import annotations

import csv
import gzip
import heapq
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from ..csma import ConflictGraph, CsmaChain, alpha_from_beta
from ..nodeset import NetworkSpec
from ..phy import Geometry, PhyParams, link_probabilities
from .gf import Decoder

EMIT, SCHED, END = 0, 1, 2


class LinkChannel:
    """Fixed per-link reception probabilities ``p_link[i, j]`` (0-based)."""

    kind = "links"

    def __init__(self, p_link, rates):
        self.p_link = np.array(p_link, dtype=float)
        self.rates = np.array(rates, dtype=float)
        if np.any(self.rates < 0):
            raise ValueError("emission rates must be nonnegative")
        if np.any((self.p_link < 0) | (self.p_link > 1)):
            raise ValueError("link probabilities must lie in [0, 1]")

    def set_resources(self, r):
        raise ValueError("a fixed-link channel has no controllable resource")


class PhyChannel(LinkChannel):
    """Link probabilities follow the SINR model at the current transmit powers."""

    kind = "phy"

    def __init__(self, geo: Geometry, phy: PhyParams, rates, p_dbm):
        self.geo, self.phy = geo, phy
        super().__init__(np.zeros((geo.n_nodes, geo.n_nodes)), rates)
        self.set_resources(p_dbm)

    def set_resources(self, p_dbm):
        self.power = np.array(p_dbm, dtype=float)
        self.p_link = link_probabilities(self.power, self.geo, self.phy)


class CsmaChannel:
    kind = "csma"

    def __init__(self, graph: ConflictGraph, mu, alpha):
        self.graph = graph
        self.mu = np.broadcast_to(np.asarray(mu, dtype=float), (graph.n_nodes,)).copy()
        if np.any(self.mu <= 0):
            raise ValueError("completion rates must be positive")
        self.set_resources(alpha)

    def set_resources(self, alpha):
        a = np.array(alpha, dtype=float)
        if np.any(a < 0):
            raise ValueError("scheduling rates must be nonnegative")
        self.alpha = a

    def set_beta(self, beta):
        self.set_resources(alpha_from_beta(beta))

    def analytic_chain(self) -> CsmaChain:
        return CsmaChain.build(self.graph, np.maximum(self.alpha, 1e-300), self.mu)


@dataclass
class RankTrace:
    t: list = field(default_factory=list)
    ranks: list = field(default_factory=list)

    def as_arrays(self):
        return np.array(self.t), np.array(self.ranks)


class Simulator:
    """Packet-level simulation of one multicast session.

    Drive it with :meth:`run_until`; change resources in between with
    :meth:`set_resources`. ``innov`` counts innovative receptions per ordered
    pair since the last :meth:`reset_counters`; ``recv`` counts all error-free
    receptions, innovative or not.
    """

    def __init__(self, net: NetworkSpec, channel, seed: int = 0, payload_len: int = 8,
                 sample: float = 10.0, record_events: bool = False):
        if net.q != 256:
            raise ValueError("packet simulation implements GF(256) only")
        if isinstance(channel, CsmaChannel):
            if channel.graph.n_nodes != net.n_nodes:
                raise ValueError("conflict graph size differs from the network")
        elif channel.p_link.shape != (net.n_nodes, net.n_nodes):
            raise ValueError("link matrix size differs from the network")
        self.net = net
        self.channel = channel
        self.rng = np.random.default_rng(seed)
        n = net.n_nodes
        message = self.rng.integers(0, 256, (net.m, payload_len), dtype=np.uint8)
        self.message = message
        self.decoders = [Decoder.source(message) if i + 1 == net.source
                         else Decoder(net.m, payload_len) for i in range(n)]
        self.t = 0.0
        self.sample = sample
        self._next_sample = 0.0
        self.trace = RankTrace()
        self.innov = np.zeros((n, n), dtype=np.int64)
        self.recv = np.zeros((n, n), dtype=np.int64)
        self.tx = np.zeros(n, dtype=np.int64)      # transmissions started / emissions
        self.sched = np.zeros(n, dtype=np.int64)   # CSMA scheduling attempts
        self.record_events = record_events
        self.events: list[tuple] = []
        self._heap: list = []
        self._seq = itertools.count()
        self._csma = isinstance(channel, CsmaChannel)
        self._gen = np.zeros(n, dtype=np.int64)    # invalidates stale arrivals
        if self._csma:
            g = channel.graph
            self._closed_others = [[u for u in range(n) if (g.closed(j + 1) >> u) & 1]
                                   for j in range(n)]
            self._nbrs = [[u for u in range(n) if (g.neighbors[i] >> u) & 1] for i in range(n)]
            self._busy = np.zeros(n, dtype=bool)
            self._ongoing: dict[int, set] = {}
        for i in range(n):
            self._arm(i)

    # scheduling -----------------------------------------------------------

    def _rate(self, i):
        return self.channel.alpha[i] if self._csma else self.channel.rates[i]

    def _arm(self, i):
        """(Re)draw node i's next arrival from its current Poisson rate."""
        self._gen[i] += 1
        rate = self._rate(i)
        if rate > 0:
            dt = self.rng.exponential(1.0 / rate)
            heapq.heappush(self._heap, (self.t + dt, next(self._seq),
                                        SCHED if self._csma else EMIT, i, self._gen[i]))

    def set_resources(self, r):
        """Apply new powers (dBm) or scheduling rates (pkt/ms) from now on."""
        self.channel.set_resources(r)
        for i in range(self.net.n_nodes):
            self._arm(i)

    def reset_counters(self):
        self.innov[:] = 0
        self.recv[:] = 0

    # state ------------------------------------------------------------------

    def ranks(self) -> np.ndarray:
        return np.array([d.rank for d in self.decoders])

    def done(self) -> bool:
        return all(self.decoders[d - 1].full for d in self.net.destinations)

    def _record_sample(self, upto):
        while self._next_sample <= upto + 1e-12:
            self.trace.t.append(self._next_sample)
            self.trace.ranks.append(self.ranks())
            self._next_sample += self.sample

    def run_until(self, t_stop: float, stop_when_done: bool = False) -> None:
        heap = self._heap
        while heap and heap[0][0] <= t_stop:
            t, _, kind, i, gen = heapq.heappop(heap)
            if kind != END and gen != self._gen[i]:
                continue
            self._record_sample(t)
            self.t = t
            if kind == EMIT:
                self._emit(i)
                self._arm_next(i)
            elif kind == SCHED:
                self._schedule(i)
                self._arm_next(i)
            else:
                self._finish(i)
            if stop_when_done and self.done():
                self._record_sample(t)
                return
        self._record_sample(t_stop)
        self.t = t_stop

    def _arm_next(self, i):
        rate = self._rate(i)
        if rate > 0:
            heapq.heappush(self._heap, (self.t + self.rng.exponential(1.0 / rate),
                                        next(self._seq), SCHED if self._csma else EMIT,
                                        i, self._gen[i]))

    # packet handling --------------------------------------------------------

    def _deliver(self, i, receivers):
        src = self.decoders[i]
        pkt = None
        for j in receivers:
            self.recv[i, j] += 1
            dec = self.decoders[j]
            innovative = False
            if not dec.full:
                if pkt is None:
                    pkt = src.encode(self.rng)
                    if pkt is None:
                        pkt = False
                if pkt is not False and dec.receive(pkt):
                    innovative = True
                    self.innov[i, j] += 1
            if self.record_events:
                self.events.append((self.t, "rx", i + 1, j + 1, int(innovative)))

    def _emit(self, i):
        self.tx[i] += 1
        p = self.channel.p_link[i]
        hits = self.rng.random(len(p)) < p
        hits[i] = False
        if self.record_events:
            self.events.append((self.t, "tx", i + 1, 0, 0))
        if hits.any():
            self._deliver(i, np.flatnonzero(hits))

    def _schedule(self, i):
        self.sched[i] += 1
        busy = self._busy
        if busy[i] or any(busy[u] for u in self._nbrs[i]):
            if self.record_events:
                self.events.append((self.t, "defer", i + 1, 0, 0))
            return
        # i starts: it blocks reception at itself and at its neighbors
        for u, rx in self._ongoing.items():
            rx.discard(i)
            for j in self._nbrs[i]:
                rx.discard(j)
        rx = {j for j in self._nbrs[i]
              if not any(busy[u] for u in self._closed_others[j] if u != i)}
        busy[i] = True
        self._ongoing[i] = rx
        self.tx[i] += 1
        if self.record_events:
            self.events.append((self.t, "tx", i + 1, 0, 0))
        dur = self.rng.exponential(1.0 / self.channel.mu[i])
        heapq.heappush(self._heap, (self.t + dur, next(self._seq), END, i, 0))

    def _finish(self, i):
        self._busy[i] = False
        rx = self._ongoing.pop(i)
        if rx:
            self._deliver(i, sorted(rx))

    # export ---------------------------------------------------------------

    def write_events(self, path) -> None:
        """gzip CSV: t, event, src, dst, innovative."""
        with gzip.open(path, "wt", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "event", "src", "dst", "innovative"])
            for ev in self.events:
                w.writerow([repr(float(ev[0])), ev[1], ev[2], ev[3], ev[4]])


def simulate(net: NetworkSpec, channel, seed: int, t_end: float, payload_len: int = 8,
             sample: float = 10.0, stop_when_done: bool = True,
             record_events: bool = False) -> Simulator:
    """Run a static-resource session and return the finished simulator."""
    sim = Simulator(net, channel, seed, payload_len, sample, record_events)
    sim.run_until(t_end, stop_when_done=stop_when_done)
    return sim


def mean_rank_traces(net: NetworkSpec, make_channel, seeds, t_end: float,
                     sample: float = 10.0) -> tuple[np.ndarray, np.ndarray]:
    """Average per-node rank over seeds on a common time grid (ranks held after completion)."""
    grid = np.arange(0.0, t_end + 1e-9, sample)
    acc = np.zeros((len(grid), net.n_nodes))
    for s in seeds:
        sim = simulate(net, make_channel(), s, t_end, sample=sample, stop_when_done=True)
        t, R = sim.trace.as_arrays()
        idx = np.minimum(np.searchsorted(t, grid, side="right") - 1, len(t) - 1)
        acc += R[idx]
    return grid, acc / len(seeds)
