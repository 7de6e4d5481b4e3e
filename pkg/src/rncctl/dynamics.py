"""Rank-evolution ODEs, fixed-step RK4 integration and the min-cut oracle."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Protocol

import numpy as np

from . import _core
from .nodeset import (NetworkSpec, RankState, check_rank_state, init_rank_state,
                      n_subsets)
from .phy import Geometry, PhyParams, hyperarc_rates_from_links, hyperarc_rates_phy
from .csma import ConflictGraph, alpha_from_beta, hyperarc_rates_csma

MAX_MINCUT_NODES = 16
DONE_TOL = 1e-6


class RateProvider(Protocol):
    """Maps a resource vector to hyperarc rates in canonical layout."""

    def __call__(self, t: float, r: np.ndarray | None) -> np.ndarray: ...


@dataclass(frozen=True)
class ConstantRates:
    z: np.ndarray

    def __call__(self, t, r=None):
        return self.z

    @classmethod
    def from_links(cls, p_link, rates):
        return cls(hyperarc_rates_from_links(p_link, rates))


@dataclass(frozen=True)
class PhyRates:
    """Resource = transmit powers in dBm."""

    geo: Geometry
    phy: PhyParams
    net: NetworkSpec

    def __call__(self, t, r):
        return hyperarc_rates_phy(r, self.geo, self.phy, self.net)


@dataclass(frozen=True)
class CsmaRates:
    """Resource = scheduling rates alpha in pkt/ms."""

    graph: ConflictGraph
    mu: float | tuple[float, ...]
    net: NetworkSpec

    def __call__(self, t, r):
        return hyperarc_rates_csma(r, self.mu, self.graph, self.net)

    def from_beta(self, beta):
        return self(0.0, alpha_from_beta(beta))


def rank_derivative(V, z, q: float, n_nodes: int, m: float | None = None,
                    check: bool = True) -> np.ndarray:
    """dV_K/dt = sum_{i not in K} z_{i,K} (1 - q^(V_K - V_{K+i})) for every K."""
    V = np.ascontiguousarray(V, dtype=float)
    z = np.ascontiguousarray(z, dtype=float)
    if check:
        check_rank_state(V, n_nodes, float(V.max()) if m is None else m)
    return _core.rank_derivative(V, z, n_nodes, math.log(q))


def throughput(V, z, q: float, n_nodes: int, d: int) -> float:
    """Instantaneous innovative-packet rate of node d."""
    return float(rank_derivative(V, z, q, n_nodes, check=False)[(1 << (d - 1)) - 1])


def dest_throughputs(V, z, net: NetworkSpec) -> np.ndarray:
    Vd = _core.rank_derivative(np.ascontiguousarray(V, dtype=float),
                               np.ascontiguousarray(z, dtype=float),
                               net.n_nodes, math.log(net.q))
    return np.array([Vd[(1 << (d - 1)) - 1] for d in net.destinations])


def min_cut(z, n_nodes: int, s: int, d: int) -> float:
    """Minimum over cuts T (d in T, s not in T) of sum_{i not in T} z_{i,T}."""
    if s == d:
        raise ValueError("source and destination must differ")
    if n_nodes > MAX_MINCUT_NODES:
        raise ValueError(f"{n_nodes} nodes exceeds the min-cut enumeration cap")
    z = np.asarray(z, dtype=float).reshape(n_nodes, n_subsets(n_nodes))
    sb, db = 1 << (s - 1), 1 << (d - 1)
    full = (1 << n_nodes) - 1
    free = [1 << j for j in range(n_nodes) if (1 << j) not in (sb, db)]
    best = math.inf
    for sel in range(1 << len(free)):
        T = db
        for b, bit in enumerate(free):
            if sel >> b & 1:
                T |= bit
        outside = full & ~T
        c = sum(z[i, T - 1] for i in range(n_nodes) if outside >> i & 1)
        best = min(best, c)
    return float(best)


@dataclass
class Trajectory:
    """Sampled rank trajectory; ``Vdot`` holds per-destination throughput."""

    destinations: tuple[int, ...]
    t: np.ndarray
    V: np.ndarray
    Vdot: np.ndarray
    m: float = field(default=0.0)

    def rank_of(self, d: int) -> np.ndarray:
        return self.V[:, (1 << (d - 1)) - 1]

    def dest_ranks(self) -> np.ndarray:
        return np.stack([self.rank_of(d) for d in self.destinations], axis=1)

    def completion_time(self, d: int, tol: float = DONE_TOL) -> float:
        v = self.rank_of(d)
        hit = np.flatnonzero(v >= self.m - tol)
        return float(self.t[hit[0]]) if hit.size else math.inf

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t"] + [f"V_{d}" for d in self.destinations]
                       + [f"Vdot_{d}" for d in self.destinations])
            ranks = self.dest_ranks()
            for k in range(len(self.t)):
                w.writerow([repr(float(self.t[k]))]
                           + [repr(float(x)) for x in ranks[k]]
                           + [repr(float(x)) for x in self.Vdot[k]])


def steady_slope(traj: Trajectory, d: int, frac: float = 0.5) -> float:
    """Least-squares slope of V_d over the last ``frac`` of its pre-completion samples."""
    v = traj.rank_of(d)
    done = np.flatnonzero(v >= traj.m - DONE_TOL)
    end = done[0] if done.size else len(v)
    start = int(end * (1.0 - frac))
    if end - start < 2:
        raise ValueError(f"too few samples before node {d} completes")
    return float(np.polyfit(traj.t[start:end], v[start:end], 1)[0])


class _Stepper:
    """Shared RK4 loop for plain and controlled integration."""

    def __init__(self, net: NetworkSpec, dt: float):
        if dt <= 0:
            raise ValueError("dt must be positive")
        self.net = net
        self.dt = dt
        self.lnq = math.log(net.q)
        self.V = np.array(init_rank_state(net).V, dtype=float)
        self.dest_idx = np.array([(1 << (d - 1)) - 1 for d in net.destinations])

    def advance(self, z: np.ndarray, n_steps: int, t: float) -> None:
        _core.rk4_steps(self.V, z, self.net.n_nodes, self.lnq, float(self.net.m),
                        self.dt, n_steps)
        if not np.all(np.isfinite(self.V)):
            raise FloatingPointError(
                f"non-finite rank state after {n_steps} steps ending at t={t:.6g} ms "
                f"(dt={self.dt}, max |z|={np.abs(z).max():.3g})")

    def vdot_dest(self, z: np.ndarray) -> np.ndarray:
        return _core.rank_derivative(self.V, z, self.net.n_nodes, self.lnq)[self.dest_idx]

    def done(self) -> bool:
        return bool(self.V[self.dest_idx].min() >= self.net.m - DONE_TOL)

    def active(self) -> list[int]:
        return [d for d, k in zip(self.net.destinations, self.dest_idx)
                if self.V[k] < self.net.m - DONE_TOL]


def integrate(net: NetworkSpec, provider: RateProvider | Callable, r=None,
              t_end: float = 10_000.0, dt: float = 0.1, sample: float = 10.0,
              stop_when_done: bool = True) -> Trajectory:
    """Fixed-step RK4 from the initial rank state, sampled every ``sample`` ms.

    Rates are re-read from ``provider`` at each sample boundary. Stops at the
    first sample where every destination holds m packets.
    """
    st = _Stepper(net, dt)
    n_per = max(1, int(round(sample / dt)))
    ts, Vs, Ds = [], [], []
    t = 0.0
    z = np.ascontiguousarray(provider(t, r), dtype=float)
    while True:
        ts.append(t)
        Vs.append(st.V.copy())
        Ds.append(st.vdot_dest(z))
        if t >= t_end - 1e-9 or (stop_when_done and st.done()):
            break
        n = min(n_per, max(1, int(round((t_end - t) / dt))))
        st.advance(z, n, t + n * dt)
        t = t + n * dt
        z = np.ascontiguousarray(provider(t, r), dtype=float)
    return Trajectory(net.destinations, np.array(ts), np.array(Vs), np.array(Ds), float(net.m))


def final_state(traj: Trajectory) -> RankState:
    return RankState(traj.V[-1], float(traj.t[-1]))
