"""Online gradient control driven only by measured innovative-packet counts.

Time is cut into intervals of length ``interval``. In each interval the
simulator counts innovative receptions per ordered pair; at
``interval - tail`` into it the controller turns the counts into rates,
refreshes a Broyden estimate of d(rates)/d(resource), forms the gradient of
the slowest destination's rate and schedules the next resource vector, which
takes effect at the interval boundary.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..csma import alpha_from_beta, beta_from_alpha
from ..nodeset import NetworkSpec
from .sim import CsmaChannel, Simulator

BROYDEN_EPS = 1e-9


def pair_list(n: int) -> list[tuple[int, int]]:
    """Ordered pairs (i, j), i != j, 1-based, transmitter-major."""
    return [(i, j) for i in range(1, n + 1) for j in range(1, n + 1) if i != j]


def measure_zprime(counts: np.ndarray, tau: float) -> np.ndarray:
    """Innovative rates c_ij / tau flattened in :func:`pair_list` order."""
    if tau <= 0:
        raise ValueError("interval length must be positive")
    counts = np.asarray(counts, dtype=float)
    off = ~np.eye(len(counts), dtype=bool)
    return counts[off] / tau


def broyden_update(J: np.ndarray, dz: np.ndarray, dr: np.ndarray,
                   eps: float = BROYDEN_EPS) -> np.ndarray:
    """Rank-one secant correction so that the result maps ``dr`` to ``dz``."""
    J = np.asarray(J, dtype=float)
    dz = np.asarray(dz, dtype=float)
    dr = np.asarray(dr, dtype=float)
    if not (np.all(np.isfinite(J)) and np.all(np.isfinite(dz)) and np.all(np.isfinite(dr))):
        raise ValueError("non-finite input to Broyden update")
    nrm2 = float(dr @ dr)
    if nrm2 < eps * eps:
        return J.copy()
    return J + np.outer((dz - J @ dr) / nrm2, dr)


def selector(k: int, n: int) -> np.ndarray:
    """0/1 vector over pairs marking those that end at destination k."""
    return np.array([1.0 if j == k else 0.0 for _, j in pair_list(n)])


def online_gradient(k: int, J: np.ndarray, n: int, threshold: float = 1.0) -> np.ndarray:
    """Sum of the Jacobian rows of pairs (i, k); scaled to unit norm when too large."""
    g = selector(k, n) @ J
    nrm = float(np.linalg.norm(g))
    if nrm >= threshold and nrm > 0:
        g = g / nrm
    return g


def apply_power_update(P, grad, a: float, gamma: float, lower, upper) -> np.ndarray:
    """Fixed +/- gamma steps where |a * grad| reaches gamma, clamped to bounds."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    P = np.asarray(P, dtype=float)
    step = a * np.asarray(grad, dtype=float)
    out = P + np.where(step >= gamma, gamma, np.where(step <= -gamma, -gamma, 0.0))
    return np.clip(out, lower, upper)


def apply_alpha_update(alpha, grad, a: float, beta_lower, beta_upper) -> np.ndarray:
    """Additive step on alpha (pkt/ms), clamped to the beta bounds."""
    alpha = np.asarray(alpha, dtype=float) + a * np.asarray(grad, dtype=float)
    lo = alpha_from_beta(beta_lower)
    hi = alpha_from_beta(beta_upper)
    return np.clip(alpha, lo, hi)


@dataclass(frozen=True)
class OnlineConfig:
    """Settings of the online controller (times in ms).

    For ``kind="power"`` resources are dBm and updates use the quantized
    gamma rule; for ``kind="csma"`` the resource is beta, the Jacobian is
    estimated against alpha and updates are additive in alpha.
    """

    kind: str = "power"
    interval: float = 150.0
    tail: float = 10.0
    gain: float = 1.0
    gamma: float = 0.2
    norm_threshold: float = 1.0
    freeze_threshold: float = 0.95
    init: float | tuple[float, ...] = 13.0
    lower: float | tuple[float, ...] = 0.0
    upper: float | tuple[float, ...] = 20.0
    first_step: float = 0.5

    def __post_init__(self):
        if self.kind not in ("power", "csma"):
            raise ValueError(f"unknown online kind {self.kind!r}")
        if not 0 <= self.tail < self.interval:
            raise ValueError("need 0 <= tail < interval")
        if self.gamma <= 0 or self.norm_threshold <= 0:
            raise ValueError("gamma and norm_threshold must be positive")


@dataclass
class OnlineTrace:
    """One row per control interval."""

    destinations: tuple[int, ...]
    t_start: list = field(default_factory=list)
    resources: list = field(default_factory=list)
    dest_rate: list = field(default_factory=list)
    T: list = field(default_factory=list)
    k: list = field(default_factory=list)
    frozen: list = field(default_factory=list)
    ranks: tuple | None = None
    label: str = "r"

    def min_throughput(self) -> np.ndarray:
        return np.array(self.T, dtype=float)

    def to_csv(self, path: str | Path) -> None:
        n = len(self.resources[0]) if self.resources else 0
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "T", "k", "frozen"] + [f"thr_{d}" for d in self.destinations]
                       + [f"{self.label}_{i + 1}" for i in range(n)])
            for row in zip(self.t_start, self.T, self.k, self.frozen, self.dest_rate,
                           self.resources):
                t, T, k, fr, rates, res = row
                w.writerow([repr(float(t)), repr(float(T)), k, int(fr)]
                           + [repr(float(x)) for x in rates]
                           + [repr(float(x)) for x in res])


def run_online(net: NetworkSpec, channel, config: OnlineConfig, seed: int, t_end: float,
               sample: float = 10.0, record_events: bool = False,
               stop_when_done: bool = True) -> tuple[OnlineTrace, Simulator]:
    """Simulate the session while the online controller adapts the resources."""
    csma = config.kind == "csma"
    if csma != isinstance(channel, CsmaChannel):
        raise ValueError("controller kind does not match the channel model")
    n = net.n_nodes
    lo = np.broadcast_to(np.asarray(config.lower, dtype=float), (n,)).copy()
    hi = np.broadcast_to(np.asarray(config.upper, dtype=float), (n,)).copy()
    r = np.clip(np.broadcast_to(np.asarray(config.init, dtype=float), (n,)).copy(), lo, hi)

    def physical(res):
        return alpha_from_beta(res) if csma else res

    channel.set_resources(physical(r))
    sim = Simulator(net, channel, seed, sample=sample, record_events=record_events)
    rng = np.random.default_rng([seed, 1])
    tau, window = config.interval, config.interval - config.tail
    J = np.zeros((n * (n - 1), n))
    trace = OnlineTrace(net.destinations, label="beta" if csma else "P_dBm")
    z_prev = x_prev = None
    step = 0
    while step * tau < t_end - 1e-9:
        t0 = step * tau
        sim.reset_counters()
        sim.run_until(t0 + window)
        counts = sim.innov.copy()
        z = measure_zprime(counts, window)
        rates = counts.sum(axis=0)[[d - 1 for d in net.destinations]] / window
        active = [d for d in net.destinations if not sim.decoders[d - 1].full]
        x = physical(r)
        frozen = False
        if not active:
            k, T = 0, float("nan")
            r_next = r
        else:
            k = min(active, key=lambda d: (rates[net.destinations.index(d)], d))
            T = float(rates[net.destinations.index(k)])
            if z_prev is None:
                r_next = np.clip(r + rng.uniform(-config.first_step, config.first_step, n),
                                 lo, hi)
            else:
                J = broyden_update(J, z - z_prev, x - x_prev)
                if T > config.freeze_threshold:
                    frozen = True
                    r_next = r
                else:
                    g = online_gradient(k, J, n, config.norm_threshold)
                    if csma:
                        r_next = np.clip(beta_from_alpha(
                            apply_alpha_update(x, g, config.gain, lo, hi)), lo, hi)
                    else:
                        r_next = apply_power_update(r, g, config.gain, config.gamma, lo, hi)
        trace.t_start.append(t0)
        trace.resources.append(r.copy())
        trace.dest_rate.append(rates)
        trace.T.append(T)
        trace.k.append(k)
        trace.frozen.append(frozen)
        t1 = min(t0 + tau, t_end)
        sim.run_until(t1)
        step += 1
        if not active and stop_when_done:
            break
        z_prev, x_prev = z, x
        if not np.array_equal(r_next, r):
            r = r_next
            sim.set_resources(physical(r))
    trace.ranks = sim.trace.as_arrays()
    return trace, sim
