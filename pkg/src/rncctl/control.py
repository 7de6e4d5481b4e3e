"""Centralized gradient control of transmit power or CSMA aggressiveness.

At every refresh the controller picks the unfinished destination with the
smallest instantaneous throughput, estimates the throughput change caused by
nudging each node's resource, and moves resources along that direction while
the rank ODEs keep integrating.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import _core
from .csma import alpha_from_beta, beta_from_alpha
from .dynamics import RateProvider, Trajectory, _Stepper
from .nodeset import NetworkSpec


class SessionComplete(Exception):
    """Every destination has reached full rank."""


@dataclass(frozen=True)
class ControlConfig:
    """Gradient-ascent settings.

    ``kind`` is ``"power"`` (resource in dBm) or ``"csma"`` (resource is beta,
    ``dv`` is a beta-space step converted to a per-node alpha perturbation).
    """

    kind: str = "power"
    gain: float = 1.0
    dv: float = 0.1
    refresh: float = 10.0
    lower: float | tuple[float, ...] = 0.0
    upper: float | tuple[float, ...] = 20.0

    def __post_init__(self):
        if self.kind not in ("power", "csma"):
            raise ValueError(f"unknown control kind {self.kind!r}")
        if self.gain < 0 or self.dv <= 0 or self.refresh <= 0:
            raise ValueError("need gain >= 0, dv > 0, refresh > 0")
        if np.any(np.asarray(self.lower) > np.asarray(self.upper)):
            raise ValueError("empty resource bounds")

    def bounds(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        lo = np.broadcast_to(np.asarray(self.lower, dtype=float), (n,)).copy()
        hi = np.broadcast_to(np.asarray(self.upper, dtype=float), (n,)).copy()
        return lo, hi


def argmin_dest(vdot: Sequence[float], dests: Sequence[int], active: Sequence[int]) -> int:
    """Destination in ``active`` with the smallest throughput; ties go to the lower id."""
    if not active:
        raise SessionComplete("session complete")
    act = set(active)
    best = min((v, d) for v, d in zip(vdot, dests) if d in act)
    return best[1]


def fd_gradient(k: int, r, dv, provider: RateProvider | Callable, V, net: NetworkSpec,
                t: float = 0.0) -> np.ndarray:
    """``g_i = Vdot_k(r + dv_i e_i) - Vdot_k(r)`` at the current ranks ``V``.

    ``dv`` may be scalar or per-node. The result is not divided by ``dv``;
    the control gain absorbs that factor.
    """
    r = np.asarray(r, dtype=float)
    dv = np.broadcast_to(np.asarray(dv, dtype=float), r.shape)
    V = np.ascontiguousarray(V, dtype=float)
    lnq = math.log(net.q)
    idx = (1 << (k - 1)) - 1

    def vk(res):
        z = np.ascontiguousarray(provider(t, res), dtype=float)
        return _core.rank_derivative(V, z, net.n_nodes, lnq)[idx]

    base = vk(r)
    g = np.empty(len(r))
    for i in range(len(r)):
        rp = r.copy()
        rp[i] += dv[i]
        g[i] = vk(rp) - base
    return g


def step_power(P, grad, a: float, dt: float, lower, upper) -> np.ndarray:
    """Euler step on powers; frozen at a bound while the gradient pushes outward."""
    P = np.asarray(P, dtype=float)
    grad = np.asarray(grad, dtype=float)
    lo = np.broadcast_to(np.asarray(lower, dtype=float), P.shape)
    hi = np.broadcast_to(np.asarray(upper, dtype=float), P.shape)
    rate = a * grad
    frozen = ((P >= hi) & (grad > 0)) | ((P <= lo) & (grad < 0))
    rate = np.where(frozen, 0.0, rate)
    return np.clip(P + rate * dt, lo, hi)


def step_beta(beta, grad_alpha, a: float, dt: float, lower, upper) -> np.ndarray:
    """Euler step on alpha (pkt/ms), mapped back to beta and clamped to its bounds."""
    beta = np.asarray(beta, dtype=float)
    lo = np.broadcast_to(np.asarray(lower, dtype=float), beta.shape)
    hi = np.broadcast_to(np.asarray(upper, dtype=float), beta.shape)
    alpha = alpha_from_beta(beta) + a * np.asarray(grad_alpha, dtype=float) * dt
    with np.errstate(divide="ignore", invalid="ignore"):
        new = np.where(alpha > 0, beta_from_alpha(np.maximum(alpha, 1e-300)), -np.inf)
    return np.clip(new, lo, hi)


@dataclass
class ResourceTrace:
    t: np.ndarray
    r: np.ndarray
    k: np.ndarray = field(default_factory=lambda: np.array([], dtype=int))
    label: str = "r"

    def to_csv(self, path: str | Path) -> None:
        n = self.r.shape[1]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t"] + [f"{self.label}_{i + 1}" for i in range(n)])
            for k in range(len(self.t)):
                w.writerow([repr(float(self.t[k]))] + [repr(float(x)) for x in self.r[k]])


def run_centralized(net: NetworkSpec, provider: RateProvider | Callable, config: ControlConfig,
                    r0, t_end: float, dt: float = 0.1,
                    stop_when_done: bool = True) -> tuple[Trajectory, ResourceTrace]:
    """Co-evolve ranks (RK4) and resources (Euler) with a gradient refresh every period.

    The gradient and the rates are held fixed within one refresh period, so the
    Euler resource update over a period reduces to one clamped step of length
    ``refresh``. For CSMA the provider receives alpha, the trace records beta.
    """
    csma = config.kind == "csma"
    st = _Stepper(net, dt)
    lo, hi = config.bounds(net.n_nodes)
    r = np.clip(np.asarray(r0, dtype=float).copy(), lo, hi)
    n_per = max(1, int(round(config.refresh / dt)))
    period = n_per * dt

    def rates(res):
        return np.ascontiguousarray(provider(0.0, alpha_from_beta(res) if csma else res),
                                    dtype=float)

    ts, Vs, Ds, Rs, Ks = [], [], [], [], []
    t = 0.0
    while True:
        z = rates(r)
        vd = st.vdot_dest(z)
        ts.append(t)
        Vs.append(st.V.copy())
        Ds.append(vd)
        Rs.append(r.copy())
        active = st.active()
        if t >= t_end - 1e-9 or (stop_when_done and not active):
            Ks.append(0)
            break
        if active:
            k = argmin_dest(vd, net.destinations, active)
        else:
            k = 0
        Ks.append(k)
        n = min(n_per, max(1, int(round((t_end - t) / dt))))
        if config.gain > 0 and k:
            if csma:
                alpha = alpha_from_beta(r)
                dva = alpha * math.expm1(config.dv)
                g = fd_gradient(k, alpha, dva, provider, st.V, net, t)
            else:
                g = fd_gradient(k, r, config.dv, provider, st.V, net, t)
        st.advance(z, n, t + n * dt)
        if config.gain > 0 and k:
            h = n * dt
            if csma:
                r = step_beta(r, g, config.gain, h, lo, hi)
            else:
                r = step_power(r, g, config.gain, h, lo, hi)
        t = t + n * dt
    traj = Trajectory(net.destinations, np.array(ts), np.array(Vs), np.array(Ds), float(net.m))
    trace = ResourceTrace(np.array(ts), np.array(Rs), np.array(Ks),
                          "beta" if csma else "P_dBm")
    return traj, trace


def min_throughput_curve(traj: Trajectory) -> np.ndarray:
    """Min over unfinished destinations of Vdot at each sample (nan once all done)."""
    ranks = traj.dest_ranks()
    active = ranks < traj.m - 1e-6
    vals = np.where(active, traj.Vdot, np.inf).min(axis=1)
    return np.where(np.isinf(vals), np.nan, vals)
