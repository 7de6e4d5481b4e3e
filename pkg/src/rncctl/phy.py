"""Gaussian-interference PHY: path loss, SINR, BPSK bit errors, hyperarc rates."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import erfc

from .nodeset import NetworkSpec, n_subsets


@dataclass(frozen=True)
class PhyParams:
    """Indoor ITU path loss with f in MHz; noise in W; gains linear; powers in dBm."""

    freq_mhz: float = 2400.0
    pl_exponent: float = 3.0
    floor_factor_db: float = 11.0
    noise_w: float = 1e-13
    proc_gain: float | tuple[float, ...] = 128.0
    packet_bits: int = 1000
    p_max_dbm: float | tuple[float, ...] = 20.0

    def __post_init__(self):
        if self.freq_mhz <= 0 or self.noise_w <= 0 or self.packet_bits < 1:
            raise ValueError("freq_mhz, noise_w must be > 0 and packet_bits >= 1")
        if np.any(np.asarray(self.proc_gain) < 1):
            raise ValueError("processing gain must be >= 1")
        if np.any(np.asarray(self.p_max_dbm) <= 0):
            raise ValueError("power budget must be positive")

    def gains_for(self, n: int) -> np.ndarray:
        return np.broadcast_to(np.asarray(self.proc_gain, dtype=float), (n,))

    def p_max_for(self, n: int) -> np.ndarray:
        return np.broadcast_to(np.asarray(self.p_max_dbm, dtype=float), (n,)).copy()


@dataclass(frozen=True)
class Geometry:
    """Link gains ``h[j, i]`` for receiver j, transmitter i (0-based, linear)."""

    h: np.ndarray
    coords: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        h = np.array(self.h, dtype=float)
        if h.ndim != 2 or h.shape[0] != h.shape[1]:
            raise ValueError("link gain matrix must be square")
        off = ~np.eye(len(h), dtype=bool)
        if np.any(h[off] <= 0):
            raise ValueError("off-diagonal link gains must be positive")
        h.setflags(write=False)
        object.__setattr__(self, "h", h)

    @classmethod
    def from_coordinates(cls, coords, phy: PhyParams) -> "Geometry":
        xy = np.asarray(coords, dtype=float)
        d = np.linalg.norm(xy[:, None, :] - xy[None, :, :], axis=-1)
        n = len(xy)
        h = np.ones((n, n))
        off = ~np.eye(n, dtype=bool)
        h[off] = link_gain(path_loss(d[off], phy))
        return cls(h, xy)

    @property
    def n_nodes(self) -> int:
        return len(self.h)


def path_loss(d, phy: PhyParams):
    """ITU indoor path loss in dB for distance ``d`` in meters."""
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0):
        raise ValueError("distance must be positive")
    pl = (20 * np.log10(phy.freq_mhz) + 10 * phy.pl_exponent * np.log10(d)
          + phy.floor_factor_db - 28)
    return float(pl) if pl.ndim == 0 else pl


def link_gain(pl_db):
    """Attenuation 10^(-PL/10)."""
    return 10.0 ** (-np.asarray(pl_db, dtype=float) / 10.0)


def dbm_to_w(p_dbm):
    return 10.0 ** ((np.asarray(p_dbm, dtype=float) - 30.0) / 10.0)


def sinr_matrix(p_dbm, geo: Geometry, phy: PhyParams) -> np.ndarray:
    """``S[i, j]`` = SINR of transmitter i at receiver j (0-based); diagonal is 0."""
    p = dbm_to_w(p_dbm)
    h = geo.h
    n = len(p)
    g = phy.gains_for(n)
    rx = h * p[None, :]                      # rx[j, m] = P_m h_jm
    np.fill_diagonal(rx, 0.0)
    total = rx.sum(axis=1)                   # sum over m != j
    # interference at j for signal from i: total_j - rx[j, i], scaled by 1/g_i
    interf = (total[:, None] - rx) / g[None, :]
    S = rx / (interf + phy.noise_w)          # S_T[j, i]
    S = S.T.copy()
    np.fill_diagonal(S, 0.0)
    return S


def sinr(i: int, j: int, p_dbm, geo: Geometry, phy: PhyParams) -> float:
    """SINR of link (i, j) with 1-based node ids."""
    if i == j:
        raise ValueError("sinr needs distinct transmitter and receiver")
    return float(sinr_matrix(p_dbm, geo, phy)[i - 1, j - 1])


def q_function(x):
    return 0.5 * erfc(np.asarray(x, dtype=float) / np.sqrt(2.0))


def bit_error_rate(s):
    """BPSK bit error probability Q(sqrt(SINR))."""
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise ValueError("SINR must be nonnegative")
    out = q_function(np.sqrt(s))
    return float(out) if out.ndim == 0 else out


def packet_success(p_bit, bits: int):
    p_bit = np.asarray(p_bit, dtype=float)
    with np.errstate(divide="ignore"):
        out = np.exp(bits * np.log1p(-np.minimum(p_bit, 1.0)))
    return float(out) if out.ndim == 0 else out


def link_probabilities(p_dbm, geo: Geometry, phy: PhyParams) -> np.ndarray:
    """``P[i, j]``: probability that j decodes a packet sent by i (0-based)."""
    S = sinr_matrix(p_dbm, geo, phy)
    P = packet_success(bit_error_rate(S), phy.packet_bits)
    np.fill_diagonal(P, 0.0)
    return P


def reception_prob_set(i: int, K, p_link: np.ndarray) -> float:
    """Probability that at least one node of K receives i's packet (1-based ids)."""
    K = list(K)
    if i in K:
        raise ValueError(f"transmitter {i} must not belong to the receiver set")
    fail = 1.0
    for j in K:
        fail *= 1.0 - p_link[i - 1, j - 1]
    return 1.0 - fail


def hyperarc_rates_from_links(p_link: np.ndarray, rates) -> np.ndarray:
    """Canonical z vector: ``z[i*S + K-1] = lambda_i * (1 - prod_{j in K}(1 - P_ij))``.

    Entries with i in K are zero.
    """
    p_link = np.asarray(p_link, dtype=float)
    n = len(p_link)
    S = n_subsets(n)
    lam = np.asarray(rates, dtype=float)
    fail = np.ones((n, S + 1))
    survive = 1.0 - p_link
    for K in range(1, S + 1):
        low = K & -K
        j = low.bit_length() - 1
        fail[:, K] = fail[:, K ^ low] * survive[:, j]
    z = lam[:, None] * (1.0 - fail[:, 1:])
    K = np.arange(1, S + 1)
    z[((K[None, :] >> np.arange(n)[:, None]) & 1).astype(bool)] = 0.0
    return np.clip(z, 0.0, lam[:, None]).ravel()


def hyperarc_rates_phy(p_dbm, geo: Geometry, phy: PhyParams, net: NetworkSpec) -> np.ndarray:
    return hyperarc_rates_from_links(link_probabilities(p_dbm, geo, phy), net.rates)
