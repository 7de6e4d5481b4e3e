"""Pure NumPy versions of the compiled kernels, same signatures and semantics."""

from functools import lru_cache

import numpy as np

SIMD_LEVEL = "none"


@lru_cache(maxsize=None)
def _rhs_index(n_nodes):
    n_sub = (1 << n_nodes) - 1
    K = np.arange(1, n_sub + 1)
    bits = 1 << np.arange(n_nodes)
    outside = (K[:, None] & bits[None, :]) == 0           # (S, N): i not in K
    Ki = K[:, None] | bits[None, :]
    z_idx = np.arange(n_nodes)[None, :] * n_sub + (K - 1)[:, None]
    return outside, Ki - 1, z_idx


def rank_derivative(V, z, n_nodes, lnq):
    outside, ki, z_idx = _rhs_index(n_nodes)
    gap = np.minimum(V[:, None] - V[ki], 0.0)
    terms = z[z_idx] * (1.0 - np.exp(gap * lnq))
    return np.where(outside, terms, 0.0).sum(axis=1)


def rk4_steps(V, z, n_nodes, lnq, m, dt, n_steps):
    for _ in range(n_steps):
        k1 = rank_derivative(V, z, n_nodes, lnq)
        k2 = rank_derivative(V + 0.5 * dt * k1, z, n_nodes, lnq)
        k3 = rank_derivative(V + 0.5 * dt * k2, z, n_nodes, lnq)
        k4 = rank_derivative(V + dt * k3, z, n_nodes, lnq)
        V[:] = np.clip(V + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4), 0.0, m)


def gf_reduce_insert(rows, has_pivot, vec, mul, nib, inv, n_coef):
    col = 0
    while True:
        nz = np.flatnonzero(vec[col:n_coef])
        if nz.size == 0:
            return -1
        col += int(nz[0])
        c = vec[col]
        if not has_pivot[col]:
            rows[col, :col] = 0
            rows[col, col:] = mul[inv[c]][vec[col:]]
            has_pivot[col] = 1
            return col
        vec[col:] ^= mul[c][rows[col, col:]]
        col += 1


def gf_combine(rows, has_pivot, coef, out, mul, nib, n_coef):
    out[:] = 0
    for col in np.flatnonzero(has_pivot[:n_coef] & (coef[:n_coef] != 0)):
        out[col:] ^= mul[coef[col]][rows[col, col:]]


def gf_lincomb(coef, mat, out, mul, nib):
    out[:] = 0
    for p in np.flatnonzero(coef):
        out ^= mul[coef[p]][mat[p]]
