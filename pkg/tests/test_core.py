"""Kernel oracles and cython/numpy backend agreement."""

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rncctl import _core
from rncctl._core import _fallback

try:
    CY = _core.get_backend("cython")
except ImportError:  # pragma: no cover - extension not built
    CY = None

BACKENDS = [_fallback] + ([CY] if CY is not None else [])
needs_cy = pytest.mark.skipif(CY is None, reason="compiled extension not built")


def gf_mul_slow(a, b):
    r = 0
    while b:
        if b & 1:
            r ^= a
        a <<= 1
        if a & 0x100:
            a ^= 0x11D
        b >>= 1
    return r


def rhs_oracle(V, z, n, q):
    S = 2 ** n - 1
    out = np.zeros(S)
    for K in range(1, S + 1):
        for i in range(n):
            if K >> i & 1:
                continue
            Ki = K | 1 << i
            out[K - 1] += z[i * S + K - 1] * (1 - q ** (V[K - 1] - V[Ki - 1]))
    return out


def monotone_state(rng, n, m):
    """Random V with V_K <= V_{K+i}: V_K = max over members of per-node levels, capped."""
    lvl = rng.uniform(0, m, n)
    S = 2 ** n - 1
    V = np.array([min(m, sum(lvl[i] for i in range(n) if K >> i & 1)) for K in range(1, S + 1)])
    return V


def test_gf_tables():
    assert _core.MUL.shape == (256, 256)
    for a in range(0, 256, 7):
        for b in range(0, 256, 11):
            assert _core.MUL[a, b] == gf_mul_slow(a, b)
    for a in range(1, 256):
        assert _core.MUL[a, _core.INV[a]] == 1
    assert len(set(_core.EXP[:255].tolist())) == 255
    assert np.array_equal(_core.NIB[:, :16], _core.MUL[:, :16])
    assert np.array_equal(_core.NIB[:, 16:], _core.MUL[:, ::16])


@pytest.mark.parametrize("be", BACKENDS, ids=lambda b: b.__name__.rsplit(".", 1)[-1])
@given(n=st.integers(1, 5), seed=st.integers(0, 2 ** 32 - 1))
def test_rank_derivative_matches_oracle(be, n, seed):
    rng = np.random.default_rng(seed)
    V = monotone_state(rng, n, 30.0)
    z = rng.uniform(0, 1, n * (2 ** n - 1))
    got = be.rank_derivative(V, z, n, math.log(256))
    assert np.allclose(got, rhs_oracle(V, z, n, 256.0), rtol=1e-12, atol=1e-12)


@needs_cy
@given(n=st.integers(1, 6), seed=st.integers(0, 2 ** 32 - 1), steps=st.integers(1, 50))
def test_rk4_backends_agree(n, seed, steps):
    rng = np.random.default_rng(seed)
    V0 = monotone_state(rng, n, 20.0)
    z = rng.uniform(0, 1, n * (2 ** n - 1))
    a, b = V0.copy(), V0.copy()
    _fallback.rk4_steps(a, z, n, math.log(256), 20.0, 0.1, steps)
    CY.rk4_steps(b, z, n, math.log(256), 20.0, 0.1, steps)
    assert np.allclose(a, b, rtol=1e-12, atol=1e-10)
    assert a.min() >= 0 and a.max() <= 20.0


@pytest.mark.parametrize("be", BACKENDS, ids=lambda b: b.__name__.rsplit(".", 1)[-1])
@given(seed=st.integers(0, 2 ** 32 - 1), m=st.integers(1, 24))
def test_gf_lincomb_matches_slow(be, seed, m):
    rng = np.random.default_rng(seed)
    coef = rng.integers(0, 256, m, dtype=np.uint8)
    mat = rng.integers(0, 256, (m, 9), dtype=np.uint8)
    out = np.empty(9, dtype=np.uint8)
    be.gf_lincomb(coef, mat, out, _core.MUL, _core.NIB)
    ref = np.zeros(9, dtype=int)
    for r in range(m):
        for c in range(9):
            ref[c] ^= gf_mul_slow(int(coef[r]), int(mat[r, c]))
    assert np.array_equal(out, ref.astype(np.uint8))


@needs_cy
@given(seed=st.integers(0, 2 ** 32 - 1), m=st.integers(1, 20), k=st.integers(1, 30))
def test_gf_elimination_backends_agree(seed, m, k):
    rng = np.random.default_rng(seed)
    width = m + 5
    coef = rng.integers(0, 256, m, dtype=np.uint8)
    state = {}
    for be in (_fallback, CY):
        rows = np.zeros((m, width), dtype=np.uint8)
        piv = np.zeros(m, dtype=np.uint8)
        cols = []
        r2 = np.random.default_rng(seed)
        for _ in range(k):
            v = r2.integers(0, 256, width, dtype=np.uint8)
            if r2.random() < 0.3:
                v[: r2.integers(0, m + 1)] = 0
            cols.append(be.gf_reduce_insert(rows, piv, v, _core.MUL, _core.NIB, _core.INV, m))
        out = np.empty(width, dtype=np.uint8)
        be.gf_combine(rows, piv, coef, out, _core.MUL, _core.NIB, m)
        state[be] = (rows.copy(), piv.copy(), cols, out)
    a, b = state[_fallback], state[CY]
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
    assert a[2] == b[2] and np.array_equal(a[3], b[3])


def test_backend_selection():
    assert _core.BACKEND in ("cython", "numpy")
    with pytest.raises(ValueError):
        _core.get_backend("fortran")
