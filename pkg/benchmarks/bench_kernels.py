"""Compare the compiled and pure-NumPy kernel backends.

    python benchmarks/bench_kernels.py [--repeat 5]

Prints the best-of-N wall time per call for each kernel and the speedup.
"""

import argparse
import math
import timeit

import numpy as np

from rncctl import _core
from rncctl.dynamics import ConstantRates
from rncctl.nodeset import NetworkSpec, init_rank_state


def _rank_inputs(n, seed=0):
    rng = np.random.default_rng(seed)
    P = rng.uniform(0, 1, (n, n))
    np.fill_diagonal(P, 0)
    z = np.ascontiguousarray(ConstantRates.from_links(P, np.ones(n)).z, dtype=float)
    V = init_rank_state(NetworkSpec(n, 1, tuple(range(2, n + 1)), 1000)).V.copy()
    return V, z


def _gf_inputs(m, width, seed=0):
    rng = np.random.default_rng(seed)
    msg = rng.integers(0, 256, (m, width - m), dtype=np.uint8)
    coefs = rng.integers(0, 256, (m, m), dtype=np.uint8)
    return msg, coefs


def cases(backend):
    k = _core.get_backend(backend)
    T = (_core.MUL, _core.NIB)
    lnq = math.log(256)
    out = {}
    for n in (4, 6, 8):
        V, z = _rank_inputs(n)
        out[f"rank_derivative n={n}"] = lambda V=V, z=z, n=n: k.rank_derivative(V, z, n, lnq)

        def rk(V0=V, z=z, n=n):
            k.rk4_steps(V0.copy(), z, n, lnq, 1000.0, 0.1, 100)
        out[f"rk4_steps x100 n={n}"] = rk
    for m in (32, 200):
        msg, coefs = _gf_inputs(m, m + 1024)
        pay = np.empty(msg.shape[1], dtype=np.uint8)
        out[f"gf_lincomb m={m} l=1024"] = (
            lambda c=coefs[0], msg=msg, pay=pay: k.gf_lincomb(c, msg, pay, *T))

        def fill(m=m, coefs=coefs, msg=msg):
            rows = np.zeros((m, m + msg.shape[1]), dtype=np.uint8)
            piv = np.zeros(m, dtype=np.uint8)
            for c in coefs:
                vec = np.empty(m + msg.shape[1], dtype=np.uint8)
                vec[:m] = c
                k.gf_lincomb(c, msg, vec[m:], *T)
                k.gf_reduce_insert(rows, piv, vec, _core.MUL, _core.NIB, _core.INV, m)
        out[f"gf decode fill m={m} l=1024"] = fill
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    try:
        cy = cases("cython")
    except ImportError:
        raise SystemExit("compiled extension not built; run pip install -e . first")
    py = cases("numpy")
    print(f"SIMD level: {_core.SIMD_LEVEL}")
    print(f"{'kernel':34s} {'cython':>12s} {'numpy':>12s} {'speedup':>8s}")
    for name in cy:
        res = []
        for fn in (cy[name], py[name]):
            t = timeit.Timer(fn)
            n, _ = t.autorange()
            res.append(min(t.repeat(args.repeat, n)) / n)
        print(f"{name:34s} {res[0] * 1e6:10.1f}us {res[1] * 1e6:10.1f}us {res[1] / res[0]:7.1f}x")


if __name__ == "__main__":
    main()
