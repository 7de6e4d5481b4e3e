"""GF(2^8) lookup tables, primitive polynomial x^8 + x^4 + x^3 + x^2 + 1."""

import numpy as np

POLY = 0x11D


def _build():
    exp = np.zeros(512, dtype=np.int64)
    log = np.zeros(256, dtype=np.int64)
    x = 1
    for i in range(255):
        exp[i] = x
        log[x] = i
        x <<= 1
        if x & 0x100:
            x ^= POLY
    exp[255:510] = exp[:255]
    a = np.arange(1, 256)
    mul = np.zeros((256, 256), dtype=np.uint8)
    mul[1:, 1:] = exp[(log[a][:, None] + log[a][None, :])]
    inv = np.zeros(256, dtype=np.uint8)
    inv[1:] = exp[255 - log[a]]
    # nib[c, :16] = c*x for x < 16, nib[c, 16:] = c*(x << 4)
    nib = np.ascontiguousarray(np.concatenate([mul[:, :16], mul[:, ::16]], axis=1))
    for t in (mul, inv, nib):
        t.setflags(write=False)
    return exp[:255].astype(np.uint8), log, mul, inv, nib


EXP, LOG, MUL, INV, NIB = _build()
