"""Random linear network coding over GF(2^8): encoding, rank tracking, decoding."""

from __future__ import annotations

import numpy as np

from .. import _core

FIELD_SIZE = 256


class MalformedPacket(ValueError):
    pass


class Decoder:
    """Coefficient/payload rows kept in echelon form, indexed by pivot column.

    Each stored row is 1 at its pivot column and 0 before it. A received
    packet is innovative exactly when reduction leaves a nonzero coefficient
    at a column without a pivot.
    """

    def __init__(self, m: int, payload_len: int = 8):
        if m < 1:
            raise ValueError("m must be >= 1")
        self.m = m
        self.payload_len = payload_len
        self.width = m + payload_len
        self.rows = np.zeros((m, self.width), dtype=np.uint8)
        self.has_pivot = np.zeros(m, dtype=np.uint8)
        self.rank = 0
        self.rejected = 0
        self._message = None

    @classmethod
    def source(cls, message: np.ndarray) -> "Decoder":
        """Full-rank holder of the m original packets (rows of ``message``)."""
        message = np.ascontiguousarray(message, dtype=np.uint8)
        m, l = message.shape
        dec = cls(m, l)
        dec.rows[:, :m] = np.eye(m, dtype=np.uint8)
        dec.rows[:, m:] = message
        dec.has_pivot[:] = 1
        dec.rank = m
        dec._message = message
        return dec

    @property
    def full(self) -> bool:
        return self.rank == self.m

    def receive(self, pkt: np.ndarray) -> bool:
        """Absorb a coded packet; True if it raised the rank. ``pkt`` is not modified."""
        if pkt.dtype != np.uint8 or pkt.shape != (self.width,):
            self.rejected += 1
            return False
        if self.full:
            return False
        vec = pkt.copy()
        col = _core.gf_reduce_insert(self.rows, self.has_pivot, vec, _core.MUL, _core.NIB,
                                     _core.INV, self.m)
        if col < 0:
            return False
        self.rank += 1
        return True

    def encode(self, rng: np.random.Generator) -> np.ndarray | None:
        """Random linear combination of held packets; None when nothing is held."""
        if self.rank == 0:
            return None
        out = np.empty(self.width, dtype=np.uint8)
        while True:
            coef = rng.integers(0, FIELD_SIZE, self.m, dtype=np.uint8)
            if self._message is not None:
                if not coef.any():
                    continue
                out[:self.m] = coef
                pay = out[self.m:]
                _core.gf_lincomb(coef, self._message, pay, _core.MUL, _core.NIB)
                return out
            if not (coef & (self.has_pivot * 0xFF)).any():
                continue
            _core.gf_combine(self.rows, self.has_pivot, coef, out, _core.MUL, _core.NIB, self.m)
            return out

    def decode(self) -> np.ndarray:
        """Recover the m original payloads by back substitution (needs full rank)."""
        if not self.full:
            raise ValueError(f"cannot decode at rank {self.rank} < {self.m}")
        m, l = self.m, self.payload_len
        X = np.zeros((m, l), dtype=np.uint8)
        tmp = np.empty(l, dtype=np.uint8)
        for col in range(m - 1, -1, -1):
            row = self.rows[col]
            X[col] = row[m:]
            if col + 1 < m:
                _core.gf_lincomb(np.ascontiguousarray(row[col + 1:m]), X[col + 1:], tmp,
                                 _core.MUL, _core.NIB)
                X[col] ^= tmp
        return X


def gf_innovative(dec: Decoder, pkt: np.ndarray) -> bool:
    return dec.receive(pkt)


def gf_matmul(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Dense product over GF(2^8), used to build test packets."""
    A = np.asarray(A, dtype=np.uint8)
    B = np.ascontiguousarray(B, dtype=np.uint8)
    out = np.zeros((A.shape[0], B.shape[1]), dtype=np.uint8)
    for r in range(A.shape[0]):
        _core.gf_lincomb(np.ascontiguousarray(A[r]), B, out[r], _core.MUL, _core.NIB)
    return out
