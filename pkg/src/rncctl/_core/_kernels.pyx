# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: DE right-hand side, RK4 stepping and GF(2^8) row operations."""

from libc.math cimport exp
cimport numpy as cnp
import numpy as np

cnp.import_array()

cdef extern from "gf256_simd.h" nogil:
    int gf_simd_level()
    void gf_axpy(int level, unsigned char* dst, const unsigned char* src, size_t n,
                 const unsigned char* lo, const unsigned char* hi, const unsigned char* tab)

cdef int _LEVEL = gf_simd_level()
SIMD_LEVEL = ("scalar", "ssse3", "avx2")[_LEVEL]


cdef void _rhs(const double* V, const double* z, int n_nodes, double lnq,
               double* out) noexcept nogil:
    cdef int n_sub = (1 << n_nodes) - 1
    cdef int K, i, bit, Ki
    cdef double acc, gap
    for K in range(1, n_sub + 1):
        acc = 0.0
        for i in range(n_nodes):
            bit = 1 << i
            if K & bit:
                continue
            Ki = K | bit
            gap = V[K - 1] - V[Ki - 1]
            if gap > 0.0:
                gap = 0.0
            acc += z[i * n_sub + K - 1] * (1.0 - exp(gap * lnq))
        out[K - 1] = acc


def rank_derivative(const double[::1] V, const double[::1] z, int n_nodes, double lnq):
    cdef int n_sub = (1 << n_nodes) - 1
    out = np.empty(n_sub, dtype=np.float64)
    cdef double[::1] o = out
    _rhs(&V[0], &z[0], n_nodes, lnq, &o[0])
    return out


def rk4_steps(double[::1] V, const double[::1] z, int n_nodes, double lnq,
              double m, double dt, long n_steps):
    """Advance V in place by n_steps fixed RK4 steps, clamping to [0, m]."""
    cdef int n_sub = (1 << n_nodes) - 1
    cdef double[::1] k1 = np.empty(n_sub)
    cdef double[::1] k2 = np.empty(n_sub)
    cdef double[::1] k3 = np.empty(n_sub)
    cdef double[::1] k4 = np.empty(n_sub)
    cdef double[::1] tmp = np.empty(n_sub)
    cdef long s
    cdef int a
    cdef double h2 = 0.5 * dt, h6 = dt / 6.0, x
    with nogil:
        for s in range(n_steps):
            _rhs(&V[0], &z[0], n_nodes, lnq, &k1[0])
            for a in range(n_sub):
                tmp[a] = V[a] + h2 * k1[a]
            _rhs(&tmp[0], &z[0], n_nodes, lnq, &k2[0])
            for a in range(n_sub):
                tmp[a] = V[a] + h2 * k2[a]
            _rhs(&tmp[0], &z[0], n_nodes, lnq, &k3[0])
            for a in range(n_sub):
                tmp[a] = V[a] + dt * k3[a]
            _rhs(&tmp[0], &z[0], n_nodes, lnq, &k4[0])
            for a in range(n_sub):
                x = V[a] + h6 * (k1[a] + 2.0 * k2[a] + 2.0 * k3[a] + k4[a])
                if x > m:
                    x = m
                elif x < 0.0:
                    x = 0.0
                V[a] = x


def gf_reduce_insert(unsigned char[:, ::1] rows, unsigned char[::1] has_pivot,
                     unsigned char[::1] vec, const unsigned char[:, ::1] mul,
                     const unsigned char[:, ::1] nib, const unsigned char[::1] inv,
                     int n_coef):
    """Reduce vec against the echelon rows; store it as a new pivot row if innovative.

    Rows are indexed by pivot column and normalised to 1 at that column.
    Returns the new pivot column or -1. vec is clobbered.
    """
    cdef int width = vec.shape[0]
    cdef int col, k, found = -1
    cdef unsigned char c
    cdef const unsigned char* t
    cdef unsigned char* r
    cdef unsigned char* v = &vec[0]
    with nogil:
        for col in range(n_coef):
            c = v[col]
            if c == 0:
                continue
            if has_pivot[col]:
                gf_axpy(_LEVEL, v + col, &rows[col, col], width - col,
                        &nib[c, 0], &nib[c, 16], &mul[c, 0])
            else:
                t = &mul[inv[c], 0]
                r = &rows[col, 0]
                for k in range(col):
                    r[k] = 0
                for k in range(col, width):
                    r[k] = t[v[k]]
                has_pivot[col] = 1
                found = col
                break
    return found


def gf_combine(const unsigned char[:, ::1] rows, const unsigned char[::1] has_pivot,
               const unsigned char[::1] coef, unsigned char[::1] out,
               const unsigned char[:, ::1] mul, const unsigned char[:, ::1] nib,
               int n_coef):
    """out = sum over pivot rows p of coef[p] * rows[p] (out zeroed first)."""
    cdef int width = out.shape[0]
    cdef int col, k
    cdef unsigned char c
    cdef unsigned char* o = &out[0]
    with nogil:
        for k in range(width):
            o[k] = 0
        for col in range(n_coef):
            if not has_pivot[col]:
                continue
            c = coef[col]
            if c == 0:
                continue
            gf_axpy(_LEVEL, o + col, &rows[col, col], width - col,
                    &nib[c, 0], &nib[c, 16], &mul[c, 0])


def gf_lincomb(const unsigned char[::1] coef, const unsigned char[:, ::1] mat,
               unsigned char[::1] out, const unsigned char[:, ::1] mul,
               const unsigned char[:, ::1] nib):
    """out = sum_p coef[p] * mat[p] over all rows of mat."""
    cdef int width = out.shape[0]
    cdef int p, k
    cdef unsigned char c
    cdef unsigned char* o = &out[0]
    with nogil:
        for k in range(width):
            o[k] = 0
        for p in range(mat.shape[0]):
            c = coef[p]
            if c == 0:
                continue
            gf_axpy(_LEVEL, o, &mat[p, 0], width, &nib[c, 0], &nib[c, 16], &mul[c, 0])
