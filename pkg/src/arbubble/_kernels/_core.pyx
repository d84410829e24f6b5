# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernel implementations.

Must stay expression-for-expression in sync with `_fallback.py`: the two
backends are required to produce bit-identical doubles.  The normal inverse
CDF comes from scipy's cython bindings, the same routine the fallback calls
through scipy.special.ndtri.
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport sqrt, fabs
from libc.stdint cimport uint32_t, uint64_t
from scipy.special.cython_special cimport ndtri

cnp.import_array()

COMPILED = True

cdef uint64_t _M0 = 0xD2511F53u
cdef uint64_t _M1 = 0xCD9E8D57u
cdef uint32_t _W0 = 0x9E3779B9u
cdef uint32_t _W1 = 0xBB67AE85u
cdef uint32_t _C3 = 0x243F6A88u
cdef double _INV53 = 2.0**-53
cdef double _INV54 = 2.0**-54


def philox_normals(seed, step, path_start, int n):
    """One standard normal per absolute path index, Philox4x32-10 keyed by seed."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n, dtype=np.float64)
    cdef double[::1] ov = out
    cdef uint32_t k0s[10]
    cdef uint32_t k1s[10]
    cdef uint32_t k0 = <uint32_t>(<uint64_t>seed & 0xFFFFFFFFu)
    cdef uint32_t k1 = <uint32_t>(<uint64_t>seed >> 32)
    cdef int rnd
    for rnd in range(10):
        k0s[rnd] = k0
        k1s[rnd] = k1
        k0 = k0 + _W0
        k1 = k1 + _W1
    cdef uint32_t step32 = <uint32_t>(<uint64_t>step & 0xFFFFFFFFu)
    cdef uint64_t base = <uint64_t>path_start
    cdef uint64_t idx, p0, p1, word
    cdef uint32_t c0, c1, c2, c3, hi0, lo0, hi1, lo1
    cdef double u
    cdef int i
    for i in range(n):
        idx = base + <uint64_t>i
        c0 = step32
        c1 = <uint32_t>(idx & 0xFFFFFFFFu)
        c2 = <uint32_t>(idx >> 32)
        c3 = _C3
        for rnd in range(10):
            p0 = _M0 * <uint64_t>c0
            p1 = _M1 * <uint64_t>c2
            hi0 = <uint32_t>(p0 >> 32)
            lo0 = <uint32_t>p0
            hi1 = <uint32_t>(p1 >> 32)
            lo1 = <uint32_t>p1
            c0 = hi1 ^ c1 ^ k0s[rnd]
            c1 = lo1
            c2 = hi0 ^ c3 ^ k1s[rnd]
            c3 = lo0
        word = (<uint64_t>c0 << 32) | <uint64_t>c1
        u = <double>(word >> 11) * _INV53 + _INV54
        ov[i] = ndtri(u)
    return out


def thomas_batch(double[:, ::1] dl, double[:, ::1] d, double[:, ::1] du,
                 double[:, ::1] b):
    """Solve m independent tridiagonal systems of size n; shapes (m, n)."""
    cdef Py_ssize_t m = d.shape[0]
    cdef Py_ssize_t n = d.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] x_arr = np.empty((m, n), dtype=np.float64)
    cdef double[:, ::1] x = x_arr
    cdef cnp.ndarray[cnp.float64_t, ndim=2] cp_arr = np.empty((m, n), dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] dp_arr = np.empty((m, n), dtype=np.float64)
    cdef double[:, ::1] cp = cp_arr
    cdef double[:, ::1] dp = dp_arr
    cdef Py_ssize_t i, j
    cdef double denom
    for i in range(m):
        cp[i, 0] = du[i, 0] / d[i, 0]
        dp[i, 0] = b[i, 0] / d[i, 0]
        for j in range(1, n):
            denom = d[i, j] - dl[i, j] * cp[i, j - 1]
            cp[i, j] = du[i, j] / denom
            dp[i, j] = (b[i, j] - dl[i, j] * dp[i, j - 1]) / denom
        x[i, n - 1] = dp[i, n - 1]
        for j in range(n - 2, -1, -1):
            x[i, j] = dp[i, j] - cp[i, j] * x[i, j + 1]
    return x_arr


def step_gaussian(double[::1] lnS, double[::1] f, double[::1] A,
                  unsigned char[::1] absorbed, double[::1] z, double dt,
                  double mu, double sigma, double r, double mu_f, double gamma,
                  double band_lo, double band_hi, bint pricing):
    """Advance one Euler step of the arithmetic-bubble pair in place."""
    cdef double sq = sqrt(dt)
    cdef Py_ssize_t n = lnS.shape[0]
    cdef Py_ssize_t i
    cdef double v, drs, drf, kill, fi, fnew
    for i in range(n):
        if absorbed[i]:
            continue
        fi = f[i]
        if pricing:
            v = (r - mu) * fi / (sigma - fi)
            drs = (r + v) - 0.5 * sigma * sigma
            drf = mu_f - (mu - r) * gamma / (sigma - fi)
            kill = r + v
        else:
            drs = mu - 0.5 * sigma * sigma
            drf = mu_f
            kill = 0.0
        lnS[i] = lnS[i] + drs * dt + sigma * sq * z[i]
        fnew = fi + drf * dt + gamma * sq * z[i]
        f[i] = fnew
        A[i] = A[i] + kill * dt
        if fnew >= band_lo and fnew <= band_hi:
            absorbed[i] = 1


def step_lognormal(double[::1] lnS, double[::1] lnf, double[::1] fvec,
                   double[::1] A, unsigned char[::1] absorbed, double[::1] z,
                   double dt, double mu, double sigma, double r,
                   double mu_f_bar, double gamma_bar, double lband_lo,
                   double lband_hi, bint pricing):
    """Advance one Euler step of the relative-coefficient pair in place."""
    cdef double sq = sqrt(dt)
    cdef Py_ssize_t n = lnS.shape[0]
    cdef Py_ssize_t i
    cdef double v, drs, drf, kill, fi, lnew
    for i in range(n):
        if absorbed[i]:
            continue
        fi = fvec[i]
        if pricing:
            v = (r - mu) * fi / (sigma - fi)
            drs = (r + v) - 0.5 * sigma * sigma
            drf = (mu_f_bar - (mu - r) * gamma_bar / (sigma - fi)) \
                - 0.5 * gamma_bar * gamma_bar
            kill = r + v
        else:
            drs = mu - 0.5 * sigma * sigma
            drf = mu_f_bar - 0.5 * gamma_bar * gamma_bar
            kill = 0.0
        lnS[i] = lnS[i] + drs * dt + sigma * sq * z[i]
        lnew = lnf[i] + drf * dt + gamma_bar * sq * z[i]
        lnf[i] = lnew
        A[i] = A[i] + kill * dt
        if lnew >= lband_lo and lnew <= lband_hi:
            absorbed[i] = 1
