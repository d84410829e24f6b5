"""Pure-numpy kernel implementations.

Mirrors `_core.pyx` operation by operation.  Expression order is kept
identical between the two backends so that results agree bit for bit; any
change here must be made in the compiled kernel too.

The discount is tracked as the accumulated exponent A = sum (r + v(f)) dt
rather than the factor exp(-A): the kernels then touch only +, *, /, and
the normal inverse CDF, all of which round identically across backends.
"""
from __future__ import annotations

import numpy as np
from scipy.special import ndtri

COMPILED = False

_MASK32 = np.uint64(0xFFFFFFFF)
_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_C3 = np.uint32(0x243F6A88)
_INV53 = float(2.0**-53)
_INV54 = float(2.0**-54)


def philox_normals(seed: int, step: int, path_start: int, n: int) -> np.ndarray:
    """One standard normal per absolute path index, Philox4x32-10 keyed by seed.

    The value depends only on (seed, step, path index), never on how paths
    are partitioned across workers.
    """
    idx = np.uint64(path_start) + np.arange(n, dtype=np.uint64)
    c0 = np.full(n, np.uint32(int(step) & 0xFFFFFFFF), dtype=np.uint32)
    c1 = (idx & _MASK32).astype(np.uint32)
    c2 = (idx >> np.uint64(32)).astype(np.uint32)
    c3 = np.full(n, _C3, dtype=np.uint32)
    # round keys in python ints: numpy scalar uint arithmetic warns on wrap
    k0 = int(seed) & 0xFFFFFFFF
    k1 = (int(seed) >> 32) & 0xFFFFFFFF
    keys = []
    for _ in range(10):
        keys.append((np.uint32(k0), np.uint32(k1)))
        k0 = (k0 + 0x9E3779B9) & 0xFFFFFFFF
        k1 = (k1 + 0xBB67AE85) & 0xFFFFFFFF
    for rk0, rk1 in keys:
        p0 = _M0 * c0.astype(np.uint64)
        p1 = _M1 * c2.astype(np.uint64)
        hi0 = (p0 >> np.uint64(32)).astype(np.uint32)
        lo0 = (p0 & _MASK32).astype(np.uint32)
        hi1 = (p1 >> np.uint64(32)).astype(np.uint32)
        lo1 = (p1 & _MASK32).astype(np.uint32)
        c0 = hi1 ^ c1 ^ rk0
        c1 = lo1
        c2 = hi0 ^ c3 ^ rk1
        c3 = lo0
    word = (c0.astype(np.uint64) << np.uint64(32)) | c1.astype(np.uint64)
    u = (word >> np.uint64(11)).astype(np.float64) * _INV53 + _INV54
    return ndtri(u)


def thomas_batch(dl: np.ndarray, d: np.ndarray, du: np.ndarray,
                 b: np.ndarray) -> np.ndarray:
    """Solve m independent tridiagonal systems of size n.

    All inputs have shape (m, n); dl[:, 0] and du[:, n-1] are ignored.
    """
    m, n = d.shape
    cp = np.empty_like(d)
    dp = np.empty_like(d)
    cp[:, 0] = du[:, 0] / d[:, 0]
    dp[:, 0] = b[:, 0] / d[:, 0]
    for j in range(1, n):
        denom = d[:, j] - dl[:, j] * cp[:, j - 1]
        cp[:, j] = du[:, j] / denom
        dp[:, j] = (b[:, j] - dl[:, j] * dp[:, j - 1]) / denom
    x = np.empty_like(d)
    x[:, n - 1] = dp[:, n - 1]
    for j in range(n - 2, -1, -1):
        x[:, j] = dp[:, j] - cp[:, j] * x[:, j + 1]
    return x


def step_gaussian(lnS, f, A, absorbed, z, dt, mu, sigma, r, mu_f, gamma,
                  band_lo, band_hi, pricing):
    """Advance one Euler step of the arithmetic-bubble pair in place.

    The same draw z drives both lnS and f.  Paths flagged in `absorbed`
    are frozen; paths whose new f lands in [band_lo, band_hi] get flagged.
    """
    sq = np.sqrt(dt)
    active = absorbed == 0
    with np.errstate(divide="ignore", invalid="ignore"):
        if pricing:
            v = (r - mu) * f / (sigma - f)
            drs = (r + v) - 0.5 * sigma * sigma
            drf = mu_f - (mu - r) * gamma / (sigma - f)
            kill = r + v
        else:
            drs = mu - 0.5 * sigma * sigma
            drf = np.full_like(f, mu_f)
            kill = np.zeros_like(f)
        lnS_new = lnS + drs * dt + sigma * sq * z
        f_new = f + drf * dt + gamma * sq * z
        A_new = A + kill * dt
    np.copyto(lnS, lnS_new, where=active)
    np.copyto(f, f_new, where=active)
    np.copyto(A, A_new, where=active)
    hit = active & (f >= band_lo) & (f <= band_hi)
    absorbed[hit] = 1


def step_lognormal(lnS, lnf, fvec, A, absorbed, z, dt, mu, sigma, r,
                   mu_f_bar, gamma_bar, lband_lo, lband_hi, pricing):
    """Advance one Euler step of the relative-coefficient pair in place.

    lnf is stepped (positivity is structural); fvec = exp(lnf) is supplied
    by the caller so both backends share one exp implementation.  The band
    test compares lnf against precomputed log-bounds.
    """
    sq = np.sqrt(dt)
    active = absorbed == 0
    with np.errstate(divide="ignore", invalid="ignore"):
        if pricing:
            v = (r - mu) * fvec / (sigma - fvec)
            drs = (r + v) - 0.5 * sigma * sigma
            drf = (mu_f_bar - (mu - r) * gamma_bar / (sigma - fvec)) \
                - 0.5 * gamma_bar * gamma_bar
            kill = r + v
        else:
            drs = mu - 0.5 * sigma * sigma
            drf = np.full_like(fvec, mu_f_bar - 0.5 * gamma_bar * gamma_bar)
            kill = np.zeros_like(fvec)
        lnS_new = lnS + drs * dt + sigma * sq * z
        lnf_new = lnf + drf * dt + gamma_bar * sq * z
        A_new = A + kill * dt
    np.copyto(lnS, lnS_new, where=active)
    np.copyto(lnf, lnf_new, where=active)
    np.copyto(A, A_new, where=active)
    hit = active & (lnf >= lband_lo) & (lnf <= lband_hi)
    absorbed[hit] = 1
