"""Pure-numpy reference implementations of the hot kernels.

These are the fallback used when the compiled extension is unavailable and
the ground truth the compiled kernels are tested against. ar1_fill and
transmit are arithmetic-identical to the compiled versions (bitwise equal
results); loess_fit differs only in floating-point summation order.
"""

import numpy as np


def ar1_fill(z, signs, rho, block):
    """Turn i.i.d. normal draws into blockwise AR(1) chains, in place.

    z is an (n, p) float64 array prefilled with standard normal draws.
    Within each block of `block` consecutive columns the chain restarts:
    the first column keeps its draw, and each later column i becomes

        z[:, i] = signs[b] * rho * z[:, i-1] + sqrt(1 - rho^2) * z[:, i]

    where b indexes the block. signs holds one +-1.0 per block, shared by
    all rows, so the lag-1 correlation within block b is signs[b] * rho.
    Marginals stay standard normal. Returns z.
    """
    n, p = z.shape
    c = np.sqrt(1.0 - rho * rho)
    for start in range(0, p, block):
        end = min(start + block, p)
        s = signs[start // block] * rho
        for i in range(start + 1, end):
            z[:, i] = s * z[:, i - 1] + c * z[:, i]
    return z


def transmit(hap_a, hap_b, start, cross):
    """Compose the haplotype a meiosis passes on.

    hap_a and hap_b are the parent's two (p,) int8 haplotypes, start picks
    which one the walk begins on (0 or 1), and cross is a (p-1,) uint8
    vector of crossover indicators between consecutive sites. Returns the
    transmitted (p,) int8 haplotype.
    """
    p = hap_a.shape[0]
    state = np.empty(p, dtype=np.int64)
    state[0] = start
    if p > 1:
        state[1:] = start + np.cumsum(cross, dtype=np.int64)
    state &= 1
    return np.where(state == 0, hap_a, hap_b).astype(np.int8)


def loess_fit(x, y, q):
    """Local linear smoother with tricube weights over q-nearest windows.

    x must be strictly increasing, q >= 2. For each target point the q
    nearest x-values form a contiguous window; distances are scaled by the
    window half-width, weighted tricube, and a degree-1 weighted fit is
    evaluated at the target. Returns the (m,) fitted values.
    """
    m = x.shape[0]
    lo = np.empty(m, dtype=np.int64)
    cur = 0
    for i in range(m):
        while cur + q < m and x[i] - x[cur] > x[cur + q] - x[i]:
            cur += 1
        lo[i] = cur
    idx = lo[:, None] + np.arange(q)[None, :]
    dx = x[idx] - x[:, None]
    yw = y[idx]
    h = np.abs(dx).max(axis=1)
    u = np.abs(dx) / h[:, None]
    w = (1.0 - u**3) ** 3
    sw = w.sum(axis=1)
    sx = (w * dx).sum(axis=1)
    sy = (w * yw).sum(axis=1)
    sxx = (w * dx * dx).sum(axis=1)
    sxy = (w * dx * yw).sum(axis=1)
    det = sw * sxx - sx * sx
    fitted = np.empty(m)
    flat = det <= 1e-12 * np.maximum(sw * sxx, 1e-300)
    fitted[flat] = sy[flat] / sw[flat]
    ok = ~flat
    # intercept of the local line at dx = 0
    fitted[ok] = (sxx[ok] * sy[ok] - sx[ok] * sxy[ok]) / det[ok]
    return fitted
