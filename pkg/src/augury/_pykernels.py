"""Vectorised numpy/scipy versions of the compiled kernels in ``_ckernels``."""
import numpy as np
from scipy.signal import lfilter


def trailing_ma(values, n, decay):
    size = values.shape[0]
    out = np.full(size, np.nan)
    if n > size:
        return out
    missing = np.isnan(values)
    x = np.where(missing, 0.0, values)
    if decay == 1.0:
        csum = np.concatenate(([0.0], np.cumsum(x)))
        sums = csum[n:] - csum[:-n]
        wsum = float(n)
    else:
        tail = decay**n
        full = lfilter([1.0], [1.0, -decay], x)
        sums = full[n - 1 :].copy()
        sums[1:] -= tail * full[: size - n]
        wsum = (1.0 - tail) / (1.0 - decay)
    out[n - 1 :] = sums / wsum
    mcount = np.concatenate(([0], np.cumsum(missing)))
    out[n - 1 :][(mcount[n:] - mcount[:-n]) > 0] = np.nan
    return out


def count_outside_band(values, center, halfwidth):
    ok = ~(np.isnan(values) | np.isnan(center))
    v = values[ok]
    c = center[ok]
    above = int(np.count_nonzero(v > c + halfwidth))
    below = int(np.count_nonzero(v < c - halfwidth))
    return above, below


def arma_innovations(u, theta):
    if theta.shape[0] == 0:
        return u.copy()
    return lfilter([1.0], np.concatenate(([1.0], theta)), u)
