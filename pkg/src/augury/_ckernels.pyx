# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops. Must stay numerically interchangeable with _pykernels."""
import numpy as np

from libc.math cimport NAN, isnan, pow


def trailing_ma(const double[::1] values, Py_ssize_t n, double decay):
    cdef Py_ssize_t size = values.shape[0]
    cdef Py_ssize_t t
    cdef Py_ssize_t n_missing = 0
    cdef double acc = 0.0
    cdef double x, old
    cdef double tail = pow(decay, <double>n)
    cdef double wsum
    out = np.empty(size, dtype=np.float64)
    cdef double[::1] res = out

    if decay == 1.0:
        wsum = <double>n
    else:
        wsum = (1.0 - tail) / (1.0 - decay)

    for t in range(size):
        x = values[t]
        if isnan(x):
            n_missing += 1
            x = 0.0
        if t >= n:
            old = values[t - n]
            if isnan(old):
                n_missing -= 1
                old = 0.0
            acc = decay * acc + x - tail * old
        else:
            acc = decay * acc + x
        if t >= n - 1 and n_missing == 0:
            res[t] = acc / wsum
        else:
            res[t] = NAN
    return out


def count_outside_band(const double[::1] values, const double[::1] center, double halfwidth):
    cdef Py_ssize_t size = values.shape[0]
    cdef Py_ssize_t t
    cdef Py_ssize_t above = 0
    cdef Py_ssize_t below = 0
    cdef double v, c
    for t in range(size):
        v = values[t]
        c = center[t]
        if isnan(v) or isnan(c):
            continue
        if v > c + halfwidth:
            above += 1
        elif v < c - halfwidth:
            below += 1
    return above, below


def arma_innovations(const double[::1] u, const double[::1] theta):
    cdef Py_ssize_t size = u.shape[0]
    cdef Py_ssize_t q = theta.shape[0]
    cdef Py_ssize_t t, j
    cdef double acc
    out = np.empty(size, dtype=np.float64)
    cdef double[::1] e = out
    for t in range(size):
        acc = u[t]
        for j in range(1, q + 1):
            if t - j < 0:
                break
            acc -= theta[j - 1] * e[t - j]
        e[t] = acc
    return out
