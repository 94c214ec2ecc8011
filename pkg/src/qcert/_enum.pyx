# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled deterministic-strategy search; mirrors ``_enum_py.best_deterministic``."""

import numpy as np
cimport numpy as cnp

cdef double TIE_TOL = 1e-12


cdef double _score(const double[::1] G, long outer, int N, int m, int d,
                   long[:, ::1] strat, long[::1] sidx, long[::1] xs,
                   double[::1] H, long[::1] choice) noexcept nogil:
    cdef long n_s = strat.shape[0]
    cdef long rem = outer
    cdef int p, x, b, q
    cdef long base, block = m * d
    cdef long n_in = 1
    cdef long t
    cdef double best, total, h
    for p in range(N - 2, -1, -1):
        sidx[p] = rem % n_s
        rem = rem // n_s
    for q in range(block):
        H[q] = 0.0
    for p in range(N - 1):
        n_in *= m
    for t in range(n_in):
        rem = t
        for p in range(N - 2, -1, -1):
            xs[p] = rem % m
            rem = rem // m
        base = 0
        for p in range(N - 1):
            base = (base * m + xs[p]) * d + strat[sidx[p], xs[p]]
        base *= block
        for q in range(block):
            H[q] += G[base + q]
    total = 0.0
    for x in range(m):
        best = H[x * d]
        for b in range(1, d):
            h = H[x * d + b]
            if h > best:
                best = h
        total += best
        for b in range(d):
            if H[x * d + b] >= best - TIE_TOL:
                choice[x] = b
                break
    return total


def best_deterministic(payoff, int N, int m, int d):
    cdef const double[::1] G = np.ascontiguousarray(payoff, dtype=np.float64).ravel()
    from ._enum_py import party_strategies
    cdef long[:, ::1] strat = np.ascontiguousarray(party_strategies(m, d), dtype=np.int64)
    cdef long n_s = strat.shape[0]
    cdef long n_outer = 1
    cdef int p
    for p in range(N - 1):
        n_outer *= n_s
    cdef long[::1] sidx = np.zeros(max(N - 1, 1), dtype=np.int64)
    cdef long[::1] xs = np.zeros(max(N - 1, 1), dtype=np.int64)
    cdef double[::1] H = np.zeros(m * d)
    cdef long[::1] choice = np.zeros(m, dtype=np.int64)
    cdef double vmax = -1e300, v
    cdef long o, found = -1
    with nogil:
        for o in range(n_outer):
            v = _score(G, o, N, m, d, strat, sidx, xs, H, choice)
            if v > vmax:
                vmax = v
        for o in range(n_outer):
            v = _score(G, o, N, m, d, strat, sidx, xs, H, choice)
            if v >= vmax - TIE_TOL:
                found = o
                break
    rows = [np.asarray(strat[sidx[p]]).copy() for p in range(N - 1)]
    rows.append(np.asarray(choice).copy())
    return float(v), np.array(rows, dtype=np.int64)
