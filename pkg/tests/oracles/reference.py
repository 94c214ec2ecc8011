"""Independent reference computations used to freeze expected values.

Nothing here calls the package's payoff tensor, kernels or eigen-solvers; the
functionals are read only through their raw term dictionaries.
"""

from __future__ import annotations

import itertools

import numpy as np


def naive_classical_bound(f) -> float:
    """Enumerate every party's deterministic strategy and sum the raw terms."""
    N, m, d = f.N, f.m, f.d
    terms = list(f.terms.items())
    best = -np.inf
    for flat in itertools.product(range(d), repeat=N * m):
        out = [flat[i * m:(i + 1) * m] for i in range(N)]
        val = 0j
        for (xs, ks), c in terms:
            t = sum(k * out[i][x] for i, (x, k) in enumerate(zip(xs, ks)))
            val += c * np.exp(2j * np.pi * t / d)
        best = max(best, val.real)
    return float(best)


def zx_lhs_closed_form(d: int) -> float:
    """LHS bound of the two-setting functional with Z_d and X_d.

    Each deterministic response pair gives ``d(P+Q) - 2`` with rank-one
    projectors from two mutually unbiased bases; its top eigenvalue is
    ``d(1 + 1/sqrt(d)) - 2``.
    """
    return d + np.sqrt(d) - 2


def robustness_state_bound(d: int, eps: float) -> float:
    return np.sqrt(2 * (3 * d + 1)) * (2 * eps) ** 0.25
