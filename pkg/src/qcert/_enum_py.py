"""NumPy implementation of the deterministic-strategy search.

``payoff`` has shape ``(m, d) * N``: ``payoff[x1, b1, ..., xN, bN]`` is the
real score of outcome tuple ``b`` on input tuple ``x``. A strategy assigns
each party an outcome per input. The last party is optimized in closed form
(per input, independently); the others are enumerated.
"""

from __future__ import annotations

import itertools

import numpy as np

TIE_TOL = 1e-12


def party_strategies(m: int, d: int) -> np.ndarray:
    """All ``d**m`` maps input -> outcome, lexicographic, input 0 most significant."""
    return np.array(list(itertools.product(range(d), repeat=m)), dtype=np.int64).reshape(-1, m)


def best_deterministic(payoff: np.ndarray, N: int, m: int, d: int) -> tuple[float, np.ndarray]:
    T = np.ascontiguousarray(payoff, dtype=float).reshape(1, m, d, -1)
    strat = party_strategies(m, d)
    for _ in range(N - 1):
        B, _, _, R = T.shape
        out = np.zeros((B, strat.shape[0], R))
        for x in range(m):
            out += T[:, x, strat[:, x], :]
        T = out.reshape(B * strat.shape[0], m, d, -1)
    H = T.reshape(-1, m, d)
    per_input = H.max(axis=2)
    values = per_input.sum(axis=1)
    idx = int(np.flatnonzero(values >= values.max() - TIE_TOL)[0])
    last = np.argmax(H[idx] >= per_input[idx][:, None] - TIE_TOL, axis=1)
    outer = []
    rem = idx
    n_s = d**m
    for _ in range(N - 1):
        outer.append(rem % n_s)
        rem //= n_s
    rows = [strat[s] for s in reversed(outer)] + [last]
    return float(values[idx]), np.array(rows, dtype=np.int64)
