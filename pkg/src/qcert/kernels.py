"""Select the compiled strategy-search kernel when it was built, else NumPy."""

from __future__ import annotations

from . import _enum_py

try:
    from . import _enum as _compiled
except ImportError:  # extension not built
    _compiled = None

BACKEND = "cython" if _compiled is not None else "numpy"


def best_deterministic(payoff, N: int, m: int, d: int, backend: str | None = None):
    """Best deterministic strategy for a real payoff tensor of shape ``(m, d) * N``.

    Returns ``(value, outcomes)`` with ``outcomes[i, x]`` the outcome of party
    ``i`` on input ``x``. Ties resolve to the lexicographically smallest
    strategy.
    """
    backend = backend or BACKEND
    if backend == "cython":
        if _compiled is None:
            raise RuntimeError("compiled kernel is not available")
        return _compiled.best_deterministic(payoff, N, m, d)
    if backend == "numpy":
        return _enum_py.best_deterministic(payoff, N, m, d)
    raise ValueError(f"unknown backend {backend!r}")
