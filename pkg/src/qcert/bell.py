"""Bell functionals in the correlator picture: ASTA, SATWAP and CHSH.

A functional is a map from correlator keys ``(inputs, powers)`` to complex
weights; the key stands for ``< A_{1,x_1}^{k_1} (x) ... (x) A_{N,x_N}^{k_N} >``.
Inputs are 0-based here. Powers are kept signed, and a negative power means
an adjoint power.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import kernels
from .measurements import ideal_observables
from .qcore import (
    CapacityExceeded,
    InvalidArgument,
    _check_dim,
    as_density,
    make_ghz,
    mpow,
    tensor,
)

MAX_OPERATOR_DIM = 4096
MAX_STRATEGIES = 10**7

Key = tuple[tuple[int, ...], tuple[int, ...]]


@dataclass(frozen=True, eq=False)
class BellFunctional:
    N: int
    m: int
    d: int
    terms: dict[Key, complex] = field(repr=False)
    name: str = "custom"

    def __post_init__(self) -> None:
        for v, label in ((self.N, "N"), (self.m, "m"), (self.d, "d")):
            if int(v) != v or v < 2:
                raise InvalidArgument(f"{label} must be an integer >= 2, got {v}")
        for (xs, ks) in self.terms:
            if len(xs) != self.N or len(ks) != self.N:
                raise InvalidArgument("term key length does not match the number of parties")
            if any(not 0 <= x < self.m for x in xs):
                raise InvalidArgument(f"term input {xs} out of range")

    def coefficient(self, inputs: Sequence[int], powers: Sequence[int]) -> complex:
        """Weight of a correlator; powers are compared modulo ``d``."""
        key = (tuple(inputs), tuple(int(k) % self.d for k in powers))
        return self.canonical_terms().get(key, 0j)

    def canonical_terms(self, tol: float = 1e-14) -> dict[Key, complex]:
        """Terms merged with powers reduced modulo ``d``; zero weights dropped."""
        out: dict[Key, complex] = {}
        for (xs, ks), c in self.terms.items():
            key = (xs, tuple(int(k) % self.d for k in ks))
            out[key] = out.get(key, 0j) + c
        return {k: v for k, v in out.items() if abs(v) > tol}

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        terms = self.canonical_terms()
        for (xs, ks), c in terms.items():
            adj = (xs, tuple((-k) % self.d for k in ks))
            if abs(terms.get(adj, 0j) - np.conj(c)) > tol:
                return False
        return True

    def scaled(self, factor: float) -> "BellFunctional":
        return BellFunctional(self.N, self.m, self.d,
                              {k: factor * v for k, v in self.terms.items()}, self.name)


@dataclass(frozen=True)
class DeterministicStrategy:
    """``outcomes[i][x]``: outcome of party ``i`` on input ``x``."""

    outcomes: tuple[tuple[int, ...], ...]

    @property
    def n_assignments(self) -> int:
        return sum(len(row) for row in self.outcomes)


def _omega(d: int, t: float) -> complex:
    return complex(np.exp(2j * np.pi * t / d))


def asta_coefficient(k: int, m: int, d: int) -> complex:
    return _omega(d, (2 * k - d) / (4 * m)) / (2 * np.cos(np.pi / (2 * m)))


def _wrap(x: int, m: int) -> tuple[int, int]:
    """Reduce a 1-based input to ``1..m``; return (0-based input, number of wraps)."""
    s = (x - 1) // m
    return x - 1 - s * m, s


def _add(terms: dict, parts: Sequence[tuple[int, int]], coef: complex, m: int, d: int) -> None:
    xs, ks = [], []
    for x, k in parts:
        x0, s = _wrap(x, m)
        coef *= _omega(d, s * k)
        xs.append(x0)
        ks.append(k)
    key = (tuple(xs), tuple(ks))
    terms[key] = terms.get(key, 0j) + coef


def _asta_alphas(N: int, m: int):
    for al in itertools.product(range(1, m + 1), repeat=N - 1):
        yield list(al) + [1]


def _tail_inputs(al: Sequence[int], N: int) -> list[int]:
    return [al[i - 1] + al[i] - 1 for i in range(1, N)]


def asta_functional(N: int, m: int, d: int) -> BellFunctional:
    d = _check_dim(d)
    terms: dict[Key, complex] = {}
    for al in _asta_alphas(N, m):
        tail = _tail_inputs(al, N)
        for k in range(1, d):
            a = asta_coefficient(k, m, d)
            rest = [(x, (-1) ** i * k) for i, x in enumerate(tail, start=1)]
            _add(terms, [(al[0], k)] + rest, a, m, d)
            _add(terms, [(al[0] + 1, k)] + rest, np.conj(a), m, d)
    return BellFunctional(N, m, d, terms, name=f"asta(N={N},m={m},d={d})")


def satwap_functional(d: int) -> BellFunctional:
    """Two parties, two inputs; Bob's powers written as ``d - k``."""
    d = _check_dim(d)
    terms: dict[Key, complex] = {}
    for k in range(1, d):
        a = _omega(d, (2 * k - d) / 8) / np.sqrt(2)
        for (x, y), c in {(0, 0): a, (0, 1): np.conj(a) * _omega(d, k),
                          (1, 0): np.conj(a), (1, 1): a}.items():
            terms[((x, y), (k, d - k))] = c
    return BellFunctional(2, 2, d, terms, name=f"satwap(d={d})")


def chsh_functional(scaled: bool = False) -> BellFunctional:
    c = 1 / np.sqrt(2) if scaled else 1.0
    terms = {((x, y), (1, 1)): c * (-1 if x == y == 1 else 1) for x in (0, 1) for y in (0, 1)}
    return BellFunctional(2, 2, 2, terms, name="chsh-scaled" if scaled else "chsh")


def asta_quantum_bound(N: int, m: int, d: int) -> float:
    """Maximal quantum value, ``m^(N-1) (d-1)``; the SOS decomposition closes on it."""
    return float(m ** (N - 1) * (d - 1))


def satwap_classical_bound(d: int) -> float:
    d = _check_dim(d)
    return 0.5 * (3 / np.tan(np.pi / (4 * d)) - 1 / np.tan(3 * np.pi / (4 * d))) - 2


def asta_ideal_realization(N: int, m: int, d: int):
    """GHZ state and the ideal observables ``obs[party][input]`` (0-based)."""
    return make_ghz(N, d), [[o.matrix for o in row] for row in ideal_observables(N, m, d)]


class _Powers:
    """Memoized signed powers of every party's observables."""

    def __init__(self, observables):
        self.obs = [[np.asarray(A, dtype=complex) for A in row] for row in observables]
        self.cache: dict[tuple[int, int, int], np.ndarray] = {}

    def __call__(self, i: int, x: int, k: int) -> np.ndarray:
        key = (i, x, k)
        if key not in self.cache:
            self.cache[key] = mpow(self.obs[i][x], k)
        return self.cache[key]

    def periodic(self, i: int, x: int, k: int, m: int, d: int) -> np.ndarray:
        """``A_{i,x}^k`` for a 1-based input with ``A_{x+m} = omega A_x``."""
        x0, s = _wrap(x, m)
        return _omega(d, s * k) * self(i, x0, k)


def _check_observables(f: BellFunctional, observables) -> None:
    if len(observables) != f.N or any(len(row) != f.m for row in observables):
        raise InvalidArgument(f"need {f.N} parties with {f.m} observables each")
    dims = [np.asarray(row[0]).shape[0] for row in observables]
    if int(np.prod(dims)) > MAX_OPERATOR_DIM:
        raise CapacityExceeded(f"operator dimension {int(np.prod(dims))} exceeds {MAX_OPERATOR_DIM}")


def bell_operator(f: BellFunctional, observables) -> np.ndarray:
    _check_observables(f, observables)
    pw = _Powers(observables)
    B = None
    for (xs, ks), c in f.terms.items():
        term = c * tensor([pw(i, x, k) for i, (x, k) in enumerate(zip(xs, ks))])
        B = term if B is None else B + term
    return B


def evaluate_bell(f: BellFunctional, state, observables) -> float:
    rho = as_density(state)
    B = bell_operator(f, observables)
    if B.shape != rho.shape:
        raise InvalidArgument(f"state dimension {rho.shape[0]} does not match operator {B.shape[0]}")
    val = np.trace(rho @ B)
    if abs(val.imag) > 1e-8 * max(1.0, abs(val)):
        raise InvalidArgument(f"functional value has imaginary part {val.imag:.3e}")
    return float(val.real)


def payoff_tensor(f: BellFunctional) -> np.ndarray:
    """Real score of each outcome tuple, shape ``(m, d) * N`` with axes interleaved."""
    N, m, d = f.N, f.m, f.d
    G = np.zeros((m,) * N + (d,) * N, dtype=complex)
    b = np.arange(d)
    for (xs, ks), c in f.terms.items():
        G[xs] += c * tensor([np.exp(2j * np.pi * k * b / d) for k in ks]).reshape((d,) * N)
    order = [ax for i in range(N) for ax in (i, N + i)]
    return np.ascontiguousarray(G.real.transpose(order))


def deterministic_value(f: BellFunctional, strategy: DeterministicStrategy) -> float:
    G = payoff_tensor(f)
    total = 0.0
    for xs in itertools.product(range(f.m), repeat=f.N):
        idx = tuple(v for i, x in enumerate(xs) for v in (x, strategy.outcomes[i][x]))
        total += G[idx]
    return float(total)


def evaluate_on_correlations(f: BellFunctional, p: np.ndarray) -> float:
    """Value on a probability tensor ``p[x_1..x_N, b_1..b_N] = p(b|x)``."""
    N, m, d = f.N, f.m, f.d
    p = np.asarray(p, dtype=float)
    if p.shape != (m,) * N + (d,) * N:
        raise InvalidArgument(f"correlation tensor must have shape {(m,) * N + (d,) * N}")
    order = [ax for i in range(N) for ax in (i, N + i)]
    return float(np.sum(payoff_tensor(f) * p.transpose(order)))


def classical_bound_bruteforce(f: BellFunctional, backend: str | None = None) -> tuple[float, DeterministicStrategy]:
    """Exact local bound by enumeration of deterministic strategies."""
    if f.d ** (f.N * f.m) > MAX_STRATEGIES:
        raise CapacityExceeded(f"{f.d}^{f.N * f.m} strategies exceed the limit {MAX_STRATEGIES}")
    value, rows = kernels.best_deterministic(payoff_tensor(f), f.N, f.m, f.d, backend=backend)
    return value, DeterministicStrategy(tuple(tuple(int(v) for v in row) for row in rows))


def _sos_coefficients(alpha: int, k: int, m: int, d: int) -> tuple[complex, complex, float]:
    c = 2 * np.cos(np.pi / (2 * m))
    if alpha < m - 2:
        s0, s1 = np.sin(np.pi * alpha / m), np.sin(np.pi * (alpha + 1) / m)
        mu = _omega(d, (alpha + 1) * (d - 2 * k) / (2 * m)) / c * np.sin(np.pi / m) / np.sqrt(s0 * s1)
        nu = -_omega(d, (d - 2 * k) / (2 * m)) / c * np.sqrt(s1 / s0)
        tau = np.sqrt(s0 / s1) / c
    else:
        r = np.sqrt(2 * np.cos(np.pi / m))
        mu = -_omega(d, -k) * _omega(d, -(d - 2 * k) / (2 * m)) / (c * r)
        nu = -_omega(d, (d - 2 * k) / (2 * m)) / (c * r)
        tau = r / c
    return mu, nu, tau


def _embed(op: np.ndarray, i: int, N: int, d: int) -> np.ndarray:
    return tensor([np.eye(d ** i), op, np.eye(d ** (N - i - 1))])


def asta_relation_terms(N: int, m: int, d: int, observables, n: int | None = None):
    """Yield ``(label, M)`` with ``P = 1 - M`` the SOS terms.

    ``n=None`` gives the main decomposition (party 1 carries the ``a_k``
    mixture); ``n=2..N`` moves the mixture to party ``n``.
    """
    pw = _Powers(observables)
    for al in _asta_alphas(N, m):
        tail = _tail_inputs(al, N)
        for k in range(1, d):
            a = asta_coefficient(k, m, d)
            if n is None:
                factors = [a * pw.periodic(0, al[0], k, m, d) + np.conj(a) * pw.periodic(0, al[0] + 1, k, m, d)]
            else:
                factors = [pw.periodic(0, al[0], k, m, d)]
            for i, j in enumerate(tail, start=1):
                p = (-1) ** i * k
                if n is not None and i == n - 1:
                    if n % 2:
                        f = a * pw.periodic(i, j, k, m, d) + np.conj(a) * pw.periodic(i, j + 1, k, m, d)
                    else:
                        f = a * pw.periodic(i, j, -k, m, d) + np.conj(a) * pw.periodic(i, j - 1, -k, m, d)
                else:
                    f = pw.periodic(i, j, p, m, d)
                factors.append(f)
            yield (tuple(al[:-1]), k), tensor(factors)


def _r_terms(N: int, m: int, d: int, observables, n: int | None):
    pw = _Powers(observables)
    party = 0 if n is None else n - 1
    conj_form = n is None or n % 2 == 1
    for alpha in range(1, m - 1):
        for k in range(1, d):
            mu, nu, tau = _sos_coefficients(alpha, k, m, d)
            if conj_form:
                R = (np.conj(mu) * pw.periodic(party, 2, k, m, d) + np.conj(nu) * pw.periodic(party, alpha + 2, k, m, d)
                     + tau * pw.periodic(party, alpha + 3, k, m, d))
            else:
                R = (mu * pw.periodic(party, 2, -k, m, d) + nu * pw.periodic(party, alpha + 2, -k, m, d)
                     + tau * pw.periodic(party, alpha + 3, -k, m, d))
            yield _embed(R, party, N, d)


def sos_residual(N: int, m: int, d: int, observables, beta: float | None = None) -> dict[str, float]:
    """Frobenius norm of ``beta 1 - B - SOS`` for the main and each party-shifted decomposition."""
    if d**N > MAX_OPERATOR_DIM:
        raise CapacityExceeded(f"operator dimension {d ** N} exceeds {MAX_OPERATOR_DIM}")
    if beta is None:
        beta = asta_quantum_bound(N, m, d)
    lhs = beta * np.eye(d**N) - bell_operator(asta_functional(N, m, d), observables)
    out = {}
    for n in [None] + list(range(2, N + 1)):
        rhs = np.zeros_like(lhs)
        for _, M in asta_relation_terms(N, m, d, observables, n):
            P = np.eye(d**N) - M
            rhs += 0.5 * (P.conj().T @ P if n is None else P @ P.conj().T)
        for R in _r_terms(N, m, d, observables, n):
            rhs += m ** (N - 2) / 2 * (R.conj().T @ R)
        out["main" if n is None else f"n{n}"] = float(np.linalg.norm(lhs - rhs))
    return out
