"""Steering functionals with a trusted Alice, assemblages and correlation tensors.

Every functional here has the form::

    sum_y w_y sum_{k=1}^{d-1} < A_y^k (x) B_{k|y} >  +  sum_{k=1}^{d-1} delta_k < A_0^k >

where ``B_{k|y} = sum_b omega^(k b) N_{b|y}`` are Bob's generalized observables.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .measurements import Povm, projective_povm
from .qcore import (
    CapacityExceeded,
    InvalidArgument,
    SchmidtCoeffs,
    as_density,
    dagger,
    make_Xd,
    make_Zd,
    mpow,
    partial_trace,
)

MAX_RESPONSES = 10**6
_CHUNK = 1 << 15


@dataclass(frozen=True, eq=False)
class SteeringFunctional:
    d: int
    alice_observables: tuple[np.ndarray, ...] = field(repr=False)
    weights: tuple[float, ...]
    delta: tuple[complex, ...] = field(repr=False)
    name: str = "custom"

    def __post_init__(self) -> None:
        obs = tuple(np.array(A, dtype=complex) for A in self.alice_observables)
        if not obs:
            raise InvalidArgument("need at least one Alice observable")
        if any(A.shape != obs[0].shape for A in obs):
            raise InvalidArgument("Alice observables have mixed dimensions")
        if len(self.weights) != len(obs):
            raise InvalidArgument("one weight per Alice observable is required")
        if any(w < 0 for w in self.weights):
            raise InvalidArgument("pair weights must be nonnegative")
        delta = tuple(complex(x) for x in self.delta)
        if len(delta) != self.d:
            raise InvalidArgument("delta must have length d")
        for k in range(1, self.d):
            if abs(delta[self.d - k] - np.conj(delta[k])) > 1e-12:
                raise InvalidArgument("marginal coefficients must satisfy delta_{d-k} = conj(delta_k)")
        object.__setattr__(self, "alice_observables", obs)
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        object.__setattr__(self, "delta", delta)

    @property
    def n_inputs(self) -> int:
        return len(self.alice_observables)

    @property
    def alice_dim(self) -> int:
        return self.alice_observables[0].shape[0]


def gi_steering_functional(alice_obs: Sequence[np.ndarray]) -> SteeringFunctional:
    mats = [np.asarray(A, dtype=complex) for A in alice_obs]
    if any(M.shape != mats[0].shape for M in mats):
        raise InvalidArgument("Alice observables have mixed dimensions")
    d = mats[0].shape[0]
    return SteeringFunctional(d, tuple(mats), (1.0,) * len(mats), (0j,) * d, name="gi")


def gi_quantum_bound(f: SteeringFunctional) -> float:
    return float(f.n_inputs * (f.d - 1))


def alpha_coefficients(alpha: SchmidtCoeffs) -> tuple[float, np.ndarray]:
    a = alpha.array
    d = alpha.d
    ratio = a[:, None] / a[None, :]
    np.fill_diagonal(ratio, 0.0)
    gamma = d / ratio.sum()
    # sum_{i != j} (a_i / a_j) omega^(k (d - j)) = sum_j colsum_j omega^(-k j)
    colsum = ratio.sum(axis=0)
    k = np.arange(d)
    phases = np.exp(-2j * np.pi * np.outer(k, np.arange(d)) / d)
    delta = -(gamma / d) * (phases @ colsum)
    delta[0] = -1.0
    return float(gamma), delta


def alpha_steering_functional(alpha: SchmidtCoeffs) -> SteeringFunctional:
    gamma, delta = alpha_coefficients(alpha)
    d = alpha.d
    # Symmetrize so that delta_{d-k} = conj(delta_k) holds bit for bit.
    sym = delta.copy()
    for k in range(1, d):
        sym[k] = (delta[k] + np.conj(delta[d - k])) / 2
    return SteeringFunctional(d, (make_Zd(d).matrix, make_Xd(d).matrix), (1.0, gamma),
                              tuple(sym), name="alpha")


def _bob_generalized(bob, d: int) -> list[np.ndarray]:
    """Generalized observables ``B_{k|y}`` (k = 0..d-1) of one Bob measurement."""
    if not isinstance(bob, Povm):
        bob = projective_povm(np.asarray(bob, dtype=complex), d)
    if bob.d_outcomes != d:
        raise InvalidArgument(f"Bob measurement has {bob.d_outcomes} outcomes, expected {d}")
    E = np.stack(bob.effects)
    b = np.arange(d)
    return [np.tensordot(np.exp(2j * np.pi * k * b / d), E, axes=1) for k in range(d)]


def steering_operator(f: SteeringFunctional, bob_measurements) -> np.ndarray:
    if len(bob_measurements) != f.n_inputs:
        raise InvalidArgument("need one Bob measurement per Alice observable")
    Bs = [_bob_generalized(m, f.d) for m in bob_measurements]
    dB = Bs[0][0].shape[0]
    op = 0
    for y, (A, w) in enumerate(zip(f.alice_observables, f.weights)):
        for k in range(1, f.d):
            op = op + w * np.kron(mpow(A, k), Bs[y][k])
    A0 = f.alice_observables[0]
    marg = sum(f.delta[k] * mpow(A0, k) for k in range(1, f.d))
    return op + np.kron(marg, np.eye(dB))


def evaluate_steering(f: SteeringFunctional, state, bob_measurements) -> float:
    rho = as_density(state)
    W = steering_operator(f, bob_measurements)
    if W.shape != rho.shape:
        raise InvalidArgument(f"state dimension {rho.shape[0]} does not match {W.shape[0]}")
    val = np.trace(rho @ W)
    if abs(val.imag) > 1e-8 * max(1.0, abs(val)):
        raise InvalidArgument(f"functional value has imaginary part {val.imag:.3e}")
    return float(val.real)


@dataclass(frozen=True, eq=False)
class Assemblage:
    """Unnormalized conditional states ``sigma[(b, y)]`` on Alice's side."""

    sigma: Mapping[tuple[int, int], np.ndarray] = field(repr=False)

    def __post_init__(self) -> None:
        sig = {key: np.array(v, dtype=complex) for key, v in self.sigma.items()}
        inputs = sorted({y for _, y in sig})
        marginals = []
        for y in inputs:
            total = 0
            for (b, yy), s in sig.items():
                if yy != y:
                    continue
                if np.linalg.eigvalsh((s + dagger(s)) / 2).min() < -1e-10:
                    raise InvalidArgument(f"sigma[{b},{y}] is not positive semidefinite")
                total = total + s
            marginals.append(total)
        if abs(np.trace(marginals[0]).real - 1.0) > 1e-10:
            raise InvalidArgument("assemblage is not normalized")
        if any(np.abs(M - marginals[0]).max() > 1e-10 for M in marginals[1:]):
            raise InvalidArgument("assemblage violates no-signalling")
        object.__setattr__(self, "sigma", sig)

    def reduced_state(self) -> np.ndarray:
        y0 = min(y for _, y in self.sigma)
        return sum(s for (_, y), s in self.sigma.items() if y == y0)


def assemblage_from(state, bob_measurements, d: int | None = None) -> Assemblage:
    rho = as_density(state)
    out = {}
    for y, meas in enumerate(bob_measurements):
        povm = meas if isinstance(meas, Povm) else projective_povm(np.asarray(meas), d)
        dB = povm.dim
        dA = rho.shape[0] // dB
        if dA * dB != rho.shape[0]:
            raise InvalidArgument("state does not factor with Bob's dimension")
        for b, N in enumerate(povm.effects):
            out[(b, y)] = partial_trace(rho @ np.kron(np.eye(dA), N), [dA, dB], [0])
    return Assemblage(out)


def evaluate_on_assemblage(F: Mapping[tuple[int, int], np.ndarray], a: Assemblage) -> float:
    """``sum_{b,y} Tr(F_{b|y} sigma_{b|y})``; missing keys count as zero."""
    total = 0j
    for key, s in a.sigma.items():
        if key in F:
            total += np.trace(np.asarray(F[key]) @ s)
    return float(total.real)


def operators_from_povms(povms: Sequence[Povm]) -> dict[tuple[int, int], np.ndarray]:
    """Functional operators ``F_{b|y}`` taken from one Alice POVM per input."""
    return {(b, y): E for y, p in enumerate(povms) for b, E in enumerate(p.effects)}


def lhs_bound_from_operators(F: Mapping[tuple[int, int], np.ndarray]) -> float:
    """Local-hidden-state maximum of ``sum Tr(F sigma)`` over deterministic responses."""
    inputs = sorted({y for _, y in F})
    outcomes = {y: sorted(b for b, yy in F if yy == y) for y in inputs}
    best = -np.inf
    for resp in itertools.product(*(outcomes[y] for y in inputs)):
        H = sum(F[(b, y)] for b, y in zip(resp, inputs))
        best = max(best, np.linalg.eigvalsh((H + dagger(H)) / 2)[-1])
    return float(best)


def lhs_bound_oracle(f: SteeringFunctional) -> float:
    """Exact LHS maximum: largest eigenvalue over all deterministic Bob responses."""
    d, n = f.d, f.n_inputs
    if d**n > MAX_RESPONSES:
        raise CapacityExceeded(f"{d}^{n} responses exceed the limit {MAX_RESPONSES}")
    dim = f.alice_dim
    k = np.arange(1, d)
    per_input = []
    for A, w in zip(f.alice_observables, f.weights):
        powers = np.stack([mpow(A, int(kk)) for kk in k])
        phases = np.exp(2j * np.pi * np.outer(np.arange(d), k) / d)
        per_input.append(w * np.tensordot(phases, powers, axes=1))
    A0 = f.alice_observables[0]
    marg = sum(f.delta[kk] * mpow(A0, kk) for kk in range(1, d)) + np.zeros((dim, dim))
    best = -np.inf
    total = d**n
    for start in range(0, total, _CHUNK):
        idx = np.arange(start, min(total, start + _CHUNK))
        H = np.broadcast_to(marg, (idx.size, dim, dim)).copy()
        rem = idx.copy()
        for y in reversed(range(n)):
            H += per_input[y][rem % d]
            rem //= d
        H = (H + np.conj(np.swapaxes(H, 1, 2))) / 2
        best = max(best, float(np.linalg.eigvalsh(H)[:, -1].max()))
    return best


def leon_objective(alpha: SchmidtCoeffs, eta: np.ndarray) -> float:
    """Upper bound on the local value for an Alice state with amplitudes of modulus ``|eta|``."""
    a = alpha.array
    gamma, _ = alpha_coefficients(alpha)
    e = np.abs(np.asarray(eta, dtype=complex))
    return float(alpha.d * np.max(e**2) + gamma * (e.sum() ** 2 - a.sum() * np.sum(e**2 / a)))


def alpha_classical_bound(alpha: SchmidtCoeffs, restarts: int = 64, seed: int = 0,
                          tol: float = 1e-15, max_iter: int = 200_000) -> float:
    """Maximize the local-value bound over nonnegative unit ``eta`` by multi-start ascent.

    Fixing the index ``j`` that carries the ``max`` term splits the objective
    into smooth pieces ``d eta_j^2 + gamma[(sum eta)^2 - sum(alpha) sum eta^2/alpha]``;
    the maximum over all pieces is the maximum of the original objective.
    Each start is assigned a piece (cycling through them) and climbs by
    projected gradient steps on the nonnegative part of the unit sphere. All
    starts advance together.
    """
    a = alpha.array
    d = alpha.d
    gamma, _ = alpha_coefficients(alpha)
    R = max(int(restarts), d)
    rng = np.random.default_rng(seed)
    eta = np.sqrt(rng.dirichlet(np.ones(d), size=R))
    piece = np.arange(R) % d
    M = np.broadcast_to(gamma * (np.ones((d, d)) - a.sum() * np.diag(1 / a)), (R, d, d)).copy()
    M[np.arange(R), piece, piece] += d
    # A step of 1/c with c above the spectral radius keeps every update an ascent step.
    step = 1.0 / np.abs(M).sum(axis=2).max()
    value = np.einsum("ri,rij,rj->r", eta, M, eta)
    for _ in range(max_iter):
        grad = np.einsum("rij,rj->ri", M, eta)
        nxt = np.clip(eta + step * grad, 0.0, None)
        nxt /= np.linalg.norm(nxt, axis=1, keepdims=True)
        new = np.einsum("ri,rij,rj->r", nxt, M, nxt)
        eta = nxt
        done = np.abs(new - value).max() <= tol * max(1.0, np.abs(new).max())
        value = new
        if done:
            break
    return float(max(leon_objective(alpha, e) for e in eta[np.argsort(-value)[:d]]))


def alpha_classical_bound_spectral(alpha: SchmidtCoeffs) -> float:
    """Closed-form maximum of the same bound, one eigenvalue per piece.

    With ``a`` the index of the largest ``|eta_a|`` fixed, the bound is the
    quadratic form ``eta^T M eta`` on the unit sphere, where
    ``M = d e_a e_a^T + gamma (1 1^T - (sum alpha) diag(1/alpha))``. Its
    off-diagonal entries are positive, so the top eigenvector is entrywise
    positive and the constraint ``eta >= 0`` is inactive.
    """
    a = alpha.array
    d = alpha.d
    gamma, _ = alpha_coefficients(alpha)
    base = gamma * (np.ones((d, d)) - a.sum() * np.diag(1 / a))
    best = -np.inf
    for j in range(d):
        M = base.copy()
        M[j, j] += d
        best = max(best, float(np.linalg.eigvalsh(M)[-1]))
    return best


@dataclass(frozen=True, eq=False)
class Correlations:
    """``p[x, y, a, b] = p(a, b | x, y)``."""

    p: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        p = np.array(self.p, dtype=float)
        if p.ndim != 4:
            raise InvalidArgument("correlation tensor must have shape (X, Y, dA, dB)")
        if p.min() < -1e-12:
            raise InvalidArgument("probabilities must be nonnegative")
        if np.abs(p.sum(axis=(2, 3)) - 1).max() > 1e-10:
            raise InvalidArgument("probabilities are not normalized per input pair")
        pa = p.sum(axis=3)
        pb = p.sum(axis=2)
        if np.abs(pa - pa[:, :1]).max() > 1e-10 or np.abs(pb - pb[:1]).max() > 1e-10:
            raise InvalidArgument("correlations are signalling")
        object.__setattr__(self, "p", p)

    def alice_marginal(self, x: int) -> np.ndarray:
        return self.p[x, 0].sum(axis=1)


def correlations_from(state, alice_povms: Sequence[Povm], bob_povms: Sequence[Povm]) -> Correlations:
    rho = as_density(state)
    X, Y = len(alice_povms), len(bob_povms)
    dA, dB = alice_povms[0].d_outcomes, bob_povms[0].d_outcomes
    p = np.zeros((X, Y, dA, dB))
    for x, PA in enumerate(alice_povms):
        for y, PB in enumerate(bob_povms):
            for a, Ea in enumerate(PA.effects):
                for b, Eb in enumerate(PB.effects):
                    p[x, y, a, b] = np.trace(rho @ np.kron(Ea, Eb)).real
    return Correlations(p)


def fourier_expectations(c: Correlations) -> np.ndarray:
    """``E[x, y, k, l] = sum_{a,b} omega_A^(k a) omega_B^(l b) p(a, b | x, y)``."""
    dA, dB = c.p.shape[2:]
    FA = np.exp(2j * np.pi * np.outer(np.arange(dA), np.arange(dA)) / dA)
    FB = np.exp(2j * np.pi * np.outer(np.arange(dB), np.arange(dB)) / dB)
    return np.einsum("ka,lb,xyab->xykl", FA, FB, c.p)


def probabilities_from_expectations(E: np.ndarray) -> np.ndarray:
    dA, dB = E.shape[2:]
    FA = np.exp(-2j * np.pi * np.outer(np.arange(dA), np.arange(dA)) / dA)
    FB = np.exp(-2j * np.pi * np.outer(np.arange(dB), np.arange(dB)) / dB)
    return np.einsum("ak,bl,xykl->xyab", FA, FB, E).real / (dA * dB)


def alpha_value_from_probabilities(alpha: SchmidtCoeffs, c: Correlations) -> float:
    """The alpha functional written with joint and marginal probabilities.

    Inputs 0 and 1 are ``Z_d`` and ``X_d`` on Alice's side; outcome pairs with
    ``a + b = 0 mod d`` are rewarded.
    """
    d = alpha.d
    a = alpha.array
    gamma, _ = alpha_coefficients(alpha)
    c_ab = (np.add.outer(np.arange(d), np.arange(d)) % d == 0).astype(float)
    s00 = d * np.sum(c_ab * c.p[0, 0])
    s11 = d * np.sum(c_ab * c.p[1, 1])
    pa = c.alice_marginal(0)
    ratio_term = sum(a[i] * pa[j] / a[j] for i in range(d) for j in range(d) if i != j)
    return float(s00 + gamma * (s11 - ratio_term) - gamma)
