"""Genuine incompatibility, self-testing relations, canonical alignment and robustness."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from .bell import asta_relation_terms
from .measurements import Povm, eigenbasis
from .qcore import (
    InvalidArgument,
    QcertError,
    SchmidtCoeffs,
    as_density,
    dagger,
    make_maxent,
    make_schmidt_state,
    make_Xd,
    make_Zd,
    mpow,
    unitary_eig,
)
from .steering import _bob_generalized, alpha_coefficients

COMMUTANT_RTOL = 1e-8
ROBUSTNESS_EPS_REGIME = 0.05


class CannotAlign(QcertError):
    code = "cannot-align"


@dataclass(frozen=True, eq=False)
class GiReport:
    commutant_dimension: int
    is_gi: bool
    block_witness: np.ndarray | None = field(default=None, repr=False)


def _commutant_null_space(obs: Sequence[np.ndarray]) -> tuple[np.ndarray, int]:
    mats = [np.asarray(A, dtype=complex) for A in obs]
    if not mats:
        raise InvalidArgument("need at least one observable")
    n = mats[0].shape[0]
    if any(A.shape != (n, n) for A in mats):
        raise InvalidArgument("observables must share one dimension")
    eye = np.eye(n)
    # Row-major vec: vec(A P - P A) = (A (x) 1 - 1 (x) A^T) vec(P).
    L = np.vstack([np.kron(A, eye) - np.kron(eye, A.T) for A in mats])
    _, s, Vh = np.linalg.svd(L)
    # The cut also scales with the operators so that near-scalar sets are
    # not decided by roundoff in an almost-zero map.
    scale = max(s[0], max(np.linalg.norm(A, 2) for A in mats))
    if scale == 0:
        return Vh.conj(), n * n
    null = int(np.sum(s < COMMUTANT_RTOL * scale))
    return Vh[n * n - null:].conj(), null


def commutant_dimension(obs: Sequence[np.ndarray]) -> int:
    """Dimension of the joint commutant ``{P : [P, A_y] = 0 for all y}``."""
    return _commutant_null_space(obs)[1]


def is_genuinely_incompatible(obs: Sequence[np.ndarray]) -> GiReport:
    basis, dim = _commutant_null_space(obs)
    if dim == 1:
        return GiReport(1, True, None)
    n = int(round(np.sqrt(basis.shape[1])))
    best, best_norm = None, -1.0
    for v in basis:
        C = v.reshape(n, n)
        for H in ((C + dagger(C)) / 2, (C - dagger(C)) / 2j):
            H = H - np.trace(H) / n * np.eye(n)
            nrm = np.linalg.norm(H)
            if nrm > best_norm:
                best, best_norm = H / nrm, nrm
    vals, vecs = np.linalg.eigh(best)
    top = vecs[:, vals > vals[-1] - 1e-8 * max(1.0, abs(vals[-1]))]
    return GiReport(dim, False, top @ dagger(top))


Scenario = Literal["bell-asta", "steering-gi", "steering-alpha"]


def _relation_residual(M: np.ndarray, state: np.ndarray) -> float:
    if state.ndim == 1:
        return float(np.linalg.norm(M @ state - state))
    return float(np.linalg.norm(M @ state - state))


def selftest_residuals(state, alice_obs, bob, scenario: Scenario,
                       alpha: SchmidtCoeffs | None = None) -> list[float]:
    """Residuals ``||M psi - psi||`` of the saturation relations of a scenario.

    ``bell-asta``: ``alice_obs`` holds party 1's observables and ``bob`` the
    rows of parties 2..N. ``steering-gi``: one Bob measurement per Alice
    observable. ``steering-alpha``: Alice is ``(Z_d, X_d)`` and ``alpha`` is
    required. Density matrices are accepted; the norm is then Frobenius.
    """
    state = np.asarray(state, dtype=complex)
    if scenario == "bell-asta":
        table = [list(alice_obs)] + [list(row) for row in bob]
        N, m = len(table), len(table[0])
        d = np.asarray(table[0][0]).shape[0]
        return [_relation_residual(M, state) for _, M in asta_relation_terms(N, m, d, table)]
    if scenario == "steering-gi":
        d = np.asarray(alice_obs[0]).shape[0]
        out = []
        for A, meas in zip(alice_obs, bob):
            Bk = _bob_generalized(meas, d)
            out += [_relation_residual(np.kron(mpow(A, k), Bk[k]), state) for k in range(1, d)]
        return out
    if scenario == "steering-alpha":
        if alpha is None:
            raise InvalidArgument("steering-alpha needs the Schmidt coefficients")
        d = alpha.d
        Z, X = make_Zd(d).matrix, make_Xd(d).matrix
        gamma, delta = alpha_coefficients(alpha)
        B0 = _bob_generalized(bob[0], d)
        B1 = _bob_generalized(bob[1], d)
        dB = B0[0].shape[0]
        out = [_relation_residual(np.kron(mpow(Z, k), B0[k]), state) for k in range(1, d)]
        S = sum(gamma * np.kron(mpow(X, k), B1[k]) + delta[k] * np.kron(mpow(Z, k), np.eye(dB))
                for k in range(1, d))
        out.append(_relation_residual(S, state))
        return out
    raise InvalidArgument(f"unknown scenario {scenario!r}")


def canonical_alignment(b0: np.ndarray) -> np.ndarray:
    """Unitary ``U`` with ``U B0 U^dag`` diagonal, eigenvalue ``omega^-i`` at ``|i>``.

    Eigenphases are paired to targets greedily by circular distance; ties go
    to the lowest target index, then the lowest eigenvector index.
    """
    b0 = np.asarray(b0, dtype=complex)
    d = b0.shape[0]
    try:
        vecs = eigenbasis(b0)
    except QcertError as exc:
        raise CannotAlign(str(exc)) from exc
    vals = np.diag(dagger(vecs) @ b0 @ vecs)
    targets = np.exp(-2j * np.pi * np.arange(d) / d)
    dist = np.abs(np.angle(targets[:, None] * np.conj(vals)[None, :]))
    U = np.zeros((d, d), dtype=complex)
    free_t, free_e = set(range(d)), set(range(d))
    while free_t:
        i, j = min(((i, j) for i in free_t for j in free_e), key=lambda p: (round(dist[p], 12), p))
        U[i] = vecs[:, j].conj()
        free_t.remove(i)
        free_e.remove(j)
    return U


def _ideal_ket(ideal, d: int) -> np.ndarray:
    if isinstance(ideal, SchmidtCoeffs):
        return make_schmidt_state(ideal)
    if ideal in ("maxent", "ghz"):
        return make_maxent(d)
    raise InvalidArgument(f"unknown ideal state {ideal!r}")


def _phase_search(M: np.ndarray, grid: int = 24, sweeps: int = 2000) -> np.ndarray:
    """Maximize ``v^dag M v`` over unimodular ``v``: grid per coordinate, then exact coordinate ascent."""
    d = M.shape[0]
    v = np.ones(d, dtype=complex)
    pts = np.exp(2j * np.pi * np.arange(grid) / grid)
    for b in range(d):
        scores = []
        for p in pts:
            v[b] = p
            scores.append((v.conj() @ M @ v).real)
        v[b] = pts[int(np.argmax(scores))]
    val = (v.conj() @ M @ v).real
    for _ in range(sweeps):
        for b in range(d):
            s = M[b] @ v - M[b, b] * v[b]
            if abs(s) > 0:
                v[b] = s / abs(s)
        new = (v.conj() @ M @ v).real
        if new - val <= 1e-15:
            val = new
            break
        val = new
    return v


def _aligned(state, U: np.ndarray) -> np.ndarray:
    dB = U.shape[0]
    rho = as_density(state)
    dA = rho.shape[0] // dB
    if dA * dB != rho.shape[0]:
        raise InvalidArgument("state does not factor with Bob's dimension")
    W = np.kron(np.eye(dA), U)
    return W @ rho @ dagger(W)


def _fidelity_matrix(rho: np.ndarray, ideal: np.ndarray, dB: int) -> np.ndarray:
    dA = ideal.size // dB
    Psi = ideal.reshape(dA, dB)
    R = rho.reshape(dA, dB, dA, dB)
    return np.einsum("ab,abcd,cd->bd", Psi.conj(), R, Psi)


def canonical_fidelity(state, bob_obs: Sequence[np.ndarray], ideal="maxent") -> float:
    """Fidelity with the ideal state after aligning Bob's first observable.

    Only ``bob_obs[0]`` fixes the alignment; the diagonal phases left free are
    optimized.
    """
    b0 = np.asarray(bob_obs[0], dtype=complex)
    d = b0.shape[0]
    U = canonical_alignment(b0)
    rho = _aligned(state, U)
    M = _fidelity_matrix(rho, _ideal_ket(ideal, d), d)
    v = _phase_search(M)
    return float(min(1.0, max(0.0, (v.conj() @ M @ v).real)))


def robustness_rhs(d: int, eps: float) -> tuple[float, float]:
    if eps < 0:
        raise InvalidArgument("eps must be nonnegative")
    root = np.sqrt(2 * (3 * d + 1)) * (2 * eps) ** 0.25
    return float(root), float(np.sqrt(d) * (np.sqrt(2 * eps) + 2 * root))


@dataclass(frozen=True)
class RobustnessReport:
    d: int
    l: int
    theta: float
    epsilon: float
    state_distance: float
    meas_distances: tuple[float, ...]
    bound_state: float
    bounds_meas: float
    in_regime: bool
    observable_form: str = "raw"

    @property
    def holds(self) -> bool:
        return self.state_distance <= self.bound_state and all(x <= self.bounds_meas for x in self.meas_distances)


def robustness_empirical(d: int, l: int, theta: float, seed: int = 0) -> RobustnessReport:
    """Run the perturbed-state pipeline with ideal projective Bob.

    The state is ``cos(theta) phi+ + sin(theta) perp`` with ``perp`` a seeded
    random unit vector orthogonal to ``phi+``. ``X_d Z_d^l`` is used without
    phase normalization, as in the bounds being checked.
    """
    Z, X = make_Zd(d).matrix, make_Xd(d).matrix
    A = [X @ mpow(Z, l), Z]
    B = [X @ mpow(Z, -l), mpow(Z, -1)]
    phi = make_maxent(d)
    rng = np.random.default_rng(seed)
    perp = rng.normal(size=d * d) + 1j * rng.normal(size=d * d)
    perp -= np.vdot(phi, perp) * phi
    perp /= np.linalg.norm(perp)
    psi = np.cos(theta) * phi + np.sin(theta) * perp
    W = sum(np.vdot(psi, np.kron(mpow(Ay, k), mpow(By, k)) @ psi)
            for Ay, By in zip(A, B) for k in range(1, d)).real
    eps = max(0.0, 2 * (d - 1) - W)
    U = canonical_alignment(B[1])
    M = _fidelity_matrix(_aligned(psi, U), phi, d)
    v = _phase_search(M)
    U = np.diag(v.conj()) @ U
    aligned = np.kron(np.eye(d), U) @ psi
    overlap = np.vdot(phi, aligned)
    if abs(overlap) > 0:
        U = U * (abs(overlap) / overlap)
        aligned = aligned * (abs(overlap) / overlap)
    state_distance = float(np.linalg.norm(aligned - phi))
    meas = []
    for k in range(d):
        meas.append(max(float(np.linalg.norm(U @ mpow(By, k) @ dagger(U) - mpow(By, k))) for By in B))
    bs, bm = robustness_rhs(d, eps)
    return RobustnessReport(d, l, float(theta), float(2 * (d - 1) - W), state_distance, tuple(meas),
                            bs, bm, eps <= ROBUSTNESS_EPS_REGIME)
