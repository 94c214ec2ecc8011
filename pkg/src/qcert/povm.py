"""Extremal POVM families, the rank-one extremality test and the operator basis W_ij."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .measurements import Povm
from .qcore import (
    InvalidArgument,
    QcertError,
    SchmidtCoeffs,
    _check_dim,
    as_ket,
    dagger,
    hw_operator,
    make_schmidt_state,
)

EXTREMAL_RTOL = 1e-8
FIDUCIAL_TOL = 1e-10

# Phase exponents of the balanced effects, indexed by basis vector. Each list
# is a perfect difference set modulo d^2 - d + 1.
PHASE_EXPONENTS: dict[int, tuple[int, ...]] = {
    3: (0, 1, 3),
    4: (0, 1, 3, 9),
    5: (0, 1, 4, 14, 16),
    6: (0, 1, 3, 8, 12, 18),
}


class DegenerateFiducial(QcertError):
    code = "degenerate-fiducial"


class DimensionMismatch(QcertError):
    code = "dimension-mismatch"


def hw_covariant_povm(d: int, nu: Sequence[complex]) -> Povm:
    """Effects ``(1/d) X^k Z^l |nu><nu| (X^k Z^l)^dag`` for all ``k, l``."""
    d = _check_dim(d)
    nu = as_ket(np.asarray(nu, dtype=complex))
    if nu.size != d:
        raise InvalidArgument(f"fiducial has length {nu.size}, expected {d}")
    effects = []
    for k in range(d):
        for l in range(d):
            U = hw_operator(d, k, l)
            if abs(np.vdot(nu, dagger(U) @ nu)) < FIDUCIAL_TOL:
                raise DegenerateFiducial(f"<nu|U_({k},{l})^dag|nu> vanishes")
            v = U @ nu
            effects.append(np.outer(v, v.conj()) / d)
    return Povm(tuple(effects))


def partial_entanglement_weights(d: int, alpha: SchmidtCoeffs) -> tuple[np.ndarray, float, np.ndarray]:
    """Return ``(lambda_i for i <= d-2, balanced lambda, mu)`` of the construction."""
    if d not in PHASE_EXPONENTS:
        raise InvalidArgument(f"construction available for d in {sorted(PHASE_EXPONENTS)}, got {d}")
    if alpha.d != d:
        raise InvalidArgument(f"need {d} Schmidt coefficients, got {alpha.d}")
    a = alpha.array
    if np.any(a[: d - 1] < 1 / d - 1e-15):
        raise InvalidArgument("need alpha_i >= 1/d for i = 0..d-2")
    n = d * d - d + 1
    lam = 1 / (d * d * a[: d - 1] ** 2)
    balanced = (d - lam.sum()) / n
    if balanced <= 0:
        raise InvalidArgument("balanced weight is not positive for this alpha")
    mu = np.append(np.sqrt((1 - lam) / (n * balanced)), np.sqrt(1 / (n * balanced)))
    return lam, float(balanced), mu


def partial_entanglement_povm(d: int, alpha: SchmidtCoeffs) -> Povm:
    """d^2-outcome rank-one POVM with uniform statistics on ``diag(alpha^2)``.

    The first ``d-1`` effects are ``lambda_i |i><i|``; the remaining
    ``d^2-d+1`` are ``lambda |delta_t><delta_t|`` with
    ``|delta_t> = sum_i mu_i exp(2 pi i xi_i t / (d^2-d+1)) |i>``.
    """
    lam, balanced, mu = partial_entanglement_weights(d, alpha)
    n = d * d - d + 1
    xi = np.array(PHASE_EXPONENTS[d])
    effects = []
    for i in range(d - 1):
        E = np.zeros((d, d), dtype=complex)
        E[i, i] = lam[i]
        effects.append(E)
    for t in range(n):
        v = mu * np.exp(2j * np.pi * xi * t / n)
        effects.append(balanced * np.outer(v, v.conj()))
    return Povm(tuple(effects))


def uniformity_residual(p: Povm, rho: np.ndarray) -> float:
    """``max_b |Tr[E_b rho] - 1/n|`` for an n-outcome POVM."""
    probs = np.array([np.trace(E @ rho).real for E in p.effects])
    return float(np.abs(probs - 1 / len(p)).max())


@dataclass(frozen=True)
class ExtremalityReport:
    is_rank_one: bool
    elements_linearly_independent: bool
    n_outcomes: int
    is_extremal_rank_one: bool
    status: str


def extremality_check(p: Povm) -> ExtremalityReport:
    """Rank-one extremality: every effect rank one and the effects linearly independent.

    Non-rank-one inputs are reported as ``undecided``.
    """
    rank_one = True
    for E in p.effects:
        s = np.linalg.svd(E, compute_uv=False)
        if s[0] == 0 or s[1] >= EXTREMAL_RTOL * s[0]:
            rank_one = False
            break
    V = np.array([E.ravel() for E in p.effects])
    s = np.linalg.svd(V, compute_uv=False)
    independent = bool(np.sum(s > EXTREMAL_RTOL * s[0]) == len(p))
    if not rank_one:
        status = "undecided"
    else:
        status = "extremal" if independent else "not-extremal"
    return ExtremalityReport(rank_one, independent, len(p), rank_one and independent, status)


def schmidt_operator(alpha: SchmidtCoeffs) -> np.ndarray:
    """``P(alpha) = diag(sqrt(d) alpha)``, so that ``|psi(alpha)> = (P (x) 1)|phi+>``."""
    return np.diag(np.sqrt(alpha.d) * alpha.array).astype(complex)


def wij_basis(alpha: SchmidtCoeffs) -> list[np.ndarray]:
    """``W_ij = P^-1 (X^i Z^j)^* P^-1`` for ``i, j = 0..d-1``, ``i`` major."""
    d = alpha.d
    Pinv = np.diag(1 / (np.sqrt(d) * alpha.array)).astype(complex)
    return [Pinv @ hw_operator(d, i, j).conj() @ Pinv for i in range(d) for j in range(d)]


def expand(M: np.ndarray, basis: Sequence[np.ndarray]) -> np.ndarray:
    """Least-squares coefficients of ``M`` in an operator basis."""
    B = np.array([b.ravel() for b in basis]).T
    coef, *_ = np.linalg.lstsq(B, np.asarray(M, dtype=complex).ravel(), rcond=None)
    return coef


def reconstruct(coef: np.ndarray, basis: Sequence[np.ndarray]) -> np.ndarray:
    return sum(c * b for c, b in zip(coef, basis))


@dataclass(frozen=True)
class StatisticsMatchReport:
    max_deviation: float
    worst: tuple[int, int, int]


def statistics_match_check(ext_state: np.ndarray, R: Povm, ideal: Povm, alpha: SchmidtCoeffs,
                           env_dim: int = 1) -> StatisticsMatchReport:
    """Compare ``<X^i Z^j (x) R_b (x) 1_E>`` with ``<X^i Z^j (x) I_b>`` on ``|psi(alpha)>``.

    ``ext_state`` lives on ``C^d (x) H_R (x) C^env_dim`` where ``H_R`` is the
    space ``R`` acts on.
    """
    d = alpha.d
    psi = np.asarray(ext_state, dtype=complex)
    if len(R) != len(ideal):
        raise DimensionMismatch("R and the ideal POVM have different outcome counts")
    if ideal.dim != d:
        raise DimensionMismatch("ideal POVM must act on C^d")
    if psi.size != d * R.dim * env_dim:
        raise DimensionMismatch(f"state size {psi.size} != {d}*{R.dim}*{env_dim}")
    ref = make_schmidt_state(alpha)
    eye_e = np.eye(env_dim)
    worst, dev = (0, 0, 0), 0.0
    for i in range(d):
        for j in range(d):
            H = hw_operator(d, i, j)
            for b in range(len(R)):
                lhs = np.vdot(psi, np.kron(np.kron(H, R[b]), eye_e) @ psi)
                rhs = np.vdot(ref, np.kron(H, ideal[b]) @ ref)
                if abs(lhs - rhs) > dev:
                    dev, worst = float(abs(lhs - rhs)), (i, j, b)
    return StatisticsMatchReport(dev, worst)
