"""POVMs, generalized observables and the ideal measurement families.

A d-outcome POVM ``{E_k}`` and its generalized observables are related by a
discrete Fourier transform::

    A^(l) = sum_k omega^(l k) E_k,      E_k = (1/d) sum_l omega^(-l k) A^(l)
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from .qcore import (
    InvalidArgument,
    QcertError,
    UnitaryObservable,
    _check_dim,
    dagger,
    make_Xd,
    make_Zd,
    mpow,
    unitary_eig,
)

Role = Literal["first", "second", "odd", "even"]
ROLES: tuple[str, ...] = ("first", "second", "odd", "even")

STRUCT_TOL = 1e-10


class InvalidPovm(QcertError):
    code = "invalid-povm"


class InvalidObservables(QcertError):
    code = "invalid-observables"


class InvalidBasis(QcertError):
    code = "invalid-basis"


class DegenerateSpectrum(QcertError):
    code = "degenerate-spectrum"


@dataclass(frozen=True, eq=False)
class Povm:
    effects: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        effects = tuple(np.array(E, dtype=complex) for E in self.effects)
        if not effects:
            raise InvalidPovm("a POVM needs at least one effect")
        n = effects[0].shape[0]
        for E in effects:
            if E.shape != (n, n):
                raise InvalidPovm("effects must be square with a shared dimension")
            if np.abs(E - dagger(E)).max() > STRUCT_TOL:
                raise InvalidPovm("effect is not Hermitian")
            if np.linalg.eigvalsh((E + dagger(E)) / 2).min() < -STRUCT_TOL:
                raise InvalidPovm("effect is not positive semidefinite")
        if np.abs(sum(effects) - np.eye(n)).max() > STRUCT_TOL:
            raise InvalidPovm("effects do not sum to the identity")
        for E in effects:
            E.setflags(write=False)
        object.__setattr__(self, "effects", effects)

    @property
    def d_outcomes(self) -> int:
        return len(self.effects)

    @property
    def dim(self) -> int:
        return self.effects[0].shape[0]

    def __len__(self) -> int:
        return len(self.effects)

    def __getitem__(self, b: int) -> np.ndarray:
        return self.effects[b]


@dataclass(frozen=True, eq=False)
class ObservableSet:
    """Generalized observables ``A^(0..d-1)`` of a single d-outcome measurement."""

    observables: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        obs = tuple(np.array(A, dtype=complex) for A in self.observables)
        d = len(obs)
        if d < 2:
            raise InvalidObservables("need at least two generalized observables")
        n = obs[0].shape[0]
        if np.abs(obs[0] - np.eye(n)).max() > STRUCT_TOL:
            raise InvalidObservables("A^(0) must be the identity")
        for l in range(1, d):
            if np.abs(obs[d - l] - dagger(obs[l])).max() > STRUCT_TOL:
                raise InvalidObservables(f"A^({d - l}) is not the adjoint of A^({l})")
            if np.linalg.norm(obs[l], 2) > 1 + STRUCT_TOL:
                raise InvalidObservables(f"A^({l}) has operator norm above one")
        object.__setattr__(self, "observables", obs)

    @property
    def d(self) -> int:
        return len(self.observables)

    def __getitem__(self, l: int) -> np.ndarray:
        return self.observables[l % self.d]


def _fourier_phases(d: int, sign: int) -> np.ndarray:
    k = np.arange(d)
    return np.exp(sign * 2j * np.pi * np.outer(k, k) / d)


def observables_from_povm(p: Povm) -> ObservableSet:
    if not isinstance(p, Povm):
        p = Povm(tuple(p))
    d = p.d_outcomes
    E = np.stack(p.effects)
    A = np.tensordot(_fourier_phases(d, +1), E, axes=1)
    return ObservableSet(tuple(A))


def povm_from_observables(s: ObservableSet) -> Povm:
    if not isinstance(s, ObservableSet):
        s = ObservableSet(tuple(s))
    d = s.d
    A = np.stack(s.observables)
    E = np.tensordot(_fourier_phases(d, -1), A, axes=1) / d
    try:
        return Povm(tuple(E))
    except InvalidPovm as exc:
        raise InvalidObservables(f"observables do not define a POVM: {exc}") from exc


def is_projective(p: Povm, tol: float = STRUCT_TOL) -> bool:
    for i, Ei in enumerate(p.effects):
        for j, Ej in enumerate(p.effects):
            target = Ei if i == j else 0
            if np.abs(Ei @ Ej - target).max() > tol:
                return False
    return True


def projective_povm(obs: UnitaryObservable | np.ndarray, d: int | None = None) -> Povm:
    """Spectral projectors of a root-of-unity unitary; outcome ``b`` has eigenvalue ``omega^b``."""
    M = np.asarray(obs, dtype=complex)
    if d is None:
        d = obs.d if isinstance(obs, UnitaryObservable) else M.shape[0]
    vals, vecs = unitary_eig(M)
    labels = np.mod(np.rint(np.angle(vals) * d / (2 * np.pi)), d).astype(int)
    effects = [np.zeros_like(M) for _ in range(d)]
    for lab, v in zip(labels, vecs.T):
        effects[lab] = effects[lab] + np.outer(v, v.conj())
    return Povm(tuple(effects))


def party_role(i: int) -> str:
    """Role of party ``i`` (1-based): the first two parties are special."""
    if i < 1:
        raise InvalidArgument(f"party index is 1-based, got {i}")
    if i == 1:
        return "first"
    if i == 2:
        return "second"
    return "odd" if i % 2 else "even"


def _role_shift(role: str, x: float, m: int) -> tuple[float, bool]:
    if role not in ROLES:
        raise InvalidArgument(f"unknown role {role!r}")
    if role == "first":
        return x / m - 1 / (2 * m), True
    if role == "second":
        return x / m, False
    return (x - 1) / m, role == "odd"


def _check_input(x: int, m: int) -> None:
    if int(m) != m or m < 2:
        raise InvalidArgument(f"m must be an integer >= 2, got {m}")
    if int(x) != x or x < 1:
        raise InvalidArgument(f"input index is 1-based, got {x}")


def ideal_observable(role: Role, x: int, m: int, d: int) -> UnitaryObservable:
    """Ideal generalized-CGLMP observable of ``role`` for input ``x``.

    Built from the phased cyclic-shift form. Inputs beyond ``m`` follow the
    same formula, which coincides with the periodic extension
    ``A_(x+m) = omega * A_x``.
    """
    d = _check_dim(d)
    _check_input(x, m)
    g, up = _role_shift(role, x, m)
    O = np.zeros((d, d), dtype=complex)
    i = np.arange(d - 1)
    w = np.exp(2j * np.pi * g / d)
    w_wrap = np.exp(2j * np.pi * (1 - d) * g / d)
    if up:
        O[i, i + 1] = w
        O[d - 1, 0] = w_wrap
    else:
        O[i + 1, i] = w
        O[0, d - 1] = w_wrap
    return UnitaryObservable(d, O)


def ideal_observable_spectral(role: Role, x: int, m: int, d: int) -> UnitaryObservable:
    """Same observable built as a phase-rotated Fourier conjugate of ``diag(omega^j)``."""
    d = _check_dim(d)
    _check_input(x, m)
    g, up = _role_shift(role, x, m)
    j = np.arange(d)
    F = np.exp(2j * np.pi * np.outer(j, j) / d) / np.sqrt(d)
    Omega = np.diag(np.exp(2j * np.pi * j / d))
    if role == "first":
        U = np.diag(np.exp(-2j * np.pi * j * g / d))
        O = U @ F @ Omega @ dagger(F) @ dagger(U)
    elif role == "second":
        V = np.diag(np.exp(2j * np.pi * j * g / d))
        O = V @ dagger(F) @ Omega @ F @ dagger(V)
    else:
        W = np.diag(np.exp(-2j * np.pi * j * g / d))
        if up:
            O = W @ F @ Omega @ dagger(F) @ dagger(W)
        else:
            O = dagger(W) @ dagger(F) @ Omega @ F @ W
    return UnitaryObservable(d, O)


def ideal_observables(N: int, m: int, d: int) -> list[list[UnitaryObservable]]:
    """``obs[i][x]`` for party ``i`` (0-based) and input ``x`` (0-based)."""
    return [[ideal_observable(party_role(i + 1), x + 1, m, d) for x in range(m)] for i in range(N)]


_ALIGN_COEF = {"first": lambda m: 3 / (2 * m), "second": lambda m: 2 / m,
               "odd": lambda m: 1 / m, "even": lambda m: 1 / m}


def alignment_unitary(role: Role, d: int, m: int) -> np.ndarray:
    """Unitary taking ``Z_d`` to input 2 and ``T_{d,m}`` to input 3 of ``role``."""
    d = _check_dim(d)
    if role not in ROLES:
        raise InvalidArgument(f"unknown role {role!r}")
    c = _ALIGN_COEF[role](m)
    i = np.arange(d)[:, None]
    j = np.arange(d)[None, :]
    sign = np.where(j == 0, -1.0, 1.0)
    entries = sign * np.exp(2j * np.pi * (-c * i + i * j + j / 2) / d) / np.sqrt(d)
    if role in ("second", "even"):
        entries = entries[::-1]
    return entries


def xz_observable(d: int, i: int, normalized: bool = True) -> np.ndarray:
    """``X_d Z_d^i``, optionally rescaled so that its d-th power is the identity.

    The raw product satisfies ``(X Z^i)^d = omega^(i d (d-1)/2)``, which is -1
    for even ``d`` and odd ``i``. The normalized form multiplies by
    ``omega^(-i (d-1)/2)``.
    """
    d = _check_dim(d)
    M = make_Xd(d).matrix @ mpow(make_Zd(d).matrix, i)
    if normalized:
        M = M * np.exp(-2j * np.pi * i * (d - 1) / (2 * d))
    return M


def eigenbasis(obs: UnitaryObservable | np.ndarray, tol: float = 1e-8) -> np.ndarray:
    """Orthonormal eigenvectors (columns) of a normal matrix with simple spectrum."""
    vals, vecs = unitary_eig(np.asarray(obs, dtype=complex))
    phases = np.mod(np.angle(vals), 2 * np.pi)
    gaps = np.abs(np.diff(np.append(phases, phases[0] + 2 * np.pi)))
    if len(vals) > 1 and gaps.min() < tol:
        raise DegenerateSpectrum("spectrum is degenerate; eigenbasis is not unique")
    return vecs


def _as_basis(basis) -> np.ndarray:
    if isinstance(basis, np.ndarray) and basis.ndim == 2:
        B = basis.astype(complex)
    else:
        B = np.column_stack([np.asarray(v, dtype=complex) for v in basis])
    if B.shape[0] != B.shape[1]:
        raise InvalidBasis("a basis needs exactly d vectors of length d")
    if np.abs(dagger(B) @ B - np.eye(B.shape[0])).max() > 1e-10:
        raise InvalidBasis("basis is not orthonormal")
    return B


def mub_deviation(basisA, basisB) -> float:
    """Largest ``| |<a_i|b_j>|^2 - 1/d |`` over all pairs."""
    A = _as_basis(basisA)
    B = _as_basis(basisB)
    if A.shape != B.shape:
        raise InvalidBasis("bases have different dimensions")
    overlaps = np.abs(dagger(A) @ B) ** 2
    return float(np.abs(overlaps - 1 / A.shape[0]).max())


def mub_check(basisA, basisB, tol: float = STRUCT_TOL) -> bool:
    return mub_deviation(basisA, basisB) <= tol


def divisor_trace_report(obs: UnitaryObservable) -> dict[int, float]:
    """``|Tr(A^n)|`` for every proper divisor ``n`` of ``d``."""
    d = obs.d
    return {n: float(abs(np.trace(mpow(obs.matrix, n)))) for n in range(1, d) if d % n == 0}
