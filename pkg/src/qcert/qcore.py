"""Linear-algebra primitives and the canonical qudit states and operators.

Operators are plain ``numpy`` complex arrays. Kets are 1-D arrays, density
matrices are 2-D. The only wrapped type is :class:`UnitaryObservable`, which
validates the root-of-unity spectrum once at construction.

Convention: ``omega = exp(2*pi*i/d)`` and fractional powers are taken as
``omega**t = exp(2*pi*i*t/d)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from typing import Iterable, Sequence

import numpy as np
from scipy.linalg import schur

TOL_NORM = 1e-12


class QcertError(ValueError):
    """Base class; ``code`` is a stable machine-readable tag."""

    code = "error"


class InvalidDimension(QcertError):
    code = "invalid-dimension"


class InvalidArgument(QcertError):
    code = "invalid-argument"


class CapacityExceeded(QcertError):
    code = "capacity-exceeded"


def _check_dim(d: int) -> int:
    if int(d) != d or d < 2:
        raise InvalidDimension(f"dimension must be an integer >= 2, got {d}")
    return int(d)


def omega_power(d: int, t: float) -> complex:
    """``exp(2*pi*i*t/d)``; ``t`` may be fractional."""
    d = _check_dim(d)
    return complex(np.exp(2j * np.pi * t / d))


def dagger(M: np.ndarray) -> np.ndarray:
    return M.conj().T


def mpow(M: np.ndarray, k: int) -> np.ndarray:
    """Integer matrix power; negative powers use the adjoint (unitary input)."""
    M = np.asarray(M)
    if k < 0:
        return np.linalg.matrix_power(dagger(M), -k)
    return np.linalg.matrix_power(M, k)


def tensor(factors: Sequence[np.ndarray]) -> np.ndarray:
    factors = [np.asarray(f) for f in factors]
    if not factors:
        raise InvalidArgument("tensor needs at least one factor")
    return reduce(np.kron, factors)


def partial_trace(M: np.ndarray, dims: Sequence[int], keep: Iterable[int]) -> np.ndarray:
    """Trace out every subsystem not listed in ``keep``.

    Subsystem order in the result follows ``dims``. With ``keep`` empty the
    result is the 1x1 matrix holding the full trace.
    """
    M = np.asarray(M)
    dims = [int(x) for x in dims]
    n = len(dims)
    total = int(np.prod(dims))
    if M.shape != (total, total):
        raise InvalidArgument(f"matrix shape {M.shape} does not match dims {dims}")
    keep = sorted(set(keep))
    if any(k < 0 or k >= n for k in keep):
        raise InvalidArgument(f"keep indices {keep} out of range for {n} subsystems")
    T = M.reshape(dims + dims)
    # Contract traced-out axes pairwise, highest index first so positions stay valid.
    cur = n
    for i in reversed(range(n)):
        if i in keep:
            continue
        T = np.trace(T, axis1=i, axis2=i + cur)
        cur -= 1
    kd = int(np.prod([dims[i] for i in keep])) if keep else 1
    return T.reshape(kd, kd)


def as_ket(psi: np.ndarray, tol: float = TOL_NORM) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    if psi.ndim != 1 or psi.size == 0:
        raise InvalidArgument("a ket must be a non-empty 1-D array")
    if not np.all(np.isfinite(psi)):
        raise InvalidArgument("ket has non-finite entries")
    if abs(np.linalg.norm(psi) - 1.0) > tol:
        raise InvalidArgument(f"ket is not normalized (norm {np.linalg.norm(psi)!r})")
    return psi


def as_density(rho: np.ndarray) -> np.ndarray:
    """Accept a density matrix, or a ket which is converted to its projector."""
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim == 1:
        psi = as_ket(rho)
        return np.outer(psi, psi.conj())
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise InvalidArgument("density matrix must be square")
    if np.abs(rho - dagger(rho)).max() > 1e-12:
        raise InvalidArgument("density matrix is not Hermitian")
    if abs(np.trace(rho).real - 1.0) > 1e-10:
        raise InvalidArgument("density matrix does not have unit trace")
    if np.linalg.eigvalsh(rho).min() < -1e-10:
        raise InvalidArgument("density matrix is not positive semidefinite")
    return rho


def expectation(state: np.ndarray, op: np.ndarray) -> complex:
    """``<psi|op|psi>`` for kets, ``Tr(rho op)`` for density matrices."""
    state = np.asarray(state)
    if state.ndim == 1:
        return complex(np.vdot(state, op @ state))
    return complex(np.trace(state @ op))


def sorted_phases(eigs: np.ndarray) -> np.ndarray:
    return np.sort(np.mod(np.angle(eigs), 2 * np.pi))


def unitary_eig(U: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenpairs of a normal matrix from its complex Schur form.

    For normal input the Schur factor is diagonal, so the columns of the
    unitary factor are orthonormal eigenvectors. Pairs are ordered by the
    eigenvalue's argument taken in [0, 2*pi).
    """
    T, Q = schur(np.asarray(U, dtype=complex), output="complex")
    vals = np.diag(T).copy()
    order = np.argsort(np.mod(np.angle(vals), 2 * np.pi), kind="stable")
    return vals[order], Q[:, order]


@dataclass(frozen=True, eq=False)
class UnitaryObservable:
    """A unitary whose spectrum lies in the d-th roots of unity."""

    d: int
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        d = _check_dim(self.d)
        M = np.array(self.matrix, dtype=complex)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise InvalidArgument("observable must be a square matrix")
        n = M.shape[0]
        if np.linalg.norm(M @ dagger(M) - np.eye(n)) > 1e-10:
            raise InvalidArgument("observable is not unitary")
        if np.linalg.norm(np.linalg.matrix_power(M, d) - np.eye(n)) > 1e-9:
            raise InvalidArgument(f"observable does not satisfy A^{d} = 1")
        M.setflags(write=False)
        object.__setattr__(self, "matrix", M)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def power(self, k: int) -> np.ndarray:
        return mpow(self.matrix, k)

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)


def make_Zd(d: int) -> UnitaryObservable:
    d = _check_dim(d)
    return UnitaryObservable(d, np.diag(np.exp(2j * np.pi * np.arange(d) / d)))


def make_Xd(d: int) -> UnitaryObservable:
    d = _check_dim(d)
    X = np.zeros((d, d), dtype=complex)
    X[(np.arange(d) + 1) % d, np.arange(d)] = 1.0
    return UnitaryObservable(d, X)


def make_Tdm(d: int, m: int) -> UnitaryObservable:
    """The companion of ``Z_d`` that the alignment unitaries map onto input 3."""
    d = _check_dim(d)
    if int(m) != m or m < 2:
        raise InvalidDimension(f"m must be an integer >= 2, got {m}")
    i = np.arange(d)
    sign = np.where(i == 0, -1.0, 1.0)
    T = np.diag(np.exp(2j * np.pi * (i + 1.0 / m) / d))
    phase = np.exp(2j * np.pi * ((i[:, None] + i[None, :]) / 2 - (d - 2) / (2 * m)) / d)
    T = T - (2j / d) * np.sin(np.pi / m) * np.outer(sign, sign) * phase
    return UnitaryObservable(d, T)


def hw_operator(d: int, k: int, l: int) -> np.ndarray:
    """Heisenberg-Weyl unitary ``X_d^k Z_d^l``."""
    d = _check_dim(d)
    if not (0 <= k < d and 0 <= l < d):
        raise InvalidArgument(f"indices ({k}, {l}) out of range for d={d}")
    return mpow(make_Xd(d).matrix, k) @ mpow(make_Zd(d).matrix, l)


@dataclass(frozen=True)
class SchmidtCoeffs:
    """Strictly positive Schmidt coefficients with unit 2-norm."""

    alpha: tuple[float, ...]

    def __post_init__(self) -> None:
        a = tuple(float(x) for x in self.alpha)
        if len(a) < 2:
            raise InvalidArgument("need at least two Schmidt coefficients")
        if any(not np.isfinite(x) or x <= 0 for x in a):
            raise InvalidArgument("Schmidt coefficients must be strictly positive")
        if abs(sum(x * x for x in a) - 1.0) > 1e-12:
            raise InvalidArgument("Schmidt coefficients must satisfy sum(alpha^2) = 1")
        object.__setattr__(self, "alpha", a)

    @classmethod
    def normalized(cls, values: Iterable[float]) -> "SchmidtCoeffs":
        v = np.asarray(list(values), dtype=float)
        return cls(tuple(v / np.linalg.norm(v)))

    @classmethod
    def uniform(cls, d: int) -> "SchmidtCoeffs":
        return cls((1 / np.sqrt(_check_dim(d)),) * d)

    @property
    def d(self) -> int:
        return len(self.alpha)

    @property
    def array(self) -> np.ndarray:
        return np.array(self.alpha)


def make_ghz(N: int, d: int) -> np.ndarray:
    d = _check_dim(d)
    if int(N) != N or N < 2:
        raise InvalidArgument(f"need N >= 2 parties, got {N}")
    psi = np.zeros(d**N, dtype=complex)
    stride = sum(d**p for p in range(N))
    psi[np.arange(d) * stride] = 1 / np.sqrt(d)
    return psi


def make_maxent(d: int) -> np.ndarray:
    return make_ghz(2, d)


def make_schmidt_state(alpha: SchmidtCoeffs | Sequence[float]) -> np.ndarray:
    if not isinstance(alpha, SchmidtCoeffs):
        alpha = SchmidtCoeffs(tuple(alpha))
    d = alpha.d
    psi = np.zeros(d * d, dtype=complex)
    psi[np.arange(d) * (d + 1)] = alpha.array
    return psi


def schmidt_decompose(psi: np.ndarray, dA: int, dB: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return ``(coeffs, basisA, basisB)``; columns of the bases pair with ``coeffs``."""
    psi = np.asarray(psi, dtype=complex)
    if psi.ndim != 1 or psi.size != dA * dB:
        raise InvalidArgument(f"ket of size {psi.size} does not split as {dA}x{dB}")
    U, s, Vh = np.linalg.svd(psi.reshape(dA, dB))
    return s, U[:, : s.size], Vh[: s.size].T
