from __future__ import annotations

import itertools
import json
from importlib import resources

import numpy as np
import pytest

from qcert.bell import (
    DeterministicStrategy,
    asta_coefficient,
    asta_functional,
    asta_ideal_realization,
    asta_quantum_bound,
    chsh_functional,
    classical_bound_bruteforce,
    deterministic_value,
    evaluate_bell,
    evaluate_on_correlations,
    satwap_classical_bound,
    satwap_functional,
    sos_residual,
)
from qcert.kernels import BACKEND
from qcert.qcore import CapacityExceeded, InvalidArgument, make_maxent
from tests.oracles.reference import naive_classical_bound

EXPECTED = json.loads(resources.files("qcert").joinpath("fixtures/expected.json").read_text())
GRID = [(2, 2, 2), (2, 2, 3), (2, 2, 4), (2, 3, 3), (3, 2, 2), (3, 2, 3)]
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SZ = np.diag([1.0, -1.0]).astype(complex)


def test_functionals_are_hermitian():
    for N, m, d in GRID:
        assert asta_functional(N, m, d).is_hermitian()
    assert satwap_functional(5).is_hermitian()


@pytest.mark.parametrize("d", range(2, 9))
def test_asta_coefficient_matches_satwap_at_m2(d):
    for k in range(d):
        satwap = np.exp(2j * np.pi * (2 * k - d) / (8 * d)) / np.sqrt(2)
        assert asta_coefficient(k, 2, d) == pytest.approx(satwap, abs=1e-14)


@pytest.mark.parametrize("d", [2, 3, 4])
def test_asta_reduces_to_satwap(d):
    a = asta_functional(2, 2, d).canonical_terms()
    b = satwap_functional(d).canonical_terms()
    assert a.keys() == b.keys()
    assert all(abs(a[k] - b[k]) < 1e-12 for k in a)


@pytest.mark.parametrize("N,m,d", GRID)
def test_ideal_value_attains_bound(N, m, d):
    f = asta_functional(N, m, d)
    psi, obs = asta_ideal_realization(N, m, d)
    q = evaluate_bell(f, psi, obs)
    assert q == pytest.approx(EXPECTED["asta_quantum_attained"][f"{N},{m},{d}"], abs=1e-9)
    assert q == pytest.approx(asta_quantum_bound(N, m, d), abs=1e-9)


@pytest.mark.parametrize("N,m,d", GRID)
def test_classical_bound_frozen(N, m, d):
    f = asta_functional(N, m, d)
    cb, strat = classical_bound_bruteforce(f)
    assert cb == pytest.approx(EXPECTED["asta_classical"][f"{N},{m},{d}"], abs=1e-9)
    assert deterministic_value(f, strat) == pytest.approx(cb, abs=1e-12)
    assert cb < asta_quantum_bound(N, m, d)


@pytest.mark.parametrize("N,m,d", [(2, 2, 3), (2, 3, 3), (3, 2, 2)])
def test_classical_bound_against_naive_enumeration(N, m, d):
    f = asta_functional(N, m, d)
    assert classical_bound_bruteforce(f)[0] == pytest.approx(naive_classical_bound(f), abs=1e-10)


@pytest.mark.parametrize("N,m,d", [(2, 2, 3), (2, 3, 3), (3, 2, 3)])
def test_backends_agree(N, m, d):
    f = asta_functional(N, m, d)
    a = classical_bound_bruteforce(f, backend="numpy")
    b = classical_bound_bruteforce(f, backend=BACKEND)
    assert a[0] == pytest.approx(b[0], abs=1e-12)
    assert a[1] == b[1]


def test_tie_break_is_lexicographic_smallest():
    f = chsh_functional()
    cb, strat = classical_bound_bruteforce(f)
    ties = []
    for flat in itertools.product(range(2), repeat=4):
        s = DeterministicStrategy((flat[:2], flat[2:]))
        if abs(deterministic_value(f, s) - cb) < 1e-12:
            ties.append(s.outcomes)
    assert strat.outcomes == min(ties)


def test_relabeling_invariance():
    f = satwap_functional(3)
    terms = {}
    # Relabeling a -> a+1 and b -> b-1 multiplies each term by omega^(k_A - k_B).
    w = np.exp(2j * np.pi / 3)
    for (xs, ks), c in f.terms.items():
        terms[(xs, ks)] = c * w ** (ks[0] - ks[1])
    from qcert.bell import BellFunctional
    g = BellFunctional(2, 2, 3, terms)
    assert classical_bound_bruteforce(g)[0] == pytest.approx(classical_bound_bruteforce(f)[0], abs=1e-12)


@pytest.mark.parametrize("d", [2, 3, 4])
def test_satwap_closed_form(d):
    assert satwap_classical_bound(d) == pytest.approx(EXPECTED["satwap_classical"][str(d)], abs=1e-9)
    assert classical_bound_bruteforce(satwap_functional(d))[0] == pytest.approx(satwap_classical_bound(d), abs=1e-9)


def test_satwap_paper_values():
    assert satwap_classical_bound(2) == pytest.approx(np.sqrt(2), abs=1e-12)
    assert satwap_classical_bound(3) == pytest.approx(0.5 * (3 / np.tan(np.pi / 12) - 1) - 2, abs=1e-12)


def test_chsh():
    f = chsh_functional()
    assert classical_bound_bruteforce(f)[0] == pytest.approx(2.0, abs=1e-12)
    A = [SZ, SX]
    B = [(SZ + SX) / np.sqrt(2), (SZ - SX) / np.sqrt(2)]
    assert evaluate_bell(f, make_maxent(2), [A, B]) == pytest.approx(2 * np.sqrt(2), abs=1e-10)
    p = np.zeros((2, 2, 2, 2))
    for x, y, a, b in itertools.product(range(2), repeat=4):
        p[x, y, a, b] = 0.5 if (a ^ b) == (x & y) else 0.0
    assert evaluate_on_correlations(f, p) == pytest.approx(4.0)
    g = chsh_functional(scaled=True)
    assert classical_bound_bruteforce(g)[0] == pytest.approx(np.sqrt(2), abs=1e-12)
    assert evaluate_bell(g, make_maxent(2), [A, B]) == pytest.approx(2.0, abs=1e-10)


def test_symmetrized_chsh_vanishes():
    f = chsh_functional()
    assert evaluate_bell(f, make_maxent(2), [[SZ, SX], [SZ, SZ]]) == pytest.approx(2.0)
    assert evaluate_bell(f, make_maxent(2), [[SZ, SZ], [SZ, SX]]) == pytest.approx(2.0)
    # With A_0 = A_1 the B_1 terms cancel.
    val = evaluate_bell(f, make_maxent(2), [[SZ, SZ], [SX, SX]])
    assert val == pytest.approx(2 * np.vdot(make_maxent(2), np.kron(SZ, SX) @ make_maxent(2)).real)


def test_product_state_below_classical():
    f = asta_functional(2, 2, 2)
    psi, obs = asta_ideal_realization(2, 2, 2)
    prod = np.zeros(4, dtype=complex)
    prod[0] = 1
    assert evaluate_bell(f, prod, obs) <= classical_bound_bruteforce(f)[0] + 1e-12


@pytest.mark.parametrize("N,m,d", GRID)
def test_sos_ideal(N, m, d):
    _, obs = asta_ideal_realization(N, m, d)
    res = sos_residual(N, m, d, obs)
    assert set(res) == {"main"} | {f"n{n}" for n in range(2, N + 1)}
    assert max(res.values()) < 1e-9


def test_errors():
    f = asta_functional(2, 2, 3)
    psi, obs = asta_ideal_realization(2, 2, 3)
    with pytest.raises(InvalidArgument):
        evaluate_bell(f, make_maxent(2), obs)
    with pytest.raises(CapacityExceeded):
        classical_bound_bruteforce(asta_functional(3, 3, 7))
