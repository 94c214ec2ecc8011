from __future__ import annotations

import json
from importlib import resources

import numpy as np
import pytest
from scipy.stats import unitary_group

from qcert.bell import asta_ideal_realization
from qcert.certify import (
    CannotAlign,
    canonical_alignment,
    canonical_fidelity,
    commutant_dimension,
    is_genuinely_incompatible,
    robustness_empirical,
    robustness_rhs,
    selftest_residuals,
)
from qcert.cli import read_operator_file
from qcert.qcore import InvalidArgument, SchmidtCoeffs, as_density, make_maxent, make_schmidt_state, make_Xd, make_Zd

FIX = resources.files("qcert").joinpath("fixtures")
EXPECTED = json.loads(FIX.joinpath("expected.json").read_text())


def triple():
    return read_operator_file(FIX.joinpath("gi_triple_d5.txt"))


def block_pair():
    return read_operator_file(FIX.joinpath("block_pair_d4.txt"))


@pytest.mark.parametrize("d", range(2, 7))
def test_zx_is_gi(d):
    rep = is_genuinely_incompatible([make_Zd(d).matrix, make_Xd(d).matrix])
    assert rep.commutant_dimension == 1 and rep.is_gi and rep.block_witness is None


def test_triple_fixture():
    obs = triple()
    assert commutant_dimension(obs) == 1
    for key, dim in EXPECTED["gi_triple_d5_pair_dims"].items():
        i, j = map(int, key.split(","))
        rep = is_genuinely_incompatible([obs[i], obs[j]])
        assert rep.commutant_dimension == dim
        assert not rep.is_gi


def test_block_pair_witness():
    obs = block_pair()
    rep = is_genuinely_incompatible(obs)
    assert rep.commutant_dimension == 2 and not rep.is_gi
    P = rep.block_witness
    assert np.allclose(P @ P, P, atol=1e-10) and np.allclose(P, P.conj().T)
    assert 0 < round(np.trace(P).real) < 4
    for A in obs:
        assert np.linalg.norm(P @ A - A @ P) < 1e-8
        assert np.linalg.norm(P @ A @ (np.eye(4) - P)) < 1e-8
    lam = np.diag([0.3, 0.3, 0.9, 0.9])
    assert all(np.linalg.norm(lam @ A - A @ lam) < 1e-12 for A in obs)


def test_commutant_edge_cases():
    with pytest.raises(InvalidArgument):
        commutant_dimension([])
    assert commutant_dimension([np.eye(3)]) == 9
    assert commutant_dimension([make_Zd(4).matrix]) == 4


def test_gi_is_monotone_and_conjugation_invariant():
    d = 4
    obs = [make_Zd(d).matrix, make_Xd(d).matrix]
    assert is_genuinely_incompatible(obs + [block_pair()[0]]).is_gi
    U = unitary_group.rvs(d, random_state=1)
    assert commutant_dimension([U @ A @ U.conj().T for A in block_pair()]) == 2


@pytest.mark.parametrize("N,m,d", [(2, 2, 3), (2, 3, 3), (3, 2, 2)])
def test_bell_selftest_residuals(N, m, d):
    psi, obs = asta_ideal_realization(N, m, d)
    assert max(selftest_residuals(psi, obs[0], obs[1:], "bell-asta")) < 1e-9


def test_steering_selftest_residuals():
    d = 3
    alice = [make_Zd(d).matrix, make_Xd(d).matrix]
    res = selftest_residuals(make_maxent(d), alice, [A.conj() for A in alice], "steering-gi")
    assert max(res) < 1e-9
    rho = as_density(make_maxent(d))
    assert max(selftest_residuals(rho, alice, [A.conj() for A in alice], "steering-gi")) < 1e-9
    alpha = SchmidtCoeffs.normalized([0.5, 0.7, 0.6])
    bob = [make_Zd(d).matrix.conj(), make_Xd(d).matrix]
    assert max(selftest_residuals(make_schmidt_state(alpha), alice, bob, "steering-alpha", alpha=alpha)) < 1e-9


def test_perturbed_state_has_visible_residual():
    d = 3
    alice = [make_Zd(d).matrix, make_Xd(d).matrix]
    phi = make_maxent(d)
    rng = np.random.default_rng(0)
    perp = rng.normal(size=9) + 1j * rng.normal(size=9)
    perp -= np.vdot(phi, perp) * phi
    perp /= np.linalg.norm(perp)
    psi = np.sqrt(0.99) * phi + 0.1 * perp
    res = selftest_residuals(psi, alice, [A.conj() for A in alice], "steering-gi")
    assert max(res) > 0.05


def test_selftest_errors():
    with pytest.raises(InvalidArgument):
        selftest_residuals(make_maxent(2), [], [], "nope")
    with pytest.raises(InvalidArgument):
        selftest_residuals(make_maxent(2), [np.eye(2)], [np.eye(2)], "steering-alpha")


def test_canonical_fidelity_ideal_and_scrambled():
    rng = np.random.default_rng(4)
    for d in (2, 3, 4):
        alpha = SchmidtCoeffs.normalized(rng.uniform(0.3, 1, d))
        psi = make_schmidt_state(alpha)
        bob = [make_Zd(d).matrix.conj(), make_Xd(d).matrix]
        assert canonical_fidelity(psi, bob, alpha) == pytest.approx(1, abs=1e-9)
        V = unitary_group.rvs(d, random_state=d)
        psi_v = np.kron(np.eye(d), V) @ psi
        bob_v = [V @ B @ V.conj().T for B in bob]
        assert canonical_fidelity(psi_v, bob_v, alpha) == pytest.approx(1, abs=1e-9)


def test_canonical_fidelity_noise():
    d, v = 3, 0.95
    phi = make_maxent(d)
    rho = v * np.outer(phi, phi.conj()) + (1 - v) * np.eye(d * d) / d**2
    F = canonical_fidelity(rho, [make_Zd(d).matrix.conj()], "maxent")
    assert F == pytest.approx(v + (1 - v) / d**2, abs=1e-9)
    assert F < 1


def test_canonical_alignment_rejects_degenerate():
    with pytest.raises(CannotAlign):
        canonical_alignment(np.diag([1, 1, -1]).astype(complex))
    U = canonical_alignment(make_Zd(5).matrix.conj())
    target = np.diag(np.exp(-2j * np.pi * np.arange(5) / 5))
    assert np.allclose(U @ make_Zd(5).matrix.conj() @ U.conj().T, target)


def test_robustness_rhs():
    assert robustness_rhs(3, 0.0) == (0.0, 0.0)
    assert robustness_rhs(2, 0.01)[0] == pytest.approx(np.sqrt(14) * 0.02**0.25, abs=1e-12)
    assert robustness_rhs(2, 0.01)[0] == pytest.approx(1.4071, abs=1e-4)
    assert robustness_rhs(3, 0.0001)[0] == pytest.approx(0.5318, abs=1e-4)
    with pytest.raises(InvalidArgument):
        robustness_rhs(2, -1)


def test_robustness_empirical():
    r0 = robustness_empirical(3, 1, 0.0)
    assert abs(r0.epsilon) < 1e-12 and r0.state_distance < 1e-12 and max(r0.meas_distances) < 1e-12
    for d, l, theta in ((2, 0, 0.05), (3, 1, 0.02)):
        r = robustness_empirical(d, l, theta)
        assert r.in_regime and r.holds
        assert r.bound_state - r.state_distance > 0
    far = robustness_empirical(3, 1, 1.2)
    assert not far.in_regime


def test_robustness_monotone_in_theta():
    thetas = [0.0, 0.005, 0.01, 0.02, 0.05]
    reps = [robustness_empirical(3, 1, t) for t in thetas]
    for a, b in zip(reps, reps[1:]):
        assert b.epsilon >= a.epsilon - 1e-12
        assert b.state_distance >= a.state_distance - 1e-12
        assert max(b.meas_distances) >= max(a.meas_distances) - 1e-12
