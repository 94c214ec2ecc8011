from __future__ import annotations

import json
import subprocess
import sys
from importlib import resources

import numpy as np
import pytest

from qcert.cli import ConfigError, read_operator_file, run, write_operator_file

FIX = resources.files("qcert").joinpath("fixtures")


def invoke(capsys, *argv):
    code = run(list(argv))
    out = capsys.readouterr()
    return code, (json.loads(out.out) if out.out.strip() else None), out


def test_bell_verify(capsys):
    code, rep, _ = invoke(capsys, "bell-verify", "--n", "2", "--m", "2", "--d", "3")
    assert code == 0 and rep["passed"]
    r = rep["results"]
    # Attained value is m^(N-1)(d-1) = 4; the printed m^N(d-1) = 8 is not reached.
    assert r["quantum_value"] == pytest.approx(4.0, abs=1e-9)
    assert r["classical_bound"] == pytest.approx(3.098076211353316, abs=1e-9)
    assert max(r["sos_residuals"].values()) < 1e-9


def test_gi_check_triple(capsys):
    code, rep, _ = invoke(capsys, "gi-check", "--obs-file", str(FIX.joinpath("gi_triple_d5.txt")))
    assert code == 0
    assert rep["results"]["set"]["is_gi"]
    assert not any(p["is_gi"] for p in rep["results"]["pairs"].values())


def test_randomness_hw(capsys):
    code, rep, _ = invoke(capsys, "randomness", "--kind", "hw", "--d", "4")
    assert code == 0
    assert rep["results"]["min_entropy_bits"] == pytest.approx(4.0, abs=1e-9)
    assert rep["results"]["certification_assumed"] is True


@pytest.mark.parametrize("argv", [
    ["steering-verify", "--mode", "gi", "--d", "3"],
    ["steering-verify", "--mode", "alpha", "--d", "3", "--alpha", "0.6,0.5,0.4", "--restarts", "8"],
    ["mub-check", "--d", "5"],
    ["povm-verify", "--kind", "partial", "--d", "4"],
    ["povm-verify", "--kind", "hw", "--d", "3", "--nu", "1,0.5+0.5i,0.2"],
    ["robustness", "--d", "2", "--theta", "0.05"],
])
def test_passing_commands(capsys, argv):
    code, rep, _ = invoke(capsys, *argv)
    assert code == 0, rep
    assert rep["passed"]


def test_scenario_files(capsys, tmp_path):
    scen = tmp_path / "s.json"
    scen.write_text(json.dumps({"kind": "satwap", "d": 3}))
    code, rep, _ = invoke(capsys, "classical-bound", "--scenario", str(scen))
    assert code == 0 and rep["results"]["classical_bound"] == pytest.approx(3.098076211353316)
    scen.write_text(json.dumps({"scenario": "steering-alpha", "alpha": [0.5, 0.7, 0.6]}))
    code, rep, _ = invoke(capsys, "selftest-check", "--scenario", str(scen))
    assert code == 0 and rep["results"]["canonical_fidelity"] == pytest.approx(1, abs=1e-9)
    scen.write_text(json.dumps({"scenario": "bell-asta", "N": 3, "m": 2, "d": 2}))
    assert invoke(capsys, "selftest-check", "--scenario", str(scen))[0] == 0


def test_robustness_and_custom_obs(capsys):
    code, rep, _ = invoke(capsys, "robustness", "--d", "3", "--theta", "0.02", "--l", "1")
    assert code == 0
    code, rep, _ = invoke(capsys, "steering-verify", "--mode", "gi", "--d", "4",
                          "--obs", str(FIX.joinpath("block_pair_d4.txt")))
    # A non-GI pair has no strict-gap check; the quantum value still saturates.
    assert code == 0 and not rep["results"]["genuinely_incompatible"]


def test_failing_assertion(capsys, tmp_path):
    scen = tmp_path / "s.json"
    scen.write_text(json.dumps({"scenario": "steering-gi", "d": 3, "tol": 0.0}))
    code, rep, _ = invoke(capsys, "selftest-check", "--scenario", str(scen))
    assert code == 1 and rep["passed"] is False


def test_usage_errors(capsys, tmp_path):
    assert run(["bogus"]) == 2
    assert run(["bell-verify", "--n", "2"]) == 2
    assert run(["povm-verify", "--kind", "partial", "--d", "7"]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("[1, 2]")
    assert run(["classical-bound", "--scenario", str(bad)]) == 2
    bad.write_text(json.dumps({"kind": "unknown"}))
    assert run(["classical-bound", "--scenario", str(bad)]) == 2
    capsys.readouterr()


def test_deterministic_output(tmp_path):
    paths = [tmp_path / "a.json", tmp_path / "b.json"]
    for p in paths:
        assert run(["steering-verify", "--mode", "alpha", "--d", "3", "--restarts", "8", "--seed", "3", "--out", str(p)]) == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()
    text = paths[0].read_text()
    assert list(json.loads(text)) == sorted(json.loads(text))


def test_operator_file_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    mats = [rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)) for _ in range(2)]
    path = tmp_path / "ops.txt"
    write_operator_file(path, mats)
    back = read_operator_file(path)
    assert all(np.array_equal(a, b) for a, b in zip(mats, back))
    path.write_text("dim=2\n1,0\n0,0\n")
    with pytest.raises(ConfigError):
        read_operator_file(path)
    path.write_text("1,0\n")
    with pytest.raises(ConfigError):
        read_operator_file(path)


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "qcert", "mub-check", "--d", "3"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["checks"]["mutually_unbiased"]
