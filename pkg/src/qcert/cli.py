"""Command-line driver. Every subcommand prints one JSON report.

Exit codes: 0 when every check passes, 1 when any check fails, 2 on usage or
configuration errors.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from . import __version__
from .bell import (
    MAX_STRATEGIES,
    asta_functional,
    asta_ideal_realization,
    asta_quantum_bound,
    chsh_functional,
    classical_bound_bruteforce,
    evaluate_bell,
    satwap_classical_bound,
    satwap_functional,
    sos_residual,
)
from .certify import canonical_fidelity, commutant_dimension, is_genuinely_incompatible, robustness_empirical, selftest_residuals
from .kernels import BACKEND
from .measurements import eigenbasis, mub_deviation, projective_povm
from .povm import extremality_check, hw_covariant_povm, partial_entanglement_povm, uniformity_residual
from .qcore import QcertError, SchmidtCoeffs, make_maxent, make_schmidt_state, make_Xd, make_Zd
from .randomness import certified_guessing_probability
from .steering import (
    alpha_classical_bound,
    alpha_steering_functional,
    evaluate_steering,
    gi_quantum_bound,
    gi_steering_functional,
    lhs_bound_oracle,
)

FIXTURES = Path(__file__).with_name("fixtures")


class ConfigError(Exception):
    pass


def read_operator_file(path: str | Path) -> list[np.ndarray]:
    """Parse blocks of ``dim=d`` followed by ``d*d`` row-major ``re,im`` lines."""
    mats, cur, dim = [], [], None
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("dim="):
            if dim is not None and len(cur) != dim * dim:
                raise ConfigError(f"{path}:{lineno}: previous block has {len(cur)} entries, expected {dim * dim}")
            if cur:
                mats.append(np.array(cur).reshape(dim, dim))
            dim, cur = int(line[4:]), []
            continue
        if dim is None:
            raise ConfigError(f"{path}:{lineno}: entry before any dim= header")
        try:
            re_, im = (float(x) for x in line.split(","))
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: expected 're,im', got {raw!r}") from exc
        cur.append(complex(re_, im))
    if dim is None:
        raise ConfigError(f"{path}: no operators found")
    if len(cur) != dim * dim:
        raise ConfigError(f"{path}: last block has {len(cur)} entries, expected {dim * dim}")
    mats.append(np.array(cur).reshape(dim, dim))
    return mats


def write_operator_file(path: str | Path, mats: Sequence[np.ndarray]) -> None:
    lines = []
    for M in mats:
        M = np.asarray(M, dtype=complex)
        lines.append(f"dim={M.shape[0]}")
        lines += [f"{float(z.real)!r},{float(z.imag)!r}" for z in M.ravel()]
    Path(path).write_text("\n".join(lines) + "\n")


def _clean(x: Any) -> Any:
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (complex, np.complexfloating)):
        return [_clean(x.real), _clean(x.imag)]
    if isinstance(x, (float, np.floating)):
        v = round(float(x), 15)
        return 0.0 if v == 0 else v
    return x


def _alpha(text: str | None, d: int) -> SchmidtCoeffs:
    if text is None:
        return SchmidtCoeffs.uniform(d)
    vals = [float(v) for v in text.split(",")]
    if len(vals) != d:
        raise ConfigError(f"--alpha has {len(vals)} entries, expected {d}")
    return SchmidtCoeffs.normalized(vals)


def _load_json(path: str) -> dict:
    try:
        cfg = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read scenario {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("scenario file must hold a JSON object")
    return cfg


def _require(cfg: dict, *keys: str) -> list:
    missing = [k for k in keys if k not in cfg]
    if missing:
        raise ConfigError(f"scenario is missing {', '.join(missing)}")
    return [cfg[k] for k in keys]


def cmd_bell_verify(a) -> tuple[dict, dict]:
    N, m, d = a.n, a.m, a.d
    f = asta_functional(N, m, d)
    psi, obs = asta_ideal_realization(N, m, d)
    q = evaluate_bell(f, psi, obs)
    qb = asta_quantum_bound(N, m, d)
    sos = sos_residual(N, m, d, obs)
    out = {"quantum_value": q, "quantum_bound": qb, "sos_residuals": sos, "backend": BACKEND}
    checks = {"quantum_value_at_bound": abs(q - qb) < 1e-9, "sos_residuals_small": max(sos.values()) < 1e-9}
    if d ** (N * m) <= MAX_STRATEGIES:
        cb, strat = classical_bound_bruteforce(f)
        out["classical_bound"] = cb
        out["optimal_strategy"] = [list(r) for r in strat.outcomes]
        checks["classical_below_quantum"] = cb < qb - 1e-9
        if N == 2 and m == 2:
            out["satwap_classical_closed_form"] = satwap_classical_bound(d)
            checks["classical_matches_closed_form"] = abs(cb - satwap_classical_bound(d)) < 1e-9
    else:
        out["classical_bound"] = None
    return out, checks


def cmd_steering_verify(a) -> tuple[dict, dict]:
    d = a.d
    if a.mode == "gi":
        alice = [make_Zd(d).matrix, make_Xd(d).matrix] if a.obs == "zx" else read_operator_file(a.obs)
        d = alice[0].shape[0]
        f = gi_steering_functional(alice)
        bob = [A.conj() for A in alice]
        q = evaluate_steering(f, make_maxent(d), bob)
        lhs = lhs_bound_oracle(f)
        gi = commutant_dimension(alice) == 1
        out = {"quantum_value": q, "quantum_bound": gi_quantum_bound(f), "lhs_bound": lhs, "genuinely_incompatible": gi}
        checks = {"quantum_value_at_bound": abs(q - gi_quantum_bound(f)) < 1e-9}
        if gi:
            checks["lhs_strictly_below_quantum"] = lhs < gi_quantum_bound(f) - 1e-6
        return out, checks
    alpha = _alpha(a.alpha, d)
    f = alpha_steering_functional(alpha)
    bob = [make_Zd(d).matrix.conj(), make_Xd(d).matrix]
    psi = make_schmidt_state(alpha)
    q = evaluate_steering(f, psi, bob)
    cb = alpha_classical_bound(alpha, restarts=a.restarts, seed=a.seed)
    res = selftest_residuals(psi, [make_Zd(d).matrix, make_Xd(d).matrix], bob, "steering-alpha", alpha=alpha)
    out = {"alpha": list(alpha.alpha), "quantum_value": q, "quantum_bound": float(d),
           "classical_bound": cb, "selftest_residuals": res}
    checks = {"quantum_value_at_bound": abs(q - d) < 1e-9, "classical_below_quantum": cb < d - 1e-6,
              "selftest_residuals_small": max(res) < 1e-8}
    return out, checks


def cmd_classical_bound(a) -> tuple[dict, dict]:
    cfg = _load_json(a.scenario)
    kind = cfg.get("kind")
    if kind == "asta":
        N, m, d = _require(cfg, "N", "m", "d")
        cb, strat = classical_bound_bruteforce(asta_functional(N, m, d))
        return {"kind": kind, "classical_bound": cb, "optimal_strategy": [list(r) for r in strat.outcomes]}, {}
    if kind == "satwap":
        (d,) = _require(cfg, "d")
        cb, _ = classical_bound_bruteforce(satwap_functional(d))
        closed = satwap_classical_bound(d)
        return {"kind": kind, "classical_bound": cb, "closed_form": closed}, {"closed_form_matches": abs(cb - closed) < 1e-9}
    if kind == "chsh":
        cb, _ = classical_bound_bruteforce(chsh_functional(bool(cfg.get("scaled", False))))
        return {"kind": kind, "classical_bound": cb}, {}
    if kind == "steering-gi":
        alice = read_operator_file(cfg["obs_file"]) if "obs_file" in cfg else [
            make_Zd(int(_require(cfg, "d")[0])).matrix, make_Xd(int(cfg["d"])).matrix]
        return {"kind": kind, "lhs_bound": lhs_bound_oracle(gi_steering_functional(alice))}, {}
    if kind == "steering-alpha":
        (vals,) = _require(cfg, "alpha")
        alpha = SchmidtCoeffs.normalized(vals)
        cb = alpha_classical_bound(alpha, restarts=int(cfg.get("restarts", a.restarts)), seed=a.seed)
        return {"kind": kind, "classical_bound": cb}, {}
    raise ConfigError(f"unknown scenario kind {kind!r}")


def _gi_entry(obs) -> dict:
    rep = is_genuinely_incompatible(obs)
    entry = {"commutant_dimension": rep.commutant_dimension, "is_gi": rep.is_gi}
    if rep.block_witness is not None:
        P = rep.block_witness
        entry["witness_rank"] = int(round(np.trace(P).real))
        entry["witness_commutator"] = max(float(np.linalg.norm(P @ A - A @ P)) for A in obs)
    return entry


def cmd_gi_check(a) -> tuple[dict, dict]:
    obs = read_operator_file(a.obs_file)
    full = _gi_entry(obs)
    pairs = {f"{i},{j}": _gi_entry([obs[i], obs[j]]) for i in range(len(obs)) for j in range(i + 1, len(obs))}
    checks = {}
    if "witness_commutator" in full:
        checks["witness_commutes"] = full["witness_commutator"] < 1e-8
    return {"set": full, "pairs": pairs}, checks


def cmd_mub_check(a) -> tuple[dict, dict]:
    if a.bases_file:
        bases = read_operator_file(a.bases_file)
        if len(bases) != 2:
            raise ConfigError("bases file must hold exactly two basis matrices")
    else:
        bases = [eigenbasis(make_Zd(a.d)), eigenbasis(make_Xd(a.d))]
    dev = mub_deviation(bases[0], bases[1])
    return {"overlap_deviation": dev}, {"mutually_unbiased": dev < 1e-10}


def _povm_for(a):
    d = a.d
    if a.kind == "hw":
        if a.nu:
            nu = np.array([complex(v.replace("i", "j")) for v in a.nu.split(",")])
        else:
            rng = np.random.default_rng(a.seed)
            nu = rng.normal(size=d) + 1j * rng.normal(size=d)
        nu = nu / np.linalg.norm(nu)
        return hw_covariant_povm(d, nu), np.eye(d) / d
    if a.kind == "partial":
        alpha = _alpha(a.alpha, d)
        return partial_entanglement_povm(d, alpha), np.diag(alpha.array ** 2)
    Z = make_Zd(d).matrix
    return projective_povm(Z, d), np.eye(d) / d


def cmd_povm_verify(a) -> tuple[dict, dict]:
    p, rho = _povm_for(a)
    rep = extremality_check(p)
    sum_dev = float(np.abs(sum(p.effects) - np.eye(p.dim)).max())
    uni = uniformity_residual(p, rho)
    out = {"n_outcomes": rep.n_outcomes, "extremality": rep.status, "identity_deviation": sum_dev, "uniformity_residual": uni}
    return out, {"sums_to_identity": sum_dev < 1e-8, "extremal_rank_one": rep.is_extremal_rank_one, "uniform_statistics": uni < 1e-8}


def cmd_randomness(a) -> tuple[dict, dict]:
    p, rho = _povm_for(a)
    rep = certified_guessing_probability(p, rho)
    out = {"guessing_probability": rep.guessing_probability, "min_entropy_bits": rep.min_entropy_bits,
           "per_outcome_probs": list(rep.per_outcome_probs), "certification_assumed": rep.certification_assumed}
    return out, {}


def cmd_robustness(a) -> tuple[dict, dict]:
    r = robustness_empirical(a.d, a.l, a.theta, seed=a.seed)
    out = {"epsilon": r.epsilon, "state_distance": r.state_distance, "meas_distances": list(r.meas_distances),
           "bound_state": r.bound_state, "bound_meas": r.bounds_meas, "in_regime": r.in_regime}
    checks = {"epsilon_nonnegative": r.epsilon >= -1e-12}
    if r.in_regime:
        checks["bounds_hold"] = r.holds
    return out, checks


def cmd_selftest_check(a) -> tuple[dict, dict]:
    cfg = _load_json(a.scenario)
    scen = cfg.get("scenario")
    tol = float(cfg.get("tol", 1e-8))
    out: dict = {"scenario": scen}
    if scen == "bell-asta":
        N, m, d = _require(cfg, "N", "m", "d")
        psi, obs = asta_ideal_realization(N, m, d)
        res = selftest_residuals(psi, obs[0], obs[1:], scen)
    elif scen == "steering-gi":
        (d,) = _require(cfg, "d")
        alice = [make_Zd(d).matrix, make_Xd(d).matrix]
        res = selftest_residuals(make_maxent(d), alice, [A.conj() for A in alice], scen)
    elif scen == "steering-alpha":
        (vals,) = _require(cfg, "alpha")
        alpha = SchmidtCoeffs.normalized(vals)
        d = alpha.d
        bob = [make_Zd(d).matrix.conj(), make_Xd(d).matrix]
        psi = make_schmidt_state(alpha)
        res = selftest_residuals(psi, [make_Zd(d).matrix, make_Xd(d).matrix], bob, scen, alpha=alpha)
        out["canonical_fidelity"] = canonical_fidelity(psi, bob, alpha)
    else:
        raise ConfigError(f"unknown scenario {scen!r}")
    out["residuals"] = res
    checks = {"residuals_small": max(res) < tol}
    if "canonical_fidelity" in out:
        checks["fidelity_one"] = abs(out["canonical_fidelity"] - 1) < 1e-9
    return out, checks


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qcert", description="Verification suites for qudit Bell and steering certification.")
    p.add_argument("--version", action="version", version=f"qcert {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", help="write the report here instead of stdout")
    common.add_argument("--timing", action="store_true", help="include wall time (breaks byte-identical output)")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name: str, fn: Callable, help_: str) -> argparse.ArgumentParser:
        sp = sub.add_parser(name, parents=[common], help=help_)
        sp.set_defaults(func=fn)
        return sp

    sp = add("bell-verify", cmd_bell_verify, "quantum value, classical brute force and SOS residuals")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--m", type=int, required=True)
    sp.add_argument("--d", type=int, required=True)
    sp = add("steering-verify", cmd_steering_verify, "steering functionals and their bounds")
    sp.add_argument("--mode", choices=["gi", "alpha"], required=True)
    sp.add_argument("--d", type=int, required=True)
    sp.add_argument("--alpha")
    sp.add_argument("--obs", default="zx", help="'zx' or an operator file")
    sp.add_argument("--restarts", type=int, default=64)
    sp = add("classical-bound", cmd_classical_bound, "classical or LHS bound of a scenario file")
    sp.add_argument("--scenario", required=True)
    sp.add_argument("--restarts", type=int, default=64)
    sp = add("gi-check", cmd_gi_check, "genuine incompatibility of an operator set")
    sp.add_argument("--obs-file", required=True)
    sp = add("mub-check", cmd_mub_check, "mutual unbiasedness of two bases")
    sp.add_argument("--d", type=int, default=2)
    sp.add_argument("--bases-file")
    sp = add("povm-verify", cmd_povm_verify, "validity, extremality and uniform statistics of a POVM family")
    sp.add_argument("--kind", choices=["hw", "partial"], required=True)
    sp.add_argument("--d", type=int, required=True)
    sp.add_argument("--alpha")
    sp.add_argument("--nu", help="fiducial entries, e.g. 1,0.5+0.5i")
    sp = add("randomness", cmd_randomness, "guessing probability and min-entropy")
    sp.add_argument("--kind", choices=["projective", "hw", "partial"], required=True)
    sp.add_argument("--d", type=int, required=True)
    sp.add_argument("--alpha")
    sp.add_argument("--nu")
    sp = add("robustness", cmd_robustness, "perturbed-state robustness bounds")
    sp.add_argument("--d", type=int, required=True)
    sp.add_argument("--theta", type=float, required=True)
    sp.add_argument("--l", type=int, default=0)
    sp = add("selftest-check", cmd_selftest_check, "saturation relations of an ideal realization")
    sp.add_argument("--scenario", required=True)
    return p


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    t0 = time.perf_counter()
    try:
        values, checks = args.func(args)
    except (ConfigError, QcertError, OSError, KeyError, TypeError, ValueError) as exc:
        print(f"qcert {args.command}: {exc}", file=sys.stderr)
        return 2
    inputs = {k: v for k, v in vars(args).items() if k not in ("func", "out", "timing", "command")}
    report = {"command": args.command, "inputs": inputs, "results": values,
              "checks": checks, "passed": all(checks.values()), "version": __version__}
    if args.timing:
        report["wall_time_s"] = time.perf_counter() - t0
    text = json.dumps(_clean(report), sort_keys=True, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0 if report["passed"] else 1


def main() -> None:
    sys.exit(run())
