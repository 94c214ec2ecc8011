"""Guessing probability and min-entropy once a realization has been certified."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .measurements import Povm
from .qcore import InvalidArgument, as_density


@dataclass(frozen=True)
class RandomnessReport:
    guessing_probability: float
    min_entropy_bits: float
    per_outcome_probs: tuple[float, ...]
    certification_assumed: bool = True


def min_entropy(G: float) -> float:
    if not (0 < G <= 1):
        raise InvalidArgument(f"guessing probability must lie in (0, 1], got {G}")
    return float(-np.log2(G))


def certified_guessing_probability(measurement: Povm, rho_local: np.ndarray) -> RandomnessReport:
    """``G = max_b Tr[E_b rho]``.

    This is Eve's guessing probability only under the assumption that the
    device was certified to implement ``measurement`` on ``rho_local``.
    """
    rho = as_density(rho_local)
    if rho.shape[0] != measurement.dim:
        raise InvalidArgument("state and POVM dimensions differ")
    probs = np.array([np.trace(E @ rho).real for E in measurement.effects])
    probs = np.clip(probs, 0.0, None)
    G = float(probs.max())
    return RandomnessReport(G, min_entropy(G), tuple(float(p) for p in probs))
