"""Brute-force classical bounds.

``lhs_bound`` is the best score a local-hidden-state cheat can reach on the
linear steering functional, ``lhv_chsh_bound`` the local-hidden-variable
ceiling of CHSH. Both enumerate every deterministic strategy.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from . import qlin
from .qlin import MeasurementSetting, StateVector

MAX_LHS_SETTINGS = 24
_ENUM_CHUNK = 1 << 16


@dataclass(frozen=True)
class BoundResult:
    value: float
    witness: dict[str, Any]
    enumerated_count: int

    def to_json(self) -> dict:
        witness = {}
        for key, v in self.witness.items():
            if isinstance(v, StateVector):
                witness[key] = {"re": v.amps.real.tolist(), "im": v.amps.imag.tolist()}
            else:
                witness[key] = v
        return {"value": self.value, "witness": witness, "enumerated_count": self.enumerated_count}


def _sign_block(codes: np.ndarray, m: int) -> np.ndarray:
    bits = (codes[:, None] >> np.arange(m)) & 1
    return 1 - 2 * bits  # bit 0 -> +1, bit 1 -> -1


def lhs_bound(settings: list[MeasurementSetting]) -> BoundResult:
    """Max over sign vectors a of ``|sum_k a_k n_k| / m``.

    For fixed signs the best hidden state is the +1 eigenstate of
    ``sum_k a_k n_k . sigma``, whose top eigenvalue is the norm of the summed
    Bloch vectors. The witness carries the signs and that state.
    """
    m = len(settings)
    if m < 1:
        raise ValueError("need at least one setting")
    if m > MAX_LHS_SETTINGS:
        raise ValueError(
            f"{m} settings means 2^{m} sign vectors; enumeration is capped at "
            f"{MAX_LHS_SETTINGS}, estimate the bound by sampling sign vectors instead"
        )
    vecs = np.array([s.bloch for s in settings])
    best_norm, best_code = -1.0, 0
    total = 1 << m
    for start in range(0, total, _ENUM_CHUNK):
        codes = np.arange(start, min(start + _ENUM_CHUNK, total), dtype=np.int64)
        norms = np.linalg.norm(_sign_block(codes, m) @ vecs, axis=1)
        i = int(np.argmax(norms))
        if norms[i] > best_norm:
            best_norm, best_code = float(norms[i]), int(codes[i])
    signs = [int(s) for s in _sign_block(np.array([best_code]), m)[0]]
    direction = np.asarray(signs) @ vecs
    length = np.linalg.norm(direction)
    if length > 0:
        state = qlin.eigenstate(tuple(direction / length), +1)
    else:
        state = StateVector(np.array([1.0, 0.0]))
    return BoundResult(best_norm / m, {"signs": signs, "state": state}, total)


def lhs_witness_value(settings: list[MeasurementSetting], signs, state: StateVector) -> float:
    """Steering score of 'send ``state``, declare ``signs[k]``', via Born expectations."""
    return sum(a * qlin.expectation_single(state, s) for a, s in zip(signs, settings)) / len(settings)


def chsh_combination(e00: float, e01: float, e10: float, e11: float) -> float:
    return e00 + e10 + e11 - e01


def lhv_chsh_bound() -> BoundResult:
    """Enumerate the 16 deterministic response pairs (a0, a1), (b0, b1)."""
    best, witness = -math.inf, None
    count = 0
    for a0, a1, b0, b1 in itertools.product((1, -1), repeat=4):
        count += 1
        value = chsh_combination(a0 * b0, a0 * b1, a1 * b0, a1 * b1)
        if value > best:
            best, witness = value, {"alice": [a0, a1], "bob": [b0, b1]}
    return BoundResult(float(best), witness, count)


def quantum_value_chsh(state: StateVector, cfg) -> float:
    """CHSH combination of the four exact correlators of ``state``.

    ``cfg`` is anything with ``alice_settings`` and ``bob_settings``, normally
    a :class:`demonbell.protocol.BellConfig`.
    """
    alice, bob = cfg.alice_settings, cfg.bob_settings
    e = [[qlin.expectation_joint(state, alice[x], bob[y]) for y in (0, 1)] for x in (0, 1)]
    return chsh_combination(e[0][0], e[0][1], e[1][0], e[1][1])
