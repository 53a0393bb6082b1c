"""Relative fidelity of observed Rydberg counts against a control expectation."""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import LengthMismatch
from .measurement import CountSummary

SHOT_NORMALIZED = "shot-normalized"
EXPECTATION_NORMALIZED = "expectation-normalized"
MODES = (SHOT_NORMALIZED, EXPECTATION_NORMALIZED)


@dataclass(frozen=True)
class FidelityReport:
    expected: tuple[float, ...]
    observed: CountSummary
    rf: float
    mode: str = SHOT_NORMALIZED

    def to_dict(self) -> dict:
        return {
            "expected": list(self.expected),
            "observed": list(self.observed.counts),
            "shots": self.observed.shots,
            "rf": self.rf,
            "mode": self.mode,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def relative_fidelity(
    observed: CountSummary, expected: Sequence[float], mode: str = SHOT_NORMALIZED
) -> FidelityReport:
    """``1 - mean_k |c_k - e_k| / norm_k`` clamped to [0, 1].

    ``norm_k`` is the shot count S (default) or ``max(e_k, 1)``.
    """
    e = np.asarray(expected, dtype=float)
    c = np.asarray(observed.counts, dtype=float)
    if e.shape != c.shape:
        raise LengthMismatch(f"{c.size} observed counts vs {e.size} expected")
    if mode == SHOT_NORMALIZED:
        dev = np.abs(c - e) / observed.shots
    elif mode == EXPECTATION_NORMALIZED:
        dev = np.abs(c - e) / np.maximum(e, 1.0)
    else:
        raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
    rf = float(np.clip(1.0 - dev.mean(), 0.0, 1.0))
    return FidelityReport(tuple(e.tolist()), observed, rf, mode)


def expected_counts(
    program,
    shots: int,
    repeats: int,
    seed,
    cfg=None,
    constants=None,
) -> tuple[float, ...]:
    """Mean per-qubit counts over ``repeats`` noiseless runs of ``shots`` shots.

    The state is evolved once (evolution is deterministic); each repeat samples
    from its own child stream ``(seed, EXPECTED, r)``.
    """
    from .evolution import IntegratorConfig, evolve, ground_state
    from .hamiltonian import PhysicsConstants
    from .measurement import rydberg_counts, sample_shots
    from .rng import Stream, seed_sequence

    if repeats < 1:
        raise ValueError("repeats must be at least 1")
    final = evolve(
        program,
        ground_state(program.n_atoms),
        cfg or IntegratorConfig(),
        constants or PhysicsConstants(),
    )
    total = np.zeros(program.n_atoms)
    for r in range(repeats):
        batch = sample_shots(final, shots, seed_sequence(seed, Stream.EXPECTED, r))
        total += rydberg_counts(batch).counts
    return tuple((total / repeats).tolist())
