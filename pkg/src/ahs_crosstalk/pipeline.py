"""Perturb -> evolve -> sample -> count, as one deterministic call."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .evolution import IntegratorConfig, evolve, ground_state
from .hamiltonian import PhysicsConstants
from .measurement import CountSummary, probabilities, rydberg_counts, sample_shots
from .noise import NoiseModel, perturb
from .program import AhsProgram, MachineConstraints


@dataclass(frozen=True, eq=False)
class RunResult:
    counts: CountSummary
    probabilities: np.ndarray
    program: AhsProgram  # the program actually evolved (after perturbation)


def run_program(
    program: AhsProgram,
    shots: int,
    seed,
    noise: NoiseModel | None = None,
    run_index: int = 0,
    cfg: IntegratorConfig = IntegratorConfig(),
    constants: PhysicsConstants = PhysicsConstants(),
    constraints: MachineConstraints | None = None,
) -> RunResult:
    """Counts for one execution. ``seed`` keys the shot stream; noise draws use
    ``noise.seed`` and ``run_index``."""
    noisy = perturb(program, noise, run_index, constraints) if noise is not None else program
    final = evolve(noisy, ground_state(noisy.n_atoms), cfg, constants)
    detection = noise.detection if noise is not None else (0.0, 0.0)
    batch = sample_shots(final, shots, seed, detection)
    return RunResult(rydberg_counts(batch), probabilities(final), noisy)
