"""Two tenants on one register: the attack program and tenant layouts."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .evolution import IntegratorConfig, evolve, ground_state
from .hamiltonian import PhysicsConstants
from .measurement import CountSummary, marginals
from .noise import NoiseModel
from .pipeline import run_program
from .program import (
    TOP_QUBIT,
    AhsProgram,
    MachineConstraints,
    ShiftingField,
    Waveform,
    merge,
    translate,
    validate,
)

NEAREST = "nearest"
CENTROID = "centroid"
DEFAULT_DIRECTION = (1.0, 1.0)


def make_attack_program(base: AhsProgram, delta_local_peak: float, top_qubit: int = TOP_QUBIT) -> AhsProgram:
    """``base`` with a constant local detuning of ``delta_local_peak`` on its top qubit."""
    if not 0 <= top_qubit < base.n_atoms:
        raise ValueError(f"program has no qubit {top_qubit}")
    pattern = tuple(1.0 if k == top_qubit else 0.0 for k in range(base.n_atoms))
    shift = ShiftingField(Waveform.constant(delta_local_peak, base.duration), pattern)
    return replace(base, shift=shift)


def separation(victim: AhsProgram, attacker: AhsProgram, anchor: str = NEAREST) -> float:
    """Nearest inter-tenant site distance, or centroid-to-centroid distance."""
    if anchor == CENTROID:
        return victim.register.centroid().distance(attacker.register.centroid())
    if anchor != NEAREST:
        raise ValueError(f"unknown anchor {anchor!r}")
    a, b = victim.register.coords(), attacker.register.coords()
    diff = a[:, None, :] - b[None, :, :]
    return float(np.hypot(diff[..., 0], diff[..., 1]).min())


@dataclass(frozen=True)
class TenantLayout:
    victim: AhsProgram
    attacker: AhsProgram
    separation: float
    anchor: str = NEAREST
    constraints: MachineConstraints = MachineConstraints()

    @classmethod
    def build(cls, victim, attacker, anchor=NEAREST, constraints=MachineConstraints()):
        layout = cls(victim, attacker, separation(victim, attacker, anchor), anchor, constraints)
        validate(layout.merged()[0], constraints)
        return layout

    def merged(self):
        return merge(self.victim, self.attacker)


def layout_at_distance(
    victim: AhsProgram,
    attacker: AhsProgram,
    d: float,
    direction=DEFAULT_DIRECTION,
    anchor: str = NEAREST,
    constraints: MachineConstraints = MachineConstraints(),
) -> TenantLayout:
    """Place ``attacker`` at separation ``d`` from ``victim`` along ``direction``.

    The attacker is first centred on the victim's centroid and then pushed out
    along ``direction`` until the anchor distance equals ``d``. The victim is
    not moved. Raises the usual validation errors for infeasible layouts.
    """
    u = np.asarray(direction, dtype=float)
    u = u / np.linalg.norm(u)
    cv, ca = victim.register.centroid(), attacker.register.centroid()
    centred = translate(attacker, cv.x - ca.x, cv.y - ca.y)

    def at(s):
        return translate(centred, s * u[0], s * u[1])

    if anchor == CENTROID:
        s = d
    else:
        # last sign change of sep(s) - d on a coarse grid, then bisection
        hi = max(d, 1.0)
        while separation(victim, at(hi), anchor) < d:
            hi *= 2
        grid = np.linspace(0.0, hi, 512)
        below = [s for s in grid if separation(victim, at(s), anchor) < d]
        lo = max(below) if below else 0.0
        hi = min(s for s in grid if s > lo) if below else 0.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if separation(victim, at(mid), anchor) < d:
                lo = mid
            else:
                hi = mid
        s = hi
    return TenantLayout.build(victim, at(s), anchor, constraints)


def run_colocated(
    layout: TenantLayout,
    shots: int,
    noise: NoiseModel | None = None,
    seed=0,
    run_index: int = 0,
    cfg: IntegratorConfig = IntegratorConfig(),
    constants: PhysicsConstants = PhysicsConstants(),
) -> tuple[CountSummary, CountSummary]:
    """Evolve both tenants jointly and split the counts back per tenant."""
    program, map_v, map_a = layout.merged()
    result = run_program(program, shots, seed, noise, run_index, cfg, constants, layout.constraints)
    return result.counts.select(map_v), result.counts.select(map_a)


def joint_marginals(
    layout: TenantLayout,
    cfg: IntegratorConfig = IntegratorConfig(),
    constants: PhysicsConstants = PhysicsConstants(),
) -> tuple[np.ndarray, np.ndarray]:
    """Exact per-qubit Rydberg probabilities of each tenant after joint evolution."""
    program, map_v, map_a = layout.merged()
    final = evolve(program, ground_state(program.n_atoms), cfg, constants)
    m = marginals(np.abs(final.amplitudes) ** 2)
    return m[list(map_v)], m[list(map_a)]
