"""Moving target defense: relocate the victim tenant between shot batches."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .colocation import TenantLayout, run_colocated, separation
from .errors import PlacementExhausted, ValidationError
from .evolution import IntegratorConfig
from .fidelity import FidelityReport, expected_counts, relative_fidelity
from .hamiltonian import PhysicsConstants
from .measurement import CountSummary
from .noise import NoiseModel
from .pipeline import run_program
from .program import AhsProgram, MachineConstraints, translate, validate
from .rng import Stream, seed_sequence, stream

DEFAULT_RECT_UM = 30.0
DEFAULT_GAP_UM = 8.0


@dataclass(frozen=True)
class MtdPolicy:
    """Uniform victim displacements over ``dx_range x dy_range``.

    A degenerate range (low == high) pins that coordinate. Every placement
    must keep the merged program valid and every victim site at least
    ``min_attacker_gap`` from every attacker site.
    """

    dx_range: tuple[float, float]
    dy_range: tuple[float, float]
    batches: int = 10
    move_after_measure: bool = False
    min_attacker_gap: float = DEFAULT_GAP_UM
    seed: int = 0
    max_retries: int = 1000

    def __post_init__(self):
        if self.batches < 1:
            raise ValueError("batches must be at least 1")
        if self.min_attacker_gap < 0 or self.max_retries < 1:
            raise ValueError("min_attacker_gap must be >= 0 and max_retries >= 1")
        for lo, hi in (self.dx_range, self.dy_range):
            if lo > hi:
                raise ValueError("displacement ranges must be (low, high)")


def default_policy(victim: AhsProgram, attacker: AhsProgram, **kw) -> MtdPolicy:
    """A 30 x 30 um displacement square extending away from the attacker."""
    cv, ca = victim.register.centroid(), attacker.register.centroid()
    size = kw.pop("size", DEFAULT_RECT_UM)

    def span(v, a):
        return (0.0, size) if v > a else (-size, 0.0)

    return MtdPolicy(span(cv.x, ca.x), span(cv.y, ca.y), **kw)


@dataclass(frozen=True)
class Placement:
    dx: float
    dy: float
    post: tuple[float, float] | None = None  # relocation after measurement, if enabled


def _draw(rng, policy, victim, attacker, anchor, constraints):
    for _ in range(policy.max_retries):
        dx = float(rng.uniform(*policy.dx_range)) if policy.dx_range[0] < policy.dx_range[1] else policy.dx_range[0]
        dy = float(rng.uniform(*policy.dy_range)) if policy.dy_range[0] < policy.dy_range[1] else policy.dy_range[0]
        moved = translate(victim, dx, dy)
        try:
            if attacker is None:
                validate(moved, constraints)
            else:
                if separation(moved, attacker) < policy.min_attacker_gap:
                    continue
                TenantLayout.build(moved, attacker, anchor, constraints)
        except ValidationError:
            continue
        return dx, dy
    raise PlacementExhausted(f"no admissible placement after {policy.max_retries} draws")


def sample_placements(
    policy: MtdPolicy,
    victim: AhsProgram,
    attacker: AhsProgram | None,
    constraints: MachineConstraints = MachineConstraints(),
    anchor: str = "nearest",
) -> list[Placement]:
    rng = stream(policy.seed, Stream.PLACEMENT)
    out = []
    for _ in range(policy.batches):
        dx, dy = _draw(rng, policy, victim, attacker, anchor, constraints)
        post = _draw(rng, policy, victim, attacker, anchor, constraints) if policy.move_after_measure else None
        out.append(Placement(dx, dy, post))
    return out


@dataclass(frozen=True)
class BatchRecord:
    batch: int
    placement: Placement
    counts: CountSummary
    rf: float


@dataclass(frozen=True)
class MtdRun:
    report: FidelityReport
    batches: tuple[BatchRecord, ...]


def _run_batches(victim, attacker, placements, shots_per_batch, noise, seed, expected_total,
                 cfg, constants, constraints, anchor):
    records = []
    n_b = len(placements)
    per_batch_expected = [e / n_b for e in expected_total]
    for b, pl in enumerate(placements):
        moved = translate(victim, pl.dx, pl.dy)
        key = seed_sequence(seed, Stream.BATCH, b)
        if attacker is None:
            counts = run_program(moved, shots_per_batch, key, noise, b, cfg, constants, constraints).counts
        else:
            layout = TenantLayout.build(moved, attacker, anchor, constraints)
            counts, _ = run_colocated(layout, shots_per_batch, noise, key, b, cfg, constants)
        rf = relative_fidelity(counts, per_batch_expected).rf
        records.append(BatchRecord(b, pl, counts, rf))
    return records


def mtd_experiment(
    victim: AhsProgram,
    attacker: AhsProgram | None,
    policy: MtdPolicy,
    shots_per_batch: int,
    noise: NoiseModel | None = None,
    seed=0,
    repeats: int = 10,
    cfg: IntegratorConfig = IntegratorConfig(),
    constants: PhysicsConstants = PhysicsConstants(),
    constraints: MachineConstraints = MachineConstraints(),
    anchor: str = "nearest",
    expected: tuple[float, ...] | None = None,
) -> MtdRun:
    """Run every batch of ``policy`` and score the pooled victim counts.

    ``attacker=None`` runs the victim alone (nothing to defend against).
    ``expected`` are the standalone victim's expected counts for the *total*
    number of shots; computed with ``repeats`` noiseless runs when omitted.
    """
    if shots_per_batch < 1:
        raise ValueError("shots_per_batch must be at least 1")
    total = shots_per_batch * policy.batches
    if expected is None:
        expected = expected_counts(victim, total, repeats, seed, cfg, constants)
    placements = sample_placements(policy, victim, attacker, constraints, anchor)
    records = _run_batches(victim, attacker, placements, shots_per_batch, noise, seed, expected,
                           cfg, constants, constraints, anchor)
    pooled = records[0].counts
    for r in records[1:]:
        pooled = pooled + r.counts
    return MtdRun(relative_fidelity(pooled, expected), tuple(records))


def run_with_mtd(victim, attacker, policy, shots_per_batch, noise=None, seed=0, **kw) -> FidelityReport:
    """Relative fidelity of the victim under ``policy``; see :func:`mtd_experiment`."""
    return mtd_experiment(victim, attacker, policy, shots_per_batch, noise, seed, **kw).report


def run_static(
    layout: TenantLayout,
    shots: int,
    noise: NoiseModel | None = None,
    seed=0,
    repeats: int = 10,
    cfg: IntegratorConfig = IntegratorConfig(),
    constants: PhysicsConstants = PhysicsConstants(),
    expected: tuple[float, ...] | None = None,
) -> FidelityReport:
    """The undefended baseline: the victim stays put for all ``shots``.

    Uses the same shot stream as MTD batch 0, so a one-batch policy pinned to
    the static placement reproduces this result exactly.
    """
    if expected is None:
        expected = expected_counts(layout.victim, shots, repeats, seed, cfg, constants)
    counts, _ = run_colocated(layout, shots, noise, seed_sequence(seed, Stream.BATCH, 0), 0, cfg, constants)
    return relative_fidelity(counts, expected)


def worst_batch_rf(batches) -> float:
    """Smallest per-batch rf. With equal batch sizes the pooled rf is never below it."""
    return float(np.min([b.rf for b in batches]))
