"""The three studies (temporal heatmap, separation sweep, MTD) plus the control run.

Each ``cmd_*`` takes a resolved :class:`ExperimentConfig` and returns the
artifact text(s); :mod:`ahs_crosstalk.cli` handles files and exit codes.
Randomness is keyed from the config seed as
``(seed, Stream.<purpose>, index...)``; see :mod:`ahs_crosstalk.rng`.
"""
from __future__ import annotations

import copy
import csv
import hashlib
import io
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .colocation import CENTROID, NEAREST, TenantLayout, layout_at_distance, make_attack_program
from .errors import ConfigurationError, ParseError
from .evolution import IntegratorConfig, evolve, ground_state
from .fidelity import expected_counts, relative_fidelity
from .hamiltonian import PhysicsConstants
from .measurement import CountSummary, probabilities, rydberg_counts, sample_shots
from .mtd import MtdPolicy, default_policy, mtd_experiment, run_static
from .noise import NoiseModel, SiteFieldSpec, sample_site_field
from .pipeline import run_program
from .program import AhsProgram, MachineConstraints, reference_program, translate, validate
from .rng import Stream, seed_sequence
from .serialization import program_from_dict, program_to_dict

KINDS = ("control", "heatmap", "sweep", "mtd")

DEFAULTS: dict[str, Any] = {
    "shots": 1000,
    "repeats": 20,
    "noise": None,
    "grid": {"origin": [0.0, 0.0], "nx": 4, "ny": 5, "step_um": 10.0},
    "distances_um": [4, 5, 6, 7, 8, 10, 12],
    "direction": [1.0, 1.0],
    "anchor": NEAREST,
    "attack": {"enabled": True, "delta_local_peak": 5e7},
    "mtd": {
        "batches": 10,
        "rect": None,
        "min_attacker_gap_um": 8.0,
        "move_after_measure": False,
        "static_distance_um": 5.0,
    },
    "integrator": {"dt": 1e-9, "method": "midpoint-exponential", "taylor_tol": 1e-12},
    "constants": {"c6": 5.42e12, "cutoff_um": None},
    "constraints": {"field_width": 75.0, "field_height": 76.0, "min_spacing": 4.0, "max_atoms": 256},
    "output": {"path": None},
}

DEFAULT_PROGRAM = {
    "control": {"preset": "control", "origin": [0.0, 0.0]},
    "heatmap": {"preset": "control", "origin": [0.0, 0.0]},
    "sweep": {"preset": "victim", "origin": [20.0, 20.0]},
    "mtd": {"preset": "victim", "origin": [32.0, 32.0]},
}

NOISE_KEYS = {"pos_jitter_sigma", "omega_rel_sigma", "delta_offset_sigma", "detection", "site_field", "seed"}
SITE_FIELD_KEYS = {"detuning_sigma", "omega_rel_sigma", "correlation_length", "cell_um"}
PRESET_KEYS = {"preset", "origin", "side_um", "omega", "duration_s", "delta_local"}


def _threads() -> int:
    raw = os.environ.get("AHS_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise ConfigurationError(f"AHS_THREADS must be an integer, got {raw!r}") from None
    return os.cpu_count() or 1


def parallel_map(fn, items):
    """``map`` over worker threads; results come back in input order."""
    items = list(items)
    workers = min(_threads(), len(items)) or 1
    if workers == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# --- configuration -------------------------------------------------------


def _merge_block(name: str, default: dict, given: Any) -> dict:
    if given is None:
        return copy.deepcopy(default)
    if not isinstance(given, dict):
        raise ParseError("expected an object", f"$.{name}")
    unknown = set(given) - set(default)
    if unknown:
        raise ParseError(f"unknown keys {sorted(unknown)}", f"$.{name}")
    out = copy.deepcopy(default)
    out.update(given)
    return out


def _program_from_spec(spec: Any, base_dir: Path) -> AhsProgram:
    if isinstance(spec, str):
        spec = {"preset": spec}
    if not isinstance(spec, dict):
        raise ParseError("expected a preset name or program object", "$.program")
    if "preset" in spec:
        unknown = set(spec) - PRESET_KEYS
        if unknown:
            raise ParseError(f"unknown keys {sorted(unknown)}", "$.program")
        name = spec["preset"]
        if name not in ("control", "victim"):
            raise ParseError(f"unknown preset {name!r}", "$.program.preset")
        kw = {}
        for key, arg in (("side_um", "side"), ("omega", "omega"), ("duration_s", "duration"),
                         ("delta_local", "delta_local")):
            if key in spec:
                kw[arg] = float(spec[key])
        origin = tuple(float(v) for v in spec.get("origin", (0.0, 0.0)))
        try:
            return reference_program(origin, shifted=(name == "control"), **kw)
        except ValueError as exc:
            raise ParseError(str(exc), "$.program") from exc
    if "file" in spec:
        path = base_dir / spec["file"]
        try:
            text = path.read_text()
        except OSError as exc:
            raise ParseError(f"cannot read program file: {exc}", "$.program.file") from exc
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(exc.msg, f"{path}: line {exc.lineno} column {exc.colno}") from exc
        return program_from_dict(doc, str(path))
    return program_from_dict(spec, "$.program")


@dataclass
class ExperimentConfig:
    kind: str
    seed: int
    program: AhsProgram
    shots: int = 1000
    repeats: int = 20
    noise: dict | None = None
    grid: dict = field(default_factory=lambda: copy.deepcopy(DEFAULTS["grid"]))
    distances_um: list = field(default_factory=lambda: list(DEFAULTS["distances_um"]))
    direction: list = field(default_factory=lambda: list(DEFAULTS["direction"]))
    anchor: str = NEAREST
    attack: dict = field(default_factory=lambda: copy.deepcopy(DEFAULTS["attack"]))
    mtd: dict = field(default_factory=lambda: copy.deepcopy(DEFAULTS["mtd"]))
    integrator: dict = field(default_factory=lambda: copy.deepcopy(DEFAULTS["integrator"]))
    constants: dict = field(default_factory=lambda: copy.deepcopy(DEFAULTS["constants"]))
    constraints: dict = field(default_factory=lambda: copy.deepcopy(DEFAULTS["constraints"]))
    output: dict = field(default_factory=lambda: copy.deepcopy(DEFAULTS["output"]))

    # typed views ---------------------------------------------------------
    def integrator_config(self) -> IntegratorConfig:
        return IntegratorConfig(**self.integrator)

    def physics(self) -> PhysicsConstants:
        return PhysicsConstants(**self.constants)

    def machine(self) -> MachineConstraints:
        return MachineConstraints(**self.constraints)

    def noise_model(self) -> NoiseModel | None:
        if self.noise is None:
            return None
        block = dict(self.noise)
        seed = int(block.pop("seed", self.seed))
        site = block.pop("site_field", None)
        detection = tuple(block.pop("detection", (0.0, 0.0)))
        site_field = None
        if site is not None:
            m = self.machine()
            spec = SiteFieldSpec(width=m.field_width, height=m.field_height, **site)
            site_field = sample_site_field(spec, seed)
        return NoiseModel(detection=detection, site_field=site_field, seed=seed, **block)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "seed": self.seed,
            "program": program_to_dict(self.program),
            "shots": self.shots,
            "repeats": self.repeats,
            "noise": self.noise,
            "grid": self.grid,
            "distances_um": self.distances_um,
            "direction": self.direction,
            "anchor": self.anchor,
            "attack": self.attack,
            "mtd": self.mtd,
            "integrator": self.integrator,
            "constants": self.constants,
            "constraints": self.constraints,
            "output": self.output,
        }

    def program_hash(self) -> str:
        canon = json.dumps(program_to_dict(self.program), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()


def load_config(raw: dict, kind: str, seed: int | None = None, base_dir: Path | str = ".") -> ExperimentConfig:
    """Resolve a raw JSON config for experiment ``kind``.

    ``seed`` (from the command line) overrides the config's seed; one of the
    two must be present.
    """
    if kind not in KINDS:
        raise ConfigurationError(f"unknown experiment kind {kind!r}")
    if not isinstance(raw, dict):
        raise ParseError("config must be a JSON object")
    raw = dict(raw)
    declared = raw.pop("kind", kind)
    if declared != kind:
        raise ConfigurationError(f"config is for {declared!r}, not {kind!r}")
    known = set(DEFAULTS) | {"seed", "program"}
    unknown = set(raw) - known
    if unknown:
        raise ParseError(f"unknown keys {sorted(unknown)}")

    if seed is None:
        seed = raw.get("seed")
    if seed is None:
        raise ConfigurationError("a seed is required (config 'seed' or --seed)")
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise ParseError("seed must be a nonnegative integer", "$.seed")

    program = _program_from_spec(raw.get("program", DEFAULT_PROGRAM[kind]), Path(base_dir))

    blocks = {}
    for name in ("grid", "attack", "mtd", "integrator", "constants", "constraints", "output"):
        blocks[name] = _merge_block(name, DEFAULTS[name], raw.get(name))

    noise = raw.get("noise")
    if noise is not None:
        if not isinstance(noise, dict) or set(noise) - NOISE_KEYS:
            raise ParseError(f"noise must be an object with keys from {sorted(NOISE_KEYS)}", "$.noise")
        if noise.get("site_field") is not None and set(noise["site_field"]) - SITE_FIELD_KEYS:
            raise ParseError(f"site_field keys must come from {sorted(SITE_FIELD_KEYS)}", "$.noise.site_field")

    cfg = ExperimentConfig(
        kind=kind,
        seed=seed,
        program=program,
        shots=raw.get("shots", DEFAULTS["shots"]),
        repeats=raw.get("repeats", DEFAULTS["repeats"]),
        noise=noise,
        distances_um=list(raw.get("distances_um", DEFAULTS["distances_um"])),
        direction=list(raw.get("direction", DEFAULTS["direction"])),
        anchor=raw.get("anchor", DEFAULTS["anchor"]),
        **blocks,
    )
    _check(cfg)
    return cfg


def _check(cfg: ExperimentConfig) -> None:
    for name in ("shots", "repeats"):
        v = getattr(cfg, name)
        if isinstance(v, bool) or not isinstance(v, int) or v < 1:
            raise ParseError(f"{name} must be a positive integer", f"$.{name}")
    if cfg.anchor not in (NEAREST, CENTROID):
        raise ParseError(f"anchor must be {NEAREST!r} or {CENTROID!r}", "$.anchor")
    g = cfg.grid
    if not (isinstance(g["nx"], int) and isinstance(g["ny"], int) and g["nx"] >= 1 and g["ny"] >= 1):
        raise ParseError("grid nx and ny must be positive integers", "$.grid")
    if len(cfg.direction) != 2 or not any(cfg.direction):
        raise ParseError("direction must be a nonzero 2-vector", "$.direction")
    try:
        cfg.integrator_config()
        cfg.physics()
        cfg.machine()
        cfg.noise_model()
        _policy_args(cfg)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigurationError):
            raise
        raise ConfigurationError(str(exc)) from exc
    if cfg.kind == "mtd" and cfg.shots % cfg.mtd["batches"]:
        raise ParseError("shots must be divisible by mtd.batches (equal total shots)", "$.shots")


def _policy_args(cfg: ExperimentConfig) -> dict:
    m = cfg.mtd
    if isinstance(m["batches"], bool) or not isinstance(m["batches"], int) or m["batches"] < 1:
        raise ParseError("mtd.batches must be a positive integer", "$.mtd.batches")
    args = dict(
        batches=m["batches"],
        move_after_measure=bool(m["move_after_measure"]),
        min_attacker_gap=float(m["min_attacker_gap_um"]),
        seed=cfg.seed,
    )
    if m["rect"] is not None:
        (x0, x1), (y0, y1) = m["rect"]
        MtdPolicy((x0, x1), (y0, y1), **args)
    return args


# --- artifacts -----------------------------------------------------------


def _meta(cfg: ExperimentConfig, artifact: str) -> dict:
    return {
        "artifact": artifact,
        "program_sha256": cfg.program_hash(),
        "seed": cfg.seed,
        "config": cfg.to_dict(),
    }


def _dumps(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _csv(cfg: ExperimentConfig, artifact: str, header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    buf.write("# " + json.dumps(_meta(cfg, artifact), sort_keys=True, separators=(",", ":")) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _fmt(x: float) -> str:
    return repr(float(x))


# --- control -------------------------------------------------------------


def control(cfg: ExperimentConfig) -> tuple[float, ...]:
    validate(cfg.program, cfg.machine())
    return expected_counts(cfg.program, cfg.shots, cfg.repeats, cfg.seed,
                           cfg.integrator_config(), cfg.physics())


def cmd_control(cfg: ExperimentConfig) -> str:
    expected = control(cfg)
    doc = _meta(cfg, "ahs-control/1")
    doc.update(expected_counts=list(expected), shots=cfg.shots, repeats=cfg.repeats)
    return _dumps(doc)


# --- heatmap -------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class HeatmapCell:
    ix: int
    iy: int
    x_um: float
    y_um: float
    counts: CountSummary
    probabilities: np.ndarray
    rf: float = float("nan")


def heatmap(cfg: ExperimentConfig) -> list[HeatmapCell]:
    """Run the program at every grid cell; score each against the pooled mean."""
    g = cfg.grid
    ox, oy = (float(v) for v in g["origin"])
    step = float(g["step_um"])
    anchor_site = cfg.program.register.sites[0]
    machine, icfg, phys, noise = cfg.machine(), cfg.integrator_config(), cfg.physics(), cfg.noise_model()

    cells = [(ix, iy) for iy in range(g["ny"]) for ix in range(g["nx"])]
    programs = []
    for ix, iy in cells:
        x, y = ox + ix * step, oy + iy * step
        programs.append(validate(translate(cfg.program, x - anchor_site.x, y - anchor_site.y), machine))

    def run(i):
        ix, iy = cells[i]
        res = run_program(programs[i], cfg.shots, seed_sequence(cfg.seed, Stream.CELL, i),
                          noise, i, icfg, phys, machine)
        return HeatmapCell(ix, iy, ox + ix * step, oy + iy * step, res.counts, res.probabilities)

    done = parallel_map(run, range(len(cells)))
    pooled = np.mean([c.counts.counts for c in done], axis=0)
    return [
        HeatmapCell(c.ix, c.iy, c.x_um, c.y_um, c.counts, c.probabilities,
                    relative_fidelity(c.counts, pooled).rf)
        for c in done
    ]


def cmd_heatmap(cfg: ExperimentConfig) -> str:
    rows = [[c.ix, c.iy, _fmt(c.x_um), _fmt(c.y_um), _fmt(c.rf)] for c in heatmap(cfg)]
    return _csv(cfg, "ahs-heatmap/1", ["ix", "iy", "x_um", "y_um", "rf"], rows)


# --- separation sweep ----------------------------------------------------


def _attacker(cfg: ExperimentConfig) -> AhsProgram | None:
    if not cfg.attack["enabled"]:
        return None
    return make_attack_program(cfg.program, float(cfg.attack["delta_local_peak"]))


@dataclass(frozen=True)
class SweepPoint:
    distance_um: float
    rf: float
    rf_err: float
    rfs: tuple[float, ...]


def _rf_err(rfs: list[float], counts: CountSummary) -> float:
    if len(rfs) > 1:
        return float(np.std(rfs, ddof=1) / np.sqrt(len(rfs)))
    p = np.asarray(counts.counts) / counts.shots
    return float(np.sqrt(np.sum(p * (1 - p) / counts.shots)) / len(p))


def sweep(cfg: ExperimentConfig) -> list[SweepPoint]:
    """Victim rf against separation from the attacker, ``repeats`` runs per distance."""
    machine, icfg, phys, noise = cfg.machine(), cfg.integrator_config(), cfg.physics(), cfg.noise_model()
    victim = validate(cfg.program, machine)
    attacker = _attacker(cfg)
    expected = expected_counts(victim, cfg.shots, cfg.repeats, cfg.seed, icfg, phys)

    layouts = []
    for d in cfg.distances_um:
        if attacker is None:
            layouts.append(None)
        else:
            layouts.append(layout_at_distance(victim, attacker, float(d), cfg.direction, cfg.anchor, machine))

    def run(i):
        layout = layouts[i]
        if layout is None:
            program, vmap = victim, tuple(range(victim.n_atoms))
        else:
            program, vmap, _ = layout.merged()
        rfs, last = [], None
        final = None
        if noise is None or noise.is_zero:
            # deterministic evolution: evolve once, sample per repeat
            final = evolve(program, ground_state(program.n_atoms), icfg, phys)
            detection = noise.detection if noise is not None else (0.0, 0.0)
        for r in range(cfg.repeats):
            key = seed_sequence(cfg.seed, Stream.DISTANCE, i, r)
            if final is not None:
                counts = rydberg_counts(sample_shots(final, cfg.shots, key, detection))
            else:
                counts = run_program(program, cfg.shots, key, noise, r, icfg, phys, machine).counts
            last = counts.select(vmap)
            rfs.append(relative_fidelity(last, expected).rf)
        return SweepPoint(float(cfg.distances_um[i]), float(np.mean(rfs)), _rf_err(rfs, last), tuple(rfs))

    return parallel_map(run, range(len(layouts)))


def cmd_sweep(cfg: ExperimentConfig) -> str:
    rows = [[_fmt(p.distance_um), _fmt(p.rf), _fmt(p.rf_err)] for p in sweep(cfg)]
    return _csv(cfg, "ahs-sweep/1", ["distance_um", "rf", "rf_err"], rows)


# --- moving target defense -----------------------------------------------


@dataclass(frozen=True)
class MtdComparison:
    rf_static: float
    rf_mtd: float
    expected: tuple[float, ...]
    static_counts: CountSummary
    mtd_counts: CountSummary
    batches: tuple
    policy: MtdPolicy
    attacker: AhsProgram | None


def mtd(cfg: ExperimentConfig) -> MtdComparison:
    """Static worst-case placement vs the MTD policy, equal total shots."""
    machine, icfg, phys, noise = cfg.machine(), cfg.integrator_config(), cfg.physics(), cfg.noise_model()
    victim = validate(cfg.program, machine)
    attack = _attacker(cfg)
    total = cfg.shots
    expected = expected_counts(victim, total, cfg.repeats, cfg.seed, icfg, phys)
    args = _policy_args(cfg)

    if attack is None:
        attacker = None
        static = run_program(victim, total, seed_sequence(cfg.seed, Stream.BATCH, 0), noise, 0,
                             icfg, phys, machine)
        static_report = relative_fidelity(static.counts, expected)
    else:
        layout = layout_at_distance(victim, attack, float(cfg.mtd["static_distance_um"]),
                                    cfg.direction, cfg.anchor, machine)
        attacker = layout.attacker
        static_report = run_static(layout, total, noise, cfg.seed, cfg=icfg, constants=phys, expected=expected)

    rect = cfg.mtd["rect"]
    if rect is not None:
        policy = MtdPolicy(tuple(rect[0]), tuple(rect[1]), **args)
    elif attacker is not None:
        policy = default_policy(victim, attacker, **args)
    else:
        policy = MtdPolicy((0.0, 30.0), (0.0, 30.0), **args)

    run = mtd_experiment(victim, attacker, policy, total // policy.batches, noise, cfg.seed,
                         cfg=icfg, constants=phys, constraints=machine, anchor=cfg.anchor,
                         expected=expected)
    return MtdComparison(static_report.rf, run.report.rf, tuple(expected), static_report.observed,
                         run.report.observed, run.batches, policy, attacker)


def cmd_mtd(cfg: ExperimentConfig) -> tuple[str, str]:
    """Returns ``(per-batch CSV, summary JSON)``."""
    res = mtd(cfg)
    rows = [[b.batch, _fmt(b.placement.dx), _fmt(b.placement.dy), _fmt(b.rf)] for b in res.batches]
    table = _csv(cfg, "ahs-mtd-batches/1", ["batch", "dx", "dy", "rf"], rows)
    doc = _meta(cfg, "ahs-mtd/1")
    doc.update(
        rf_static=res.rf_static,
        rf_mtd=res.rf_mtd,
        expected_counts=list(res.expected),
        observed_static=list(res.static_counts.counts),
        observed_mtd=list(res.mtd_counts.counts),
        shots=cfg.shots,
        policy={
            "dx_range": list(res.policy.dx_range),
            "dy_range": list(res.policy.dy_range),
            "batches": res.policy.batches,
            "min_attacker_gap_um": res.policy.min_attacker_gap,
            "move_after_measure": res.policy.move_after_measure,
        },
        post_measure_moves=[list(b.placement.post) if b.placement.post else None for b in res.batches],
    )
    return table, _dumps(doc)
