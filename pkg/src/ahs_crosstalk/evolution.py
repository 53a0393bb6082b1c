"""State-vector propagation of ``i dpsi/dt = H(t) psi``."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels
from .errors import DimensionMismatch, NormDrift
from .hamiltonian import PhysicsConstants, VdwTable, diagonal_parts, vdw_table
from .program import AhsProgram

NORM_TOL = 1e-8
MAX_ATOMS = 20
MAX_TAYLOR_TERMS = 200


@dataclass(frozen=True, eq=False)
class QuantumState:
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=np.complex128)
        dim = amps.shape[0] if amps.ndim == 1 else 0
        if dim == 0 or dim & (dim - 1):
            raise DimensionMismatch(f"state length must be a power of two, got shape {amps.shape}")
        if dim > 1 << MAX_ATOMS:
            raise DimensionMismatch(f"state vectors are limited to {MAX_ATOMS} atoms")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) >= NORM_TOL:
            raise NormDrift(f"state norm {norm!r} differs from 1 by more than {NORM_TOL}")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def n_atoms(self) -> int:
        return self.amplitudes.shape[0].bit_length() - 1

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]


def ground_state(n: int) -> QuantumState:
    if n < 1:
        raise ValueError("need at least one atom")
    amps = np.zeros(1 << n, dtype=np.complex128)
    amps[0] = 1.0
    return QuantumState(amps)


@dataclass(frozen=True)
class IntegratorConfig:
    dt: float = 1e-9
    method: str = "midpoint-exponential"
    taylor_tol: float = 1e-12

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not 0 < self.taylor_tol <= 1e-6:
            raise ValueError("taylor_tol must lie in (0, 1e-6]")
        if self.method not in ("midpoint-exponential", "rk4"):
            raise ValueError(f"unknown method {self.method!r}")


def _wave_mid(w, t):
    return np.ascontiguousarray(w.sample(t), dtype=np.float64)


def _midpoint_interval(program, parts, psi, t0, t1, cfg):
    steps = max(1, math.ceil((t1 - t0) / cfg.dt * (1 - 1e-12)))
    h = (t1 - t0) / steps
    mids = t0 + (np.arange(steps) + 0.5) * h
    d = program.drive
    dl = (
        _wave_mid(program.shift.delta_local, mids)
        if program.shift is not None
        else np.zeros(steps)
    )
    used = kernels.propagate(
        psi,
        parts.vdw,
        parts.rydberg_number,
        parts.shift_weight,
        _wave_mid(d.omega, mids),
        _wave_mid(d.phi, mids),
        _wave_mid(d.delta_global, mids),
        dl,
        h,
        cfg.taylor_tol,
        MAX_TAYLOR_TERMS,
    )
    if used < 0:
        raise NormDrift(f"Taylor series did not converge with step {h:.3g} s; reduce dt")


def _rk4_interval(program, parts, psi, t0, t1, cfg):
    steps = max(1, math.ceil((t1 - t0) / cfg.dt * (1 - 1e-12)))
    h = (t1 - t0) / steps
    n = program.n_atoms
    d, sf = program.drive, program.shift
    buf = np.empty_like(psi)

    def f(t, y):
        dl = sf.delta_local.sample(t) if sf is not None else 0.0
        diag = parts.vdw - d.delta_global.sample(t) * parts.rydberg_number - dl * parts.shift_weight
        up = 0.5 * d.omega.sample(t) * np.exp(-1j * d.phi.sample(t))
        return -1j * kernels.apply(y, np.ascontiguousarray(diag), n, complex(up), buf).copy()

    y = psi.copy()
    for s in range(steps):
        t = t0 + s * h
        k1 = f(t, y)
        k2 = f(t + h / 2, y + h / 2 * k1)
        k3 = f(t + h / 2, y + h / 2 * k2)
        k4 = f(min(t + h, t1), y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    psi[:] = y


def _check_inputs(program, state0):
    if state0.n_atoms != program.n_atoms:
        raise DimensionMismatch(
            f"state is for {state0.n_atoms} atoms, program has {program.n_atoms}"
        )
    if program.n_atoms > MAX_ATOMS:
        raise DimensionMismatch(f"state vectors are limited to {MAX_ATOMS} atoms")


def _breakpoints(program) -> np.ndarray:
    d = program.drive
    waves = [d.omega, d.phi, d.delta_global]
    if program.shift is not None:
        waves.append(program.shift.delta_local)
    return np.unique(np.concatenate([np.asarray(w.times, dtype=float) for w in waves]))


def _advance(program, parts, psi, t0, t1, cfg):
    if t1 <= t0:
        return
    step = _rk4_interval if cfg.method == "rk4" else _midpoint_interval
    # never step across a waveform knot: a kink inside a step costs an order
    knots = _breakpoints(program)
    edges = [t0, *knots[(knots > t0) & (knots < t1)], t1]
    for a, b in zip(edges, edges[1:]):
        step(program, parts, psi, a, b, cfg)


def _finish(psi) -> QuantumState:
    norm = np.linalg.norm(psi)
    if not np.isfinite(norm) or abs(norm - 1.0) >= NORM_TOL:
        raise NormDrift(f"final norm {norm!r}; integration unstable, reduce dt")
    return QuantumState(psi)


def evolve(
    program: AhsProgram,
    state0: QuantumState,
    cfg: IntegratorConfig = IntegratorConfig(),
    constants: PhysicsConstants = PhysicsConstants(),
    table: VdwTable | None = None,
) -> QuantumState:
    """Propagate ``state0`` from 0 to ``program.duration``.

    The default method applies exp(-i H(t + dt/2) dt) per step by a truncated
    Taylor series. Fails with :class:`NormDrift` instead of renormalising.
    """
    _check_inputs(program, state0)
    if program.duration == 0:
        return state0
    table = vdw_table(program.register, constants) if table is None else table
    parts = diagonal_parts(program, table)
    psi = state0.amplitudes.copy()
    _advance(program, parts, psi, 0.0, program.duration, cfg)
    return _finish(psi)


def trajectory(
    program: AhsProgram,
    state0: QuantumState,
    times: Sequence[float],
    cfg: IntegratorConfig = IntegratorConfig(),
    constants: PhysicsConstants = PhysicsConstants(),
) -> list[QuantumState]:
    """States at each of the sorted ``times`` (all within ``[0, duration]``)."""
    ts = [float(t) for t in times]
    if any(b < a for a, b in zip(ts, ts[1:])):
        raise ValueError("times must be sorted")
    if ts and (ts[0] < 0 or ts[-1] > program.duration):
        raise ValueError("times must lie within the program duration")
    _check_inputs(program, state0)
    table = vdw_table(program.register, constants)
    parts = diagonal_parts(program, table)
    psi = state0.amplitudes.copy()
    out, t = [], 0.0
    for target in ts:
        _advance(program, parts, psi, t, target, cfg)
        t = max(t, target)
        out.append(_finish(psi.copy()))
    return out


@dataclass(frozen=True)
class ConvergenceReport:
    dt: float
    max_abs_diff: float
    threshold: float

    @property
    def flagged(self) -> bool:
        return not self.max_abs_diff < self.threshold


def convergence_check(
    program: AhsProgram,
    state0: QuantumState,
    cfg: IntegratorConfig = IntegratorConfig(),
    constants: PhysicsConstants = PhysicsConstants(),
    threshold: float = 1e-6,
) -> ConvergenceReport:
    """Compare basis probabilities at ``dt`` and ``dt / 2``."""
    coarse = evolve(program, state0, cfg, constants)
    fine_cfg = IntegratorConfig(cfg.dt / 2, cfg.method, cfg.taylor_tol)
    fine = evolve(program, state0, fine_cfg, constants)
    diff = np.max(np.abs(np.abs(coarse.amplitudes) ** 2 - np.abs(fine.amplitudes) ** 2))
    return ConvergenceReport(cfg.dt, float(diff), threshold)
