"""Program representation: geometry, waveforms, fields and program transforms.

Units throughout: positions in micrometres, times in seconds, angular
frequencies in rad/s. Every type here is immutable and every operation is a
pure function returning a new object.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from itertools import combinations
from typing import Sequence

import numpy as np

from .errors import (
    DriveMismatch,
    DurationMismatch,
    OutOfField,
    OutOfRange,
    SpacingViolation,
    TooManyAtoms,
    WaveformMismatch,
)


@dataclass(frozen=True)
class Position:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite position ({self.x}, {self.y})")

    def shifted(self, dx: float, dy: float) -> Position:
        return Position(self.x + dx, self.y + dy)

    def distance(self, other: Position) -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(frozen=True)
class MachineConstraints:
    field_width: float = 75.0
    field_height: float = 76.0
    min_spacing: float = 4.0
    max_atoms: int = 256

    def __post_init__(self):
        for name in ("field_width", "field_height", "min_spacing", "max_atoms"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")


@dataclass(frozen=True)
class Register:
    sites: tuple[Position, ...]

    def __post_init__(self):
        sites = tuple(s if isinstance(s, Position) else Position(*s) for s in self.sites)
        if not sites:
            raise ValueError("a register needs at least one site")
        object.__setattr__(self, "sites", sites)

    def __len__(self) -> int:
        return len(self.sites)

    def coords(self) -> np.ndarray:
        """``(N, 2)`` array of site coordinates in um."""
        return np.array([(s.x, s.y) for s in self.sites], dtype=float)

    def distances(self) -> np.ndarray:
        xy = self.coords()
        diff = xy[:, None, :] - xy[None, :, :]
        return np.hypot(diff[..., 0], diff[..., 1])

    def centroid(self) -> Position:
        x, y = self.coords().mean(axis=0)
        return Position(float(x), float(y))

    def shifted(self, dx: float, dy: float) -> Register:
        return Register(tuple(s.shifted(dx, dy) for s in self.sites))


@dataclass(frozen=True)
class Waveform:
    """Piecewise-linear function of time given by its knots."""

    times: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        times = tuple(float(t) for t in self.times)
        values = tuple(float(v) for v in self.values)
        if not times or len(times) != len(values):
            raise ValueError("a waveform needs matching, non-empty times and values")
        if times[0] != 0.0:
            raise ValueError("the first knot must be at t = 0")
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("knot times must be strictly increasing")
        if not all(math.isfinite(v) for v in times + values):
            raise ValueError("waveform knots must be finite")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    @classmethod
    def constant(cls, value: float, duration: float) -> Waveform:
        if duration == 0:
            return cls((0.0,), (value,))
        return cls((0.0, duration), (value, value))

    @classmethod
    def from_knots(cls, knots: Sequence[tuple[float, float]]) -> Waveform:
        times, values = zip(*knots)
        return cls(times, values)

    @property
    def end_time(self) -> float:
        return self.times[-1]

    def knots(self) -> list[tuple[float, float]]:
        return list(zip(self.times, self.values))

    def __call__(self, t):
        return waveform_eval(self, t)

    def sample(self, t: np.ndarray) -> np.ndarray:
        """Vectorised evaluation without range checks (caller guarantees 0 <= t <= T)."""
        return np.interp(t, self.times, self.values)

    def scaled(self, factor: float) -> Waveform:
        return Waveform(self.times, tuple(v * factor for v in self.values))

    def offset(self, amount: float) -> Waveform:
        return Waveform(self.times, tuple(v + amount for v in self.values))


def waveform_eval(w: Waveform, t):
    """Linear interpolation between knots; exact at the knots themselves."""
    ts = np.asarray(t, dtype=float)
    if np.any(ts < 0.0) or np.any(ts > w.end_time):
        raise OutOfRange(f"t={t!r} outside [0, {w.end_time}]")
    out = np.interp(ts, w.times, w.values)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class DrivingField:
    """Global drive: Rabi frequency, phase and detuning."""

    omega: Waveform
    phi: Waveform
    delta_global: Waveform

    def __post_init__(self):
        if any(v < 0 for v in self.omega.values):
            raise ValueError("Rabi frequency values must be nonnegative")
        ends = {self.omega.end_time, self.phi.end_time, self.delta_global.end_time}
        if len(ends) != 1:
            raise WaveformMismatch(f"drive waveforms end at different times: {sorted(ends)}")

    @classmethod
    def constant(cls, omega: float, duration: float, phi: float = 0.0, delta: float = 0.0):
        return cls(
            Waveform.constant(omega, duration),
            Waveform.constant(phi, duration),
            Waveform.constant(delta, duration),
        )

    @property
    def end_time(self) -> float:
        return self.omega.end_time


@dataclass(frozen=True)
class ShiftingField:
    """Local detuning ``-delta_local(t) * h_k * n_k`` with per-site pattern ``h``."""

    delta_local: Waveform
    pattern: tuple[float, ...]

    def __post_init__(self):
        pattern = tuple(float(h) for h in self.pattern)
        if any(not 0.0 <= h <= 1.0 for h in pattern):
            raise ValueError("shift pattern coefficients must lie in [0, 1]")
        if any(v < 0 for v in self.delta_local.values):
            raise ValueError("local detuning magnitude must be nonnegative")
        object.__setattr__(self, "pattern", pattern)


@dataclass(frozen=True)
class AhsProgram:
    """One executable analog program.

    Cross-field invariants (waveform end times, pattern length) are checked
    by :func:`validate`, not at construction, so malformed programs can still
    be represented and reported on.
    """

    register: Register
    drive: DrivingField
    shift: ShiftingField | None = None
    duration: float = field(default=None)

    def __post_init__(self):
        if self.duration is None:
            object.__setattr__(self, "duration", self.drive.end_time)
        if not (math.isfinite(self.duration) and self.duration >= 0):
            raise ValueError("duration must be finite and nonnegative")

    @property
    def n_atoms(self) -> int:
        return len(self.register)


# --- builders -------------------------------------------------------------

TOP_QUBIT = 2

REFERENCE_SIDE_UM = 5.5
REFERENCE_OMEGA = 2.5e6
REFERENCE_DURATION = 4e-6
REFERENCE_SHIFT = 5e7


def make_triangle_register(side: float, origin: Position | tuple = Position(0.0, 0.0)) -> Register:
    """Equilateral triangle with base along +x; index 2 is the apex ("top qubit")."""
    if not side > 0:
        raise ValueError("side must be positive")
    o = origin if isinstance(origin, Position) else Position(*origin)
    return Register(
        (
            o,
            Position(o.x + side, o.y),
            Position(o.x + side / 2, o.y + side * math.sqrt(3) / 2),
        )
    )


def reference_program(
    origin: Position | tuple = Position(0.0, 0.0),
    *,
    shifted: bool = True,
    side: float = REFERENCE_SIDE_UM,
    omega: float = REFERENCE_OMEGA,
    duration: float = REFERENCE_DURATION,
    delta_local: float = REFERENCE_SHIFT,
) -> AhsProgram:
    """The control triangle: constant resonant drive, optional shift on the apex.

    With ``shifted=False`` this is the bare triangle used as the victim tenant.
    """
    register = make_triangle_register(side, origin)
    shift = None
    if shifted:
        pattern = tuple(1.0 if k == TOP_QUBIT else 0.0 for k in range(len(register)))
        shift = ShiftingField(Waveform.constant(delta_local, duration), pattern)
    return AhsProgram(register, DrivingField.constant(omega, duration), shift, duration)


# --- validation & transforms ----------------------------------------------


def validate(program: AhsProgram, constraints: MachineConstraints = MachineConstraints()) -> AhsProgram:
    """Return ``program`` unchanged if it is executable, else raise."""
    reg = program.register
    if len(reg) > constraints.max_atoms:
        raise TooManyAtoms(f"{len(reg)} atoms exceeds the limit of {constraints.max_atoms}")
    for k, s in enumerate(reg.sites):
        if not (0.0 <= s.x <= constraints.field_width and 0.0 <= s.y <= constraints.field_height):
            raise OutOfField(k, s.x, s.y, constraints.field_width, constraints.field_height)
    for i, j in combinations(range(len(reg)), 2):
        d = reg.sites[i].distance(reg.sites[j])
        if d < constraints.min_spacing:
            raise SpacingViolation(i, j, d, constraints.min_spacing)

    T = program.duration
    for name, w in (
        ("omega", program.drive.omega),
        ("phi", program.drive.phi),
        ("delta_global", program.drive.delta_global),
    ):
        if w.end_time != T:
            raise WaveformMismatch(f"drive.{name} ends at {w.end_time} s, duration is {T} s")
    if program.shift is not None:
        if program.shift.delta_local.end_time != T:
            raise WaveformMismatch(
                f"shift.delta_local ends at {program.shift.delta_local.end_time} s, duration is {T} s"
            )
        if len(program.shift.pattern) != len(reg):
            raise WaveformMismatch(
                f"shift pattern has {len(program.shift.pattern)} entries for {len(reg)} sites"
            )
    return program


def translate(program: AhsProgram, dx: float, dy: float) -> AhsProgram:
    return replace(program, register=program.register.shifted(dx, dy))


def merge(a: AhsProgram, b: AhsProgram) -> tuple[AhsProgram, tuple[int, ...], tuple[int, ...]]:
    """Co-locate two programs on one machine.

    Returns the joint program and, for each input, the merged indices of its
    qubits. Drives must be identical since the machine has a single global
    drive.
    """
    if a.drive != b.drive:
        raise DriveMismatch("co-located programs must share one global drive")
    if a.duration != b.duration:
        raise DurationMismatch(f"durations differ: {a.duration} s vs {b.duration} s")
    na, nb = len(a.register), len(b.register)
    sites = a.register.sites + b.register.sites

    shift = None
    if a.shift is not None or b.shift is not None:
        if a.shift is not None and b.shift is not None and a.shift.delta_local != b.shift.delta_local:
            raise DriveMismatch("co-located shifting fields must share one delta_local waveform")
        delta = (a.shift or b.shift).delta_local
        pa = a.shift.pattern if a.shift is not None else (0.0,) * na
        pb = b.shift.pattern if b.shift is not None else (0.0,) * nb
        shift = ShiftingField(delta, pa + pb)

    merged = AhsProgram(Register(sites), a.drive, shift, a.duration)
    return merged, tuple(range(na)), tuple(range(na, na + nb))
