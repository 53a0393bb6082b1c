"""Seeded, parametric hardware noise.

Nothing here is fitted to a device: every magnitude defaults to zero and a
zero model leaves programs untouched. One seed stands for one measurement
session; a new seed emulates the next session's drift.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .errors import JitterTooLarge, ValidationError
from .program import AhsProgram, DrivingField, MachineConstraints, Position, Register, validate
from .rng import Stream, stream

JITTER_RETRIES = 100


@dataclass(frozen=True)
class SiteFieldSpec:
    detuning_sigma: float = 0.0  # rad/s
    omega_rel_sigma: float = 0.0
    correlation_length: float = 10.0  # um
    cell_um: float = 5.0
    width: float = 75.0
    height: float = 76.0

    def __post_init__(self):
        if not self.correlation_length > 0:
            raise ValueError("correlation_length must be positive")
        if self.detuning_sigma < 0 or self.omega_rel_sigma < 0:
            raise ValueError("sigmas must be nonnegative")
        if not (self.cell_um > 0 and self.width > 0 and self.height > 0):
            raise ValueError("grid geometry must be positive")


@dataclass(frozen=True, eq=False)
class SiteNoiseField:
    """Position-dependent detuning offset and Rabi factor on a cell grid.

    Values are attached to cell centres and interpolated bilinearly; points
    outside the outermost centres take the nearest edge value.
    """

    xs: np.ndarray  # cell-centre x coordinates, um
    ys: np.ndarray
    detuning: np.ndarray  # (len(xs), len(ys)) rad/s
    omega_factor: np.ndarray  # (len(xs), len(ys))
    correlation_length: float

    def __post_init__(self):
        for a in (self.xs, self.ys, self.detuning, self.omega_factor):
            a.setflags(write=False)

    def _interp(self, grid: np.ndarray, x: float, y: float) -> float:
        pt = (np.clip(x, self.xs[0], self.xs[-1]), np.clip(y, self.ys[0], self.ys[-1]))
        if len(self.xs) == 1 or len(self.ys) == 1:
            ix = np.abs(self.xs - pt[0]).argmin()
            iy = np.abs(self.ys - pt[1]).argmin()
            return float(grid[ix, iy])
        f = RegularGridInterpolator((self.xs, self.ys), grid, method="linear")
        return float(f([pt])[0])

    def detuning_at(self, p: Position) -> float:
        return self._interp(self.detuning, p.x, p.y)

    def omega_factor_at(self, p: Position) -> float:
        return self._interp(self.omega_factor, p.x, p.y)


def _smoothed_gaussian(rng, xs, ys, length) -> np.ndarray:
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    z = rng.standard_normal(pts.shape[0])
    d2 = ((pts[:, None, :] - pts[None, :, :]) ** 2).sum(axis=-1)
    w = np.exp(-d2 / (2 * length**2))
    # unit marginal variance at every cell
    w /= np.sqrt((w**2).sum(axis=1, keepdims=True))
    return (w @ z).reshape(gx.shape)


def sample_site_field(spec: SiteFieldSpec, seed) -> SiteNoiseField:
    nx = max(1, int(np.ceil(spec.width / spec.cell_um)))
    ny = max(1, int(np.ceil(spec.height / spec.cell_um)))
    xs = (np.arange(nx) + 0.5) * spec.width / nx
    ys = (np.arange(ny) + 0.5) * spec.height / ny
    rng = stream(seed, Stream.SITE_FIELD)
    det = _smoothed_gaussian(rng, xs, ys, spec.correlation_length)
    om = _smoothed_gaussian(rng, xs, ys, spec.correlation_length)
    return SiteNoiseField(
        xs,
        ys,
        spec.detuning_sigma * det,
        1.0 + spec.omega_rel_sigma * om,
        spec.correlation_length,
    )


@dataclass(frozen=True)
class NoiseModel:
    pos_jitter_sigma: float = 0.0  # um
    omega_rel_sigma: float = 0.0
    delta_offset_sigma: float = 0.0  # rad/s
    detection: tuple[float, float] = (0.0, 0.0)
    site_field: SiteNoiseField | None = None
    seed: int = 0

    def __post_init__(self):
        if min(self.pos_jitter_sigma, self.omega_rel_sigma, self.delta_offset_sigma) < 0:
            raise ValueError("noise sigmas must be nonnegative")
        eg, er = self.detection
        if not (0 <= eg < 0.5 and 0 <= er < 0.5):
            raise ValueError("detection error probabilities must lie in [0, 0.5)")
        object.__setattr__(self, "detection", (float(eg), float(er)))

    @property
    def is_zero(self) -> bool:
        return (
            self.pos_jitter_sigma == 0
            and self.omega_rel_sigma == 0
            and self.delta_offset_sigma == 0
            and self.site_field is None
        )


def perturb(
    program: AhsProgram,
    model: NoiseModel,
    run_index: int,
    constraints: MachineConstraints | None = None,
) -> AhsProgram:
    """One noisy realisation of ``program`` for run ``run_index``.

    Site field values are read at the register centroid. With jitter, the
    displaced program is revalidated against ``constraints`` (machine
    defaults when None) and resampled on failure.
    """
    if model.is_zero:
        return program
    rng = stream(model.seed, Stream.NOISE, run_index)

    constraints = constraints or MachineConstraints()
    register = program.register
    if model.pos_jitter_sigma > 0:
        xy = register.coords()
        for _ in range(JITTER_RETRIES):
            moved = xy + rng.normal(0.0, model.pos_jitter_sigma, size=xy.shape)
            candidate = Register(tuple(Position(float(x), float(y)) for x, y in moved))
            try:
                validate(replace(program, register=candidate), constraints)
            except ValidationError:
                continue
            register = candidate
            break
        else:
            raise JitterTooLarge(
                f"no valid jittered register after {JITTER_RETRIES} draws "
                f"(sigma {model.pos_jitter_sigma} um)"
            )

    scale = 1.0 + (rng.normal(0.0, model.omega_rel_sigma) if model.omega_rel_sigma > 0 else 0.0)
    offset = rng.normal(0.0, model.delta_offset_sigma) if model.delta_offset_sigma > 0 else 0.0
    if model.site_field is not None:
        c = program.register.centroid()
        scale *= model.site_field.omega_factor_at(c)
        offset += model.site_field.detuning_at(c)
    scale = max(scale, 0.0)

    drive = program.drive
    if scale != 1.0 or offset != 0.0:
        drive = DrivingField(drive.omega.scaled(scale), drive.phi, drive.delta_global.offset(offset))
    return replace(program, register=register, drive=drive)
