"""The Rydberg many-body Hamiltonian.

On basis states labelled by bits ``b_k`` (0 = ground, 1 = Rydberg; qubit ``k``
is bit ``k`` of the index, little-endian)::

    H(t) = sum_k (Omega/2) (e^{i phi} |g><r| + e^{-i phi} |r><g|)_k
           - sum_k (Delta_global + Delta_local h_k) n_k
           + sum_{j<k} V_jk n_j n_k,        V_jk = C6 / d_jk^6

:func:`apply_hamiltonian` applies it without building the matrix;
:func:`build_dense` builds it from Kronecker products and serves as the
independent reference.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np

from . import kernels
from .errors import DegenerateGeometry, DimensionMismatch, TooLarge
from .program import AhsProgram, Register, waveform_eval

DEFAULT_C6 = 5.42e12  # rad/s * um^6, 87Rb 70S


@dataclass(frozen=True)
class PhysicsConstants:
    c6: float = DEFAULT_C6
    cutoff_um: float | None = None  # drop pairs farther apart than this; None keeps all

    def __post_init__(self):
        if not self.c6 > 0:
            raise ValueError("c6 must be positive")
        if self.cutoff_um is not None and not self.cutoff_um > 0:
            raise ValueError("cutoff must be positive")


@dataclass(frozen=True, eq=False)
class VdwTable:
    v: np.ndarray  # (N, N) symmetric, zero diagonal, rad/s

    def __post_init__(self):
        self.v.setflags(write=False)

    @property
    def n_atoms(self) -> int:
        return self.v.shape[0]

    def __eq__(self, other):
        return isinstance(other, VdwTable) and np.array_equal(self.v, other.v)

    __hash__ = None


def vdw_table(register: Register, constants: PhysicsConstants = PhysicsConstants()) -> VdwTable:
    d = register.distances()
    n = len(register)
    off = ~np.eye(n, dtype=bool)
    if np.any(d[off] == 0):
        i, j = np.argwhere((d == 0) & off)[0]
        raise DegenerateGeometry(f"sites {i} and {j} coincide")
    v = np.zeros((n, n))
    v[off] = constants.c6 / d[off] ** 6
    if constants.cutoff_um is not None:
        v[d > constants.cutoff_um] = 0.0
    return VdwTable(v)


def basis_bits(n: int) -> np.ndarray:
    """``(2**n, n)`` array; row i holds the bits of basis index i (column k = qubit k)."""
    idx = np.arange(1 << n)
    return ((idx[:, None] >> np.arange(n)) & 1).astype(np.float64)


@dataclass(frozen=True, eq=False)
class DiagonalParts:
    """Time-independent pieces of the diagonal, one entry per basis state."""

    vdw: np.ndarray  # sum_{j<k} V_jk b_j b_k
    rydberg_number: np.ndarray  # sum_k b_k
    shift_weight: np.ndarray  # sum_k h_k b_k


def diagonal_parts(program: AhsProgram, table: VdwTable) -> DiagonalParts:
    n = program.n_atoms
    if table.n_atoms != n:
        raise DimensionMismatch(f"table is for {table.n_atoms} atoms, program has {n}")
    bits = basis_bits(n)
    vdw = 0.5 * np.einsum("ij,jk,ik->i", bits, table.v, bits)
    h = np.asarray(program.shift.pattern) if program.shift is not None else np.zeros(n)
    if h.shape[0] != n:
        raise DimensionMismatch("shift pattern length does not match register size")
    return DiagonalParts(
        np.ascontiguousarray(vdw),
        np.ascontiguousarray(bits.sum(axis=1)),
        np.ascontiguousarray(bits @ h),
    )


def field_values(program: AhsProgram, t: float) -> tuple[float, float, float, float]:
    """``(omega, phi, delta_global, delta_local)`` at time ``t``."""
    d = program.drive
    dl = waveform_eval(program.shift.delta_local, t) if program.shift is not None else 0.0
    return (
        waveform_eval(d.omega, t),
        waveform_eval(d.phi, t),
        waveform_eval(d.delta_global, t),
        dl,
    )


def apply_hamiltonian(program: AhsProgram, table: VdwTable, t: float, state) -> np.ndarray:
    """``H(t) |state>`` as a new amplitude vector (not normalised)."""
    psi = np.ascontiguousarray(getattr(state, "amplitudes", state), dtype=np.complex128)
    n = program.n_atoms
    if psi.shape != (1 << n,):
        raise DimensionMismatch(f"state has shape {psi.shape}, expected ({1 << n},)")
    omega, phi, dg, dl = field_values(program, t)
    parts = diagonal_parts(program, table)
    diag = parts.vdw - dg * parts.rydberg_number - dl * parts.shift_weight
    up = 0.5 * omega * np.exp(-1j * phi)
    return kernels.apply(psi, np.ascontiguousarray(diag), n, complex(up), np.empty_like(psi))


_I2 = np.eye(2, dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_N = np.array([[0, 0], [0, 1]], dtype=complex)
DENSE_MAX_ATOMS = 10


def _site_op(op: np.ndarray, k: int, n: int) -> np.ndarray:
    # kron order is most-significant qubit first
    factors = [op if q == k else _I2 for q in reversed(range(n))]
    return reduce(np.kron, factors)


def build_dense(program: AhsProgram, table: VdwTable, t: float) -> np.ndarray:
    """Explicit ``2**N x 2**N`` Hamiltonian from single-site Pauli/number operators."""
    n = program.n_atoms
    if n > DENSE_MAX_ATOMS:
        raise TooLarge(f"dense build limited to {DENSE_MAX_ATOMS} atoms, got {n}")
    if table.n_atoms != n:
        raise DimensionMismatch(f"table is for {table.n_atoms} atoms, program has {n}")
    omega, phi, dg, dl = field_values(program, t)
    h = program.shift.pattern if program.shift is not None else (0.0,) * n
    dim = 1 << n
    H = np.zeros((dim, dim), dtype=complex)
    for k in range(n):
        H += 0.5 * omega * (np.cos(phi) * _site_op(_X, k, n) - np.sin(phi) * _site_op(_Y, k, n))
        H -= (dg + dl * h[k]) * _site_op(_N, k, n)
    for j in range(n):
        for k in range(j + 1, n):
            if table.v[j, k]:
                H += table.v[j, k] * (_site_op(_N, j, n) @ _site_op(_N, k, n))
    return H
