"""Rydberg-array analog Hamiltonian simulation with co-location crosstalk studies."""
from .kernels import BACKEND
from .program import (
    AhsProgram,
    DrivingField,
    MachineConstraints,
    Position,
    Register,
    ShiftingField,
    Waveform,
    make_triangle_register,
    merge,
    reference_program,
    translate,
    validate,
    waveform_eval,
)
from .hamiltonian import PhysicsConstants, VdwTable, apply_hamiltonian, build_dense, vdw_table
from .evolution import IntegratorConfig, QuantumState, convergence_check, evolve, ground_state, trajectory
from .measurement import CountSummary, ShotBatch, probabilities, rydberg_counts, sample_shots
from .fidelity import FidelityReport, expected_counts, relative_fidelity
from .noise import NoiseModel, SiteFieldSpec, SiteNoiseField, perturb, sample_site_field
from .colocation import TenantLayout, layout_at_distance, make_attack_program, run_colocated
from .mtd import MtdPolicy, run_with_mtd

__version__ = "0.1.0"
