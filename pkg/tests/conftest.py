import numpy as np
import pytest

from ahs_crosstalk.program import (
    AhsProgram,
    DrivingField,
    Position,
    Register,
    ShiftingField,
    Waveform,
    reference_program,
)

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line[1])


@pytest.fixture
def control():
    """Triangle at (10, 10) with the apex detuned by 5e7 rad/s."""
    return reference_program((10.0, 10.0))


@pytest.fixture
def victim():
    return reference_program((20.0, 20.0), shifted=False)


def random_wave(rng, duration, low, high, knots=None):
    k = knots or int(rng.integers(2, 5))
    inner = np.sort(rng.uniform(0, duration, size=k - 2)) if k > 2 else []
    times = [0.0, *inner, duration]
    if len(set(times)) != len(times):
        times = list(np.linspace(0, duration, k))
    return Waveform(times, rng.uniform(low, high, size=len(times)))


def random_program(rng, n=None, duration=None, shift=True):
    """Random valid program: N <= 4 atoms >= 4 um apart, random piecewise-linear fields."""
    n = n or int(rng.integers(1, 5))
    T = duration or float(rng.uniform(0.1e-6, 0.6e-6))
    sites = []
    while len(sites) < n:
        p = Position(*rng.uniform(0, 25, size=2))
        if all(p.distance(q) >= 4.0 for q in sites):
            sites.append(p)
    drive = DrivingField(
        random_wave(rng, T, 0, 1.5e7),
        random_wave(rng, T, -np.pi, np.pi),
        random_wave(rng, T, -2e7, 2e7),
    )
    sf = None
    if shift and rng.random() < 0.7:
        sf = ShiftingField(random_wave(rng, T, 0, 3e7), tuple(rng.uniform(0, 1, size=n)))
    return AhsProgram(Register(tuple(sites)), drive, sf, T)


def random_state(rng, n):
    v = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return v / np.linalg.norm(v)
