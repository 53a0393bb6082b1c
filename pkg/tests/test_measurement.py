import numpy as np
import pytest

from ahs_crosstalk.evolution import QuantumState, evolve, ground_state
from ahs_crosstalk.measurement import (
    CountSummary,
    ShotBatch,
    marginals,
    probabilities,
    rydberg_counts,
    sample_shots,
)
from ahs_crosstalk.program import AhsProgram, DrivingField, Position, Register


@pytest.fixture(scope="module")
def control_state():
    from ahs_crosstalk.program import reference_program

    return evolve(reference_program((10, 10)), ground_state(3))


class TestProbabilities:
    def test_ground(self):
        p = probabilities(ground_state(3))
        assert p[0] == 1 and p.sum() == 1

    def test_uniform(self):
        s = QuantumState(np.full(4, 0.5, dtype=complex))
        np.testing.assert_allclose(probabilities(s), 0.25)

    def test_pi_pulse(self):
        omega = 2.5e6
        prog = AhsProgram(Register((Position(0, 0),)), DrivingField.constant(omega, np.pi / omega))
        assert probabilities(evolve(prog, ground_state(1)))[1] == pytest.approx(1, abs=1e-6)

    def test_sums_to_one(self, control_state):
        assert probabilities(control_state).sum() == pytest.approx(1, abs=1e-8)

    def test_marginals_by_enumeration(self):
        p = np.array([0.1, 0.2, 0.3, 0.4])
        # qubit 0 excited in indices 1, 3; qubit 1 in 2, 3
        np.testing.assert_allclose(marginals(p), [0.6, 0.7])


class TestSampling:
    def test_ground_all_zero(self):
        b = sample_shots(ground_state(3), 250, seed=1)
        assert b.bitstrings.shape == (250, 3) and not b.bitstrings.any()

    def test_detuned_top_qubit(self, control_state):
        c = rydberg_counts(sample_shots(control_state, 1000, seed=2))
        assert c.counts[2] / 1000 < 0.01

    def test_deterministic(self, control_state):
        assert sample_shots(control_state, 500, seed=9) == sample_shots(control_state, 500, seed=9)
        assert sample_shots(control_state, 500, seed=9) != sample_shots(control_state, 500, seed=10)

    def test_zero_detection_error_is_identity(self, control_state):
        a = sample_shots(control_state, 2000, seed=4)
        b = sample_shots(control_state, 2000, seed=4, detection=(0.0, 0.0))
        np.testing.assert_array_equal(a.bitstrings, b.bitstrings)

    def test_detection_flip_rates(self):
        n = 200_000
        g = rydberg_counts(sample_shots(ground_state(1), n, seed=5, detection=(0.05, 0.0)))
        assert g.counts[0] / n == pytest.approx(0.05, abs=4 * np.sqrt(0.05 * 0.95 / n))
        excited = QuantumState(np.array([0, 1], dtype=complex))
        r = rydberg_counts(sample_shots(excited, n, seed=6, detection=(0.0, 0.08)))
        assert 1 - r.counts[0] / n == pytest.approx(0.08, abs=4 * np.sqrt(0.08 * 0.92 / n))

    @pytest.mark.parametrize("kw", [{"shots": 0}, {"detection": (0.5, 0)}, {"detection": (0, -0.1)}])
    def test_invalid(self, kw):
        args = {"shots": 10, "seed": 0, **kw}
        with pytest.raises(ValueError):
            sample_shots(ground_state(1), **args)

    def test_frequencies_within_binomial_bounds(self, control_state):
        S = 100_000
        exact = marginals(probabilities(control_state))
        freq = rydberg_counts(sample_shots(control_state, S, seed=1234)).frequencies()
        sigma = np.sqrt(exact * (1 - exact) / S)
        assert np.all(np.abs(freq - exact) <= 3 * sigma + 1e-12)


class TestCounts:
    def test_all_zero(self):
        assert rydberg_counts(ShotBatch(np.zeros((5, 3), np.uint8))).counts == (0, 0, 0)

    def test_hand_count(self):
        rows = np.array([[1, 1, 0], [1, 0, 0], [0, 1, 0]], dtype=np.uint8)
        c = rydberg_counts(ShotBatch(rows))
        assert c.counts == (2, 2, 0) and c.shots == 3

    def test_additive(self, control_state):
        a = sample_shots(control_state, 300, seed=1)
        b = sample_shots(control_state, 200, seed=2)
        joint = ShotBatch(np.vstack([a.bitstrings, b.bitstrings]))
        assert rydberg_counts(joint) == rydberg_counts(a) + rydberg_counts(b)

    def test_bounds(self):
        with pytest.raises(ValueError):
            CountSummary((5,), 4)

    def test_csv(self):
        rows = np.array([[1, 0], [0, 1]], dtype=np.uint8)
        assert ShotBatch(rows).to_csv() == "shot,q0,q1\n0,1,0\n1,0,1\n"
