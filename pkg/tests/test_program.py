import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ahs_crosstalk.errors import (
    DriveMismatch,
    DurationMismatch,
    OutOfField,
    OutOfRange,
    SpacingViolation,
    TooManyAtoms,
    WaveformMismatch,
)
from ahs_crosstalk.program import (
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


class TestTriangle:
    def test_reference_side(self):
        reg = make_triangle_register(5.5, Position(0, 0))
        xy = reg.coords()
        np.testing.assert_allclose(xy[0], [0, 0])
        np.testing.assert_allclose(xy[1], [5.5, 0])
        # apex by direct trigonometry: (s/2, s*sin 60deg)
        np.testing.assert_allclose(xy[2], [2.75, 5.5 * math.sin(math.pi / 3)], rtol=0, atol=1e-15)
        assert xy[2][1] == pytest.approx(4.7631397208, abs=1e-9)
        d = reg.distances()
        np.testing.assert_allclose(d[np.triu_indices(3, 1)], 5.5, rtol=1e-15)

    def test_translated_origin_keeps_distances(self):
        a = make_triangle_register(5.5, Position(0, 0))
        b = make_triangle_register(5.5, Position(10, 10))
        np.testing.assert_allclose(b.coords() - a.coords(), 10.0)
        np.testing.assert_allclose(a.distances(), b.distances(), atol=1e-14)

    def test_small_triangle_builds_but_fails_validation(self):
        reg = make_triangle_register(1.0, Position(0, 0))
        prog = AhsProgram(reg, DrivingField.constant(1e6, 1e-6))
        with pytest.raises(SpacingViolation) as err:
            validate(prog)
        assert err.value.distance == pytest.approx(1.0)

    def test_nonpositive_side(self):
        with pytest.raises(ValueError):
            make_triangle_register(0.0)


class TestValidate:
    def test_reference_ok(self, control):
        assert validate(control, MachineConstraints()) is control

    def test_merged_triangles_3um_apart(self):
        a = reference_program((10, 10), shifted=False)
        b = translate(a, 5.5 + 3.0, 0.0)
        merged, _, _ = merge(a, b)
        with pytest.raises(SpacingViolation) as err:
            validate(merged)
        assert err.value.distance == pytest.approx(3.0)
        assert err.value.pair == (1, 3)

    def test_shift_waveform_ending_early(self, control):
        T = control.duration
        bad = ShiftingField(Waveform.constant(5e7, T / 2), control.shift.pattern)
        with pytest.raises(WaveformMismatch):
            validate(AhsProgram(control.register, control.drive, bad, T))

    def test_pattern_length(self, control):
        bad = ShiftingField(control.shift.delta_local, (0.0, 1.0))
        with pytest.raises(WaveformMismatch):
            validate(AhsProgram(control.register, control.drive, bad, control.duration))

    def test_out_of_field(self, control):
        with pytest.raises(OutOfField) as err:
            validate(translate(control, 60, 0))
        assert err.value.index == 1

    def test_too_many_atoms(self, control):
        with pytest.raises(TooManyAtoms):
            validate(control, MachineConstraints(max_atoms=2))

    def test_duration_vs_drive(self, control):
        prog = AhsProgram(control.register, control.drive, None, control.duration * 2)
        with pytest.raises(WaveformMismatch):
            validate(prog)

    def test_constraints_positive(self):
        with pytest.raises(ValueError):
            MachineConstraints(min_spacing=0)


class TestWaveform:
    def test_midpoint(self):
        w = Waveform.from_knots([(0, 0), (1e-6, 2.5e6)])
        assert waveform_eval(w, 5e-7) == pytest.approx(1.25e6, rel=1e-15)

    def test_knot_values_exact(self):
        w = Waveform((0, 1e-7, 3e-7), (0.1, 0.7, 0.3))
        assert waveform_eval(w, 0) == 0.1
        assert waveform_eval(w, 1e-7) == 0.7
        assert waveform_eval(w, 3e-7) == 0.3

    def test_out_of_range(self):
        w = Waveform.from_knots([(0, 0), (1e-6, 2.5e6)])
        with pytest.raises(OutOfRange):
            waveform_eval(w, 2e-6)
        with pytest.raises(OutOfRange):
            waveform_eval(w, -1e-9)

    @pytest.mark.parametrize(
        "times,values",
        [((1e-9, 1e-6), (0, 0)), ((0, 1e-6, 1e-6), (0, 1, 2)), ((0,), ()), ((0, 1), (0, float("nan")))],
    )
    def test_invalid_knots(self, times, values):
        with pytest.raises(ValueError):
            Waveform(times, values)


class TestFieldInvariants:
    def test_negative_omega(self):
        with pytest.raises(ValueError):
            DrivingField(Waveform.constant(-1.0, 1e-6), Waveform.constant(0, 1e-6), Waveform.constant(0, 1e-6))

    def test_mismatched_drive_ends(self):
        with pytest.raises(WaveformMismatch):
            DrivingField(Waveform.constant(1.0, 1e-6), Waveform.constant(0, 2e-6), Waveform.constant(0, 1e-6))

    def test_negative_shift(self):
        with pytest.raises(ValueError):
            ShiftingField(Waveform.constant(-1.0, 1e-6), (1.0,))

    def test_pattern_range(self):
        with pytest.raises(ValueError):
            ShiftingField(Waveform.constant(1.0, 1e-6), (1.5,))

    def test_nonfinite_position(self):
        with pytest.raises(ValueError):
            Position(float("inf"), 0)

    def test_empty_register(self):
        with pytest.raises(ValueError):
            Register(())


class TestTranslate:
    def test_shift(self):
        p = reference_program((0, 0))
        q = translate(p, 10, 0)
        np.testing.assert_array_equal(q.register.coords(), p.register.coords() + [10, 0])
        assert q.drive == p.drive and q.shift == p.shift

    def test_identity(self, control):
        assert translate(control, 0, 0) == control

    def test_inverse(self, control):
        back = translate(translate(control, 3.25, -7.5), -3.25, 7.5)
        np.testing.assert_allclose(back.register.coords(), control.register.coords(), atol=1e-14)


class TestMerge:
    def test_victim_plus_attacker(self):
        v = reference_program((10, 10), shifted=False)
        a = translate(reference_program((10, 10)), 20, 0)
        merged, mv, ma = merge(v, a)
        assert merged.n_atoms == 6
        assert merged.shift.pattern == (0, 0, 0, 0, 0, 1)
        assert mv == (0, 1, 2) and ma == (3, 4, 5)

    def test_drive_mismatch(self, control):
        other = AhsProgram(control.register, DrivingField.constant(3e6, control.duration), None, control.duration)
        with pytest.raises(DriveMismatch):
            merge(control, other)

    def test_duration_mismatch(self, control):
        short = reference_program((30, 30), duration=2e-6)
        with pytest.raises((DurationMismatch, DriveMismatch)):
            merge(control, short)

    def test_no_shift_stays_none(self, victim):
        merged, _, _ = merge(victim, translate(victim, 20, 0))
        assert merged.shift is None


coord = st.floats(-50, 50, allow_nan=False)


@settings(max_examples=50, deadline=None)
@given(dx=coord, dy=coord, ox=st.floats(0, 20), oy=st.floats(0, 20))
def test_translation_preserves_distances(dx, dy, ox, oy):
    p = reference_program((ox, oy))
    q = translate(p, dx, dy)
    np.testing.assert_allclose(q.register.distances(), p.register.distances(), atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(dx=st.floats(10, 40), dy=st.floats(10, 40))
def test_merge_preserves_tenants(dx, dy):
    a = reference_program((0, 0), shifted=False)
    b = translate(reference_program((0, 0)), dx, dy)
    merged, ma, mb = merge(a, b)
    assert tuple(merged.register.sites[i] for i in ma) == a.register.sites
    assert tuple(merged.register.sites[i] for i in mb) == b.register.sites
    assert tuple(merged.shift.pattern[i] for i in mb) == b.shift.pattern


def test_validate_is_pure(control):
    before = (control.register.coords().copy(), control.drive, control.shift, control.duration)
    validate(control)
    with pytest.raises(OutOfField):
        validate(translate(control, 100, 0))
    assert np.array_equal(before[0], control.register.coords())
    assert before[1:] == (control.drive, control.shift, control.duration)
