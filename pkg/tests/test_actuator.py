"""Leadscrew drive tests: conversions, min-max control, homing, trajectories."""

import math

import numpy as np
import pytest

from gripsense.actuator import (ActuatorSpec, ActuatorState, Axis,
                                HomingError, NotHomedError, SerialBridgeCodec,
                                control_step, counts_to_mm, home,
                                min_max_duty, mm_to_counts, plan_stimulus)

SPEC = ActuatorSpec()


class TestConversions:
    def test_full_output_rev(self):
        assert counts_to_mm(617, SPEC) == pytest.approx(0.7, abs=1e-12)

    def test_settle_band_in_mm(self):
        assert counts_to_mm(60, SPEC) == pytest.approx(0.068, abs=5e-4)

    def test_zero(self):
        assert counts_to_mm(0, SPEC) == 0.0
        assert mm_to_counts(0.0, SPEC) == 0

    def test_round_trip_integer_counts(self):
        for c in range(-1322, 1323, 7):
            assert mm_to_counts(counts_to_mm(c, SPEC), SPEC) == c

    def test_derived_constants(self):
        assert SPEC.mm_per_count == pytest.approx(0.001134, abs=1e-6)
        assert SPEC.mm_per_motor_rev == pytest.approx(0.0136, abs=5e-5)
        assert SPEC.travel_mm_per_s == pytest.approx(6.88, abs=5e-3)


class TestControlStep:
    def test_requires_homed(self):
        with pytest.raises(NotHomedError):
            control_step(ActuatorState(axis=Axis.X, homed=False), SPEC)

    def test_zero_error_zero_duty(self):
        state = ActuatorState(axis=Axis.X, homed=True, position_counts=100,
                              target_counts=100)
        stepped = control_step(state, SPEC)
        assert stepped.duty == 0.0
        assert stepped.position_counts == 100

    def test_deadband(self):
        assert min_max_duty(SPEC.settle_band_counts, SPEC) == 0.0
        assert min_max_duty(SPEC.settle_band_counts + 1, SPEC) == 1.0
        assert min_max_duty(-(SPEC.settle_band_counts + 1), SPEC) == -1.0

    def test_settles_within_bound_for_full_step(self):
        # kinematic bound: ceil(1.5 mm / 6.88 mm/s / 0.01 s) + 2 = 24 ticks
        state = ActuatorState(axis=Axis.X, homed=True,
                              target_counts=mm_to_counts(1.5, SPEC))
        ticks = 0
        while not state.settled(SPEC):
            state = control_step(state, SPEC)
            ticks += 1
            assert ticks <= 24
        assert ticks <= 24
        assert abs(state.error_counts) <= SPEC.settle_band_counts

    def test_settled_error_never_exceeds_band(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            target = float(rng.uniform(-SPEC.travel_range_counts,
                                       SPEC.travel_range_counts))
            state = ActuatorState(axis=Axis.X, homed=True, target_counts=target)
            for _ in range(200):
                state = control_step(state, SPEC)
            assert abs(state.error_counts) <= SPEC.settle_band_counts

    def test_target_beyond_range_clamps_and_flags(self):
        state = ActuatorState(axis=Axis.X, homed=True,
                              target_counts=SPEC.travel_range_counts + 500)
        for _ in range(60):
            state = control_step(state, SPEC)
        assert state.position_counts == pytest.approx(SPEC.travel_range_counts)
        assert state.at_limit
        assert state.duty == SPEC.duty_magnitude


class TestHoming:
    def test_converges_from_random_offsets(self):
        rng = np.random.default_rng(7)
        offsets = []
        for _ in range(20):
            start = ActuatorState(
                axis=Axis.X,
                offset_from_mid_counts=float(
                    rng.uniform(-SPEC.travel_range_counts,
                                SPEC.travel_range_counts)))
            homed = home(start, SPEC)
            assert homed.homed
            assert homed.position_counts == 0.0
            offsets.append(homed.offset_from_mid_counts)
        offsets = np.asarray(offsets)
        # all runs end at the same physical point, within the settle band of mid
        assert np.max(np.abs(offsets)) <= SPEC.settle_band_counts
        assert np.ptp(offsets) <= 1e-9

    def test_already_at_end_stop(self):
        start = ActuatorState(axis=Axis.X,
                              offset_from_mid_counts=-SPEC.travel_range_counts)
        homed = home(start, SPEC)
        assert homed.homed
        assert abs(homed.offset_from_mid_counts) <= SPEC.settle_band_counts

    def test_threshold_above_stall_current_fails(self):
        start = ActuatorState(axis=Axis.X)
        with pytest.raises(HomingError):
            home(start, SPEC, current_threshold=5.0)

    def test_idempotent(self):
        start = ActuatorState(axis=Axis.X, offset_from_mid_counts=800.0)
        first = home(start, SPEC)
        second = home(first, SPEC)
        assert abs(second.offset_from_mid_counts
                   - first.offset_from_mid_counts) <= SPEC.settle_band_counts


class TestPlanStimulus:
    def test_out_and_back_full_range(self):
        traj = plan_stimulus(1.5, Axis.X, SPEC)
        counts = [c for _, c in traj]
        peak = max(counts)
        assert counts_to_mm(peak, SPEC) == pytest.approx(1.5, abs=2 * SPEC.mm_per_count)
        assert counts[-1] == 0
        path = abs(counts[0]) + sum(abs(counts[i] - counts[i - 1])
                                    for i in range(1, len(counts)))
        assert counts_to_mm(path, SPEC) == pytest.approx(3.0, abs=4 * SPEC.mm_per_count)

    def test_path_scales_with_displacement(self):
        traj = plan_stimulus(0.5, Axis.X, SPEC)
        counts = [c for _, c in traj]
        path = abs(counts[0]) + sum(abs(counts[i] - counts[i - 1])
                                    for i in range(1, len(counts)))
        assert counts_to_mm(path, SPEC) == pytest.approx(1.0, abs=4 * SPEC.mm_per_count)

    def test_duration_from_speed(self):
        traj = plan_stimulus(1.5, Axis.X, SPEC)
        assert traj[-1][0] == pytest.approx(3.0 / 6.8833, abs=0.02)

    def test_symmetric_segments(self):
        traj = plan_stimulus(1.0, Axis.Y, SPEC)
        counts = [0] + [c for _, c in traj]
        peak_idx = int(np.argmax(counts))
        up = sum(abs(counts[i] - counts[i - 1]) for i in range(1, peak_idx + 1))
        down = sum(abs(counts[i] - counts[i - 1])
                   for i in range(peak_idx + 1, len(counts)))
        assert up == down

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            plan_stimulus(0.0, Axis.X, SPEC)
        with pytest.raises(ValueError):
            plan_stimulus(2.0, Axis.X, SPEC)


class TestSerialBridgeCodec:
    def test_encode(self):
        assert SerialBridgeCodec.encode_set(Axis.X, 120) == "SET x 120\n"
        assert SerialBridgeCodec.encode_get(Axis.Y) == "GET y\n"
        assert SerialBridgeCodec.encode_home(Axis.X) == "HOME x\n"

    def test_decode(self):
        axis, counts, amps = SerialBridgeCodec.decode_position(
            "POS x -42 CUR 120\n")
        assert axis is Axis.X
        assert counts == -42
        assert amps == pytest.approx(0.12)

    def test_decode_rejects_malformed(self):
        with pytest.raises(ValueError):
            SerialBridgeCodec.decode_position("POS x 42\n")
