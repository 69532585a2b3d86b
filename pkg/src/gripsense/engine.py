"""The 100 Hz tick engine that runs one trial.

Each tick: sample the grip input source, push it through the rig to a
sensor reading, decompose, advance the protocol state machine, act on its
commands (start the tactor trajectory, end the trial), then step the
actuator simulation. Time is virtual (tick-indexed), so identical inputs
produce identical records regardless of wall-clock behaviour; live runs
pace the same loop against a monotonic clock.

The rig is injected as a callable so this module stays independent of how
readings are produced (simulated physics or a hardware bridge).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .actuator import (ActuatorSpec, ActuatorState, Axis, control_step,
                       counts_to_mm, plan_stimulus)
from .mechanics import CalibrationCoefficients, decompose
from .protocol import (EndTrial, ProtocolConfig, StartStimulus, TrialPhase,
                       TrialRecord, TrialSpec, TrialStateMachine)

__all__ = ["EngineContext", "ReplaySource", "run_trial"]

#: stop a runaway trial after this much virtual time
DEFAULT_TRIAL_TIMEOUT_S = 60.0


@dataclass(frozen=True)
class EngineContext:
    """What a grip source may observe at a tick.

    Tactor kinematics are included because a (synthetic or human)
    participant physically feels the tactor move; the participant-facing
    *telemetry* projection is a separate, stricter surface.
    """

    phase: TrialPhase
    target_force_n: float
    tactor_x_mm: float
    tactor_y_mm: float
    tactor_vx_mm_s: float
    tactor_vy_mm_s: float
    stimulus_active: bool
    dt: float


class ReplaySource:
    """Grip input replayed from a scripted (time, grip) trace.

    Holds the last value between script points (grip is a sustained
    posture). Both sides carry the scripted grip, so the decomposed
    f_mean tracks it directly.
    """

    def __init__(self, times, grips):
        self.times = np.asarray(times, dtype=float)
        self.grips = np.asarray(grips, dtype=float)
        if self.times.size != self.grips.size or self.times.size == 0:
            raise ValueError("replay trace needs matching, non-empty arrays")

    def reset(self, spec: TrialSpec, rng=None):
        pass

    def sample(self, tick: int, t: float, ctx: EngineContext):
        k = int(np.searchsorted(self.times, t + 1e-12) - 1)
        grip = float(self.grips[k]) if k >= 0 else 0.0
        return grip, grip


def run_trial(spec: TrialSpec, *, source, rig,
              coeffs: CalibrationCoefficients,
              proto_cfg: ProtocolConfig = ProtocolConfig(),
              actuator_spec: ActuatorSpec = ActuatorSpec(),
              timeout_s: float = DEFAULT_TRIAL_TIMEOUT_S,
              subject: str | None = None,
              on_sample=None, pacer=None) -> TrialRecord:
    """Run one trial to completion (or timeout) and return its record.

    ``rig`` maps (t, grip_1, grip_2, tactor_pos_mm, tactor_vel_mm_s) to a
    SensorReading; ``source.sample`` may return None to signal a stalled
    input channel, which skips the protocol tick (the state machine flags
    the gap when samples resume). ``on_sample(tick, machine, estimate,
    tactor_xy)`` feeds telemetry; ``pacer(tick)``, when given, sleeps the
    loop onto a wall-clock grid (interactive mode).
    """
    machine = TrialStateMachine(spec, proto_cfg)
    dt = proto_cfg.dt

    act = {
        Axis.X: ActuatorState(axis=Axis.X, homed=True),
        Axis.Y: ActuatorState(axis=Axis.Y, homed=True),
    }
    trajectory = None
    traj_axis = Axis.X
    traj_i = 0
    prev_x = prev_y = 0.0
    stalled = False

    cols = {name: [] for name in
            ("t", "f_m", "t_m", "f_grip_1", "f_grip_2", "f_mean",
             "tactor_x_mm", "tactor_y_mm", "phase")}
    end_reason = None

    max_ticks = int(round(timeout_s / dt))
    for tick in range(max_ticks):
        if pacer is not None:
            pacer(tick)
        t = tick * dt
        x_mm = counts_to_mm(act[Axis.X].position_counts, actuator_spec)
        y_mm = counts_to_mm(act[Axis.Y].position_counts, actuator_spec)
        vx = (x_mm - prev_x) / dt
        vy = (y_mm - prev_y) / dt
        prev_x, prev_y = x_mm, y_mm

        stimulus_active = trajectory is not None and (
            traj_i < len(trajectory)
            or abs(act[traj_axis].position_counts) > actuator_spec.settle_band_counts)

        ctx = EngineContext(
            phase=machine.phase,
            target_force_n=spec.condition.target_force_n,
            tactor_x_mm=x_mm, tactor_y_mm=y_mm,
            tactor_vx_mm_s=vx, tactor_vy_mm_s=vy,
            stimulus_active=stimulus_active, dt=dt)

        grips = source.sample(tick, t, ctx)
        if grips is None:
            stalled = True
            continue
        grip_1, grip_2 = grips

        reading = rig(t, grip_1, grip_2, ((x_mm, y_mm), (0.0, 0.0)),
                      ((vx, vy), (0.0, 0.0)))
        est = decompose(reading, coeffs)

        for command in machine.advance(est.f_mean, t, stimulus_moving=stimulus_active):
            if isinstance(command, StartStimulus):
                trajectory = plan_stimulus(command.displacement_mm, command.axis,
                                           actuator_spec, dt)
                traj_axis = command.axis
                traj_i = 0
            elif isinstance(command, EndTrial):
                end_reason = command.reason

        if trajectory is not None and traj_i < len(trajectory):
            _, target_counts = trajectory[traj_i]
            traj_i += 1
            act[traj_axis] = replace(act[traj_axis],
                                     target_counts=float(target_counts))
        act[Axis.X] = control_step(act[Axis.X], actuator_spec, dt)
        act[Axis.Y] = control_step(act[Axis.Y], actuator_spec, dt)

        cols["t"].append(t)
        cols["f_m"].append(reading.f_m)
        cols["t_m"].append(reading.t_m)
        cols["f_grip_1"].append(est.f_grip_1)
        cols["f_grip_2"].append(est.f_grip_2)
        cols["f_mean"].append(est.f_mean)
        cols["tactor_x_mm"].append(x_mm)
        cols["tactor_y_mm"].append(y_mm)
        cols["phase"].append(TrialRecord.phase_code(machine.phase))

        if on_sample is not None:
            on_sample(tick, machine, est, (x_mm, y_mm))

        if end_reason is not None:
            break

    arrays = {name: np.asarray(values) for name, values in cols.items()}
    arrays["phase"] = arrays["phase"].astype(np.int8)
    return TrialRecord(
        spec=spec,
        stimulus_onset_t=machine.stimulus_onset_t,
        stimulus_end_t=machine.stimulus_end_t,
        corrupt=machine.corrupt or stalled,
        complete=machine.complete,
        subject=subject,
        **arrays)
