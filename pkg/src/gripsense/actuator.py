"""Leadscrew tactor drive: kinematics, min-max position control, homing.

Each axis is a geared micro DC motor turning a 0.7 mm-pitch leadscrew,
with a magnetic encoder giving 617 counts per output revolution
(0.001134 mm per count). Position is closed-loop controlled at 100 Hz
with a min-max (bang-off-bang) duty law: full duty outside a deadband of
``settle_band`` counts around the target, zero inside. The reported
closed-loop error bound of 60 counts (0.068 mm) is the deadband itself.

Homing establishes the encoder zero without switches: drive toward one
end until the motor current spikes (the link is blocked at its hard
stop), then move half the travel back and call that mid position zero.

The motor electrical model is deliberately minimal -- idle current plus a
duty-proportional term plus a stall spike when pushing into a stop; only
the threshold crossing matters for homing. Motion integrates at constant
velocity within a tick (zero-order hold; travel is sub-millimetre, so
rise times at 100 Hz are negligible).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

__all__ = [
    "Axis",
    "ActuatorSpec",
    "ActuatorState",
    "NotHomedError",
    "HomingError",
    "counts_to_mm",
    "mm_to_counts",
    "min_max_duty",
    "control_step",
    "home",
    "plan_stimulus",
    "SerialBridgeCodec",
]

CONTROL_RATE_HZ = 100.0
CONTROL_DT_S = 1.0 / CONTROL_RATE_HZ


class Axis(enum.Enum):
    X = "x"
    Y = "y"


class NotHomedError(RuntimeError):
    """Closed-loop moves require an established zero."""


class HomingError(RuntimeError):
    """No stall was detected within the full-travel timeout."""


@dataclass(frozen=True)
class ActuatorSpec:
    """Drive constants of one linear axis (defaults: the built device)."""

    gear_ratio: float = 51.45
    pitch_mm: float = 0.7              # leadscrew advance per output revolution
    counts_per_output_rev: int = 617
    max_torque_nmm: float = 84.37
    nominal_speed_rpm: float = 590.0   # output-shaft speed
    travel_range_mm: float = 1.5       # usable range, symmetric about mid
    thrust_limit_n: float = 181.8
    settle_band_counts: int = 60
    duty_magnitude: float = 1.0
    # simulated current model
    idle_current_a: float = 0.02
    duty_current_a: float = 0.10
    stall_current_a: float = 0.60

    @property
    def mm_per_count(self) -> float:
        return self.pitch_mm / self.counts_per_output_rev

    @property
    def mm_per_motor_rev(self) -> float:
        return self.pitch_mm / self.gear_ratio

    @property
    def travel_mm_per_s(self) -> float:
        return self.nominal_speed_rpm / 60.0 * self.pitch_mm

    @property
    def counts_per_s(self) -> float:
        return self.travel_mm_per_s / self.mm_per_count

    @property
    def travel_range_counts(self) -> float:
        return self.travel_range_mm / self.mm_per_count


def counts_to_mm(c: float, spec: ActuatorSpec) -> float:
    """Encoder counts to linear travel in mm."""
    return c * spec.pitch_mm / spec.counts_per_output_rev


def mm_to_counts(mm: float, spec: ActuatorSpec) -> int:
    """Linear travel in mm to the nearest encoder count."""
    return round(mm * spec.counts_per_output_rev / spec.pitch_mm)


def min_max_duty(error_counts: float, spec: ActuatorSpec) -> float:
    """Bang-off-bang duty law with a deadband of settle_band counts."""
    if error_counts > spec.settle_band_counts:
        return spec.duty_magnitude
    if error_counts < -spec.settle_band_counts:
        return -spec.duty_magnitude
    return 0.0


@dataclass(frozen=True)
class ActuatorState:
    """Snapshot of one axis.

    position_counts is the encoder reading relative to the homed zero
    (mid-travel). offset_from_mid_counts carries the simulation truth --
    where that encoder zero physically sits relative to mid-travel; it is
    unknown (nonzero) until homing and within a settle band of zero after.
    """

    axis: Axis = Axis.X
    position_counts: float = 0.0
    target_counts: float = 0.0
    duty: float = 0.0
    current_a: float = 0.0
    homed: bool = False
    at_limit: bool = False
    offset_from_mid_counts: float = 0.0

    @property
    def error_counts(self) -> float:
        return self.target_counts - self.position_counts

    def settled(self, spec: ActuatorSpec) -> bool:
        return abs(self.error_counts) <= spec.settle_band_counts

    def position_mm(self, spec: ActuatorSpec) -> float:
        return counts_to_mm(self.position_counts, spec)


def _advance(position, duty, spec, dt, lo, hi):
    """Integrate one tick with hard limits; returns (position, blocked)."""
    new = position + duty * spec.counts_per_s * dt
    if new < lo:
        return lo, duty < 0
    if new > hi:
        return hi, duty > 0
    return new, False


def _current(spec, duty, blocked):
    amps = spec.idle_current_a + spec.duty_current_a * abs(duty)
    if blocked and duty != 0.0:
        amps += spec.stall_current_a
    return amps


def control_step(state: ActuatorState, spec: ActuatorSpec,
                 dt: float = CONTROL_DT_S) -> ActuatorState:
    """One 100 Hz closed-loop tick.

    Duty follows the min-max law on the position error; position advances
    at nominal speed for the whole tick and clamps at the travel limits.
    Commanding a target beyond the range leaves the duty saturated against
    the stop with ``at_limit`` set.
    """
    if not state.homed:
        raise NotHomedError(f"axis {state.axis.value} is not homed")
    duty = min_max_duty(state.error_counts, spec)
    limit = spec.travel_range_counts
    # Physical hard stops sit at the ends of the predefined range; the
    # encoder zero is at mid so software and physical limits coincide.
    lo = -limit - state.offset_from_mid_counts
    hi = limit - state.offset_from_mid_counts
    position, blocked = _advance(state.position_counts, duty, spec, dt, lo, hi)
    return replace(
        state,
        position_counts=position,
        duty=duty,
        current_a=_current(spec, duty, blocked),
        at_limit=blocked,
    )


def home(state: ActuatorState, spec: ActuatorSpec,
         current_threshold: float = 0.3, dt: float = CONTROL_DT_S) -> ActuatorState:
    """Establish the encoder zero at mid-travel.

    Drives toward the negative stop open-loop until the simulated current
    crosses ``current_threshold`` (stall), then moves exactly half the
    predefined range forward under closed loop and zeroes the encoder
    there. Works from any starting state, homed or not. Raises
    :class:`HomingError` if no stall is seen within a full-travel timeout.
    """
    limit = spec.travel_range_counts
    physical = state.position_counts + state.offset_from_mid_counts  # from mid

    # Phase 1: push toward the negative stop until blocked.
    max_ticks = int(math.ceil(2.0 * limit / (spec.counts_per_s * dt))) + 10
    duty = -spec.duty_magnitude
    stalled = False
    for _ in range(max_ticks):
        physical, blocked = _advance(physical, duty, spec, dt, -limit, limit)
        if _current(spec, duty, blocked) > current_threshold:
            stalled = True
            break
    if not stalled:
        raise HomingError(
            f"axis {state.axis.value}: no stall above {current_threshold} A "
            f"within {max_ticks} ticks")

    # Phase 2: closed-loop move from the stop to mid-travel (relative move
    # of +limit counts), then declare this position zero.
    target = physical + limit
    for _ in range(max_ticks):
        error = target - physical
        duty = min_max_duty(error, spec)
        if duty == 0.0:
            break
        physical, _ = _advance(physical, duty, spec, dt, -limit, limit)

    return replace(
        state,
        position_counts=0.0,
        target_counts=0.0,
        duty=0.0,
        current_a=_current(spec, 0.0, False),
        homed=True,
        at_limit=False,
        offset_from_mid_counts=physical,
    )


def plan_stimulus(displacement_mm: float, axis: Axis, spec: ActuatorSpec,
                  dt: float = CONTROL_DT_S):
    """Out-and-back setpoint trajectory: 0 -> +displacement -> 0.

    Targets ramp at the nominal travel speed, sampled every control tick,
    with the turnaround sample pinned to the exact displacement so the
    outbound and return path lengths are both ``displacement_mm``.
    Returns a list of (t_seconds, target_counts) pairs starting one tick
    after motion onset and ending with the target back at zero.
    """
    if not (0.0 < displacement_mm <= spec.travel_range_mm):
        raise ValueError(
            f"displacement {displacement_mm} mm outside (0, "
            f"{spec.travel_range_mm}] mm")
    speed = spec.travel_mm_per_s
    t_turn = displacement_mm / speed
    peak_counts = mm_to_counts(displacement_mm, spec)

    k_end = max(2, math.ceil(2.0 * t_turn / dt))
    k_peak = min(max(1, round(t_turn / dt)), k_end - 1)
    points = []
    for k in range(1, k_end + 1):
        t = k * dt
        if k == k_peak:
            counts = peak_counts
        elif k < k_peak:
            counts = min(mm_to_counts(speed * t, spec), peak_counts)
        else:
            mm = max(0.0, 2.0 * displacement_mm - speed * t)
            counts = min(mm_to_counts(mm, spec), peak_counts)
        points.append((t, counts))
    # end exactly at the start position
    t_last, _ = points[-1]
    points[-1] = (t_last, 0)
    return points


class SerialBridgeCodec:
    """Line codec for the optional hardware bridge.

    Newline-delimited text: ``SET <axis> <counts>``, ``GET <axis>``,
    ``HOME <axis>``; position replies are ``POS <axis> <counts> CUR <mA>``.
    Only the framing lives here; transport (a serial port or socket) is
    supplied by the caller, keeping hardware entirely out of the test
    surface.
    """

    @staticmethod
    def encode_set(axis: Axis, counts: int) -> str:
        return f"SET {axis.value} {int(counts)}\n"

    @staticmethod
    def encode_get(axis: Axis) -> str:
        return f"GET {axis.value}\n"

    @staticmethod
    def encode_home(axis: Axis) -> str:
        return f"HOME {axis.value}\n"

    @staticmethod
    def decode_position(line: str):
        """Parse ``POS <axis> <counts> CUR <mA>`` into (axis, counts, amps)."""
        parts = line.strip().split()
        if len(parts) != 5 or parts[0] != "POS" or parts[3] != "CUR":
            raise ValueError(f"malformed position reply: {line!r}")
        axis = Axis(parts[1])
        counts = int(parts[2])
        amps = float(parts[4]) / 1000.0
        return axis, counts, amps
