"""Closed-form force model of the two-lever, single-sensor gripper.

Each lever rotates about a joint and presses on a shared 6-axis force
sensor. The force along the sensing axis amplifies the sum of the two grip
forces while the torque about the lateral axis is proportional to their
difference (the levers sit on opposite sides of the sensor center at
offsets d_1 and d_2), so one sensor resolves both sides of the grip.

Forward model, per lever::

    f_m contribution = lever_ratio * (grip + artifact)
    t_m contribution = +/- lever_ratio * d * (grip + artifact)

where ``artifact`` collects the tactor friction and contact-migration
terms (see :func:`theoretical_artifact`). The inverse uses the alpha/beta
coefficients computed by :func:`coefficients_from_geometry`; the artifact
terms are unknown at run time and are deliberately *not* subtracted in
:func:`decompose` -- they show up as measurement error instead.

Sign conventions: grip forces and f_m are positive in compression; t_m is
positive when lever 1's torque dominates. All quantities SI (N, N*m, m).
Everything here is a pure function over frozen value types and safe to
call from any thread.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

__all__ = [
    "Side",
    "LeverGeometry",
    "ContactState",
    "ZERO_CONTACT",
    "SensorReading",
    "GripEstimate",
    "CalibrationCoefficients",
    "IN_CONTACT_THRESHOLD_N",
    "forward_sensor",
    "decompose",
    "coefficients_from_geometry",
    "theoretical_artifact",
    "in_contact",
]

#: f_mean above this is treated as "a grip is present"; below it, per-side
#: estimates are dominated by sensor noise and may come out slightly negative.
IN_CONTACT_THRESHOLD_N = 0.2


class Side(enum.Enum):
    LEVER_1 = 1
    LEVER_2 = 2


def _require_finite(name, value):
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value!r}")
    return float(value)


@dataclass(frozen=True)
class LeverGeometry:
    """Geometry of one lever.

    lever_ratio is the mechanical amplification between the grip contact
    point and the sensor (joint-to-sensor arm over joint-to-contact arm
    inverted, i.e. the factor multiplying the grip force at the sensor).
    aperture_arm_ratio is the aperture contact arm relative to the grip
    contact arm; it only enters the friction artifact term. d is the lever
    contact offset from the sensor center along the torque axis, in meters
    (design value 7.32 mm; the calibrated devices came out asymmetric).
    """

    lever_ratio: float
    d: float
    aperture_arm_ratio: float = 0.3
    side: Side = Side.LEVER_1

    def __post_init__(self):
        for name in ("lever_ratio", "d", "aperture_arm_ratio"):
            value = _require_finite(name, getattr(self, name))
            if value <= 0:
                raise ValueError(f"{name} must be > 0, got {value}")


@dataclass(frozen=True)
class ContactState:
    """Finger-pad contact on one lever at an instant.

    f_tactor and f_aperture are the normal-force shares of the grip
    carried by the tactor and the surrounding aperture. f_friction is the
    tangential tactor friction force (signed along the motion direction),
    theta the angle of tactor motion with the x axis. delta_y_norm is the
    tactor y-offset divided by the joint-to-contact arm length -- the
    geometry stores only ratios, so the y migration of the contact point
    enters pre-normalized.
    """

    f_tactor: float = 0.0
    f_aperture: float = 0.0
    f_friction: float = 0.0
    theta: float = 0.0
    delta_y_norm: float = 0.0

    def __post_init__(self):
        for name in ("f_tactor", "f_aperture", "f_friction", "theta", "delta_y_norm"):
            _require_finite(name, getattr(self, name))
        if self.f_tactor < 0 or self.f_aperture < 0:
            raise ValueError("normal contact forces must be >= 0")


ZERO_CONTACT = ContactState()


@dataclass(frozen=True)
class SensorReading:
    """One sample of the 6-axis sensor: axial force f_m (N), torque t_m (N*m)."""

    f_m: float
    t_m: float
    t: float = 0.0

    def __post_init__(self):
        _require_finite("f_m", self.f_m)
        _require_finite("t_m", self.t_m)
        _require_finite("t", self.t)


@dataclass(frozen=True)
class GripEstimate:
    """Per-side grip forces recovered from one sensor reading.

    f_mean is exactly the arithmetic mean of the two sides. Negative values
    are reported as-is; they signal sensor noise near zero grip (see
    :func:`in_contact`).
    """

    f_grip_1: float
    f_grip_2: float
    f_mean: float
    t: float = 0.0

    @classmethod
    def from_sides(cls, f_grip_1, f_grip_2, t=0.0):
        return cls(f_grip_1, f_grip_2, (f_grip_1 + f_grip_2) / 2.0, t)


@dataclass(frozen=True)
class CalibrationCoefficients:
    """Inverse-model coefficients of a calibrated device.

    alpha_i (dimensionless) and beta_i map a sensor reading to the side-i
    grip force as ``alpha_i * f_m +/- beta_i * t_m`` (plus for side 1,
    minus for side 2). ratio_i and d_i are the fitted per-lever
    amplification and torque offset they derive from. beta has units of
    1/m: beta * t_m must come out in newtons (device tables quoting beta
    in plain meters are a unit typo).
    """

    alpha_1: float
    alpha_2: float
    beta_1: float
    beta_2: float
    d_1: float
    d_2: float
    ratio_1: float
    ratio_2: float

    def __post_init__(self):
        for name in ("alpha_1", "alpha_2", "beta_1", "beta_2",
                     "d_1", "d_2", "ratio_1", "ratio_2"):
            value = _require_finite(name, getattr(self, name))
            if value <= 0:
                raise ValueError(f"{name} must be > 0, got {value}")

    def to_dict(self):
        return {
            "alpha_1": self.alpha_1, "alpha_2": self.alpha_2,
            "beta_1_per_m": self.beta_1, "beta_2_per_m": self.beta_2,
            "d_1_m": self.d_1, "d_2_m": self.d_2,
            "ratio_1": self.ratio_1, "ratio_2": self.ratio_2,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            alpha_1=data["alpha_1"], alpha_2=data["alpha_2"],
            beta_1=data["beta_1_per_m"], beta_2=data["beta_2_per_m"],
            d_1=data["d_1_m"], d_2=data["d_2_m"],
            ratio_1=data["ratio_1"], ratio_2=data["ratio_2"],
        )


def theoretical_artifact(contact: ContactState, geom: LeverGeometry) -> float:
    """Grip-force-equivalent measurement artifact of one lever's contact.

    Two contributions: the y component of the tactor friction force acting
    on the aperture arm, and the migration of the tactor contact point
    along y shifting the moment arm of the tactor normal force. Both are
    expressed before lever amplification, i.e. in the same units as the
    grip force they corrupt:

        artifact = aperture_arm_ratio * f_friction * sin(theta)
                 + delta_y_norm * f_tactor

    Zero whenever the tactor does not move in y (sin(theta) = 0 and
    delta_y_norm = 0), independent of x motion.
    """
    return (geom.aperture_arm_ratio * contact.f_friction * math.sin(contact.theta)
            + contact.delta_y_norm * contact.f_tactor)


def forward_sensor(grip_1, grip_2, contact_1, contact_2, geom_1, geom_2,
                   t=0.0) -> SensorReading:
    """Sensor reading produced by a pair of grip forces and contact states.

    f_m sums the amplified per-lever loads; t_m takes lever 1 positive and
    lever 2 negative (opposite sides of the sensor center):

        f_m = r1*(g1 + a1) + r2*(g2 + a2)
        t_m = r1*d1*(g1 + a1) - r2*d2*(g2 + a2)

    with a_i the per-lever artifact of :func:`theoretical_artifact`.
    """
    grip_1 = _require_finite("grip_1", grip_1)
    grip_2 = _require_finite("grip_2", grip_2)
    if grip_1 < 0 or grip_2 < 0:
        raise ValueError("grip forces must be >= 0")
    a1 = theoretical_artifact(contact_1, geom_1)
    a2 = theoretical_artifact(contact_2, geom_2)
    load_1 = grip_1 + a1
    load_2 = grip_2 + a2
    f_m = geom_1.lever_ratio * load_1 + geom_2.lever_ratio * load_2
    t_m = (geom_1.lever_ratio * geom_1.d * load_1
           - geom_2.lever_ratio * geom_2.d * load_2)
    return SensorReading(f_m=f_m, t_m=t_m, t=t)


def coefficients_from_geometry(geom_1: LeverGeometry,
                               geom_2: LeverGeometry) -> CalibrationCoefficients:
    """Inverse-model coefficients from the two levers' geometry:

        alpha_1 = d2 / (r1 * (d1 + d2))      alpha_2 = d1 / (r2 * (d1 + d2))
        beta_i  = 1 / (r_i * (d1 + d2))
    """
    d_sum = geom_1.d + geom_2.d
    if d_sum <= 0:
        raise ValueError("d_1 + d_2 must be > 0")
    return CalibrationCoefficients(
        alpha_1=geom_2.d / (geom_1.lever_ratio * d_sum),
        alpha_2=geom_1.d / (geom_2.lever_ratio * d_sum),
        beta_1=1.0 / (geom_1.lever_ratio * d_sum),
        beta_2=1.0 / (geom_2.lever_ratio * d_sum),
        d_1=geom_1.d,
        d_2=geom_2.d,
        ratio_1=geom_1.lever_ratio,
        ratio_2=geom_2.lever_ratio,
    )


def decompose(reading: SensorReading,
              coeffs: CalibrationCoefficients) -> GripEstimate:
    """Per-side grip forces from one sensor reading.

        f_grip_1 = alpha_1 * f_m + beta_1 * t_m
        f_grip_2 = alpha_2 * f_m - beta_2 * t_m

    The artifact terms are unknown at run time and are not subtracted;
    they contribute to the error of the estimate. Outputs are never
    clamped: slightly negative values near zero grip are meaningful noise.
    """
    f_1 = coeffs.alpha_1 * reading.f_m + coeffs.beta_1 * reading.t_m
    f_2 = coeffs.alpha_2 * reading.f_m - coeffs.beta_2 * reading.t_m
    return GripEstimate.from_sides(f_1, f_2, reading.t)


def in_contact(estimate: GripEstimate,
               threshold: float = IN_CONTACT_THRESHOLD_N) -> bool:
    """Whether the estimate indicates an actual grip rather than noise."""
    return estimate.f_mean > threshold
