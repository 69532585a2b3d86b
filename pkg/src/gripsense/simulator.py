"""Virtual rig and synthetic participants.

The rig model turns commanded grip forces and tactor motion into the
sensor readings the physical device would produce: per side, the grip
splits between the tactor and the aperture, tactor motion generates a
kinetic friction force (tapered to zero below a slip-speed floor so the
sign does not chatter at reversals), and y motion shifts the contact
point -- exactly the artifact terms of the mechanics forward model, plus
additive Gaussian sensor noise.

The synthetic participant tracks the target force with first-order
pursuit and motor noise, and responds to felt tactor motion with a
gamma-shaped grip bump (rise after a latency, exponential decay back).
The bump amplitude per condition is what an experiment injects and the
analysis pipeline should recover; human response magnitudes are not
reproducible at a desk, so these participants exist to validate the
pipeline, not physiology.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import engine
from .actuator import ActuatorSpec, ActuatorState, Axis, control_step, counts_to_mm, plan_stimulus
from .calibration import SweepRecord, artifact_ratio
from .mechanics import (CalibrationCoefficients, ContactState, LeverGeometry,
                        SensorReading, Side, ZERO_CONTACT,
                        coefficients_from_geometry, decompose, forward_sensor,
                        theoretical_artifact)
from .protocol import (ProtocolConfig, SessionRecording, TrialCondition,
                       TrialPhase, TrialRecord, TrialSpec, all_conditions,
                       plan_session)

__all__ = [
    "FingerPadModel",
    "ParticipantModel",
    "PopulationSpec",
    "RigConfig",
    "Rig",
    "SyntheticParticipant",
    "contact_from_motion",
    "rig_step",
    "generate_calibration_sweep",
    "run_artifact_check",
    "run_synthetic_trial",
    "run_synthetic_study",
]

# Calibrated constants of the built device (both levers).
TABLE_RATIOS = (6.132, 6.017)
TABLE_D_M = (7.17e-3, 5.98e-3)


@dataclass(frozen=True)
class FingerPadModel:
    """Contact behaviour of one finger pad on its tactor/aperture."""

    friction_mu: float = 0.1
    tactor_share: float = 0.2
    slip_speed_floor_mm_s: float = 0.1

    def __post_init__(self):
        if not 0.0 <= self.tactor_share <= 1.0:
            raise ValueError("tactor_share must be in [0, 1]")
        if self.friction_mu < 0:
            raise ValueError("friction_mu must be >= 0")


@dataclass(frozen=True)
class RigConfig:
    """Everything the virtual rig needs to emulate the device."""

    geometry: tuple = (
        LeverGeometry(lever_ratio=TABLE_RATIOS[0], d=TABLE_D_M[0], side=Side.LEVER_1),
        LeverGeometry(lever_ratio=TABLE_RATIOS[1], d=TABLE_D_M[1], side=Side.LEVER_2),
    )
    finger_pads: tuple = (FingerPadModel(), FingerPadModel())
    sensor_noise_sd_force: float = 0.0
    sensor_noise_sd_torque: float = 0.0
    sample_rate_hz: float = 100.0
    #: joint-to-contact arm length used to normalize tactor y travel; the
    #: device stores only length ratios, so the absolute scale is a
    #: configured default and only changes artifact magnitudes
    contact_arm_mm: float = 30.0

    def coefficients(self) -> CalibrationCoefficients:
        return coefficients_from_geometry(*self.geometry)

    @property
    def dt(self) -> float:
        return 1.0 / self.sample_rate_hz


def contact_from_motion(grip: float, pad: FingerPadModel,
                        position_mm, velocity_mm_s,
                        contact_arm_mm: float) -> ContactState:
    """Contact state of one side given its tactor kinematics.

    The friction force acts along the motion direction; only its y
    component (through sin theta) can corrupt the measurement. Below the
    slip-speed floor the friction magnitude tapers linearly to zero.
    """
    x_mm, y_mm = position_mm
    vx, vy = velocity_mm_s
    f_tactor = pad.tactor_share * grip
    f_aperture = (1.0 - pad.tactor_share) * grip
    speed = math.hypot(vx, vy)
    if speed > 0.0:
        theta = math.atan2(vy, vx)
        taper = min(1.0, speed / pad.slip_speed_floor_mm_s)
        f_friction = pad.friction_mu * f_tactor * taper
    else:
        theta = 0.0
        f_friction = 0.0
    return ContactState(
        f_tactor=f_tactor,
        f_aperture=f_aperture,
        f_friction=f_friction,
        theta=theta,
        delta_y_norm=y_mm / contact_arm_mm,
    )


def rig_step(grip_1: float, grip_2: float, tactor_positions_mm,
             tactor_velocities_mm_s, config: RigConfig,
             rng=None, t: float = 0.0) -> SensorReading:
    """One simulated sensor sample.

    ``tactor_positions_mm`` / ``tactor_velocities_mm_s`` hold one (x, y)
    pair per side. Sensor noise is drawn from ``rng`` when the configured
    standard deviations are nonzero.
    """
    contact_1 = contact_from_motion(grip_1, config.finger_pads[0],
                                    tactor_positions_mm[0],
                                    tactor_velocities_mm_s[0],
                                    config.contact_arm_mm)
    contact_2 = contact_from_motion(grip_2, config.finger_pads[1],
                                    tactor_positions_mm[1],
                                    tactor_velocities_mm_s[1],
                                    config.contact_arm_mm)
    reading = forward_sensor(grip_1, grip_2, contact_1, contact_2,
                             config.geometry[0], config.geometry[1], t=t)
    if rng is not None and (config.sensor_noise_sd_force > 0
                            or config.sensor_noise_sd_torque > 0):
        f_m = reading.f_m + rng.normal(0.0, config.sensor_noise_sd_force) \
            if config.sensor_noise_sd_force > 0 else reading.f_m
        t_m = reading.t_m + rng.normal(0.0, config.sensor_noise_sd_torque) \
            if config.sensor_noise_sd_torque > 0 else reading.t_m
        reading = SensorReading(f_m=f_m, t_m=t_m, t=t)
    return reading


class Rig:
    """Callable rig for the tick engine: binds a config and a noise stream."""

    def __init__(self, config: RigConfig, rng=None):
        self.config = config
        self.rng = rng

    def __call__(self, t, grip_1, grip_2, tactor_positions_mm,
                 tactor_velocities_mm_s) -> SensorReading:
        return rig_step(grip_1, grip_2, tactor_positions_mm,
                        tactor_velocities_mm_s, self.config,
                        rng=self.rng, t=t)


@dataclass
class ParticipantModel:
    """Behavioural parameters of one (synthetic) participant.

    ``reflex_gain_per_mm`` is either a single gain or a per-condition
    mapping {TrialCondition: N/mm}; the felt-motion grip bump has
    amplitude gain * displacement. side_bias is the finger/thumb force
    ratio (side 1 over side 2) held while tracking a mean-force target.
    """

    tracking_gain: float = 8.0          # 1/s
    motor_noise_sd: float = 0.01        # N per sample
    reflex_latency: float = 0.1         # s
    reflex_gain_per_mm: object = 0.1    # N/mm, scalar or {condition: gain}
    reflex_decay: float = 2.0           # 1/s
    reflex_rise_s: float = 0.05         # time from latency to bump peak
    side_bias: float = 1.0

    def __post_init__(self):
        if self.reflex_latency <= 0:
            raise ValueError("reflex_latency must be > 0")
        if self.reflex_decay < 0 or self.tracking_gain < 0:
            raise ValueError("gains must be >= 0")

    def gain_for(self, condition: TrialCondition) -> float:
        if isinstance(self.reflex_gain_per_mm, dict):
            return float(self.reflex_gain_per_mm[condition])
        return float(self.reflex_gain_per_mm)


class SyntheticParticipant:
    """Grip source for the tick engine implementing ParticipantModel.

    The reflex clock starts when tactor motion is first felt (nonzero
    tactor velocity in the context), which coincides with the stimulus
    onset to within one sample.
    """

    def __init__(self, model: ParticipantModel, rng=None):
        self.model = model
        self.rng = rng
        self._grip = 0.0
        self._felt_motion_t = None
        self._spec = None

    def reset(self, spec: TrialSpec, rng=None):
        self._spec = spec
        self._grip = 0.0
        self._felt_motion_t = None
        if rng is not None:
            self.rng = rng

    def _bump(self, tau: float, amplitude: float) -> float:
        """Gamma-shaped rise to `amplitude` then exponential decay."""
        if tau <= 0.0 or amplitude == 0.0:
            return 0.0
        rise = self.model.reflex_rise_s
        if tau <= rise:
            z = tau / rise
            return amplitude * z * z * math.exp(2.0 * (1.0 - z))
        return amplitude * math.exp(-self.model.reflex_decay * (tau - rise))

    def sample(self, tick: int, t: float, ctx: engine.EngineContext):
        m = self.model
        spec = self._spec
        target = 0.0 if ctx.phase is TrialPhase.RELEASED \
            else spec.condition.target_force_n
        self._grip += (target - self._grip) * min(1.0, m.tracking_gain * ctx.dt)

        if self._felt_motion_t is None and (
                abs(ctx.tactor_vx_mm_s) > 1e-9 or abs(ctx.tactor_vy_mm_s) > 1e-9):
            self._felt_motion_t = t

        bump = 0.0
        if self._felt_motion_t is not None:
            amplitude = m.gain_for(spec.condition) * spec.condition.displacement_mm
            bump = self._bump(t - self._felt_motion_t - m.reflex_latency, amplitude)

        noise = self.rng.normal(0.0, m.motor_noise_sd) \
            if (self.rng is not None and m.motor_noise_sd > 0) else 0.0
        total = max(0.0, self._grip + bump + noise)

        bias = m.side_bias
        grip_1 = total * 2.0 * bias / (1.0 + bias)
        grip_2 = total * 2.0 / (1.0 + bias)
        return grip_1, grip_2


@dataclass
class PopulationSpec:
    """Population a synthetic study draws its participants from.

    Mean reflex amplitudes are per condition (newtons of grip increase at
    full displacement); subjects get a common log-normal scale factor plus
    independent per-condition scatter. The graded_saturating default injects
    the qualitative pattern the study design should resolve: larger
    responses at the lower target force, growth with displacement, and
    saturation between 1.0 and 1.5 mm at the higher target force.
    """

    reflex_amplitude_n: dict = field(default_factory=dict)
    subject_sd_log: float = 0.15
    condition_sd_log: float = 0.05
    tracking_gain: float = 8.0
    motor_noise_sd: float = 0.01
    reflex_latency: float = 0.1
    reflex_decay: float = 2.0
    side_bias_mean: float = 1.0
    side_bias_sd_log: float = 0.0

    @classmethod
    def graded_saturating(cls, **overrides):
        amplitudes = {
            TrialCondition(5.0, 0.5): 0.08,
            TrialCondition(5.0, 1.0): 0.12,
            TrialCondition(5.0, 1.5): 0.20,
            TrialCondition(7.5, 0.5): 0.05,
            TrialCondition(7.5, 1.0): 0.09,
            TrialCondition(7.5, 1.5): 0.09,
        }
        return cls(reflex_amplitude_n=amplitudes, **overrides)

    @classmethod
    def null(cls, **overrides):
        return cls(reflex_amplitude_n={c: 0.0 for c in all_conditions()},
                   **overrides)

    def draw(self, rng) -> ParticipantModel:
        subject_factor = math.exp(rng.normal(0.0, self.subject_sd_log)) \
            if self.subject_sd_log > 0 else 1.0
        gains = {}
        for condition in all_conditions():
            amplitude = self.reflex_amplitude_n.get(condition, 0.0)
            scatter = math.exp(rng.normal(0.0, self.condition_sd_log)) \
                if self.condition_sd_log > 0 else 1.0
            gains[condition] = (amplitude * subject_factor * scatter
                                / condition.displacement_mm)
        side_bias = self.side_bias_mean * (
            math.exp(rng.normal(0.0, self.side_bias_sd_log))
            if self.side_bias_sd_log > 0 else 1.0)
        return ParticipantModel(
            tracking_gain=self.tracking_gain,
            motor_noise_sd=self.motor_noise_sd,
            reflex_latency=self.reflex_latency,
            reflex_gain_per_mm=gains,
            reflex_decay=self.reflex_decay,
            side_bias=side_bias,
        )


def generate_calibration_sweep(lever: Side, config: RigConfig = RigConfig(),
                               n_samples: int = 201, max_force_n: float = 20.0,
                               noise_sd_force: float = 0.0,
                               noise_sd_torque: float = 0.0,
                               rng=None) -> SweepRecord:
    """Synthetic force sweep on one lever with the tactor stationary.

    The calibration stand presses on the tactor and aperture together;
    with no tactor motion the artifact terms vanish, so the fitted slopes
    are independent of how the force splits between them.
    """
    forces = np.linspace(0.0, max_force_n, n_samples)
    t = np.arange(n_samples) * config.dt
    f_m = np.empty(n_samples)
    t_m = np.empty(n_samples)
    for k, force in enumerate(forces):
        grip_1 = force if lever is Side.LEVER_1 else 0.0
        grip_2 = force if lever is Side.LEVER_2 else 0.0
        reading = forward_sensor(grip_1, grip_2, ZERO_CONTACT, ZERO_CONTACT,
                                 config.geometry[0], config.geometry[1])
        f_m[k] = reading.f_m
        t_m[k] = reading.t_m
    if rng is not None and noise_sd_force > 0:
        f_m = f_m + rng.normal(0.0, noise_sd_force, n_samples)
    if rng is not None and noise_sd_torque > 0:
        t_m = t_m + rng.normal(0.0, noise_sd_torque, n_samples)
    return SweepRecord(external_force=forces, f_m=f_m, t_m=t_m,
                       lever=lever, t=t)


def run_artifact_check(displacement_mm: float = 1.5, axis: Axis = Axis.Y,
                       grip_n: float = 15.0, config: RigConfig = RigConfig(),
                       settle_ticks: int = 10, guard: float = 1.0):
    """Reproduce the movement-artifact characterization on the virtual rig.

    A constant external force holds lever 1 while its tactor runs an
    out-and-back move; the device-side force is the decomposed side-1
    estimate. Returns (ArtifactSeries, theory) where ``theory`` is the
    per-sample closed-form artifact ratio -theoretical_artifact / grip --
    the pipeline must match it to numerical precision since both routes
    see the same contact states.
    """
    spec = ActuatorSpec()
    coeffs = config.coefficients()
    dt = config.dt
    trajectory = plan_stimulus(displacement_mm, axis, spec, dt)

    state = ActuatorState(axis=axis, homed=True)
    n_total = settle_ticks + len(trajectory) + 3 * settle_ticks
    t_arr = np.arange(n_total) * dt
    device = np.empty(n_total)
    theory = np.empty(n_total)
    prev_mm = 0.0
    traj_i = 0
    for k in range(n_total):
        pos_mm = counts_to_mm(state.position_counts, spec)
        vel = (pos_mm - prev_mm) / dt
        prev_mm = pos_mm
        xy = (pos_mm, 0.0) if axis is Axis.X else (0.0, pos_mm)
        v_xy = (vel, 0.0) if axis is Axis.X else (0.0, vel)

        contact = contact_from_motion(grip_n, config.finger_pads[0], xy, v_xy,
                                      config.contact_arm_mm)
        reading = forward_sensor(grip_n, 0.0, contact, ZERO_CONTACT,
                                 config.geometry[0], config.geometry[1],
                                 t=t_arr[k])
        device[k] = decompose(reading, coeffs).f_grip_1
        theory[k] = -theoretical_artifact(contact, config.geometry[0]) / grip_n

        if k >= settle_ticks and traj_i < len(trajectory):
            state = replace(state, target_counts=float(trajectory[traj_i][1]))
            traj_i += 1
        state = control_step(state, spec, dt)

    external = np.full(n_total, grip_n)
    series = artifact_ratio(t_arr, external, device, guard=guard)
    return series, theory


def run_synthetic_trial(condition: TrialCondition,
                        participant: ParticipantModel,
                        config: RigConfig = RigConfig(),
                        seed: int = 0,
                        stable_wait_s: float | None = None,
                        proto_cfg: ProtocolConfig = ProtocolConfig()) -> TrialRecord:
    """Simulate a single trial of one condition. Deterministic per seed."""
    seq = np.random.SeedSequence(seed)
    rng_wait, rng_participant, rng_sensor = [
        np.random.Generator(np.random.PCG64(s)) for s in seq.spawn(3)]
    if stable_wait_s is None:
        stable_wait_s = float(rng_wait.uniform(1.0, 4.0))
    spec = TrialSpec(condition=condition, stable_wait_s=stable_wait_s,
                     block=0, index=0)
    source = SyntheticParticipant(participant, rng_participant)
    source.reset(spec)
    rig = Rig(config, rng_sensor)
    return engine.run_trial(spec, source=source, rig=rig,
                            coeffs=config.coefficients(), proto_cfg=proto_cfg)


def run_synthetic_study(n_subjects: int,
                        population: PopulationSpec | None = None,
                        config: RigConfig = RigConfig(),
                        seed: int = 0,
                        plan_seed: int | None = None,
                        proto_cfg: ProtocolConfig = ProtocolConfig(),
                        on_trial=None):
    """Simulate a full study: one shared plan, one session per subject.

    All subjects run the identical predetermined schedule (trial order is
    not counterbalanced across participants). Per-subject parameters are drawn from the population
    around its means; every trial gets its own derived noise streams, so
    the whole study is a pure function of (seed, plan_seed).
    """
    if n_subjects < 2:
        raise ValueError("need at least 2 subjects")
    if population is None:
        population = PopulationSpec.graded_saturating()
    if plan_seed is None:
        plan_seed = seed
    plan = plan_session(plan_seed)
    coeffs = config.coefficients()

    sessions = []
    root = np.random.SeedSequence(seed)
    subject_seqs = root.spawn(n_subjects)
    for s_idx in range(n_subjects):
        seqs = subject_seqs[s_idx].spawn(1 + len(plan.trials))
        rng_params = np.random.Generator(np.random.PCG64(seqs[0]))
        participant = population.draw(rng_params)
        source = SyntheticParticipant(participant)
        subject = f"s{s_idx:02d}"
        recording = SessionRecording(
            session_id=f"synthetic-{seed}-{subject}", subject=subject,
            plan=plan)
        for t_idx, spec in enumerate(plan.trials):
            trial_seqs = seqs[1 + t_idx].spawn(2)
            source.reset(spec, np.random.Generator(np.random.PCG64(trial_seqs[0])))
            rig = Rig(config, np.random.Generator(np.random.PCG64(trial_seqs[1])))
            record = engine.run_trial(spec, source=source, rig=rig,
                                      coeffs=coeffs, proto_cfg=proto_cfg,
                                      subject=subject)
            recording.records.append(record)
            if on_trial is not None:
                on_trial(subject, record)
        sessions.append(recording)
    return sessions
