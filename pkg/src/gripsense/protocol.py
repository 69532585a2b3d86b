"""Experiment schedule and the per-trial phase state machine.

A session is 70 trials: 10 training trials followed by 10 blocks of 6,
each block a random permutation of the 6 conditions (3 tactor
displacements x 2 target forces). Every trial walks through four phases:

    ramp_up      bring the grip into the target band
    stable_grip  hold it there for a predetermined 1-4 s wait
    stimulus     the tactor moves out and back
    wait         hold until 3 s after stimulus onset, then release

The whole plan (condition order and per-trial stable waits) is a pure
function of a seed, so a run is reproducible and auditable. The state
machine is a deterministic transition function ticked at the 100 Hz
sample rate; it owns no I/O, which keeps it trivially testable offline.
"""

from __future__ import annotations

import enum
import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .actuator import Axis

__all__ = [
    "DISPLACEMENTS_MM",
    "TARGET_FORCES_N",
    "TrialCondition",
    "all_conditions",
    "TrialSpec",
    "SessionPlan",
    "plan_session",
    "TrialPhase",
    "BandExitPolicy",
    "ProtocolConfig",
    "StartStimulus",
    "EndTrial",
    "TrialStateMachine",
    "TrialRecord",
    "SessionRecording",
]

DISPLACEMENTS_MM = (0.5, 1.0, 1.5)
TARGET_FORCES_N = (5.0, 7.5)

TRAINING_TRIALS = 10
MAIN_BLOCKS = 10


@dataclass(frozen=True, order=True)
class TrialCondition:
    """One cell of the 2x3 design."""

    target_force_n: float
    displacement_mm: float

    def __post_init__(self):
        if self.displacement_mm not in DISPLACEMENTS_MM:
            raise ValueError(f"displacement must be one of {DISPLACEMENTS_MM}")
        if self.target_force_n not in TARGET_FORCES_N:
            raise ValueError(f"target force must be one of {TARGET_FORCES_N}")

    def label(self) -> str:
        return f"{self.target_force_n:g}N_{self.displacement_mm:g}mm"


def all_conditions():
    """The 6 distinct conditions, in canonical order."""
    return tuple(TrialCondition(f, d)
                 for f in TARGET_FORCES_N for d in DISPLACEMENTS_MM)


@dataclass(frozen=True)
class TrialSpec:
    condition: TrialCondition
    stable_wait_s: float
    block: int
    index: int
    training: bool = False


@dataclass(frozen=True)
class SessionPlan:
    """Predetermined schedule of a 70-trial session."""

    seed: int
    trials: tuple

    def __post_init__(self):
        if len(self.trials) != TRAINING_TRIALS + MAIN_BLOCKS * 6:
            raise ValueError("a session plan holds 70 trials")

    @property
    def training(self):
        return tuple(t for t in self.trials if t.training)

    @property
    def main(self):
        return tuple(t for t in self.trials if not t.training)

    def to_dict(self):
        return {
            "seed": self.seed,
            "trials": [
                {
                    "index": t.index,
                    "block": t.block,
                    "training": t.training,
                    "target_force_n": t.condition.target_force_n,
                    "displacement_mm": t.condition.displacement_mm,
                    "stable_wait_s": t.stable_wait_s,
                }
                for t in self.trials
            ],
        }

    @classmethod
    def from_dict(cls, data):
        trials = tuple(
            TrialSpec(
                condition=TrialCondition(row["target_force_n"], row["displacement_mm"]),
                stable_wait_s=row["stable_wait_s"],
                block=row["block"],
                index=row["index"],
                training=row["training"],
            )
            for row in data["trials"]
        )
        return cls(seed=data["seed"], trials=trials)

    def digest(self) -> str:
        payload = json.dumps(self.to_dict(), sort_keys=True,
                             separators=(",", ":")).encode()
        return hashlib.sha256(payload).hexdigest()


def _fisher_yates(items, rng):
    """In-place Fisher-Yates shuffle driven by the supplied generator."""
    items = list(items)
    for i in range(len(items) - 1, 0, -1):
        j = int(rng.integers(0, i + 1))
        items[i], items[j] = items[j], items[i]
    return items


def plan_session(seed: int) -> SessionPlan:
    """Deterministic session schedule for a seed.

    Training trials come from two extra permuted blocks truncated to 10;
    they cover the same conditions and are flagged so analysis can drop
    them. Stable waits are drawn uniform [1, 4] s per trial, in trial
    order, at plan time.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    conditions = all_conditions()

    training = []
    for block in range(2):
        training.extend(_fisher_yates(conditions, rng))
    training = training[:TRAINING_TRIALS]

    main = []
    for block in range(MAIN_BLOCKS):
        main.append(_fisher_yates(conditions, rng))

    trials = []
    index = 0
    for cond in training:
        trials.append(TrialSpec(condition=cond,
                                stable_wait_s=float(rng.uniform(1.0, 4.0)),
                                block=-1, index=index, training=True))
        index += 1
    for block, conds in enumerate(main):
        for cond in conds:
            trials.append(TrialSpec(condition=cond,
                                    stable_wait_s=float(rng.uniform(1.0, 4.0)),
                                    block=block, index=index, training=False))
            index += 1
    return SessionPlan(seed=seed, trials=tuple(trials))


class TrialPhase(enum.Enum):
    RAMP_UP = "ramp_up"
    STABLE_GRIP = "stable_grip"
    STIMULUS = "stimulus"
    WAIT = "wait"
    RELEASED = "released"


class BandExitPolicy(enum.Enum):
    #: leaving the band during stable grip restarts the stable timer
    RESET = "reset"
    #: leaving the band aborts the trial
    ABORT = "abort"


@dataclass(frozen=True)
class ProtocolConfig:
    band_halfwidth_n: float = 0.5
    wait_duration_s: float = 3.0       # released this long after stimulus onset
    release_threshold_n: float = 0.5
    release_hold_s: float = 0.2
    band_exit_policy: BandExitPolicy = BandExitPolicy.RESET
    sample_rate_hz: float = 100.0
    max_gap_ticks: int = 3
    stimulus_axis: Axis = Axis.X       # the shipped protocol stimulates x only

    @property
    def dt(self) -> float:
        return 1.0 / self.sample_rate_hz


@dataclass(frozen=True)
class StartStimulus:
    displacement_mm: float
    axis: Axis


@dataclass(frozen=True)
class EndTrial:
    reason: str


class TrialStateMachine:
    """Phase logic of a single trial.

    ``advance`` consumes one (f_mean, clock) sample plus a flag saying
    whether a commanded stimulus is still in motion, and returns the
    commands the caller must act on (start the tactor trajectory, end the
    trial). Exactly one stimulus fires per completed trial. A sample gap
    larger than max_gap_ticks marks the record corrupt but keeps going.
    """

    def __init__(self, spec: TrialSpec, config: ProtocolConfig = ProtocolConfig()):
        self.spec = spec
        self.config = config
        self.phase = TrialPhase.RAMP_UP
        self.stimulus_onset_t = None
        self.stimulus_end_t = None
        self.corrupt = False
        self.complete = False
        self.aborted = False
        self._band_entry_t = None
        self._release_start_t = None
        self._last_t = None

    def _in_band(self, f_mean):
        target = self.spec.condition.target_force_n
        return abs(f_mean - target) <= self.config.band_halfwidth_n

    def advance(self, f_mean: float, t: float, stimulus_moving: bool = False):
        """One sample tick; returns a list of commands."""
        if self.complete or self.aborted:
            return []
        cfg = self.config
        if self._last_t is not None:
            if t - self._last_t > cfg.max_gap_ticks * cfg.dt + 1e-9:
                self.corrupt = True
        self._last_t = t

        commands = []
        if self.phase is TrialPhase.RAMP_UP:
            if self._in_band(f_mean):
                self.phase = TrialPhase.STABLE_GRIP
                self._band_entry_t = t

        elif self.phase is TrialPhase.STABLE_GRIP:
            if not self._in_band(f_mean):
                if cfg.band_exit_policy is BandExitPolicy.ABORT:
                    self.aborted = True
                    commands.append(EndTrial("band_exit"))
                    return commands
                self.phase = TrialPhase.RAMP_UP
                self._band_entry_t = None
            elif t - self._band_entry_t >= self.spec.stable_wait_s:
                self.phase = TrialPhase.STIMULUS
                self.stimulus_onset_t = t
                commands.append(StartStimulus(
                    displacement_mm=self.spec.condition.displacement_mm,
                    axis=cfg.stimulus_axis))

        elif self.phase is TrialPhase.STIMULUS:
            if not stimulus_moving:
                self.phase = TrialPhase.WAIT
                self.stimulus_end_t = t
            if t - self.stimulus_onset_t >= cfg.wait_duration_s:
                if self.stimulus_end_t is None:
                    self.stimulus_end_t = t
                self.phase = TrialPhase.RELEASED

        elif self.phase is TrialPhase.WAIT:
            if t - self.stimulus_onset_t >= cfg.wait_duration_s:
                self.phase = TrialPhase.RELEASED

        elif self.phase is TrialPhase.RELEASED:
            if f_mean < cfg.release_threshold_n:
                if self._release_start_t is None:
                    self._release_start_t = t
                elif t - self._release_start_t >= cfg.release_hold_s:
                    self.complete = True
                    commands.append(EndTrial("released"))
            else:
                self._release_start_t = None

        return commands


_PHASE_CODES = {phase: code for code, phase in enumerate(TrialPhase)}
_PHASE_FROM_CODE = {code: phase for phase, code in _PHASE_CODES.items()}


@dataclass
class TrialRecord:
    """100 Hz recording of one trial.

    Column arrays are index-aligned; phase holds small integer codes
    mapped by phase_names(). Markers are sample times within the record.
    """

    spec: TrialSpec
    t: np.ndarray
    f_m: np.ndarray
    t_m: np.ndarray
    f_grip_1: np.ndarray
    f_grip_2: np.ndarray
    f_mean: np.ndarray
    tactor_x_mm: np.ndarray
    tactor_y_mm: np.ndarray
    phase: np.ndarray
    stimulus_onset_t: float | None = None
    stimulus_end_t: float | None = None
    corrupt: bool = False
    complete: bool = True
    subject: str | None = None

    @staticmethod
    def phase_code(phase: TrialPhase) -> int:
        return _PHASE_CODES[phase]

    @staticmethod
    def phase_from_code(code: int) -> TrialPhase:
        return _PHASE_FROM_CODE[int(code)]

    def phase_names(self):
        return [_PHASE_FROM_CODE[int(c)].value for c in self.phase]

    def onset_index(self) -> int:
        if self.stimulus_onset_t is None:
            raise ValueError("trial has no stimulus onset marker")
        return int(np.searchsorted(self.t, self.stimulus_onset_t - 1e-12))

    def end_index(self) -> int:
        if self.stimulus_end_t is None:
            raise ValueError("trial has no stimulus end marker")
        return int(np.searchsorted(self.t, self.stimulus_end_t - 1e-12))


@dataclass
class SessionRecording:
    """All trials of one participant plus the plan that produced them."""

    session_id: str
    subject: str
    plan: SessionPlan
    records: list = field(default_factory=list)

    def analysis_records(self):
        """Trials eligible for analysis: main, complete, not corrupt."""
        return [r for r in self.records
                if not r.spec.training and r.complete and not r.corrupt]
