"""Real-time orchestration: telemetry, live input, the session service.

A single thread owns the 100 Hz loop (the tick engine); telemetry fans
out through bounded per-subscriber queues that drop frames under
back-pressure -- recording samples are never dropped. The WebSocket
surface exposes two endpoints:

    /participant   projected frames only; accepts {"grip": newtons}
    /experimenter  full frames (per-side forces, tactor, phase, markers)

The participant projection is deliberately blind to anything that could
cue the stimulus: no tactor position, no stimulus timing, and the raw
phase is collapsed into a neutral prompt (the stimulus phase renders
exactly like stable holding). Synthetic and replay runs use the virtual
tick clock; interactive runs pace the same loop against the wall clock.
"""

from __future__ import annotations

import asyncio
import queue
import threading
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from . import engine
from .actuator import ActuatorSpec
from .mechanics import CalibrationCoefficients
from .protocol import (ProtocolConfig, SessionPlan, TrialPhase, plan_session)
from .session_io import SessionWriter
from .simulator import Rig, RigConfig

__all__ = [
    "TelemetryFrame",
    "PARTICIPANT_FIELDS",
    "FORBIDDEN_PARTICIPANT_FIELDS",
    "participant_prompt",
    "Broadcaster",
    "LiveSource",
    "record_synthetic_study",
    "SessionService",
    "create_app",
]

#: fields a participant client may ever see
PARTICIPANT_FIELDS = frozenset(
    {"t", "f_mean", "target_n", "band_n", "prompt", "trial", "block", "done"})

#: fields that would leak the stimulus or per-side data to the participant
FORBIDDEN_PARTICIPANT_FIELDS = frozenset(
    {"phase", "f_grip_1", "f_grip_2", "tactor_x_mm", "tactor_y_mm",
     "stimulus_active", "stimulus_onset_t", "stimulus_end_t"})

_PROMPTS = {
    TrialPhase.RAMP_UP: "squeeze to the target",
    TrialPhase.STABLE_GRIP: "hold steady",
    TrialPhase.STIMULUS: "hold steady",
    TrialPhase.WAIT: "hold steady",
    TrialPhase.RELEASED: "release",
}


def participant_prompt(phase: TrialPhase) -> str:
    """Neutral prompt shown to the participant; stimulus renders as holding."""
    return _PROMPTS[phase]


@dataclass(frozen=True)
class TelemetryFrame:
    """One decimated telemetry sample plus trial context."""

    t: float
    f_mean: float
    phase: TrialPhase
    target_n: float
    band_n: float
    trial: int
    block: int
    f_grip_1: float
    f_grip_2: float
    tactor_x_mm: float
    stimulus_active: bool
    done: bool = False

    def participant_view(self) -> dict:
        return {
            "t": self.t,
            "f_mean": self.f_mean,
            "target_n": self.target_n,
            "band_n": self.band_n,
            "prompt": participant_prompt(self.phase),
            "trial": self.trial,
            "block": self.block,
            "done": self.done,
        }

    def experimenter_view(self) -> dict:
        view = self.participant_view()
        view.update({
            "phase": self.phase.value,
            "f_grip_1": self.f_grip_1,
            "f_grip_2": self.f_grip_2,
            "tactor_x_mm": self.tactor_x_mm,
            "stimulus_active": self.stimulus_active,
        })
        return view


class Broadcaster:
    """Fan-out of frames to bounded subscriber queues (drop when full)."""

    def __init__(self, maxsize: int = 64):
        self.maxsize = maxsize
        self._subscribers = []
        self._lock = threading.Lock()

    def subscribe(self) -> "queue.Queue":
        q = queue.Queue(maxsize=self.maxsize)
        with self._lock:
            self._subscribers.append(q)
        return q

    def unsubscribe(self, q):
        with self._lock:
            if q in self._subscribers:
                self._subscribers.remove(q)

    def publish(self, frame):
        with self._lock:
            subscribers = list(self._subscribers)
        for q in subscribers:
            try:
                q.put_nowait(frame)
            except queue.Full:
                pass  # telemetry is droppable; recording never goes this way


class LiveSource:
    """Grip input fed by an external channel (UI), with stall detection.

    The last received grip is held between messages; if no message has
    arrived for longer than the stall timeout the source reports a stall
    (None), which pauses and flags the running trial.
    """

    def __init__(self, stall_timeout_s: float = 0.2, clock=time.monotonic):
        self.stall_timeout_s = stall_timeout_s
        self.clock = clock
        self._lock = threading.Lock()
        self._grip = 0.0
        self._last_update = None

    def push(self, grip: float):
        grip = min(max(float(grip), 0.0), 20.0)
        with self._lock:
            self._grip = grip
            self._last_update = self.clock()

    def reset(self, spec, rng=None):
        with self._lock:
            self._last_update = self.clock()  # grace period at trial start

    def sample(self, tick, t, ctx):
        with self._lock:
            age = self.clock() - self._last_update
            grip = self._grip
        if age > self.stall_timeout_s:
            return None
        # each side carries the commanded grip, so f_mean equals it
        return grip, grip


def record_synthetic_study(out_dir, n_subjects: int, seed: int,
                           population=None, config: RigConfig = RigConfig(),
                           plan_seed: int | None = None,
                           proto_cfg: ProtocolConfig = ProtocolConfig(),
                           quiet: bool = True):
    """Run a synthetic study and persist one session directory per subject.

    Trials are written as they complete (crash-safe): killing the process
    mid-study leaves every session loadable up to its last finished trial.
    Fully deterministic for a given (seed, plan_seed).
    """
    from .simulator import run_synthetic_study

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if plan_seed is None:
        plan_seed = seed
    plan = plan_session(plan_seed)
    coeffs = config.coefficients()

    writers = {}

    def on_trial(subject, record):
        if subject not in writers:
            writers[subject] = SessionWriter(
                out_dir / subject,
                session_id=f"synthetic-{seed}-{subject}",
                seed=seed, mode="synthetic", participant=subject,
                plan=plan, coefficients=coeffs)
        writers[subject].append_trial(record)
        if not quiet:
            print(f"  {subject} trial {record.spec.index:3d} "
                  f"({record.spec.condition.label()}) "
                  f"{'ok' if record.complete else 'incomplete'}")

    sessions = run_synthetic_study(
        n_subjects, population=population, config=config, seed=seed,
        plan_seed=plan_seed, proto_cfg=proto_cfg, on_trial=on_trial)
    return sessions, [out_dir / s.subject for s in sessions]


class _WallPacer:
    """Sleeps each tick so the loop tracks the wall clock at the sample rate."""

    def __init__(self, dt: float):
        self.dt = dt
        self.t0 = time.monotonic()

    def __call__(self, tick: int):
        deadline = self.t0 + (tick + 1) * self.dt
        delay = deadline - time.monotonic()
        if delay > 0:
            time.sleep(delay)


class SessionService:
    """Owner of one live (interactive) session.

    Runs the trial loop on its own thread, feeds the broadcaster, and
    persists trials through a SessionWriter. The WebSocket app in
    :func:`create_app` talks to this object only through thread-safe
    pieces (LiveSource, Broadcaster, plain flags).
    """

    def __init__(self, *, plan: SessionPlan, out_dir,
                 coefficients: CalibrationCoefficients | None = None,
                 rig_config: RigConfig = RigConfig(),
                 proto_cfg: ProtocolConfig = ProtocolConfig(),
                 actuator_spec: ActuatorSpec = ActuatorSpec(),
                 participant: str = "participant",
                 max_trials: int | None = None,
                 trial_timeout_s: float = 60.0,
                 wall_clock: bool = True):
        self.plan = plan
        self.proto_cfg = proto_cfg
        self.actuator_spec = actuator_spec
        self.rig_config = rig_config
        self.coefficients = coefficients or rig_config.coefficients()
        self.max_trials = max_trials
        self.trial_timeout_s = trial_timeout_s
        self.wall_clock = wall_clock

        self.source = LiveSource()
        self.broadcaster = Broadcaster()
        self.writer = SessionWriter(
            out_dir, session_id=f"interactive-{plan.seed}",
            seed=plan.seed, mode="interactive", participant=participant,
            plan=plan, coefficients=self.coefficients,
            actuator_spec=actuator_spec)
        self.done = False
        self.current_trial = -1
        self._thread = None

    # -- loop side ---------------------------------------------------------

    def _emit(self, spec):
        def on_sample(tick, machine, est, tactor_xy):
            if tick % 3:
                return  # 100 Hz -> ~33 Hz keep-every-3rd decimation
            frame = TelemetryFrame(
                t=tick * self.proto_cfg.dt,
                f_mean=est.f_mean,
                phase=machine.phase,
                target_n=spec.condition.target_force_n,
                band_n=self.proto_cfg.band_halfwidth_n,
                trial=spec.index,
                block=spec.block,
                f_grip_1=est.f_grip_1,
                f_grip_2=est.f_grip_2,
                tactor_x_mm=tactor_xy[0],
                stimulus_active=machine.phase is TrialPhase.STIMULUS,
            )
            self.broadcaster.publish(frame)
        return on_sample

    def run(self):
        trials = self.plan.trials
        if self.max_trials is not None:
            trials = trials[:self.max_trials]
        rig = Rig(self.rig_config, rng=np.random.default_rng(self.plan.seed))
        for spec in trials:
            self.current_trial = spec.index
            self.source.reset(spec)
            pacer = _WallPacer(self.proto_cfg.dt) if self.wall_clock else None
            record = engine.run_trial(
                spec, source=self.source, rig=rig,
                coeffs=self.coefficients, proto_cfg=self.proto_cfg,
                actuator_spec=self.actuator_spec,
                timeout_s=self.trial_timeout_s,
                on_sample=self._emit(spec), pacer=pacer)
            self.writer.append_trial(record)
        self.done = True
        self.broadcaster.publish(TelemetryFrame(
            t=0.0, f_mean=0.0, phase=TrialPhase.RELEASED, target_n=0.0,
            band_n=self.proto_cfg.band_halfwidth_n, trial=self.current_trial,
            block=-1, f_grip_1=0.0, f_grip_2=0.0, tactor_x_mm=0.0,
            stimulus_active=False, done=True))

    def start(self):
        self._thread = threading.Thread(target=self.run, daemon=True,
                                        name="gripsense-loop")
        self._thread.start()
        return self._thread


def create_app(service: SessionService):
    """FastAPI app exposing the telemetry/input channels for one service."""
    app = FastAPI(title="gripsense session service")

    @app.get("/status")
    def status():
        return {"done": service.done, "trial": service.current_trial,
                "plan_seed": service.plan.seed}

    async def _pump(ws: WebSocket, project):
        q = service.broadcaster.subscribe()

        async def sender():
            while True:
                try:
                    frame = q.get_nowait()
                except queue.Empty:
                    await asyncio.sleep(0.005)
                    continue
                await ws.send_json(project(frame))

        async def receiver():
            while True:
                message = await ws.receive_json()
                if "grip" in message:
                    service.source.push(message["grip"])

        send_task = asyncio.create_task(sender())
        try:
            await receiver()
        except WebSocketDisconnect:
            pass
        finally:
            send_task.cancel()
            service.broadcaster.unsubscribe(q)

    @app.websocket("/participant")
    async def participant(ws: WebSocket):
        await ws.accept()
        await _pump(ws, lambda frame: frame.participant_view())

    @app.websocket("/experimenter")
    async def experimenter(ws: WebSocket):
        await ws.accept()
        await _pump(ws, lambda frame: frame.experimenter_view())

    return app
