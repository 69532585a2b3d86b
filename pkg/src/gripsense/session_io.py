"""On-disk session format: one directory per session.

    <session>/
      manifest.json          identity, plan, device profile, trial index
      trials/trial_000.csv   100 Hz samples, one file per trial

Trial CSVs are written completely before the manifest is rewritten to
reference them (atomically, via rename), so a session killed mid-trial
always loads up to its last complete trial: unreferenced partial files
are simply ignored. Floats are serialized with repr for exact round-trips
and byte-stable output.

Device profiles are a separate JSON document holding the calibration
coefficients (plus fit diagnostics and the actuator constants); repeated
calibrations append, and readers take the latest entry.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import os
from pathlib import Path

import numpy as np

from .actuator import ActuatorSpec
from .mechanics import CalibrationCoefficients
from .protocol import (SessionPlan, SessionRecording, TrialCondition,
                       TrialRecord, TrialSpec)

__all__ = [
    "FORMAT_VERSION",
    "TRIAL_CSV_COLUMNS",
    "SessionFormatError",
    "SessionWriter",
    "load_session",
    "find_sessions",
    "write_trial_csv",
    "read_trial_csv",
    "write_profile",
    "read_profile",
    "SYNTHETIC_EPOCH",
]

FORMAT_VERSION = 1

TRIAL_CSV_COLUMNS = ("t_s", "f_m_N", "t_m_Nm", "f_grip_1_N", "f_grip_2_N",
                     "f_mean_N", "tactor_x_mm", "tactor_y_mm", "phase")

#: fixed timestamp used for synthetic sessions so fixed-seed runs are
#: byte-identical (synthetic time is virtual anyway)
SYNTHETIC_EPOCH = "1970-01-01T00:00:00+00:00"


class SessionFormatError(ValueError):
    """A session directory violates the manifest/CSV contract."""


def write_trial_csv(path, record: TrialRecord):
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRIAL_CSV_COLUMNS)
        names = record.phase_names()
        for k in range(record.t.size):
            writer.writerow([
                repr(float(record.t[k])),
                repr(float(record.f_m[k])),
                repr(float(record.t_m[k])),
                repr(float(record.f_grip_1[k])),
                repr(float(record.f_grip_2[k])),
                repr(float(record.f_mean[k])),
                repr(float(record.tactor_x_mm[k])),
                repr(float(record.tactor_y_mm[k])),
                names[k],
            ])
        fh.flush()
        os.fsync(fh.fileno())


def read_trial_csv(path):
    """Parse a trial CSV back into column arrays (phase as int codes)."""
    from .protocol import TrialPhase

    path = Path(path)
    numeric = {name: [] for name in TRIAL_CSV_COLUMNS[:-1]}
    phases = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != TRIAL_CSV_COLUMNS:
            raise SessionFormatError(
                f"{path}: expected header {','.join(TRIAL_CSV_COLUMNS)}")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(TRIAL_CSV_COLUMNS):
                raise SessionFormatError(f"{path}:{lineno}: bad column count")
            try:
                for name, cell in zip(TRIAL_CSV_COLUMNS[:-1], row[:-1]):
                    numeric[name].append(float(cell))
                phases.append(TrialRecord.phase_code(TrialPhase(row[-1])))
            except ValueError as exc:
                raise SessionFormatError(f"{path}:{lineno}: {exc}") from exc
    arrays = {name: np.asarray(vals) for name, vals in numeric.items()}
    arrays["phase"] = np.asarray(phases, dtype=np.int8)
    return arrays


def _trial_entry(record: TrialRecord, filename: str):
    spec = record.spec
    return {
        "file": filename,
        "index": spec.index,
        "block": spec.block,
        "training": spec.training,
        "target_force_n": spec.condition.target_force_n,
        "displacement_mm": spec.condition.displacement_mm,
        "stable_wait_s": spec.stable_wait_s,
        "stimulus_onset_t": record.stimulus_onset_t,
        "stimulus_end_t": record.stimulus_end_t,
        "corrupt": record.corrupt,
        "complete": record.complete,
    }


class SessionWriter:
    """Incremental, crash-safe session writer.

    Each appended trial is written to its own CSV first; only then is the
    manifest atomically replaced with one that references it. Use as a
    plain object; nothing is kept open between trials.
    """

    def __init__(self, directory, *, session_id: str, seed: int, mode: str,
                 participant: str, plan: SessionPlan,
                 coefficients: CalibrationCoefficients,
                 actuator_spec: ActuatorSpec = ActuatorSpec(),
                 created_at: str | None = None):
        self.directory = Path(directory)
        (self.directory / "trials").mkdir(parents=True, exist_ok=True)
        if created_at is None:
            created_at = SYNTHETIC_EPOCH if mode == "synthetic" else _now_iso()
        self.manifest = {
            "format_version": FORMAT_VERSION,
            "session_id": session_id,
            "seed": seed,
            "mode": mode,
            "participant": participant,
            "created_at": created_at,
            "plan": plan.to_dict(),
            "plan_digest": plan.digest(),
            "device_profile": {
                "coefficients": coefficients.to_dict(),
                "actuator": dataclasses.asdict(actuator_spec),
            },
            "trials": [],
        }
        self._write_manifest()

    def _write_manifest(self):
        path = self.directory / "manifest.json"
        tmp = self.directory / "manifest.json.tmp"
        with open(tmp, "w") as fh:
            json.dump(self.manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)

    def append_trial(self, record: TrialRecord):
        filename = f"trials/trial_{record.spec.index:03d}.csv"
        try:
            write_trial_csv(self.directory / filename, record)
            self.manifest["trials"].append(_trial_entry(record, filename))
            self._write_manifest()
        except OSError:
            self.mark_aborted("disk write failure")
            raise

    def mark_aborted(self, reason: str):
        """Best-effort partial-data marker; the session stays loadable up to
        its last complete trial."""
        self.manifest["aborted"] = reason
        try:
            self._write_manifest()
        except OSError:
            pass


def _now_iso():
    import datetime

    return datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")


def load_session(directory):
    """Load a session directory into a SessionRecording.

    Every trial referenced by the manifest must exist and parse, and the
    stored plan digest must match the plan; otherwise SessionFormatError.
    Partial trial files not referenced by the manifest are ignored.
    Returns (recording, manifest_dict).
    """
    directory = Path(directory)
    manifest_path = directory / "manifest.json"
    if not manifest_path.exists():
        raise SessionFormatError(f"{directory}: no manifest.json")
    try:
        with open(manifest_path) as fh:
            manifest = json.load(fh)
    except json.JSONDecodeError as exc:
        raise SessionFormatError(f"{manifest_path}: {exc}") from exc

    if manifest.get("format_version") != FORMAT_VERSION:
        raise SessionFormatError(
            f"{directory}: unsupported format version "
            f"{manifest.get('format_version')!r}")
    plan = SessionPlan.from_dict(manifest["plan"])
    if plan.digest() != manifest["plan_digest"]:
        raise SessionFormatError(f"{directory}: plan digest mismatch")

    recording = SessionRecording(
        session_id=manifest["session_id"],
        subject=manifest["participant"],
        plan=plan)
    for entry in manifest["trials"]:
        trial_path = directory / entry["file"]
        if not trial_path.exists():
            raise SessionFormatError(
                f"{directory}: manifest references missing {entry['file']}")
        arrays = read_trial_csv(trial_path)
        spec = TrialSpec(
            condition=TrialCondition(entry["target_force_n"],
                                     entry["displacement_mm"]),
            stable_wait_s=entry["stable_wait_s"],
            block=entry["block"],
            index=entry["index"],
            training=entry["training"])
        recording.records.append(TrialRecord(
            spec=spec,
            stimulus_onset_t=entry["stimulus_onset_t"],
            stimulus_end_t=entry["stimulus_end_t"],
            corrupt=entry["corrupt"],
            complete=entry["complete"],
            subject=manifest["participant"],
            t=arrays["t_s"],
            f_m=arrays["f_m_N"],
            t_m=arrays["t_m_Nm"],
            f_grip_1=arrays["f_grip_1_N"],
            f_grip_2=arrays["f_grip_2_N"],
            f_mean=arrays["f_mean_N"],
            tactor_x_mm=arrays["tactor_x_mm"],
            tactor_y_mm=arrays["tactor_y_mm"],
            phase=arrays["phase"]))
    return recording, manifest


def find_sessions(paths):
    """Resolve CLI path arguments to session directories.

    Accepts session directories themselves or parents containing them
    (one level deep). Order is deterministic (sorted).
    """
    found = []
    for raw in paths:
        path = Path(raw)
        if (path / "manifest.json").exists():
            found.append(path)
            continue
        if path.is_dir():
            for child in sorted(path.iterdir()):
                if (child / "manifest.json").exists():
                    found.append(child)
    return found


def write_profile(path, coefficients: CalibrationCoefficients, *,
                  fits=None, actuator_spec: ActuatorSpec = ActuatorSpec(),
                  calibrated_at: str | None = None):
    """Write (or append to) a device-profile document; latest entry wins."""
    path = Path(path)
    document = {"format_version": FORMAT_VERSION, "calibrations": []}
    if path.exists():
        with open(path) as fh:
            existing = json.load(fh)
        if existing.get("format_version") == FORMAT_VERSION:
            document["calibrations"] = existing.get("calibrations", [])
    entry = {
        "calibrated_at": calibrated_at or _now_iso(),
        "coefficients": coefficients.to_dict(),
        "actuator": dataclasses.asdict(actuator_spec),
    }
    if fits is not None:
        entry["fits"] = {f"lever_{fit.lever.value}": fit.to_dict() for fit in fits}
    document["calibrations"].append(entry)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "w") as fh:
        json.dump(document, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, path)
    return entry


def read_profile(path):
    """Read the latest calibration from a device profile.

    Returns (coefficients, actuator_spec, entry_dict).
    """
    path = Path(path)
    try:
        with open(path) as fh:
            document = json.load(fh)
    except FileNotFoundError:
        raise SessionFormatError(f"{path}: no such profile") from None
    except json.JSONDecodeError as exc:
        raise SessionFormatError(f"{path}: {exc}") from exc
    calibrations = document.get("calibrations") or []
    if not calibrations:
        raise SessionFormatError(f"{path}: profile holds no calibrations")
    entry = calibrations[-1]
    coefficients = CalibrationCoefficients.from_dict(entry["coefficients"])
    actuator_spec = ActuatorSpec(**entry["actuator"])
    return coefficients, actuator_spec, entry
