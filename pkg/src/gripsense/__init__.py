"""Grip-force sensing and skin-stretch experiment toolkit.

A two-lever gripper measures both sides of a precision grip with a single
force/torque sensor while a leadscrew-driven tactor stretches the finger
pad skin. This package models the device (forward and inverse force
model, calibration, actuator control), simulates it together with
synthetic participants, runs the randomized-block experiment protocol,
and performs the response-metric statistics (repeated-measures ANOVA and
Holm-corrected planned comparisons).

Typical flow::

    from gripsense import simulator, analysis

    sessions = simulator.run_synthetic_study(n_subjects=10, seed=1)
    table = analysis.delta_ps_table(sessions)
    result = analysis.rm_anova_2way(table)

See demos/ for narrative walkthroughs of each capability and the
``gripsense`` CLI for calibration, study recording, live sessions and
report generation.
"""

from .mechanics import (CalibrationCoefficients, ContactState, GripEstimate,
                        LeverGeometry, SensorReading, Side, ZERO_CONTACT,
                        coefficients_from_geometry, decompose, forward_sensor,
                        in_contact, theoretical_artifact)
from .calibration import (ArtifactSeries, LeverFit, SweepRecord,
                          artifact_ratio, fit_lever, read_sweep_csv,
                          solve_coefficients, write_sweep_csv)
from .actuator import (ActuatorSpec, ActuatorState, Axis, control_step,
                       counts_to_mm, home, mm_to_counts, plan_stimulus)
from .protocol import (SessionPlan, SessionRecording, TrialCondition,
                       TrialPhase, TrialRecord, TrialSpec, all_conditions,
                       plan_session)
from .simulator import (FingerPadModel, ParticipantModel, PopulationSpec,
                        Rig, RigConfig, SyntheticParticipant,
                        generate_calibration_sweep, rig_step,
                        run_artifact_check, run_synthetic_study,
                        run_synthetic_trial)
from .analysis import (AnovaResult, ComparisonResult, DeltaPsTable,
                       condition_average, delta_ps, delta_ps_table,
                       holm_adjust, holm_planned_comparisons, rm_anova_2way,
                       stable_phase_side_split)

__version__ = "0.1.0"

__all__ = [
    # mechanics
    "CalibrationCoefficients", "ContactState", "GripEstimate",
    "LeverGeometry", "SensorReading", "Side", "ZERO_CONTACT",
    "coefficients_from_geometry", "decompose", "forward_sensor",
    "in_contact", "theoretical_artifact",
    # calibration
    "ArtifactSeries", "LeverFit", "SweepRecord", "artifact_ratio",
    "fit_lever", "read_sweep_csv", "solve_coefficients", "write_sweep_csv",
    # actuator
    "ActuatorSpec", "ActuatorState", "Axis", "control_step", "counts_to_mm",
    "home", "mm_to_counts", "plan_stimulus",
    # protocol
    "SessionPlan", "SessionRecording", "TrialCondition", "TrialPhase",
    "TrialRecord", "TrialSpec", "all_conditions", "plan_session",
    # simulator
    "FingerPadModel", "ParticipantModel", "PopulationSpec", "Rig",
    "RigConfig", "SyntheticParticipant", "generate_calibration_sweep",
    "rig_step", "run_artifact_check", "run_synthetic_study",
    "run_synthetic_trial",
    # analysis
    "AnovaResult", "ComparisonResult", "DeltaPsTable", "condition_average",
    "delta_ps", "delta_ps_table", "holm_adjust", "holm_planned_comparisons",
    "rm_anova_2way", "stable_phase_side_split",
]
