"""Command-line entry points.

Subcommands are thin adapters over the library modules:

    gripsense calibrate sweep.csv --out profile.json
    gripsense home
    gripsense simulate-study --subjects 10 --seed 1 --out study/
    gripsense run --mode interactive --plan-seed 7 --serve 8765 --out session/
    gripsense analyze study/* --out report/

Exit code 0 on success; failures print ``ERROR <category>: message`` to
stderr and exit nonzero (2 usage, 3 parse, 4 data, 1 internal).
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import analysis, session_io
from .actuator import ActuatorSpec, ActuatorState, Axis, HomingError, home
from .calibration import (CalibrationInvalidError, SingularSweepError,
                          fit_lever, read_sweep_csv, solve_coefficients)
from .mechanics import Side
from .protocol import plan_session
from .session_io import SessionFormatError


class CliError(Exception):
    def __init__(self, category: str, message: str, code: int = 1):
        super().__init__(message)
        self.category = category
        self.code = code


def _cmd_calibrate(args):
    sweeps = read_sweep_csv(args.sweep)
    missing = [side.value for side in (Side.LEVER_1, Side.LEVER_2)
               if side not in sweeps]
    if missing:
        raise CliError("invalid-data",
                       f"{args.sweep}: no sweep data for lever(s) {missing}", 4)
    fit_1 = fit_lever(sweeps[Side.LEVER_1])
    fit_2 = fit_lever(sweeps[Side.LEVER_2])
    coeffs = solve_coefficients(fit_1, fit_2)
    session_io.write_profile(args.out, coeffs, fits=(fit_1, fit_2))

    print(f"calibrated from {args.sweep}")
    for fit in (fit_1, fit_2):
        print(f"  lever {fit.lever.value}: ratio={fit.slope_force:.3f} "
              f"ratio*d={fit.slope_torque:.5f} m "
              f"(r2 force={fit.r2_force:.6f}, torque={fit.r2_torque:.6f})")
        for warning in fit.warnings:
            print(f"    warning: {warning}")
    print(f"  d_1={coeffs.d_1 * 1e3:.3f} mm  d_2={coeffs.d_2 * 1e3:.3f} mm")
    print(f"  alpha_1={coeffs.alpha_1:.4f}  alpha_2={coeffs.alpha_2:.4f}")
    print(f"  beta_1={coeffs.beta_1:.3f} /m  beta_2={coeffs.beta_2:.3f} /m")
    print(f"profile written to {args.out}")
    return 0


def _cmd_home(args):
    spec = ActuatorSpec()
    rng = np.random.default_rng(args.seed)
    for axis in (Axis.X, Axis.Y):
        state = ActuatorState(
            axis=axis,
            offset_from_mid_counts=float(rng.uniform(-spec.travel_range_counts,
                                                     spec.travel_range_counts)))
        homed = home(state, spec, current_threshold=args.threshold)
        print(f"axis {axis.value}: homed, zero within "
              f"{abs(homed.offset_from_mid_counts):.1f} counts of mid-travel")
    return 0


def _cmd_simulate_study(args):
    from .service import record_synthetic_study

    _, session_dirs = record_synthetic_study(
        args.out, n_subjects=args.subjects, seed=args.seed, quiet=args.quiet)
    for directory in session_dirs:
        print(f"recorded {directory}")
    return 0


def _cmd_run(args):
    if args.mode == "hardware":
        raise CliError("unsupported-mode",
                       "no hardware bridge is configured in this build", 4)
    if args.mode == "synthetic":
        raise CliError("unsupported-mode",
                       "use `gripsense simulate-study` for synthetic recordings", 4)

    import uvicorn

    from .service import SessionService, create_app

    port = args.serve
    if port is None:
        port = int(os.environ.get("PORT", "8765"))
    plan = plan_session(args.plan_seed)
    service = SessionService(plan=plan, out_dir=args.out,
                             participant=args.participant,
                             max_trials=args.max_trials,
                             trial_timeout_s=args.trial_timeout)
    service.start()
    print(f"serving ws://127.0.0.1:{port}/participant and /experimenter "
          f"(plan seed {args.plan_seed}, recording to {args.out})")
    uvicorn.run(create_app(service), host=args.host, port=port,
                log_level="warning")
    return 0


def _cmd_analyze(args):
    session_dirs = session_io.find_sessions(args.sessions)
    if not session_dirs:
        raise CliError("no-data", "no sessions found", 4)
    sessions = []
    for directory in session_dirs:
        recording, _ = session_io.load_session(directory)
        sessions.append(recording)

    table = analysis.delta_ps_table(sessions)
    anova = analysis.rm_anova_2way(table)
    comparisons = analysis.holm_planned_comparisons(table, anova)

    by_condition = {}
    for session in sessions:
        for record in session.analysis_records():
            by_condition.setdefault(record.spec.condition, []).append(
                (session.subject, record))
    traces = analysis.condition_average(by_condition)

    side_split = {}
    for session in sessions:
        for target, (finger, thumb) in analysis.stable_phase_side_split(session).items():
            side_split.setdefault(target, []).append((finger, thumb))
    side_summary = {
        f"{target:g}N": {
            "finger_mean_N": float(np.mean([f for f, _ in rows])),
            "thumb_mean_N": float(np.mean([t for _, t in rows])),
        }
        for target, rows in side_split.items()
    }

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    report = {
        "sessions": [str(d) for d in session_dirs],
        "n_subjects": table.n_subjects,
        "anova": anova.to_dict(),
        "planned_comparisons": comparisons.to_dict(),
        "stable_grip_side_split": side_summary,
    }
    with open(out / "report.json", "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")

    with open(out / "delta_ps.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["subject", "target_force_N", "displacement_mm",
                         "delta_ps_N"])
        for s, subject in enumerate(table.subjects):
            for i, target in enumerate(table.target_levels):
                for j, displacement in enumerate(table.displacement_levels):
                    writer.writerow([subject, target, displacement,
                                     repr(float(table.values[s, i, j]))])

    for condition, (t, mean, se) in sorted(traces.items()):
        name = f"trace_{condition.label()}.csv"
        with open(out / name, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t_s", "mean_N", "se_N"])
            for k in range(t.size):
                writer.writerow([repr(float(t[k])), repr(float(mean[k])),
                                 repr(float(se[k]))])

    print(f"analyzed {len(sessions)} sessions ({table.n_subjects} subjects)")
    for name in ("target", "displacement", "interaction"):
        effect = anova[name]
        stars = "*" if effect.p < 0.05 else ""
        print(f"  {name:13s} F({effect.df},{effect.error_df}) = {effect.f:7.2f}"
              f"  p = {effect.p:.4g} {stars}")
    for pair in comparisons.pairs:
        stars = "*" if pair.p_holm < 0.05 else ""
        print(f"  {pair.label:20s} delta = {pair.delta:+.3f} N  "
              f"t({pair.df:.2f}) = {pair.t:5.2f}  p_holm = {pair.p_holm:.4g} {stars}")
    print(f"report written to {out}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="gripsense",
        description="grip-force sensing and skin-stretch experiment toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("calibrate", help="fit device constants from a sweep CSV")
    p.add_argument("sweep", help="CSV with columns "
                                 "t_s,external_force_N,f_m_N,t_m_Nm,lever_id")
    p.add_argument("--out", required=True, help="device profile JSON to write")
    p.set_defaults(func=_cmd_calibrate)

    p = sub.add_parser("home", help="run the homing procedure (simulated axes)")
    p.add_argument("--threshold", type=float, default=0.3,
                   help="stall current threshold in amperes")
    p.add_argument("--seed", type=int, default=0,
                   help="seed for the simulated unknown start offset")
    p.set_defaults(func=_cmd_home)

    p = sub.add_parser("simulate-study",
                       help="record a synthetic multi-subject study")
    p.add_argument("--subjects", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True, help="directory for session dirs")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=_cmd_simulate_study)

    p = sub.add_parser("run", help="run a live session with the console UI")
    p.add_argument("--mode", choices=["interactive", "synthetic", "hardware"],
                   default="interactive")
    p.add_argument("--plan-seed", type=int, default=0)
    p.add_argument("--serve", type=int, nargs="?", default=None,
                   help="WebSocket port (default: $PORT or 8765)")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--out", default="session")
    p.add_argument("--participant", default="participant")
    p.add_argument("--max-trials", type=int, default=None,
                   help="truncate the 70-trial plan (testing aid)")
    p.add_argument("--trial-timeout", type=float, default=60.0)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("analyze", help="statistics report over session dirs")
    p.add_argument("sessions", nargs="+")
    p.add_argument("--out", required=True, help="report directory")
    p.set_defaults(func=_cmd_analyze)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"ERROR {exc.category}: {exc}", file=sys.stderr)
        return exc.code
    except (SessionFormatError, ValueError) as exc:
        category = "parse-error"
        if isinstance(exc, (SingularSweepError, CalibrationInvalidError,
                            analysis.IncompleteTableError)):
            category = "invalid-data"
        print(f"ERROR {category}: {exc}", file=sys.stderr)
        return 3 if category == "parse-error" else 4
    except HomingError as exc:
        print(f"ERROR homing-failed: {exc}", file=sys.stderr)
        return 4
    except FileNotFoundError as exc:
        print(f"ERROR missing-file: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
