"""Device calibration from force-sweep records, and the movement-artifact metric.

Calibration presses a known external force onto one lever at a time (0 to
20 N, tactor stationary) while logging the device sensor. Ordinary least
squares of f_m and t_m against the external force gives, per lever, the
amplification ratio and its product with the torque offset d; those solve
into the alpha/beta decomposition coefficients.

The artifact metric compares an externally measured force with the force
the device reports while the tactor moves:

    a_tm = (f_external - f_device) / f_external

Negative a_tm means the device over-reports (the artifact adds
positively). Samples where the external force is below a guard threshold
are undefined (NaN) to avoid dividing by near-zero.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .mechanics import CalibrationCoefficients, LeverGeometry, Side, coefficients_from_geometry

__all__ = [
    "SweepRecord",
    "LeverFit",
    "ArtifactSeries",
    "SingularSweepError",
    "CalibrationInvalidError",
    "fit_lever",
    "solve_coefficients",
    "artifact_ratio",
    "read_sweep_csv",
    "write_sweep_csv",
    "SWEEP_CSV_COLUMNS",
]

SWEEP_CSV_COLUMNS = ("t_s", "external_force_N", "f_m_N", "t_m_Nm", "lever_id")

#: Sweeps should span at least this fraction of the 0-20 N working range.
FORCE_RANGE_N = 20.0
MIN_SPAN_FRACTION = 0.5
MIN_SAMPLES = 10
R2_FLOOR = 0.99
INTERCEPT_WARN_N = 0.2


class SingularSweepError(ValueError):
    """The sweep cannot support a regression (no force variation)."""


class CalibrationInvalidError(ValueError):
    """Fitted slopes are unphysical (non-positive)."""


@dataclass
class SweepRecord:
    """Force sweep on one lever: external force vs. the device reading.

    Arrays are index-aligned. Quality expectations (>= 10 samples, force
    span covering at least half the 0-20 N range) are reported as warnings
    by :meth:`quality_warnings` rather than rejected outright -- a
    noiseless two-point sweep still determines the line exactly.
    """

    external_force: np.ndarray
    f_m: np.ndarray
    t_m: np.ndarray
    lever: Side
    t: np.ndarray | None = None

    def __post_init__(self):
        self.external_force = np.asarray(self.external_force, dtype=float)
        self.f_m = np.asarray(self.f_m, dtype=float)
        self.t_m = np.asarray(self.t_m, dtype=float)
        n = self.external_force.size
        if self.f_m.size != n or self.t_m.size != n:
            raise ValueError("sweep arrays must have equal length")
        if self.t is not None:
            self.t = np.asarray(self.t, dtype=float)
            if self.t.size != n:
                raise ValueError("sweep arrays must have equal length")
        if n < 2:
            raise SingularSweepError("sweep needs at least 2 samples")
        if not np.all(np.isfinite(self.external_force)):
            raise ValueError("external forces must be finite")
        if np.any(self.external_force < 0):
            raise ValueError("external forces must be >= 0")

    def quality_warnings(self):
        warnings = []
        if self.external_force.size < MIN_SAMPLES:
            warnings.append(
                f"only {self.external_force.size} samples (expected >= {MIN_SAMPLES})")
        span = float(self.external_force.max() - self.external_force.min())
        if span < MIN_SPAN_FRACTION * FORCE_RANGE_N:
            warnings.append(
                f"force span {span:.2f} N covers less than half of the "
                f"{FORCE_RANGE_N:.0f} N range")
        return warnings


@dataclass
class LeverFit:
    """OLS fit of one lever's sweep.

    slope_force is the fitted amplification ratio; slope_torque is the
    fitted ratio*d in meters, folded positive regardless of which side of
    the sensor the lever sits on (lever 2 produces raw negative torque
    slopes). R-squared is 1 - SS_res/SS_tot with mean-centered SS_tot.
    """

    lever: Side
    slope_force: float
    slope_torque: float
    intercept_force: float
    intercept_torque: float
    r2_force: float
    r2_torque: float
    warnings: list = field(default_factory=list)

    def to_dict(self):
        return {
            "lever": self.lever.value,
            "slope_force": self.slope_force,
            "slope_torque_m": self.slope_torque,
            "intercept_force_N": self.intercept_force,
            "intercept_torque_Nm": self.intercept_torque,
            "r2_force": self.r2_force,
            "r2_torque": self.r2_torque,
            "warnings": list(self.warnings),
        }


def _ols_line(x, y):
    """Least-squares slope/intercept/r2 of y on x."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    xm = x.mean()
    sxx = float(np.sum((x - xm) ** 2))
    if sxx <= 0:
        raise SingularSweepError("all external forces equal; regression is singular")
    ym = y.mean()
    slope = float(np.sum((x - xm) * (y - ym)) / sxx)
    intercept = float(ym - slope * xm)
    residuals = y - (slope * x + intercept)
    ss_res = float(np.sum(residuals**2))
    ss_tot = float(np.sum((y - ym) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return slope, intercept, r2


def fit_lever(sweep: SweepRecord, r2_floor: float = R2_FLOOR) -> LeverFit:
    """Fit one lever's force and torque responses to the external force.

    The torque slope is stored as a positive magnitude (sign folding), so
    downstream math is independent of whether lever-2 data arrives with
    its natural negative sign or already folded. A fit below the R-squared
    floor or with a large force intercept gets a quality warning attached,
    not an error.
    """
    slope_f, icpt_f, r2_f = _ols_line(sweep.external_force, sweep.f_m)
    slope_t, icpt_t, r2_t = _ols_line(sweep.external_force, sweep.t_m)

    warnings = sweep.quality_warnings()
    if r2_f < r2_floor or r2_t < r2_floor:
        warnings.append(
            f"fit quality below floor (r2_force={r2_f:.4f}, r2_torque={r2_t:.4f}, "
            f"floor={r2_floor})")
    if abs(icpt_f) > INTERCEPT_WARN_N:
        warnings.append(
            f"force intercept {icpt_f:.3f} N exceeds {INTERCEPT_WARN_N} N; "
            "check sensor bias/taring")

    return LeverFit(
        lever=sweep.lever,
        slope_force=slope_f,
        slope_torque=abs(slope_t),
        intercept_force=icpt_f,
        intercept_torque=icpt_t,
        r2_force=r2_f,
        r2_torque=r2_t,
        warnings=warnings,
    )


def solve_coefficients(fit_1: LeverFit, fit_2: LeverFit) -> CalibrationCoefficients:
    """Decomposition coefficients from the two lever fits.

    ratio_i = slope_force_i and d_i = slope_torque_i / slope_force_i, then
    the alpha/beta formulas of the geometry module.
    """
    for fit in (fit_1, fit_2):
        if fit.slope_force <= 0 or fit.slope_torque <= 0:
            raise CalibrationInvalidError(
                f"lever {fit.lever.value} slopes must be positive "
                f"(force {fit.slope_force}, torque {fit.slope_torque})")
    geom_1 = LeverGeometry(lever_ratio=fit_1.slope_force,
                           d=fit_1.slope_torque / fit_1.slope_force,
                           side=Side.LEVER_1)
    geom_2 = LeverGeometry(lever_ratio=fit_2.slope_force,
                           d=fit_2.slope_torque / fit_2.slope_force,
                           side=Side.LEVER_2)
    return coefficients_from_geometry(geom_1, geom_2)


@dataclass
class ArtifactSeries:
    """Pointwise movement-artifact ratio; undefined samples are NaN."""

    t: np.ndarray
    f_external: np.ndarray
    f_device: np.ndarray
    a_tm: np.ndarray
    guard: float

    @property
    def max_abs(self) -> float:
        """Largest |a_tm| over the defined samples (NaN if none defined)."""
        defined = self.a_tm[np.isfinite(self.a_tm)]
        if defined.size == 0:
            return math.nan
        return float(np.max(np.abs(defined)))


def artifact_ratio(t, external, device, guard: float = 1.0) -> ArtifactSeries:
    """Relative artifact (f_external - f_device) / f_external per sample.

    Samples with external force below ``guard`` newtons are undefined.
    Series must be time-aligned and of equal length.
    """
    t = np.asarray(t, dtype=float)
    external = np.asarray(external, dtype=float)
    device = np.asarray(device, dtype=float)
    if not (t.size == external.size == device.size):
        raise ValueError("time, external and device series must have equal length")
    with np.errstate(divide="ignore", invalid="ignore"):
        a_tm = (external - device) / external
    a_tm = np.where(external < guard, np.nan, a_tm)
    return ArtifactSeries(t=t, f_external=external, f_device=device,
                          a_tm=a_tm, guard=guard)


def write_sweep_csv(path, sweeps):
    """Write one or more sweeps to the calibration CSV format."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SWEEP_CSV_COLUMNS)
        for sweep in sweeps:
            times = sweep.t if sweep.t is not None else np.arange(sweep.f_m.size) * 0.01
            for k in range(sweep.f_m.size):
                writer.writerow([
                    repr(float(times[k])),
                    repr(float(sweep.external_force[k])),
                    repr(float(sweep.f_m[k])),
                    repr(float(sweep.t_m[k])),
                    sweep.lever.value,
                ])


def read_sweep_csv(path):
    """Parse a calibration CSV into per-lever sweeps.

    Returns a dict keyed by :class:`Side`. Malformed rows raise ValueError
    naming the offending line.
    """
    rows = {Side.LEVER_1: [], Side.LEVER_2: []}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != list(SWEEP_CSV_COLUMNS):
            raise ValueError(
                f"{path}: expected header {','.join(SWEEP_CSV_COLUMNS)}, "
                f"got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(SWEEP_CSV_COLUMNS):
                raise ValueError(f"{path}:{lineno}: expected "
                                 f"{len(SWEEP_CSV_COLUMNS)} columns, got {len(row)}")
            try:
                t_s = float(row[0])
                external = float(row[1])
                f_m = float(row[2])
                t_m = float(row[3])
                lever = Side(int(row[4]))
            except (ValueError, KeyError) as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from exc
            rows[lever].append((t_s, external, f_m, t_m))

    sweeps = {}
    for lever, data in rows.items():
        if not data:
            continue
        arr = np.asarray(data, dtype=float)
        sweeps[lever] = SweepRecord(
            t=arr[:, 0], external_force=arr[:, 1], f_m=arr[:, 2],
            t_m=arr[:, 3], lever=lever)
    return sweeps
