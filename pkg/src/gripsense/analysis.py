"""Response metrics and statistics for grip-force sessions.

The response metric of a trial is the peak-minus-onset change in mean
grip force during tactor movement. Per-subject condition cells (mean over
that subject's trials of a condition) enter a two-way repeated-measures
ANOVA (target force x displacement, both within-subject), and planned
pairwise comparisons between adjacent displacement levels within each
target level use a variance pooled over the displacement and interaction
error terms, Satterthwaite degrees of freedom, and a Holm step-down
correction applied over all comparisons jointly.

Tail probabilities come from the F and t distributions via scipy (which
evaluates them through the regularized incomplete beta function); the
test suite checks them against published quantile tables and against an
independent loop-and-formula oracle.
"""

from __future__ import annotations

import warnings as _warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as _stats

from .protocol import (DISPLACEMENTS_MM, TARGET_FORCES_N, TrialCondition,
                       TrialRecord)

__all__ = [
    "DeltaPsTable",
    "AnovaEffect",
    "AnovaResult",
    "Comparison",
    "ComparisonResult",
    "IncompleteTableError",
    "MissingMarkersError",
    "delta_ps",
    "delta_ps_table",
    "condition_average",
    "stable_phase_side_split",
    "rm_anova_2way",
    "holm_planned_comparisons",
    "holm_adjust",
]

#: error mean squares below this fraction of the table's total variance are
#: treated as numerically zero (degenerate data)
_DEGENERATE_RTOL = 1e-12


class IncompleteTableError(ValueError):
    """The subjects x conditions response table has missing cells."""


class MissingMarkersError(ValueError):
    """A trial lacks stimulus onset/end markers."""


def delta_ps(trial: TrialRecord) -> float:
    """Peak-minus-onset mean grip force over the stimulus window.

    The window runs from the stimulus onset marker to the stimulus end
    marker (tactor motion only); force changes after the tactor stops do
    not count.
    """
    if trial.stimulus_onset_t is None or trial.stimulus_end_t is None:
        raise MissingMarkersError("trial has no stimulus markers")
    i0 = trial.onset_index()
    i1 = trial.end_index()
    window = trial.f_mean[i0:i1 + 1]
    if window.size < 3:
        raise ValueError(f"stimulus window has {window.size} samples (< 3)")
    return float(np.max(window) - trial.f_mean[i0])


@dataclass
class DeltaPsTable:
    """subjects x target-levels x displacement-levels response matrix."""

    values: np.ndarray                      # (n_subjects, 2, 3), newtons
    subjects: list
    target_levels: tuple = TARGET_FORCES_N
    displacement_levels: tuple = DISPLACEMENTS_MM

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        expected = (len(self.subjects), len(self.target_levels),
                    len(self.displacement_levels))
        if self.values.shape != expected:
            raise IncompleteTableError(
                f"table shape {self.values.shape} != subjects x levels {expected}")
        if not np.all(np.isfinite(self.values)):
            raise IncompleteTableError("table has missing (non-finite) cells")

    @property
    def n_subjects(self) -> int:
        return len(self.subjects)


def delta_ps_table(sessions) -> DeltaPsTable:
    """Per-subject condition means of delta_ps over analysis-eligible trials."""
    subjects = []
    rows = []
    for session in sessions:
        cells = np.full((len(TARGET_FORCES_N), len(DISPLACEMENTS_MM)), np.nan)
        by_condition = {}
        for record in session.analysis_records():
            by_condition.setdefault(record.spec.condition, []).append(record)
        for i, target in enumerate(TARGET_FORCES_N):
            for j, disp in enumerate(DISPLACEMENTS_MM):
                cond = TrialCondition(target, disp)
                trials = by_condition.get(cond, [])
                if trials:
                    cells[i, j] = np.mean([delta_ps(r) for r in trials])
        subjects.append(session.subject)
        rows.append(cells)
    values = np.stack(rows) if rows else np.empty((0, 2, 3))
    return DeltaPsTable(values=values, subjects=subjects)


def condition_average(trials_by_condition, sample_rate_hz: float = 100.0):
    """Onset-aligned mean and standard-error traces per condition.

    ``trials_by_condition`` maps a condition to a list of (subject, trial)
    pairs. Per-subject mean traces are computed first; the returned SE is
    across subjects (sd/sqrt(n)). Trials are aligned on the stimulus onset
    sample with no resampling; ragged lengths are trimmed to the common
    support around the onset, with a warning when more than 20 % of the
    span is lost. Returns {condition: (t, mean, se)} with t = 0 at onset.
    """
    dt = 1.0 / sample_rate_hz
    out = {}
    for condition, entries in trials_by_condition.items():
        if len(entries) < 2:
            raise ValueError(
                f"condition {condition}: need >= 2 trials, got {len(entries)}")
        by_subject = {}
        for subject, trial in entries:
            by_subject.setdefault(subject, []).append(trial)

        subject_traces = []
        pre = None
        post = None
        for subject, trials in by_subject.items():
            aligned = [(t.onset_index(), t.f_mean) for t in trials]
            s_pre = min(i for i, _ in aligned)
            s_post = min(f.size - i - 1 for i, f in aligned)
            stack = np.stack([f[i - s_pre:i + s_post + 1] for i, f in aligned])
            subject_traces.append((s_pre, s_post, stack.mean(axis=0)))
            pre = s_pre if pre is None else min(pre, s_pre)
            post = s_post if post is None else min(post, s_post)

        longest = max(tr.size for _, _, tr in subject_traces)
        common = pre + post + 1
        if common < 0.8 * longest:
            _warnings.warn(
                f"condition {condition}: trimmed to {common} of {longest} "
                "samples (> 20 % lost) while aligning", stacklevel=2)

        rows = np.stack([tr[p - pre:p + post + 1] for p, _, tr in subject_traces])
        n = rows.shape[0]
        mean = rows.mean(axis=0)
        if n > 1:
            se = rows.std(axis=0, ddof=1) / np.sqrt(n)
        else:
            se = np.zeros_like(mean)
        t = (np.arange(common) - pre) * dt
        out[condition] = (t, mean, se)
    return out


def stable_phase_side_split(session, window_s: float = 1.0):
    """Per-target finger/thumb force means over the second before onset.

    Side-1 rests against the finger, side-2 against the thumb. Trials are
    pooled across displacement levels; a trial whose pre-onset window
    would start before the record begins is skipped with a warning.
    Returns {target_force: (finger_mean, thumb_mean)}.
    """
    sums = {target: [0.0, 0.0, 0] for target in TARGET_FORCES_N}
    for record in session.analysis_records():
        i1 = record.onset_index()
        n = int(round(window_s * 100.0))
        i0 = i1 - n
        if i0 < 0:
            _warnings.warn(
                f"trial {record.spec.index}: pre-onset window extends before "
                "the record; skipped", stacklevel=2)
            continue
        target = record.spec.condition.target_force_n
        sums[target][0] += float(record.f_grip_1[i0:i1].mean())
        sums[target][1] += float(record.f_grip_2[i0:i1].mean())
        sums[target][2] += 1
    out = {}
    for target, (finger, thumb, count) in sums.items():
        if count:
            out[target] = (finger / count, thumb / count)
    return out


@dataclass
class AnovaEffect:
    name: str
    ss: float
    df: int
    ms: float
    error_ss: float
    error_df: int
    error_ms: float
    f: float
    p: float
    degenerate: bool = False


@dataclass
class AnovaResult:
    effects: dict
    ss_subject: float
    ss_total: float
    n_subjects: int

    def __getitem__(self, name) -> AnovaEffect:
        return self.effects[name]

    def to_dict(self):
        return {
            "n_subjects": self.n_subjects,
            "ss_subject": self.ss_subject,
            "ss_total": self.ss_total,
            "effects": {
                name: {
                    "SS": e.ss, "df_num": e.df, "MS": e.ms,
                    "error_SS": e.error_ss, "df_den": e.error_df,
                    "error_MS": e.error_ms, "F": e.f, "p": e.p,
                    "degenerate": e.degenerate,
                }
                for name, e in self.effects.items()
            },
        }


def _f_tail(f, df1, df2):
    return float(_stats.f.sf(f, df1, df2))


def _t_tail_two_sided(t, df):
    return 2.0 * float(_stats.t.sf(abs(t), df))


def rm_anova_2way(table: DeltaPsTable) -> AnovaResult:
    """Two-way repeated-measures ANOVA on the response table.

    Standard within-subject decomposition: each effect (target,
    displacement, interaction) is tested against its own subject
    interaction error term. No sphericity correction is applied (matching
    how such designs are conventionally reported); zero-variance error
    terms yield flagged degenerate results instead of exceptions.
    """
    x = table.values
    n, a, b = x.shape
    if n < 2:
        raise IncompleteTableError("need at least 2 subjects")

    gm = x.mean()
    m_s = x.mean(axis=(1, 2))
    m_a = x.mean(axis=(0, 2))
    m_b = x.mean(axis=(0, 1))
    m_ab = x.mean(axis=0)
    m_as = x.mean(axis=2)
    m_bs = x.mean(axis=1)

    ss_subject = a * b * float(np.sum((m_s - gm) ** 2))
    ss_a = n * b * float(np.sum((m_a - gm) ** 2))
    ss_b = n * a * float(np.sum((m_b - gm) ** 2))
    ss_ab = n * float(np.sum((m_ab - m_a[:, None] - m_b[None, :] + gm) ** 2))
    ss_as = b * float(np.sum((m_as - m_s[:, None] - m_a[None, :] + gm) ** 2))
    ss_bs = a * float(np.sum((m_bs - m_s[:, None] - m_b[None, :] + gm) ** 2))
    ss_total = float(np.sum((x - gm) ** 2))
    ss_abs = ss_total - ss_subject - ss_a - ss_b - ss_ab - ss_as - ss_bs
    ss_abs = max(ss_abs, 0.0)

    floor = max(ss_total, 1.0) * _DEGENERATE_RTOL
    effects = {}
    for name, ss_eff, df_eff, ss_err, df_err in [
        ("target", ss_a, a - 1, ss_as, (a - 1) * (n - 1)),
        ("displacement", ss_b, b - 1, ss_bs, (b - 1) * (n - 1)),
        ("interaction", ss_ab, (a - 1) * (b - 1), ss_abs, (a - 1) * (b - 1) * (n - 1)),
    ]:
        ms_eff = ss_eff / df_eff
        ms_err = ss_err / df_err
        degenerate = ms_err <= floor
        if degenerate:
            if ms_eff <= floor:
                f_val, p = 0.0, 1.0
            else:
                f_val, p = float("inf"), 0.0  # below any machine floor
        else:
            f_val = ms_eff / ms_err
            p = _f_tail(f_val, df_eff, df_err)
        effects[name] = AnovaEffect(
            name=name, ss=ss_eff, df=df_eff, ms=ms_eff,
            error_ss=ss_err, error_df=df_err, error_ms=ms_err,
            f=f_val, p=p, degenerate=degenerate)

    return AnovaResult(effects=effects, ss_subject=ss_subject,
                       ss_total=ss_total, n_subjects=n)


def holm_adjust(p_values):
    """Holm step-down adjusted p values, order-preserving."""
    p_values = np.asarray(p_values, dtype=float)
    m = p_values.size
    order = np.argsort(p_values, kind="stable")
    adjusted = np.empty(m)
    running = 0.0
    for rank, k in enumerate(order):
        running = max(running, min(1.0, (m - rank) * p_values[k]))
        adjusted[k] = running
    return adjusted


@dataclass
class Comparison:
    label: str
    target_force_n: float
    displacement_hi_mm: float
    displacement_lo_mm: float
    delta: float
    t: float
    df: float
    p_raw: float
    p_holm: float = float("nan")


@dataclass
class ComparisonResult:
    pairs: list = field(default_factory=list)
    ms_pool: float = float("nan")
    df_pool: float = float("nan")

    def to_dict(self):
        return {
            "ms_pool": self.ms_pool,
            "df_pool": self.df_pool,
            "pairs": [
                {
                    "label": c.label, "target_force_n": c.target_force_n,
                    "displacement_hi_mm": c.displacement_hi_mm,
                    "displacement_lo_mm": c.displacement_lo_mm,
                    "delta_N": c.delta, "t": c.t, "df": c.df,
                    "p_raw": c.p_raw, "p_holm": c.p_holm,
                }
                for c in self.pairs
            ],
        }


def holm_planned_comparisons(table: DeltaPsTable,
                             anova: AnovaResult | None = None) -> ComparisonResult:
    """Adjacent-displacement comparisons within each target level.

    For each target force, compares 1.0 vs 0.5 mm and 1.5 vs 1.0 mm cell
    means. The standard error uses the variance pooled over the
    displacement and interaction error terms,

        MS_pool = (SS_BxS + SS_ABxS) / (df_BxS + df_ABxS)
        SE      = sqrt(2 MS_pool / n)

    with Satterthwaite-combined degrees of freedom; the Holm correction is
    applied over the four comparisons jointly.
    """
    if len(table.displacement_levels) < 2:
        raise ValueError("need at least 2 displacement levels to compare")
    if anova is None:
        anova = rm_anova_2way(table)
    b_err = anova["displacement"]
    ab_err = anova["interaction"]
    ss1, df1 = b_err.error_ss, b_err.error_df
    ss2, df2 = ab_err.error_ss, ab_err.error_df
    ms_pool = (ss1 + ss2) / (df1 + df2)

    floor = max(anova.ss_total, 1.0) * _DEGENERATE_RTOL
    if ms_pool <= floor:
        df_sat = float(df1 + df2)
    else:
        ms1, ms2 = ss1 / df1, ss2 / df2
        c1 = df1 / (df1 + df2)
        c2 = df2 / (df1 + df2)
        df_sat = ms_pool**2 / ((c1 * ms1) ** 2 / df1 + (c2 * ms2) ** 2 / df2)

    n = table.n_subjects
    se = np.sqrt(2.0 * ms_pool / n)
    cell_means = table.values.mean(axis=0)

    pairs = []
    for i, target in enumerate(table.target_levels):
        for j in range(1, len(table.displacement_levels)):
            hi = table.displacement_levels[j]
            lo = table.displacement_levels[j - 1]
            delta = float(cell_means[i, j] - cell_means[i, j - 1])
            if se == 0.0:
                t_val = 0.0 if delta == 0.0 else float("inf") * np.sign(delta)
                p = 1.0 if delta == 0.0 else 0.0
            else:
                t_val = delta / se
                p = _t_tail_two_sided(t_val, df_sat)
            pairs.append(Comparison(
                label=f"{target:g}N: {hi:g}mm vs {lo:g}mm",
                target_force_n=target,
                displacement_hi_mm=hi,
                displacement_lo_mm=lo,
                delta=delta, t=t_val, df=df_sat, p_raw=p))

    adjusted = holm_adjust([c.p_raw for c in pairs])
    for comparison, p_holm in zip(pairs, adjusted):
        comparison.p_holm = float(p_holm)
    return ComparisonResult(pairs=pairs, ms_pool=float(ms_pool),
                            df_pool=float(df_sat))
