"""Brute-force reference statistics for a two-way within-subject design.

Everything here is written with explicit loops and textbook sums-of-squares
formulas, independently of the library implementation, so the two can be
compared against each other. Tail probabilities come from mpmath's
incomplete beta function rather than scipy.

Run directly to print the reference numbers for the frozen test dataset:

    python tests/oracles/anova_oracle.py
"""

from __future__ import annotations

import mpmath as mp

mp.mp.dps = 30


def f_sf(f, df1, df2):
    """Upper tail of the F distribution via the regularized incomplete beta."""
    if f <= 0:
        return 1.0
    x = df2 / (df2 + df1 * f)
    return float(mp.betainc(df2 / 2, df1 / 2, 0, x, regularized=True))


def t_sf_two_sided(t, df):
    """Two-sided tail probability of Student's t."""
    x = df / (df + t * t)
    return float(mp.betainc(df / 2, mp.mpf(1) / 2, 0, x, regularized=True))


def rm_anova_brute(values):
    """values[s][i][j]: subject s, factor-A level i, factor-B level j.

    Returns a dict of SS, df, MS, F and p for the A, B and A:B effects with
    their within-subject error terms.
    """
    n = len(values)
    a = len(values[0])
    b = len(values[0][0])

    total = 0.0
    count = 0
    for s in range(n):
        for i in range(a):
            for j in range(b):
                total += values[s][i][j]
                count += 1
    gm = total / count

    def mean_subject(s):
        return sum(values[s][i][j] for i in range(a) for j in range(b)) / (a * b)

    def mean_a(i):
        return sum(values[s][i][j] for s in range(n) for j in range(b)) / (n * b)

    def mean_b(j):
        return sum(values[s][i][j] for s in range(n) for i in range(a)) / (n * a)

    def mean_ab(i, j):
        return sum(values[s][i][j] for s in range(n)) / n

    def mean_as(s, i):
        return sum(values[s][i][j] for j in range(b)) / b

    def mean_bs(s, j):
        return sum(values[s][i][j] for i in range(a)) / a

    ss_subject = a * b * sum((mean_subject(s) - gm) ** 2 for s in range(n))
    ss_a = n * b * sum((mean_a(i) - gm) ** 2 for i in range(a))
    ss_b = n * a * sum((mean_b(j) - gm) ** 2 for j in range(b))
    ss_ab = n * sum(
        (mean_ab(i, j) - mean_a(i) - mean_b(j) + gm) ** 2
        for i in range(a)
        for j in range(b)
    )
    ss_as = b * sum(
        (mean_as(s, i) - mean_subject(s) - mean_a(i) + gm) ** 2
        for s in range(n)
        for i in range(a)
    )
    ss_bs = a * sum(
        (mean_bs(s, j) - mean_subject(s) - mean_b(j) + gm) ** 2
        for s in range(n)
        for j in range(b)
    )
    ss_total = sum(
        (values[s][i][j] - gm) ** 2
        for s in range(n)
        for i in range(a)
        for j in range(b)
    )
    ss_abs = ss_total - ss_subject - ss_a - ss_b - ss_ab - ss_as - ss_bs

    out = {"ss_subject": ss_subject, "ss_total": ss_total, "n": n, "a": a, "b": b}
    for name, ss_eff, df_eff, ss_err, df_err in [
        ("A", ss_a, a - 1, ss_as, (a - 1) * (n - 1)),
        ("B", ss_b, b - 1, ss_bs, (b - 1) * (n - 1)),
        ("AB", ss_ab, (a - 1) * (b - 1), ss_abs, (a - 1) * (b - 1) * (n - 1)),
    ]:
        ms_eff = ss_eff / df_eff
        ms_err = ss_err / df_err
        f = ms_eff / ms_err
        out[name] = {
            "ss": ss_eff,
            "df": df_eff,
            "ms": ms_eff,
            "error_ss": ss_err,
            "error_df": df_err,
            "error_ms": ms_err,
            "F": f,
            "p": f_sf(f, df_eff, df_err),
        }
    return out


def planned_comparisons_brute(values, pairs):
    """Within-B-level pairwise comparisons pooled over the B and A:B error terms.

    pairs: list of (a_level, b_hi, b_lo, label). t uses the pooled
    MS = (SS_BxS + SS_ABxS) / (df_BxS + df_ABxS) with Satterthwaite df, the
    Holm step-down adjustment is applied over all pairs jointly.
    """
    anova = rm_anova_brute(values)
    n = anova["n"]
    ss1, df1 = anova["B"]["error_ss"], anova["B"]["error_df"]
    ss2, df2 = anova["AB"]["error_ss"], anova["AB"]["error_df"]
    ms_pool = (ss1 + ss2) / (df1 + df2)
    ms1, ms2 = ss1 / df1, ss2 / df2
    c1 = df1 / (df1 + df2)
    c2 = df2 / (df1 + df2)
    df_sat = ms_pool**2 / ((c1 * ms1) ** 2 / df1 + (c2 * ms2) ** 2 / df2)
    se = (2 * ms_pool / n) ** 0.5

    rows = []
    for a_level, b_hi, b_lo, label in pairs:
        hi = sum(values[s][a_level][b_hi] for s in range(n)) / n
        lo = sum(values[s][a_level][b_lo] for s in range(n)) / n
        delta = hi - lo
        t = delta / se
        p = t_sf_two_sided(abs(t), df_sat)
        rows.append({"label": label, "delta": delta, "t": t, "df": df_sat, "p_raw": p})

    # Holm step-down
    order = sorted(range(len(rows)), key=lambda k: rows[k]["p_raw"])
    m = len(rows)
    running = 0.0
    for rank, k in enumerate(order):
        adj = min(1.0, (m - rank) * rows[k]["p_raw"])
        running = max(running, adj)
        rows[k]["p_holm"] = running
    return rows, ms_pool, df_sat


# Fixed hand dataset: 4 subjects x 2 target levels x 3 displacement levels.
HAND_DATASET = [
    [[1.0, 2.0, 4.0], [1.0, 2.0, 2.0]],
    [[2.0, 3.0, 5.0], [1.0, 3.0, 3.0]],
    [[1.0, 3.0, 4.0], [2.0, 2.0, 3.0]],
    [[2.0, 4.0, 6.0], [1.0, 2.0, 2.0]],
]

HAND_PAIRS = [
    (0, 1, 0, "A0: B1-B0"),
    (0, 2, 1, "A0: B2-B1"),
    (1, 1, 0, "A1: B1-B0"),
    (1, 2, 1, "A1: B2-B1"),
]


if __name__ == "__main__":
    res = rm_anova_brute(HAND_DATASET)
    print("ss_subject =", res["ss_subject"])
    print("ss_total   =", res["ss_total"])
    for name in ("A", "B", "AB"):
        e = res[name]
        print(
            f"{name}: SS={e['ss']:.15g} df={e['df']} errSS={e['error_ss']:.15g} "
            f"errdf={e['error_df']} F={e['F']:.15g} p={e['p']:.15g}"
        )
    rows, ms_pool, df_sat = planned_comparisons_brute(HAND_DATASET, HAND_PAIRS)
    print(f"ms_pool={ms_pool:.15g} df_sat={df_sat:.15g}")
    for r in rows:
        print(
            f"{r['label']}: delta={r['delta']:.15g} t={r['t']:.15g} "
            f"p_raw={r['p_raw']:.15g} p_holm={r['p_holm']:.15g}"
        )
