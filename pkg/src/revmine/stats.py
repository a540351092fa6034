"""Group comparisons of feature tables: Welch t-tests, outlier policy, trends."""

from __future__ import annotations

import math
from collections.abc import Iterable, Sequence
from dataclasses import asdict, dataclass, field
from typing import Any

from .features import FeatureRecord

GROUPS = ("G1", "G2")

# (attribute, table label) in report order
SUMMARY_FEATURES = (
    ("num_revisions", "Number of Revisions"),
    ("num_edits", "Number of Edits"),
    ("time_revising_s", "Time Spent Revising (sec)"),
    ("pause_mean_s", "Pause Time in Revision (sec)"),
)
GENDER_FEATURES = (
    ("efficiency_ins_per_s", "Efficiency"),
    ("di_ratio", "DIRatio"),
)


# ---------------------------------------------------------------------------
# t distribution


def _betacf(a: float, b: float, x: float, eps: float = 1e-16, max_iter: int = 10_000) -> float:
    """Continued fraction for the incomplete beta function (modified Lentz)."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            return h
    raise ArithmeticError(f"incomplete beta did not converge (a={a}, b={b}, x={x})")


def betainc(a: float, b: float, x: float, y: float | None = None) -> float:
    """Regularized incomplete beta I_x(a, b). Pass ``y = 1 - x`` if known more precisely."""
    if y is None:
        y = 1.0 - x
    if x <= 0.0:
        return 0.0
    if y <= 0.0:
        return 1.0
    log_front = math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b) + a * math.log(x) + b * math.log(y)
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, y) / b


def t_two_sided_p(t: float, df: float) -> float:
    """P(|T| >= |t|) for Student's t with *df* degrees of freedom."""
    if math.isinf(t):
        return 0.0
    t2 = t * t
    return min(1.0, betainc(df / 2.0, 0.5, df / (df + t2), t2 / (df + t2)))


# ---------------------------------------------------------------------------
# descriptive


def mean(xs: Sequence[float]) -> float | None:
    return math.fsum(xs) / len(xs) if xs else None


def sample_std(xs: Sequence[float]) -> float | None:
    """Standard deviation with n - 1 in the denominator; ``None`` below two values."""
    if len(xs) < 2:
        return None
    m = math.fsum(xs) / len(xs)
    return math.sqrt(math.fsum((x - m) ** 2 for x in xs) / (len(xs) - 1))


@dataclass(frozen=True)
class WelchResult:
    t: float
    df: float
    p: float


def welch_t_test(a: Sequence[float], b: Sequence[float]) -> WelchResult | None:
    """Two-sided Welch (unequal variance) t-test.

    Returns ``None`` when a sample has fewer than two values, or when both
    samples are constant with different values (the statistic is infinite).
    Two constant samples with the same value give ``t = 0, p = 1``.
    """
    n1, n2 = len(a), len(b)
    if n1 < 2 or n2 < 2:
        return None
    m1, m2 = math.fsum(a) / n1, math.fsum(b) / n2
    v1 = math.fsum((x - m1) ** 2 for x in a) / (n1 - 1)
    v2 = math.fsum((x - m2) ** 2 for x in b) / (n2 - 1)
    s1, s2 = v1 / n1, v2 / n2
    se2 = s1 + s2
    if se2 == 0.0:
        if m1 == m2:
            return WelchResult(0.0, float(n1 + n2 - 2), 1.0)
        return None
    t = (m1 - m2) / math.sqrt(se2)
    # normalise before squaring so tiny variances cannot underflow to 0/0
    w1, w2 = s1 / se2, s2 / se2
    df = 1.0 / (w1 * w1 / (n1 - 1) + w2 * w2 / (n2 - 1))
    return WelchResult(t, df, t_two_sided_p(t, df))


# ---------------------------------------------------------------------------
# outliers


@dataclass(frozen=True)
class OutlierPolicy:
    max_time_revising_s: float = 10_000.0
    min_efficiency_ins_per_s: float = 0.05

    def __post_init__(self) -> None:
        if not (self.max_time_revising_s > 0 and self.min_efficiency_ins_per_s > 0):
            raise ValueError("outlier bounds must be positive")


@dataclass(frozen=True)
class Removal:
    record: FeatureRecord
    reasons: tuple[str, ...]


def outlier_reasons(rec: FeatureRecord, policy: OutlierPolicy) -> tuple[str, ...]:
    reasons = []
    if rec.time_revising_s > policy.max_time_revising_s:
        reasons.append("max_time")
    if rec.efficiency_ins_per_s is not None and rec.efficiency_ins_per_s < policy.min_efficiency_ins_per_s:
        reasons.append("min_efficiency")
    return tuple(reasons)


def filter_outliers(
    records: Iterable[FeatureRecord], policy: OutlierPolicy
) -> tuple[list[FeatureRecord], list[Removal]]:
    """Drop rows revising longer than the maximum or typing slower than the minimum."""
    kept, removed = [], []
    for rec in records:
        reasons = outlier_reasons(rec, policy)
        if reasons:
            removed.append(Removal(rec, reasons))
        else:
            kept.append(rec)
    return kept, removed


# ---------------------------------------------------------------------------
# group summaries


@dataclass(frozen=True)
class SummaryRow:
    feature: str
    label: str
    g1_mean: float | None
    g1_std: float | None
    g2_mean: float | None
    g2_std: float | None
    p_value: float | None
    n1: int
    n2: int
    t: float | None = None
    df: float | None = None
    notes: tuple[str, ...] = field(default=())


def _values(records: Iterable[FeatureRecord], attr: str) -> tuple[list[float], int]:
    vals, undefined = [], 0
    for r in records:
        v = getattr(r, attr)
        if v is None:
            undefined += 1
        else:
            vals.append(float(v))
    return vals, undefined


def summary_row(attr: str, label: str, g1: Sequence[FeatureRecord], g2: Sequence[FeatureRecord]) -> SummaryRow:
    a, undef_a = _values(g1, attr)
    b, undef_b = _values(g2, attr)
    notes = []
    if undef_a or undef_b:
        notes.append(f"undefined values excluded: G1={undef_a}, G2={undef_b}")
    for name, xs in (("G1", a), ("G2", b)):
        if not xs:
            notes.append(f"{name} sample empty")
    res = welch_t_test(a, b)
    if res is None and a and b:
        notes.append("t-test undefined (fewer than two values or zero variance with different means)")
    return SummaryRow(
        feature=attr,
        label=label,
        g1_mean=mean(a),
        g1_std=sample_std(a),
        g2_mean=mean(b),
        g2_std=sample_std(b),
        p_value=res.p if res else None,
        n1=len(a),
        n2=len(b),
        t=res.t if res else None,
        df=res.df if res else None,
        notes=tuple(notes),
    )


def summarize_by_group(
    features: Iterable[FeatureRecord], recipe: int, policy: OutlierPolicy | None = None
) -> list[SummaryRow]:
    """G1 vs G2 means, sample stds and Welch p-values for one recipe ordinal."""
    rows = [r for r in features if r.recipe_ordinal == recipe]
    if policy is not None:
        rows, _ = filter_outliers(rows, policy)
    g1 = [r for r in rows if r.group == "G1"]
    g2 = [r for r in rows if r.group == "G2"]
    return [summary_row(attr, label, g1, g2) for attr, label in SUMMARY_FEATURES]


# ---------------------------------------------------------------------------
# gender


@dataclass(frozen=True)
class UserAggregate:
    user_id: str
    group: str | None
    gender: str | None
    times_revised: int
    time_revising_s: float
    efficiency_ins_per_s: float | None
    di_ratio: float | None


def per_user(features: Iterable[FeatureRecord]) -> list[UserAggregate]:
    """Collapse a user's recipe rows: totals for counts/time, means of defined ratios."""
    by_user: dict[str, list[FeatureRecord]] = {}
    for r in features:
        by_user.setdefault(r.user_id, []).append(r)
    out = []
    for user in sorted(by_user):
        rs = by_user[user]
        eff = [r.efficiency_ins_per_s for r in rs if r.efficiency_ins_per_s is not None]
        dir_ = [r.di_ratio for r in rs if r.di_ratio is not None]
        out.append(
            UserAggregate(
                user_id=user,
                group=rs[0].group,
                gender=rs[0].gender,
                times_revised=sum(r.num_revisions for r in rs),
                time_revising_s=math.fsum(r.time_revising_s for r in rs),
                efficiency_ins_per_s=mean(eff),
                di_ratio=mean(dir_),
            )
        )
    return out


@dataclass(frozen=True)
class GenderComparison:
    feature: str
    group: str
    n_female: int
    n_male: int
    female_mean: float | None
    male_mean: float | None
    t: float | None
    p_value: float | None
    notes: tuple[str, ...] = ()


def gender_compare(
    features: Iterable[FeatureRecord], group: str, policy: OutlierPolicy | None = None
) -> dict[str, GenderComparison]:
    """Female vs male Welch tests on per-user efficiency and DIRatio within one group."""
    rows = [r for r in features if r.group == group]
    if policy is not None:
        rows, _ = filter_outliers(rows, policy)
    users = per_user(rows)
    out = {}
    for attr, _label in GENDER_FEATURES:
        fem = [getattr(u, attr) for u in users if u.gender == "female" and getattr(u, attr) is not None]
        mal = [getattr(u, attr) for u in users if u.gender == "male" and getattr(u, attr) is not None]
        notes = []
        if not fem:
            notes.append("no female rows")
        if not mal:
            notes.append("no male rows")
        res = welch_t_test(fem, mal)
        if res is None and not notes:
            notes.append("t-test undefined (fewer than two values or zero variance with different means)")
        out[attr] = GenderComparison(
            attr, group, len(fem), len(mal), mean(fem), mean(mal),
            res.t if res else None, res.p if res else None, tuple(notes),
        )
    return out


# ---------------------------------------------------------------------------
# engagement


def percent_change(before: float | None, after: float | None) -> float | None:
    """``100 * (after - before) / before``; ``None`` if undefined."""
    if before is None or after is None or before == 0:
        return None
    return 100.0 * (after - before) / before


def engagement_trend(
    features: Iterable[FeatureRecord],
    policy: OutlierPolicy | None = None,
    first: int = 1,
    last: int = 3,
) -> dict[str, dict[str, dict[str, float | None]]]:
    """Per group and feature: mean at recipe *first*, at recipe *last*, and the percent change."""
    features = list(features)
    before = summarize_by_group(features, first, policy)
    after = summarize_by_group(features, last, policy)
    out: dict[str, dict[str, dict[str, float | None]]] = {}
    for g, key in (("G1", "g1_mean"), ("G2", "g2_mean")):
        out[g] = {}
        for b_row, a_row in zip(before, after):
            m1, m3 = getattr(b_row, key), getattr(a_row, key)
            out[g][b_row.feature] = {
                f"mean_recipe{first}": m1,
                f"mean_recipe{last}": m3,
                "percent_change": percent_change(m1, m3),
            }
    return out


# ---------------------------------------------------------------------------
# report


def stats_report(
    features: Sequence[FeatureRecord], policy: OutlierPolicy, first: int = 1, last: int = 3
) -> dict[str, Any]:
    """Everything that goes into ``stats.json`` apart from provenance."""
    recipes = sorted({r.recipe_ordinal for r in features})
    ungrouped = sorted({r.user_id for r in features if r.group not in GROUPS})
    _, removed = filter_outliers(features, policy)
    return {
        "policy": asdict(policy),
        "recipes": {
            str(k): [asdict(row) for row in summarize_by_group(features, k, policy)] for k in recipes
        },
        "gender": {g: {a: asdict(c) for a, c in gender_compare(features, g, policy).items()} for g in GROUPS},
        "trend": {"from_recipe": first, "to_recipe": last, "groups": engagement_trend(features, policy, first, last)},
        "outliers": [
            {"user_id": r.record.user_id, "recipe": r.record.recipe_ordinal, "reasons": list(r.reasons)}
            for r in removed
        ],
        "users_without_group": ungrouped,
    }
