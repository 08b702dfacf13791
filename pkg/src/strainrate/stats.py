"""Agreement statistics between the two rate schemes.

Differences are always scheme 1 minus scheme 2; scheme 2 is the reference in
the percentage errors (per-sample percentages, averaged, with near-zero
references excluded by a 1e-9 magnitude mask).  Limits of agreement use the
standard 1.96 multiplier on the sample (n-1) standard deviation.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import stats as _sps

from .aggregate import ImpactMetrics
from .errors import (
    DegenerateDifferences,
    DegenerateGroups,
    SampleTooSmall,
    ShapeMismatch,
)

#: |reference| below this is excluded from MPE / MAPE
REFERENCE_FLOOR = 1e-9

#: Bland-Altman limits-of-agreement multiplier
LOA_MULTIPLIER = 1.96

ALPHA = 0.05


@dataclass
class ErrorStats:
    me: float
    mae: float
    rmse: float
    mpe: float | None          # percent; None when no reference exceeds the floor
    mape: float | None         # percent; same mask as mpe
    loa_upper: float
    loa_lower: float
    n: int
    n_reference_excluded: int = 0


@dataclass
class TTestResult:
    t_statistic: float
    degrees_of_freedom: int
    p_value: float
    significant_at_05: bool


@dataclass
class NormalityResult:
    statistic: float
    p_value: float
    normal_at_05: bool


@dataclass
class AnovaResult:
    f_statistic: float
    df_between: int
    df_within: int
    p_value: float


def _paired(a, b):
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.size != b.size:
        raise ShapeMismatch(f"paired inputs differ in length: {a.size} vs {b.size}")
    return a, b


def error_stats(a, b) -> ErrorStats:
    """Difference statistics for paired samples, d = a - b.

    ME = mean(d); MAE = mean|d|; RMSE = sqrt(mean d^2);
    MPE / MAPE = mean per-sample (absolute) percentage of the reference b,
    over samples with |b| >= 1e-9 (None if the mask is empty);
    LoA = ME +- 1.96 * SD(d).
    """
    a, b = _paired(a, b)
    if a.size < 2:
        raise SampleTooSmall(f"error statistics need n >= 2, got {a.size}")
    d = a - b
    me = float(d.mean())
    mae = float(np.abs(d).mean())
    rmse = float(np.sqrt((d * d).mean()))
    sd = float(d.std(ddof=1))
    mask = np.abs(b) >= REFERENCE_FLOOR
    if mask.any():
        mpe = float((100.0 * d[mask] / b[mask]).mean())
        mape = float((100.0 * np.abs(d[mask]) / np.abs(b[mask])).mean())
    else:
        mpe = None
        mape = None
    return ErrorStats(
        me=me,
        mae=mae,
        rmse=rmse,
        mpe=mpe,
        mape=mape,
        loa_upper=me + LOA_MULTIPLIER * sd,
        loa_lower=me - LOA_MULTIPLIER * sd,
        n=int(a.size),
        n_reference_excluded=int(a.size - mask.sum()),
    )


def bland_altman_points(a, b) -> np.ndarray:
    """Pairs ((a_i + b_i) / 2, a_i - b_i) in input order, shape (n, 2)."""
    a, b = _paired(a, b)
    return np.column_stack([(a + b) / 2.0, a - b])


def paired_t_test(a, b) -> TTestResult:
    """Two-sided paired t-test on d = a - b."""
    a, b = _paired(a, b)
    n = a.size
    if n < 2:
        raise SampleTooSmall(f"paired t-test needs n >= 2, got {n}")
    d = a - b
    sd = float(d.std(ddof=1))
    if sd == 0.0:
        raise DegenerateDifferences("paired differences have zero variance")
    t = float(d.mean() / (sd / np.sqrt(n)))
    df = n - 1
    p = float(2.0 * _sps.t.sf(abs(t), df))
    return TTestResult(t, df, p, p < ALPHA)


def normality_test(d) -> NormalityResult:
    """D'Agostino-Pearson K^2 omnibus test (skewness + kurtosis transforms).

    p from chi-square with 2 degrees of freedom; requires n >= 20 for the
    kurtosis transform to be reliable.
    """
    d = np.asarray(d, dtype=float).ravel()
    if d.size < 20:
        raise SampleTooSmall(f"normality test needs n >= 20, got {d.size}")
    stat, p = _sps.normaltest(d)
    return NormalityResult(float(stat), float(p), bool(p >= ALPHA))


def one_way_anova(groups) -> AnovaResult:
    """One-way fixed-effects ANOVA over >= 2 groups."""
    arrays = [np.asarray(g, dtype=float).ravel() for g in groups]
    if len(arrays) < 2:
        raise SampleTooSmall(f"ANOVA needs >= 2 groups, got {len(arrays)}")
    if any(g.size < 2 for g in arrays):
        raise SampleTooSmall("every ANOVA group needs n >= 2")
    grand = np.concatenate(arrays).mean()
    ss_between = sum(g.size * (g.mean() - grand) ** 2 for g in arrays)
    ss_within = sum(((g - g.mean()) ** 2).sum() for g in arrays)
    df_between = len(arrays) - 1
    df_within = sum(g.size for g in arrays) - len(arrays)
    if ss_within == 0.0:
        raise DegenerateGroups("zero within-group variance")
    f = float((ss_between / df_between) / (ss_within / df_within))
    p = float(_sps.f.sf(f, df_between, df_within))
    return AnovaResult(f, df_between, df_within, p)


# --- scheme comparison report (per-dataset rows + the two average rows) ---

class ComparisonLevel(Enum):
    ELEMENT = "element"   # samples are per-element peaks, pooled within a dataset
    IMPACT = "impact"     # samples are per-impact 95th percentiles


class MetricPair(Enum):
    MPSR = "mpsr"
    MPSXSR = "mpsxsr"


_PAIR_ELEMENT_FIELDS = {
    MetricPair.MPSR: ("mpsr1", "mpsr2"),
    MetricPair.MPSXSR: ("mps_x_sr1", "mps_x_sr2"),
}
_PAIR_SUMMARY_FIELDS = {
    MetricPair.MPSR: ("p95_mpsr1", "p95_mpsr2"),
    MetricPair.MPSXSR: ("p95_mps_x_sr1", "p95_mps_x_sr2"),
}

BY_IMPACTS_LABEL = "Average by Impacts"
BY_DATASETS_LABEL = "Average by Datasets"


@dataclass
class ComparisonRow:
    label: str
    stats: ErrorStats | None
    t_test: TTestResult | None
    normality: NormalityResult | None


@dataclass
class ComparisonReport:
    level: ComparisonLevel
    pair: MetricPair
    rows: list[ComparisonRow]

    def row(self, label: str) -> ComparisonRow:
        for r in self.rows:
            if r.label == label:
                return r
        raise KeyError(label)


def _samples_by_dataset(impact_metrics, level, pair):
    by_tag: dict[str, tuple[list, list]] = {}
    for im in impact_metrics:
        a, b = by_tag.setdefault(im.dataset_tag, ([], []))
        if level is ComparisonLevel.ELEMENT:
            f1, f2 = _PAIR_ELEMENT_FIELDS[pair]
            a.extend(getattr(em, f1) for em in im.elements)
            b.extend(getattr(em, f2) for em in im.elements)
        else:
            f1, f2 = _PAIR_SUMMARY_FIELDS[pair]
            a.append(getattr(im.summary, f1))
            b.append(getattr(im.summary, f2))
    return {tag: (np.asarray(a), np.asarray(b)) for tag, (a, b) in sorted(by_tag.items())}


def _row_for(label, a, b) -> ComparisonRow:
    try:
        st = error_stats(a, b)
    except SampleTooSmall:
        return ComparisonRow(label, None, None, None)
    try:
        tt = paired_t_test(a, b)
    except (SampleTooSmall, DegenerateDifferences):
        tt = None
    norm = None
    if a.size >= 20 and np.ptp(a - b) != 0.0:  # K^2 is meaningless on constants
        norm = normality_test(a - b)
    return ComparisonRow(label, st, tt, norm)


def _mean_of_stats(rows) -> ErrorStats | None:
    stats = [r.stats for r in rows if r.stats is not None]
    if not stats:
        return None

    def mean_of(field):
        vals = [getattr(s, field) for s in stats if getattr(s, field) is not None]
        return float(np.mean(vals)) if vals else None

    return ErrorStats(
        me=mean_of("me"),
        mae=mean_of("mae"),
        rmse=mean_of("rmse"),
        mpe=mean_of("mpe"),
        mape=mean_of("mape"),
        loa_upper=mean_of("loa_upper"),
        loa_lower=mean_of("loa_lower"),
        n=sum(s.n for s in stats),
        n_reference_excluded=sum(s.n_reference_excluded for s in stats),
    )


def scheme_comparison_report(
    impact_metrics: list[ImpactMetrics],
    level: ComparisonLevel,
    pair: MetricPair,
) -> ComparisonReport:
    """Scheme-1 vs scheme-2 difference table.

    One row per dataset tag (sorted), then two average rows:
    "Average by Impacts" pools every sample across datasets before computing
    the statistics; "Average by Datasets" averages the per-dataset statistic
    values (unweighted).
    """
    impact_metrics = list(impact_metrics)
    if not impact_metrics:
        raise SampleTooSmall("comparison report needs at least one impact")
    per_dataset = _samples_by_dataset(impact_metrics, level, pair)
    rows = [_row_for(tag, a, b) for tag, (a, b) in per_dataset.items()]

    pooled_a = np.concatenate([a for a, _ in per_dataset.values()])
    pooled_b = np.concatenate([b for _, b in per_dataset.values()])
    rows.append(_row_for(BY_IMPACTS_LABEL, pooled_a, pooled_b))

    dataset_rows = rows[:-1]
    rows.append(ComparisonRow(BY_DATASETS_LABEL, _mean_of_stats(dataset_rows), None, None))
    return ComparisonReport(level, pair, rows)


def comparison_samples(impact_metrics, level, pair):
    """Pooled (scheme1, scheme2) sample arrays across all datasets.

    The raw material for Bland-Altman point files and plots.
    """
    per_dataset = _samples_by_dataset(impact_metrics, level, pair)
    a = np.concatenate([a for a, _ in per_dataset.values()])
    b = np.concatenate([b for _, b in per_dataset.values()])
    return a, b
