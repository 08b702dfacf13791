"""Whole-brain per-impact summaries.

Peaks are taken per element first; the 95th percentile across elements is
taken second.  The percentile estimator interpolates linearly between closest
order statistics (rank ``h = (n - 1) p + 1`` on 1-based sorted data), the
common convention in scientific software.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyCollection, InvalidValue
from .metrics import ElementHistory, ElementMetrics, compute_element_metrics

SUMMARY_FIELDS = ("p95_mps", "p95_mpsr1", "p95_mpsr2", "p95_mps_x_sr1", "p95_mps_x_sr2")
METRIC_FIELDS = ("mps", "mpsr1", "mpsr2", "mps_x_sr1", "mps_x_sr2")


def percentile(values, p: float) -> float:
    """Percentile by linear interpolation between closest order statistics.

    With n sorted values and rank h = (n - 1) p + 1 (1-based),
    result = x_floor(h) + (h - floor(h)) * (x_floor(h)+1 - x_floor(h)).
    ``percentile(v, 0.0)`` is the minimum, ``percentile(v, 1.0)`` the maximum.
    """
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        raise EmptyCollection("percentile of an empty collection")
    if not np.isfinite(v).all():
        raise InvalidValue("percentile input contains non-finite values")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"percentile fraction must be in [0, 1], got {p}")
    v = np.sort(v)
    h = (v.size - 1) * p
    i = int(np.floor(h))
    frac = h - i
    if frac == 0.0 or i + 1 >= v.size:
        return float(v[i])
    return float(v[i] + frac * (v[i + 1] - v[i]))


@dataclass
class ImpactRecord:
    """All element histories of one head impact."""

    impact_id: str
    dataset_tag: str
    elements: list[ElementHistory]
    injury_label: bool | None = None

    def __post_init__(self):
        if len(self.elements) == 0:
            raise EmptyCollection(f"impact {self.impact_id!r} has no elements")
        ids = [el.element_id for el in self.elements]
        if len(set(ids)) != len(ids):
            raise ValueError(f"impact {self.impact_id!r}: duplicate element ids")
        dts = {el.dt for el in self.elements}
        if len(dts) != 1:
            raise ValueError(f"impact {self.impact_id!r}: elements disagree on dt: {sorted(dts)}")

    @property
    def dt(self) -> float:
        return self.elements[0].dt


@dataclass
class ImpactSummary:
    """95th-percentile peak metrics across the impact's elements."""

    impact_id: str
    dataset_tag: str
    injury_label: bool | None
    p95_mps: float
    p95_mpsr1: float
    p95_mpsr2: float
    p95_mps_x_sr1: float
    p95_mps_x_sr2: float


@dataclass
class ImpactMetrics:
    """Per-impact bundle: every element's metrics plus the percentile summary."""

    impact_id: str
    dataset_tag: str
    injury_label: bool | None
    elements: list[ElementMetrics]
    summary: ImpactSummary = field(init=False)

    def __post_init__(self):
        self.summary = _summarize(
            self.impact_id, self.dataset_tag, self.injury_label, self.elements
        )


def _summarize(impact_id, dataset_tag, injury_label, element_metrics) -> ImpactSummary:
    p95 = {
        f"p95_{name}": percentile([getattr(em, name) for em in element_metrics], 0.95)
        for name in METRIC_FIELDS
    }
    return ImpactSummary(impact_id, dataset_tag, injury_label, **p95)


def compute_impact_metrics(record: ImpactRecord) -> ImpactMetrics:
    """Element metrics for every element of the impact, plus the summary."""
    per_element = [compute_element_metrics(el) for el in record.elements]
    return ImpactMetrics(record.impact_id, record.dataset_tag, record.injury_label, per_element)


def impact_summary(record: ImpactRecord) -> ImpactSummary:
    """0.95 percentile of each per-element peak metric across elements."""
    return compute_impact_metrics(record).summary


def dataset_summaries(records) -> list[ImpactSummary]:
    """One summary per impact, sorted by impact_id."""
    records = list(records)
    if not records:
        raise EmptyCollection("no impact records")
    return [impact_summary(r) for r in sorted(records, key=lambda r: r.impact_id)]
