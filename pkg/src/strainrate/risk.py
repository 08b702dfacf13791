"""Injury-risk pipeline: logistic models, thresholds, split evaluation, misuse rates.

A single scalar predictor (one whole-brain strain-rate variable per model) is
fit against a binary injury label by maximum likelihood.  The 50%-risk
threshold -beta0/beta1 then classifies impacts with a >= convention (a value
exactly at the threshold counts as injurious).
"""

import math
import warnings
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import (
    EmptyCollection,
    FlatModel,
    InvertedRiskDirection,
    SeparationDetected,
    ShapeMismatch,
    SingleClass,
    SingularDesign,
)
from .seeding import derive_rng

#: |standardized slope| beyond this is treated as (quasi-)complete separation
SEPARATION_BOUND = 50.0

#: IRLS stops when the deviance changes by less than this
DEVIANCE_TOL = 1e-10

MAX_ITERATIONS = 100


@dataclass
class LabeledCohort:
    """One risk variable's values with binary injury labels."""

    values: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).ravel()
        self.labels = np.asarray(self.labels, dtype=bool).ravel()
        if self.values.size != self.labels.size:
            raise ShapeMismatch(
                f"values ({self.values.size}) and labels ({self.labels.size}) differ in length"
            )
        if self.values.size == 0:
            raise EmptyCollection("empty cohort")
        if not np.isfinite(self.values).all():
            raise ValueError("cohort values must be finite")

    @property
    def n_positive(self) -> int:
        return int(self.labels.sum())

    @property
    def n_negative(self) -> int:
        return int((~self.labels).sum())


@dataclass
class LogisticModel:
    beta0: float
    beta1: float
    deviance: float
    converged: bool
    iterations: int

    def probability(self, x):
        """Fitted risk p(x) = 1 / (1 + exp(-(beta0 + beta1 x)))."""
        eta = self.beta0 + self.beta1 * np.asarray(x, dtype=float)
        return 1.0 / (1.0 + np.exp(-eta))


def _deviance(eta, y):
    # -2 sum [y log p + (1-y) log(1-p)], stable via logaddexp
    ll = np.where(y, -np.logaddexp(0.0, -eta), -np.logaddexp(0.0, eta))
    return -2.0 * float(ll.sum())


def null_deviance(labels) -> float:
    """Deviance of the intercept-only model (slope forced to zero)."""
    y = np.asarray(labels, dtype=bool).ravel()
    n_pos = int(y.sum())
    n = y.size
    if n_pos == 0 or n_pos == n:
        return 0.0
    p = n_pos / n
    return -2.0 * (n_pos * math.log(p) + (n - n_pos) * math.log(1.0 - p))


def fit_logistic(cohort: LabeledCohort) -> LogisticModel:
    """Maximum-likelihood logistic fit of p(x) = sigmoid(beta0 + beta1 x).

    Iteratively reweighted least squares with step-halving, on the
    standardized predictor for conditioning; coefficients are mapped back to
    the raw scale.  Stops when the deviance changes by < 1e-10 or after 100
    iterations.

    Raises
    ------
    SingleClass
        only one outcome class present.
    SingularDesign
        constant predictor; the slope is indeterminate.
    SeparationDetected
        complete separation of the classes, or a standardized slope
        magnitude exceeding 50 during iteration (quasi-separation).
    """
    x, y = cohort.values, cohort.labels
    if cohort.n_positive == 0 or cohort.n_negative == 0:
        raise SingleClass("cohort contains a single outcome class")
    if np.ptp(x) == 0.0:
        raise SingularDesign("constant predictor")
    pos, neg = x[y], x[~y]
    if neg.max() < pos.min() or pos.max() < neg.min():
        raise SeparationDetected("classes are completely separated on the predictor")

    mu, sigma = float(x.mean()), float(x.std())
    z = (x - mu) / sigma
    ybar = cohort.n_positive / x.size
    beta = np.array([math.log(ybar / (1.0 - ybar)), 0.0])
    dev = _deviance(beta[0] + beta[1] * z, y)

    converged = False
    iterations = 0
    for iterations in range(1, MAX_ITERATIONS + 1):
        eta = beta[0] + beta[1] * z
        p = 1.0 / (1.0 + np.exp(-eta))
        w = p * (1.0 - p)
        sw, swz, swzz = float(w.sum()), float((w * z).sum()), float((w * z * z).sum())
        resid = y - p
        rhs = np.array([float(resid.sum()), float((resid * z).sum())])
        hess = np.array([[sw, swz], [swz, swzz]])
        try:
            delta = np.linalg.solve(hess, rhs)
        except np.linalg.LinAlgError:
            raise SingularDesign("weighted design became singular") from None

        step = 1.0
        new_beta, new_dev = beta, dev
        for _ in range(30):
            cand = beta + step * delta
            cand_dev = _deviance(cand[0] + cand[1] * z, y)
            if cand_dev <= dev + 1e-12:
                new_beta, new_dev = cand, cand_dev
                break
            step *= 0.5
        else:
            break  # no step improves the deviance; already at the optimum

        beta = new_beta
        if abs(beta[1]) > SEPARATION_BOUND or not np.isfinite(beta).all():
            raise SeparationDetected(
                f"standardized slope {beta[1]:.3g} exceeds {SEPARATION_BOUND}; "
                "quasi-complete separation"
            )
        if abs(dev - new_dev) < DEVIANCE_TOL:
            dev = new_dev
            converged = True
            break
        dev = new_dev

    beta1 = beta[1] / sigma
    beta0 = beta[0] - beta[1] * mu / sigma
    return LogisticModel(float(beta0), float(beta1), float(dev), converged, iterations)


def risk_threshold(model: LogisticModel, risk: float = 0.5) -> float:
    """Predictor value where the fitted risk curve crosses ``risk``.

    For risk = 0.5 this is exactly -beta0/beta1.  A negative slope still
    yields a threshold but flips the classification direction; that case is
    flagged with an InvertedRiskDirection warning.
    """
    if not model.converged:
        raise ValueError("model did not converge; threshold is unreliable")
    if not 0.0 < risk < 1.0:
        raise ValueError(f"risk must be in (0, 1), got {risk}")
    if model.beta1 == 0.0:
        raise FlatModel("zero slope; the risk curve never crosses the requested level")
    threshold = (math.log(risk / (1.0 - risk)) - model.beta0) / model.beta1
    if model.beta1 < 0.0:
        warnings.warn(
            "negative slope: values above the threshold mean LOWER risk",
            InvertedRiskDirection,
            stacklevel=2,
        )
    return threshold


def classify(values, threshold: float) -> np.ndarray:
    """Boolean labels, value >= threshold (ties classify as injurious)."""
    v = np.asarray(values, dtype=float)
    if not np.isfinite(v).all() or not np.isfinite(threshold):
        raise ValueError("classification inputs must be finite")
    return v >= threshold


@dataclass
class ClassificationMetrics:
    accuracy: float
    precision: float
    recall: float
    f1: float
    precision_defined: bool = True  # False: no positive predictions, reported as 0
    recall_defined: bool = True     # False: no positive truths, reported as 0


def classification_metrics(predicted, truth) -> ClassificationMetrics:
    """Confusion-matrix metrics; degenerate ratios report 0 with a flag."""
    pred = np.asarray(predicted, dtype=bool).ravel()
    true = np.asarray(truth, dtype=bool).ravel()
    if pred.size != true.size:
        raise ShapeMismatch(f"predicted ({pred.size}) vs truth ({true.size})")
    if pred.size == 0:
        raise EmptyCollection("no samples to score")
    tp = int((pred & true).sum())
    tn = int((~pred & ~true).sum())
    fp = int((pred & ~true).sum())
    fn = int((~pred & true).sum())
    accuracy = (tp + tn) / pred.size
    precision_defined = (tp + fp) > 0
    recall_defined = (tp + fn) > 0
    precision = tp / (tp + fp) if precision_defined else 0.0
    recall = tp / (tp + fn) if recall_defined else 0.0
    f1 = 2.0 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return ClassificationMetrics(accuracy, precision, recall, f1, precision_defined, recall_defined)


# --- repeated stratified split evaluation ---

@dataclass
class SplitRound:
    round_index: int
    skipped: bool = False
    skip_reason: str | None = None
    threshold: float | None = None
    threshold_source: str | None = None  # "logistic" | "separation_midpoint"
    inverted: bool = False
    metrics: ClassificationMetrics | None = None


@dataclass
class SplitEvaluation:
    rounds: list[SplitRound]
    n_skipped: int = field(init=False)
    mean_accuracy: float | None = field(init=False)
    mean_precision: float | None = field(init=False)
    mean_recall: float | None = field(init=False)
    mean_f1: float | None = field(init=False)

    def __post_init__(self):
        done = [r.metrics for r in self.rounds if not r.skipped]
        self.n_skipped = sum(r.skipped for r in self.rounds)
        if done:
            self.mean_accuracy = float(np.mean([m.accuracy for m in done]))
            self.mean_precision = float(np.mean([m.precision for m in done]))
            self.mean_recall = float(np.mean([m.recall for m in done]))
            self.mean_f1 = float(np.mean([m.f1 for m in done]))
        else:
            self.mean_accuracy = self.mean_precision = None
            self.mean_recall = self.mean_f1 = None


def _stratified_split(cohort, train_fraction, rng):
    pos = np.flatnonzero(cohort.labels)
    neg = np.flatnonzero(~cohort.labels)
    pos = pos[rng.permutation(pos.size)]
    neg = neg[rng.permutation(neg.size)]
    n_pos = int(math.floor(train_fraction * pos.size + 0.5))
    n_neg = int(math.floor(train_fraction * neg.size + 0.5))
    train = np.concatenate([pos[:n_pos], neg[:n_neg]])
    test = np.concatenate([pos[n_pos:], neg[n_neg:]])
    return train, test, n_pos, n_neg


def _separation_midpoint(values, labels):
    """Gap-midpoint threshold for a completely separated training set."""
    pos, neg = values[labels], values[~labels]
    if neg.max() < pos.min():
        return 0.5 * (neg.max() + pos.min()), False
    return 0.5 * (pos.max() + neg.min()), True


def split_evaluation(
    cohort: LabeledCohort,
    rounds: int = 40,
    train_fraction: float = 0.6,
    seed: int = 0,
) -> SplitEvaluation:
    """Repeated stratified train/test evaluation of the 50%-risk classifier.

    Each round: a seeded stratified shuffle-split (class ratios preserved),
    a logistic fit on the training set, classification of the test set at
    the 50%-risk threshold, and confusion-matrix metrics.  Rounds whose
    training set degenerates (single class, constant predictor) are recorded
    as skipped, never silently dropped; a completely separated training set
    falls back to the midpoint of the class gap as threshold.

    Round k draws its generator from (seed, "round", k), so results are
    identical however rounds are scheduled.
    """
    if cohort.n_positive == 0 or cohort.n_negative == 0:
        raise SingleClass("split evaluation needs both classes")
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must be in (0, 1), got {train_fraction}")
    if rounds < 1:
        raise ValueError("rounds must be >= 1")

    results = []
    for k in range(rounds):
        rng = derive_rng(seed, "round", k)
        train, test, n_pos, n_neg = _stratified_split(cohort, train_fraction, rng)
        rnd = SplitRound(round_index=k)
        if n_pos == 0 or n_neg == 0:
            rnd.skipped, rnd.skip_reason = True, "single-class training set"
            results.append(rnd)
            continue
        if test.size == 0:
            rnd.skipped, rnd.skip_reason = True, "empty test set"
            results.append(rnd)
            continue

        train_values, train_labels = cohort.values[train], cohort.labels[train]
        try:
            model = fit_logistic(LabeledCohort(train_values, train_labels))
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", InvertedRiskDirection)
                threshold = risk_threshold(model, 0.5)
            rnd.threshold_source = "logistic"
            rnd.inverted = model.beta1 < 0.0
        except SeparationDetected:
            threshold, rnd.inverted = _separation_midpoint(train_values, train_labels)
            rnd.threshold_source = "separation_midpoint"
        except (SingularDesign, FlatModel) as exc:
            rnd.skipped, rnd.skip_reason = True, type(exc).__name__
            results.append(rnd)
            continue

        rnd.threshold = float(threshold)
        test_values, test_labels = cohort.values[test], cohort.labels[test]
        if rnd.inverted:
            predicted = test_values <= threshold
        else:
            predicted = classify(test_values, threshold)
        rnd.metrics = classification_metrics(predicted, test_labels)
        results.append(rnd)
    return SplitEvaluation(results)


# --- threshold-misuse analysis ---

class MisuseScenario(Enum):
    """Which scheme's value gets compared against which scheme's threshold.

    SN1: scheme-2 rate value vs scheme-1 threshold    (rate pair)
    SN2: scheme-1 rate value vs scheme-2 threshold    (rate pair)
    SN3: scheme-2 product value vs scheme-1 threshold (product pair)
    SN4: scheme-1 product value vs scheme-2 threshold (product pair)
    """

    SN1 = "SN1"
    SN2 = "SN2"
    SN3 = "SN3"
    SN4 = "SN4"


#: scenario -> (metric pair name, summary field of the evaluated value, scheme of the value)
_SCENARIO_TABLE = {
    MisuseScenario.SN1: ("mpsr", "p95_mpsr2", 2),
    MisuseScenario.SN2: ("mpsr", "p95_mpsr1", 1),
    MisuseScenario.SN3: ("mpsxsr", "p95_mps_x_sr2", 2),
    MisuseScenario.SN4: ("mpsxsr", "p95_mps_x_sr1", 1),
}


@dataclass
class DatasetFalseRate:
    n_impacts: int
    n_false: int
    rate: float


@dataclass
class MisuseReport:
    scenario: MisuseScenario
    pair: str
    threshold_scheme1: float
    threshold_scheme2: float
    per_dataset: dict[str, DatasetFalseRate]
    rate_by_impacts: float
    rate_by_datasets: float


def misuse_false_rates(
    summaries,
    scenario: MisuseScenario,
    threshold_scheme1: float,
    threshold_scheme2: float,
) -> MisuseReport:
    """Disagreement rates from classifying with the wrong scheme's threshold.

    For each impact, the scenario's value is classified once against the
    matched scheme's threshold and once against the other scheme's; "false"
    means the two classifications disagree.  Rates come back per dataset,
    pooled over all impacts, and averaged over datasets.
    """
    summaries = list(summaries)
    if not summaries:
        raise EmptyCollection("no impact summaries")
    if not (np.isfinite(threshold_scheme1) and np.isfinite(threshold_scheme2)):
        raise ValueError("thresholds must be finite")
    pair, value_field, value_scheme = _SCENARIO_TABLE[scenario]
    own = threshold_scheme1 if value_scheme == 1 else threshold_scheme2
    wrong = threshold_scheme2 if value_scheme == 1 else threshold_scheme1

    by_tag: dict[str, list[float]] = {}
    for s in summaries:
        by_tag.setdefault(s.dataset_tag, []).append(getattr(s, value_field))

    per_dataset = {}
    total_n = total_false = 0
    for tag in sorted(by_tag):
        v = np.asarray(by_tag[tag])
        false = int((classify(v, wrong) != classify(v, own)).sum())
        per_dataset[tag] = DatasetFalseRate(v.size, false, false / v.size)
        total_n += v.size
        total_false += false

    return MisuseReport(
        scenario=scenario,
        pair=pair,
        threshold_scheme1=threshold_scheme1,
        threshold_scheme2=threshold_scheme2,
        per_dataset=per_dataset,
        rate_by_impacts=total_false / total_n,
        rate_by_datasets=float(np.mean([d.rate for d in per_dataset.values()])),
    )


#: summary attribute for each risk-variable short name
RISK_VARIABLES = {
    "mps": "p95_mps",
    "mpsr1": "p95_mpsr1",
    "mpsr2": "p95_mpsr2",
    "mps_x_sr1": "p95_mps_x_sr1",
    "mps_x_sr2": "p95_mps_x_sr2",
}


def cohort_from_summaries(summaries, variable: str) -> LabeledCohort:
    """Labeled cohort of one whole-brain variable from labeled impacts only."""
    if variable not in RISK_VARIABLES:
        raise ValueError(f"unknown risk variable {variable!r}; choose from {sorted(RISK_VARIABLES)}")
    labeled = [s for s in summaries if s.injury_label is not None]
    if not labeled:
        raise EmptyCollection("no labeled impacts in the dataset")
    field_name = RISK_VARIABLES[variable]
    return LabeledCohort(
        values=[getattr(s, field_name) for s in labeled],
        labels=[s.injury_label for s in labeled],
    )
