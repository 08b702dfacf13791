import math

import numpy as np
import pytest

from strainrate import (
    ImpactSummary,
    LabeledCohort,
    LogisticModel,
    MisuseScenario,
    classification_metrics,
    classify,
    fit_logistic,
    misuse_false_rates,
    null_deviance,
    risk_threshold,
    split_evaluation,
)
from strainrate.errors import (
    EmptyCollection,
    FlatModel,
    InvertedRiskDirection,
    SeparationDetected,
    ShapeMismatch,
    SingleClass,
    SingularDesign,
)


def deviance_on(x, y, beta0, beta1):
    eta = beta0 + beta1 * np.asarray(x)
    ll = np.where(y, -np.logaddexp(0.0, -eta), -np.logaddexp(0.0, eta))
    return -2.0 * ll.sum()


def grid_search_fit(x, y):
    """Coarse-to-fine deviance minimization over (beta0, beta1)."""
    b0 = b1 = 0.0
    half0, half1 = 20.0, 5.0
    for _ in range(12):
        g0 = np.linspace(b0 - half0, b0 + half0, 41)
        g1 = np.linspace(b1 - half1, b1 + half1, 41)
        dev = np.array([[deviance_on(x, y, a, b) for b in g1] for a in g0])
        i, j = np.unravel_index(dev.argmin(), dev.shape)
        b0, b1 = g0[i], g1[j]
        half0 *= 0.12
        half1 *= 0.12
    return b0, b1, deviance_on(x, y, b0, b1)


def random_cohort(rng, n=40, beta0=-2.0, beta1=1.5):
    x = rng.normal(2.0, 1.0, size=n)
    p = 1.0 / (1.0 + np.exp(-(beta0 + beta1 * x)))
    labels = rng.uniform(size=n) < p
    if labels.all() or not labels.any():  # re-roll pathological draws
        return random_cohort(rng, n, beta0, beta1)
    return LabeledCohort(x, labels)


class TestFitLogistic:
    def test_perfect_separation(self):
        with pytest.raises(SeparationDetected):
            fit_logistic(LabeledCohort([-1.0, 1.0], [False, True]))

    def test_constant_predictor(self):
        with pytest.raises(SingularDesign):
            fit_logistic(LabeledCohort([2.0, 2.0, 2.0, 2.0], [True, False, True, False]))

    def test_single_class(self):
        with pytest.raises(SingleClass):
            fit_logistic(LabeledCohort([1.0, 2.0, 3.0], [True, True, True]))

    def test_against_grid_search_oracle(self):
        x = np.arange(1.0, 9.0)
        y = np.array([0, 0, 1, 0, 1, 0, 1, 1], dtype=bool)
        model = fit_logistic(LabeledCohort(x, y))
        b0, b1, dev = grid_search_fit(x, y)
        assert model.converged
        assert model.beta0 == pytest.approx(b0, abs=1e-3)
        assert model.beta1 == pytest.approx(b1, abs=1e-3)
        assert model.deviance == pytest.approx(dev, abs=1e-6)

    def test_null_deviance_closed_form(self):
        assert null_deviance([True, True, False, False]) == pytest.approx(
            8.0 * math.log(2.0), abs=1e-12
        )

    def test_score_equations_and_deviance_bound(self, rng):
        for _ in range(20):
            cohort = random_cohort(rng)
            model = fit_logistic(cohort)
            p = model.probability(cohort.values)
            resid = cohort.labels - p
            assert abs(resid.sum()) <= 1e-6
            assert abs((cohort.values * resid).sum()) <= 1e-6
            assert model.deviance <= null_deviance(cohort.labels) + 1e-12

    def test_matches_statsmodels(self, rng):
        import statsmodels.api as sm

        cohort = random_cohort(rng, n=60)
        model = fit_logistic(cohort)
        design = sm.add_constant(cohort.values)
        ref = sm.Logit(cohort.labels.astype(float), design).fit(disp=0)
        assert model.beta0 == pytest.approx(ref.params[0], abs=1e-6)
        assert model.beta1 == pytest.approx(ref.params[1], abs=1e-6)
        assert model.deviance == pytest.approx(-2.0 * ref.llf, abs=1e-8)

    def test_affine_invariance(self, rng):
        cohort = random_cohort(rng, n=50)
        a, b = 3.7, -12.0
        scaled = LabeledCohort(a * cohort.values + b, cohort.labels)
        m1, m2 = fit_logistic(cohort), fit_logistic(scaled)
        assert m2.deviance == pytest.approx(m1.deviance, abs=1e-8)
        t1, t2 = risk_threshold(m1, 0.5), risk_threshold(m2, 0.5)
        assert t2 == pytest.approx(a * t1 + b, rel=1e-6)
        assert np.array_equal(
            classify(cohort.values, t1), classify(scaled.values, t2)
        )


class TestRiskThreshold:
    def test_algebra(self):
        model = LogisticModel(-2.0, 4.0, 1.0, True, 3)
        assert risk_threshold(model, 0.5) == 0.5
        assert risk_threshold(LogisticModel(0.0, 1.0, 1.0, True, 3), 0.5) == 0.0
        assert risk_threshold(model, 0.9) == pytest.approx(0.5 + math.log(9.0) / 4.0, rel=1e-12)

    def test_probability_fixed_point(self):
        model = LogisticModel(-1.3, 2.7, 1.0, True, 3)
        threshold = risk_threshold(model, 0.5)
        assert model.probability(threshold) == pytest.approx(0.5, abs=1e-9)
        assert classify([threshold], threshold)[0]

    def test_flat_model(self):
        with pytest.raises(FlatModel):
            risk_threshold(LogisticModel(0.5, 0.0, 1.0, True, 3), 0.5)

    def test_inverted_direction_warns(self):
        model = LogisticModel(2.0, -4.0, 1.0, True, 3)
        with pytest.warns(InvertedRiskDirection):
            assert risk_threshold(model, 0.5) == 0.5

    def test_unconverged_rejected(self):
        with pytest.raises(ValueError):
            risk_threshold(LogisticModel(0.0, 1.0, 1.0, False, 100), 0.5)


class TestClassify:
    def test_basic(self):
        assert classify([1.0, 3.0], 2.0).tolist() == [False, True]

    def test_tie_is_positive(self):
        assert classify([2.0], 2.0).tolist() == [True]

    def test_empty(self):
        assert classify([], 0.0).tolist() == []


class TestClassificationMetrics:
    def test_perfect(self):
        m = classification_metrics([True, False, True], [True, False, True])
        assert m.accuracy == m.precision == m.recall == m.f1 == 1.0

    def test_all_wrong_balanced(self):
        m = classification_metrics([True, False], [False, True])
        assert m.accuracy == 0.0

    def test_hand_confusion_matrix(self):
        m = classification_metrics([True, True, False, False], [True, False, True, False])
        assert m.accuracy == m.precision == m.recall == m.f1 == 0.5

    def test_degenerate_flags(self):
        m = classification_metrics([False, False], [True, False])
        assert m.precision == 0.0 and not m.precision_defined
        m2 = classification_metrics([True, False], [False, False])
        assert m2.recall == 0.0 and not m2.recall_defined

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatch):
            classification_metrics([True], [True, False])


class TestSplitEvaluation:
    def test_separable_cohort_single_round(self):
        cohort = LabeledCohort(
            [1.0, 2.0, 3.0, 4.0, 5.0, 11.0, 12.0, 13.0, 14.0, 15.0],
            [False] * 5 + [True] * 5,
        )
        result = split_evaluation(cohort, rounds=1, train_fraction=0.6, seed=1)
        rnd = result.rounds[0]
        assert not rnd.skipped
        assert rnd.threshold_source == "separation_midpoint"
        assert rnd.metrics.accuracy == 1.0

    def test_deterministic_given_seed(self, rng):
        cohort = random_cohort(rng, n=53)
        a = split_evaluation(cohort, rounds=10, seed=42)
        b = split_evaluation(cohort, rounds=10, seed=42)
        assert a == b
        c = split_evaluation(cohort, rounds=10, seed=43)
        assert a != c

    def test_round_skip_recorded_for_tiny_class(self):
        # a single positive with train_fraction 0.3 never reaches training
        cohort = LabeledCohort([1.0, 2.0, 3.0, 4.0, 9.0], [False] * 4 + [True])
        result = split_evaluation(cohort, rounds=5, train_fraction=0.3, seed=0)
        assert result.n_skipped == 5
        assert all(r.skip_reason == "single-class training set" for r in result.rounds)
        assert result.mean_accuracy is None

    def test_empty_test_set_skipped(self):
        cohort = LabeledCohort([1.0, 9.0], [False, True])
        result = split_evaluation(cohort, rounds=3, train_fraction=0.6, seed=0)
        assert all(r.skip_reason == "empty test set" for r in result.rounds)

    def test_single_class_cohort_rejected(self):
        with pytest.raises(SingleClass):
            split_evaluation(LabeledCohort([1.0, 2.0], [True, True]), rounds=1)

    def test_means_over_completed_rounds(self, rng):
        cohort = random_cohort(rng, n=53)
        result = split_evaluation(cohort, rounds=8, seed=7)
        done = [r.metrics.accuracy for r in result.rounds if not r.skipped]
        assert result.mean_accuracy == pytest.approx(np.mean(done))


def summary(tag, impact_id, mpsr1=0.0, mpsr2=0.0, x1=0.0, x2=0.0, label=None):
    return ImpactSummary(impact_id, tag, label, 0.1, mpsr1, mpsr2, x1, x2)


class TestMisuse:
    def test_equal_thresholds_no_falses(self):
        summaries = [summary("d", f"i{k}", mpsr2=v, x2=v) for k, v in enumerate([1.0, 2.0, 3.0])]
        for scenario in MisuseScenario:
            report = misuse_false_rates(summaries, scenario, 2.0, 2.0)
            assert report.rate_by_impacts == 0.0
            assert report.rate_by_datasets == 0.0

    def test_disagreement_rate_one_third(self):
        values = [1.0, 3.0]
        summaries = [summary("d", f"i{k}", mpsr2=v) for k, v in enumerate(values)]
        report = misuse_false_rates(summaries, MisuseScenario.SN1, 2.0, 2.5)
        assert report.rate_by_impacts == 0.0
        summaries.append(summary("d", "i2", mpsr2=2.2))
        report = misuse_false_rates(summaries, MisuseScenario.SN1, 2.0, 2.5)
        assert report.rate_by_impacts == pytest.approx(1.0 / 3.0)

    def test_pooled_vs_averaged(self):
        # dataset A: 10 agreeing impacts; dataset B: one of two disagrees
        summaries = [summary("A", f"a{k}", mpsr2=3.0) for k in range(10)]
        summaries += [summary("B", "b0", mpsr2=2.2), summary("B", "b1", mpsr2=3.0)]
        report = misuse_false_rates(summaries, MisuseScenario.SN1, 2.0, 2.5)
        assert report.per_dataset["A"].rate == 0.0
        assert report.per_dataset["B"].rate == 0.5
        assert report.rate_by_impacts == pytest.approx(1.0 / 12.0)
        assert report.rate_by_datasets == pytest.approx(0.25)

    def test_scenarios_pick_their_variable(self):
        s = [
            summary("d", "i0", mpsr1=1.0, mpsr2=9.0, x1=1.0, x2=9.0),
            summary("d", "i1", mpsr1=9.0, mpsr2=1.0, x1=9.0, x2=1.0),
        ]
        # thresholds chosen so scheme-1 values and scheme-2 values classify differently
        r1 = misuse_false_rates(s, MisuseScenario.SN1, 5.0, 20.0)
        r2 = misuse_false_rates(s, MisuseScenario.SN2, 20.0, 5.0)
        assert r1.pair == "mpsr" and r2.pair == "mpsr"
        assert r1.rate_by_impacts == pytest.approx(0.5)  # only the 9.0 flips
        assert r2.rate_by_impacts == pytest.approx(0.5)
        r3 = misuse_false_rates(s, MisuseScenario.SN3, 5.0, 20.0)
        assert r3.pair == "mpsxsr"

    def test_same_gap_thresholds_never_disagree(self, rng):
        values = np.sort(rng.uniform(0.0, 10.0, size=25))
        summaries = [summary("d", f"i{k}", mpsr2=v) for k, v in enumerate(values)]
        gaps = np.diff(values)
        widest = int(np.argmax(gaps))
        lo, hi = values[widest], values[widest + 1]
        t1 = lo + 0.25 * (hi - lo)
        t2 = lo + 0.75 * (hi - lo)
        report = misuse_false_rates(summaries, MisuseScenario.SN1, t1, t2)
        assert report.rate_by_impacts == 0.0

    def test_empty_rejected(self):
        with pytest.raises(EmptyCollection):
            misuse_false_rates([], MisuseScenario.SN1, 1.0, 2.0)
