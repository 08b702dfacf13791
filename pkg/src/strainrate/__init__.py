"""Strain-rate metric toolkit for brain deformation histories.

Computes the maximum principal strain (MPS) and both maximal principal
strain-rate schemes from element deformation histories: the time derivative
of the principal-strain trace, and the principal value of the rate-of-
deformation tensor, plus the strain x rate products, whole-brain
95th-percentile summaries, scheme agreement statistics, and the logistic
injury-risk / threshold-misuse pipeline.
"""

__version__ = "0.1.0"

from .aggregate import (
    ImpactMetrics,
    ImpactRecord,
    ImpactSummary,
    compute_impact_metrics,
    dataset_summaries,
    impact_summary,
    percentile,
)
from .dataio import read_dataset, write_dataset
from .metrics import (
    ElementHistory,
    ElementMetrics,
    HistoryMode,
    RateScheme,
    compute_element_metrics,
    element_mps,
    element_mps_x_sr,
    element_mpsr1,
    element_mpsr2,
    mps_trace,
)
from .motion import (
    CorpusSpec,
    DatasetSpec,
    LabeledCohortSpec,
    MotionFamily,
    MotionSpec,
    generate_corpus,
    generate_motion,
    nfl_like_cohort,
)
from .risk import (
    ClassificationMetrics,
    LabeledCohort,
    LogisticModel,
    MisuseReport,
    MisuseScenario,
    SplitEvaluation,
    classification_metrics,
    classify,
    cohort_from_summaries,
    fit_logistic,
    misuse_false_rates,
    null_deviance,
    risk_threshold,
    split_evaluation,
)
from .stats import (
    AnovaResult,
    ComparisonLevel,
    ComparisonReport,
    ErrorStats,
    MetricPair,
    NormalityResult,
    TTestResult,
    bland_altman_points,
    error_stats,
    normality_test,
    one_way_anova,
    paired_t_test,
    scheme_comparison_report,
)
from .tensors import (
    ScalarSeries,
    eig_sym3,
    fd_derivative,
    fd_tensor_derivative,
    green_strain,
    rate_of_deformation,
    velocity_gradient,
)

from . import errors  # noqa: E402,F401  (exception namespace)
