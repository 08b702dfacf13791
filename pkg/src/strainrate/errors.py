"""Exception hierarchy for the strainrate toolkit."""


class StrainRateError(Exception):
    """Base class for all toolkit errors."""


# --- tensor kinematics ---

class InvalidTensor(StrainRateError):
    """Tensor input contains NaN or Inf components."""


class SingularDeformation(StrainRateError):
    """Deformation gradient determinant is at or below the invertibility floor."""


class SeriesTooShort(StrainRateError):
    """Time series has fewer samples than the five-point stencil needs."""


# --- aggregation ---

class EmptyCollection(StrainRateError):
    """Operation requires at least one value / record."""


class InvalidValue(StrainRateError):
    """Non-finite value where finite data is required."""


# --- statistics ---

class ShapeMismatch(StrainRateError):
    """Paired inputs have different lengths."""


class SampleTooSmall(StrainRateError):
    """Not enough samples for the requested statistic."""


class DegenerateDifferences(StrainRateError):
    """Paired differences have zero variance; t statistic undefined."""


class DegenerateGroups(StrainRateError):
    """Zero within-group variance; ANOVA F statistic undefined."""


# --- risk modelling ---

class SingleClass(StrainRateError):
    """Cohort contains only one outcome class."""


class SeparationDetected(StrainRateError):
    """Logistic fit is completely or quasi-completely separated."""


class SingularDesign(StrainRateError):
    """Predictor is constant (or design otherwise singular); slope indeterminate."""


class FlatModel(StrainRateError):
    """Logistic slope is zero; no finite risk threshold exists."""


class InvertedRiskDirection(UserWarning):
    """Fitted slope is negative: higher predictor values mean lower risk.

    Issued as a warning, not an error; the threshold is still returned but
    classification with the usual >= convention inverts its meaning.
    """


# --- dataset I/O ---

class DatasetFormatError(StrainRateError):
    """Dataset file failed validation; message carries file/line context."""


class VersionMismatch(DatasetFormatError):
    """Manifest format_version differs from the supported version."""


class RowCountMismatch(DatasetFormatError):
    """Data file row count does not match n_elements * n_steps."""
