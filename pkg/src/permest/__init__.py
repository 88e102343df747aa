"""Randomized determinant estimators for the permanent, with exact oracles."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConfigurationError,
    DegenerateInputError,
    DomainError,
    MatrixParseError,
    PermestError,
    SizeError,
)
from .matrix import (  # noqa: E402
    DenseMatrix,
    EntryKind,
    EntryModel,
    SeededSource,
    barvinok_lift,
    godsil_gutman_lift,
    sample_matrix,
)
from .linalg import (  # noqa: E402
    LogSignedValue,
    RowDistances,
    SingularValues,
    distance_identity_check,
    log_det_distances,
    log_det_lu,
    singular_values,
)
from .permanent import PermanentValue, permanent_naive, permanent_ryser  # noqa: E402
from .estimators import (  # noqa: E402
    Aggregation,
    EstimateReport,
    EstimatorConfig,
    EstimatorKind,
    approximation_ratio_sweep,
    estimate_permanent,
    unbiasedness_exhaustive,
)
from .spectrum import (  # noqa: E402
    SpectrumSummary,
    detsmall_bound_check,
    sigma_min_survey,
    small_sv_count_survey,
    spectrum_split,
    truncated_log_statistic,
)

__all__ = [
    "__version__",
    "# noqa: E402",
    "ConfigurationError",
    "DegenerateInputError",
    "DomainError",
    "MatrixParseError",
    "PermestError",
    "SizeError",
    "# noqa: E402",
    "DenseMatrix",
    "EntryKind",
    "EntryModel",
    "SeededSource",
    "barvinok_lift",
    "godsil_gutman_lift",
    "sample_matrix",
    "# noqa: E402",
    "LogSignedValue",
    "RowDistances",
    "SingularValues",
    "distance_identity_check",
    "log_det_distances",
    "log_det_lu",
    "singular_values",
    "# noqa: E402",
    "Aggregation",
    "EstimateReport",
    "EstimatorConfig",
    "EstimatorKind",
    "approximation_ratio_sweep",
    "estimate_permanent",
    "unbiasedness_exhaustive",
    "# noqa: E402",
    "SpectrumSummary",
    "detsmall_bound_check",
    "sigma_min_survey",
    "small_sv_count_survey",
    "spectrum_split",
    "truncated_log_statistic",
    "PermanentValue",
    "permanent_naive",
    "permanent_ryser",
]
