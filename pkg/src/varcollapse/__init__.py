"""Variability-collapse metrics for labeled neural-network features."""

__version__ = "0.1.0"

from .exceptions import VarCollapseError
from .featureio import LabeledFeatures, load_features, load_report, save_features, save_report
from .metrics import (
    MetricReport,
    cosine_stats,
    evaluate_all,
    fuzziness,
    fuzziness_sensitivity,
    squared_distance,
    vci,
)
from .probe import ProbeSolution, mse_loss, oracle_min_loss, predicted_min_loss, solve_mse_probe
from .spectra import (
    AbsoluteTol,
    EigenPolicy,
    FixedRank,
    RelativeTol,
    SpectrumReport,
    parse_policy,
    pseudo_inverse,
    spectrum_report,
    sym_eigendecomp,
)
from .stats import (
    ClassStats,
    CovarianceSet,
    between_space_basis,
    class_statistics,
    covariances,
    within_projection_split,
)
from .estimators import CollapseMetrics, MSELinearProbe
