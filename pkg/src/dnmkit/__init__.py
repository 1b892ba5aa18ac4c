"""Dynamic network models for multivariate time-series forecasting.

Discrete belief networks whose per-variable conditional distributions
mix a same-slice table with a lagged table through an adaptive convex
weight. The package covers exact and sampling inference, multi-step
forecasting, online weight adaptation, structure learning from data,
quantile discretization, rolling evaluation, JSON persistence, and a
CLI (``dnmkit``).
"""

__version__ = "0.1.0"

from .adapt import (
    AlphaState,
    ResidualCoeffs,
    best_alpha_from_residuals,
    grid_search_alpha,
    replay_residuals,
    residual_coefficients,
    residual_objective,
    update_alpha,
)
from .errors import (
    CycleError,
    DnmError,
    ImpossibleEvidenceError,
    JointSizeError,
    MissingHistoryError,
    ModelFormatError,
    NoSampleMassError,
    ValidationError,
)
from .estimators import DnmForecaster, QuantileDiscretizer
from .evaluate import EvaluationResult, rolling_forecast_evaluate
from .forecast import ForecastStep, distinct_structures, expected_value, k_step_forecast, one_step_forecast
from .inference import approximate_posterior, brute_force_posterior, exact_posterior
from .learn import WindowRecords, build_windows, estimate_cpds, family_score, learn_structure
from .metrics import MetricSummary, modal_accuracy, prediction_metrics
from .model import (
    MISSING,
    ConvexCpd,
    Dnm,
    DnmStructure,
    LagRef,
    UnrolledNetwork,
    build_forecast_network,
    validate_structure,
)
from .model_io import ModelBundle, load_model, save_model
from .network import (
    BeliefNetwork,
    Cpt,
    Variable,
    joint_probability,
    prior_cpt,
    row_index,
    topological_order,
    validate_network,
)
from .preprocess import (
    MISSING_STATE,
    BinSpec,
    LabelMap,
    TimeSeriesTable,
    apply_bins,
    encode_table,
    fit_bins,
    load_csv,
    quantile_cuts,
    representative_values,
)

__all__ = [
    "AlphaState",
    "BeliefNetwork",
    "BinSpec",
    "ConvexCpd",
    "Cpt",
    "CycleError",
    "Dnm",
    "DnmError",
    "DnmForecaster",
    "DnmStructure",
    "EvaluationResult",
    "ForecastStep",
    "ImpossibleEvidenceError",
    "JointSizeError",
    "LabelMap",
    "LagRef",
    "MetricSummary",
    "MISSING",
    "MISSING_STATE",
    "MissingHistoryError",
    "ModelBundle",
    "ModelFormatError",
    "NoSampleMassError",
    "QuantileDiscretizer",
    "ResidualCoeffs",
    "TimeSeriesTable",
    "UnrolledNetwork",
    "ValidationError",
    "Variable",
    "WindowRecords",
    "apply_bins",
    "approximate_posterior",
    "best_alpha_from_residuals",
    "brute_force_posterior",
    "build_forecast_network",
    "build_windows",
    "distinct_structures",
    "encode_table",
    "estimate_cpds",
    "exact_posterior",
    "expected_value",
    "family_score",
    "fit_bins",
    "grid_search_alpha",
    "joint_probability",
    "k_step_forecast",
    "learn_structure",
    "load_csv",
    "load_model",
    "modal_accuracy",
    "one_step_forecast",
    "prediction_metrics",
    "prior_cpt",
    "quantile_cuts",
    "replay_residuals",
    "representative_values",
    "residual_coefficients",
    "residual_objective",
    "rolling_forecast_evaluate",
    "row_index",
    "save_model",
    "topological_order",
    "update_alpha",
    "validate_network",
    "validate_structure",
]
