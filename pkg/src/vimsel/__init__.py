"""Model-agnostic feature-selection tests with a matching theory engine.

Five significance tests (gcm, loco, dropout, permutation, lazy_vi) run over
pluggable regressors; closed-form detection boundaries and efficiency
ratios are available for linear, nonlinear-additive, and single-index
models, and a Monte Carlo harness checks the two against each other.
"""

from .core import (
    DROPOUT,
    GCM,
    LAZY_VI,
    LOCO,
    METHODS,
    PERMUTATION,
    DataError,
    Dataset,
    FoldAssignment,
    ImportanceReport,
    NumericalError,
    RngStream,
    TestResult,
    ValidationError,
    VimselError,
    make_folds,
    selection_from_results,
)
from .harness import (
    AreComparison,
    ConditionBRow,
    ExperimentPlan,
    MethodMetrics,
    MetricsSummary,
    condition_b_report,
    empirical_are,
    run_plan,
    theoretical_are,
)
from .io import load_csv, read_report, report_to_dict, write_csv, write_report
from .methods import (
    LazyConfig,
    dropout_test,
    gcm_test,
    lazy_vi_test,
    loco_test,
    permutation_test,
    select_features,
)
from .regress import DEFAULTS, KINDS, RegressorSpec, fit
from .scenarios import (
    GeneratedData,
    ScenarioSpec,
    additive_components,
    default_spec,
    even_quadratic,
    generate,
)
from .theory import (
    CvPair,
    ModelMoments,
    are_example1,
    are_nonlinear,
    condition_b_ratio,
    cv_linear,
    cv_single_index,
    empirical_moments,
    normal_even_moment,
    sigmoid_and_derivative,
    variance_formulas,
)

__version__ = "0.1.0"

__all__ = [
    "DROPOUT",
    "GCM",
    "LAZY_VI",
    "LOCO",
    "METHODS",
    "PERMUTATION",
    "DEFAULTS",
    "KINDS",
    "AreComparison",
    "ConditionBRow",
    "CvPair",
    "DataError",
    "Dataset",
    "ExperimentPlan",
    "FoldAssignment",
    "GeneratedData",
    "ImportanceReport",
    "LazyConfig",
    "MethodMetrics",
    "MetricsSummary",
    "ModelMoments",
    "NumericalError",
    "RegressorSpec",
    "RngStream",
    "ScenarioSpec",
    "TestResult",
    "ValidationError",
    "VimselError",
    "additive_components",
    "are_example1",
    "are_nonlinear",
    "condition_b_ratio",
    "condition_b_report",
    "cv_linear",
    "cv_single_index",
    "default_spec",
    "dropout_test",
    "empirical_are",
    "empirical_moments",
    "even_quadratic",
    "fit",
    "gcm_test",
    "generate",
    "lazy_vi_test",
    "load_csv",
    "loco_test",
    "make_folds",
    "normal_even_moment",
    "permutation_test",
    "read_report",
    "report_to_dict",
    "run_plan",
    "select_features",
    "selection_from_results",
    "sigmoid_and_derivative",
    "theoretical_are",
    "variance_formulas",
    "write_csv",
    "write_report",
]
