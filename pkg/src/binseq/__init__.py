"""Detecting serial dependence in binomial time series.

Score, likelihood-ratio, Wald and portmanteau tests of a logistic regression
null against GLARMA and BARMA alternatives, with supremum tests over
unidentified nuisance parameters and seeded Monte Carlo calibration.
"""

__version__ = "0.1.0"

from ._accel import backend_name
from .classic import AcfEstimates, blp_stat, lrt_stat, pearson_acf, sup_lrt, sup_wald, wald_stat
from .dataset import BinomialSeries, CsvSchema, ModelSpec, load_csv, save_csv
from .errors import (
    BinseqError,
    ConvergenceError,
    DegenerateError,
    DesignError,
    FitError,
    NumericError,
    ParameterError,
    ParseError,
    SeparationError,
    SingularityError,
    ValidationError,
)
from .glarma import (
    GlarmaFit,
    GlarmaParams,
    GlarmaState,
    fit_glarma,
    loglik_and_derivs,
    recurse_state,
    simulate_glarma,
    tau_coefficients,
)
from .glm import GlmFit, fit_glm, glm_at, loglik_at
from .montecarlo import NullQuantiles, SimDesign, null_quantiles, reproduce_table, simulate_null
from .score_barma import BarmaScoreParts, barma_info, barma_score_vector, barma_stat
from .score_glarma import (
    NuisanceGrid,
    TestResult,
    davies_quantile,
    davies_tail_bound,
    info_matrix,
    q0_closed_form,
    score_stat,
    score_vector,
    sup_score,
)

__all__ = [
    "__version__",
    "backend_name",
    "AcfEstimates",
    "BarmaScoreParts",
    "BinomialSeries",
    "BinseqError",
    "ConvergenceError",
    "CsvSchema",
    "DegenerateError",
    "DesignError",
    "FitError",
    "GlarmaFit",
    "GlarmaParams",
    "GlarmaState",
    "GlmFit",
    "ModelSpec",
    "NuisanceGrid",
    "NullQuantiles",
    "NumericError",
    "ParameterError",
    "ParseError",
    "SeparationError",
    "SimDesign",
    "SingularityError",
    "TestResult",
    "ValidationError",
    "barma_info",
    "barma_score_vector",
    "barma_stat",
    "blp_stat",
    "davies_quantile",
    "davies_tail_bound",
    "fit_glarma",
    "fit_glm",
    "glm_at",
    "info_matrix",
    "load_csv",
    "loglik_and_derivs",
    "loglik_at",
    "lrt_stat",
    "null_quantiles",
    "pearson_acf",
    "q0_closed_form",
    "recurse_state",
    "reproduce_table",
    "save_csv",
    "score_stat",
    "score_vector",
    "simulate_glarma",
    "simulate_null",
    "sup_lrt",
    "sup_score",
    "sup_wald",
    "tau_coefficients",
    "wald_stat",
]
