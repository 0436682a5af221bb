"""Rejection ABC with heterogeneous-rate summary statistics."""

__version__ = "0.1.0"

from .core import (
    ABCError,
    ABCWarning,
    AcceptedDraw,
    GenerativeModel,
    RateProfile,
    ReferenceTable,
    euclidean_distance,
)
from .engine import Fixed, Quantile, RunConfig, acceptance_rate, resolve_tolerance, run_rejection
from .models import Example1Model, UniformRiskModel, UniformShapeModel, build_rate_profile
from .adjust import AdjustmentModel, adjust_samples, fit_local_linear, oracle_adjustment
from .theory import (
    TheoreticalPosterior,
    normalize,
    predict_acceptance_exponent,
    shape_posterior_for,
    theoretical_density,
)
from .analysis import (
    DensityEstimate,
    RiskCurve,
    SegmentedFit,
    brute_force_posterior,
    estimate_density,
    l1_between,
    l1_discrepancy,
    loglog_slope,
    posterior_risk,
    segmented_slope,
)
