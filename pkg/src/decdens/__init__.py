"""Bayesian and frequentist estimation of a decreasing density on [0, inf)."""

__version__ = "0.1.0"

from .core import (
    BaseMeasureSpec,
    DataError,
    DegenerateDensityError,
    EvalGrid,
    MixtureMeasure,
    SampleData,
    StepDensity,
    inverse_relation,
    mixture_density,
    mixture_to_step,
    read_data,
)
from .estimators import (
    ZeroEstimates,
    adaptive_estimator,
    estimate_all_zero,
    grenander,
    histogram_estimator,
    least_concave_majorant,
    penalized_alpha_n,
    penalized_mle,
    simple_estimator,
    solve_gamma,
)
from .sampler import ClusterState, PosteriorDraw, SamplerConfig, crp_sample, gibbs_sweep, run_chain
from .summary import ChainSummary, summarize_chain
