"""Information- and detection-theoretic scheduling of a time-shared Poisson counter."""

__version__ = "0.1.0"

from .channel_core import (
    ChannelParams,
    DomainError,
    HypothesisState,
    TimeAllocation,
    TruncatedPmfTable,
    build_pmf_tables,
    intensity_vector,
    poisson_pmf,
    prior_pmf,
    truncation_bound,
)
from ._grid import CellBudgetExceeded
from .info_metrics import (
    ChainTerms,
    MiResult,
    mi_chain_terms,
    mi_derivative_at_zero,
    numerical_derivative_at_zero,
    scalar_mutual_info,
    vector_mutual_info,
)
from .detection import DecisionOutcome, PdResult, bayes_risk, map_decide, prob_correct_detection
from .monte_carlo import McConfig, McResult, empirical_correct_rate, sample_observation
from .scheduler import (
    check_concavity_line,
    check_symmetry,
    sweep_intensity,
    sweep_prior,
    sweep_symmetry_line,
    sweep_ternary,
)
