"""Scaled-utility certainty equivalents and the utility-based acceptability index."""

__version__ = "0.1.0"

from .utility import (
    AffineWrapped,
    Exponential,
    IteratedExponential,
    Linear,
    ModifiedExponential,
    PowerLike,
    RiskAversion,
    arrow_pratt,
    check_scale_aversion_regularity,
    convex_conjugate,
    eval_scaled,
    eval_u,
    invert_u,
    parse_utility,
)
from .sample import EmpiricalDistribution, ReturnSeries, benchmarked_growth, from_samples, moments, scale, ssd_dominates
from .certainty import (
    CEValue,
    cash_additive_hull,
    certainty_equivalent,
    entropic_closed_form,
    gaussian_entropic,
    mv_approx,
    oce,
)
from .index import IndexValue, acceptability_index, index_grid_oracle
from .paths import ARMA, FGN, OU, IIDGaussian, cumulative_variance, fgn_autocovariance, simulate, simulate_paths
from .perf import (
    StrategyCandidate,
    closed_form_gaussian_alpha,
    duality_check,
    finite_horizon_index,
    longrun_trajectory,
    maximize_over_strategies,
    risk_sensitive_rate,
)
