"""Surprisal-based anomaly detection.

Score observations by their surprisal (negative log generalized density)
under a possibly misspecified model, estimate the upper tail of the
surprisal distribution (assumed / empirical / generalized Pareto), and
flag anomalies with a controlled false positive rate.
"""

from .conditional import (
    BinomialSmoothFit,
    HampelModel,
    HampelSeries,
    binomial_surprisals,
    fit_binomial_smooth,
    hampel_alpha_from_tau,
    hampel_assumed_probs,
    hampel_series,
    hampel_surprisals,
    hampel_tau_from_alpha,
)
from .distributions import (
    Binomial,
    DistributionModel,
    Gamma,
    IndependentProduct,
    Normal,
    StudentT,
    log_density,
    normal_cdf,
    normal_quantile,
    parse_model,
    sample,
)
from .empirical import (
    DkwBand,
    EcdfTail,
    band_coverage_check,
    dkw_band,
    dkw_epsilon,
    empirical_tail_prob,
)
from .errors import ArityError, FitError, SurprisalError, ValidationError
from .evt import (
    BoundCheck,
    MaxSurprisalStudy,
    check_tail_bound,
    entropy_oracle,
    polynomial_moment_oracle,
    simulate_max_distribution,
    subexponential_scale_oracle,
    subgaussian_norm_oracle,
)
from .experiments import (
    ExperimentConfig,
    FalseRateResult,
    run_expt_false_rate,
    run_expt_univariate,
)
from .gpd import (
    GpdFit,
    fit_gpd,
    fit_gpd_tail,
    gpd_cdf,
    gpd_quantile,
    gpd_sample,
    gpd_tail_prob,
    select_threshold,
)
from .scoring import (
    AnomalyReport,
    SurprisalSample,
    TailEstimate,
    assumed_tail_probs,
    compute_surprisals,
    empirical_tail_probs,
    flag_anomalies,
    gpd_tail_probs,
    group_filter,
    tail_probs,
)

__version__ = "0.1.0"
