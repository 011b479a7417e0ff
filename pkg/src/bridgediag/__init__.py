"""Bridge-sampling log marginal likelihood estimation with reliability diagnostics.

The estimator is a ratio of two Monte Carlo means refined by a fixed-point
iteration, run entirely in shifted log space. Three layers quantify how much
the resulting number can be trusted: a delta-method MCSE with an
autocorrelation-aware denominator, generalized Pareto tail shapes of the
estimator's summands, and a block-reshuffling bootstrap over the whole
pipeline.
"""

__version__ = "0.1.0"

from .bridge import (
    BridgeConfig,
    BridgeResult,
    LogRatios,
    bridge_iterate,
    compute_log_ratios,
    estimate_log_ml,
)
from .draws import (
    BlockPlan,
    DrawsMatrix,
    HalfSplit,
    block_reshuffle,
    default_block_len,
    make_block_plan,
    read_draws_csv,
    split_halves,
    write_draws_csv,
)
from .errors import BridgeDiagError
from .ess import autocovariance, ess_mean
from .experiments import (
    CalibrationRow,
    PlanningAdvice,
    difference_mcse,
    planning_helper,
    run_calibration,
)
from .external import ExternalEvaluator, ExternalModel
from .mcse import McseReport, mcse_of_bridge, relative_term_variance
from .numerics import (
    CholFactor,
    RngStream,
    cholesky_with_jitter,
    log_mean_exp,
    log_sum_exp,
    mvn_logpdf,
    mvn_sample,
)
from .pareto import GpdFit, default_tail_count, fit_gpd_excesses, khat_of_terms, khat_report
from .proposal import Proposal, fit_mvn_proposal, log_g_at, sample_proposal
from .reshuffle import ReshuffleReport, multi_run_sd, reshuffle_estimates
from .samplers import sample_exact_chains, sampler_ar1, sampler_rwm
from .targets import (
    ConjugateLinRegModel,
    ConjugateNormalModel,
    DifficultyDialModel,
    OffsetModel,
    ScaledMvnModel,
    TargetModel,
    exact_log_marginal,
    exact_posterior_sample,
    log_unnorm_posterior,
)

__all__ = [name for name in dir() if not name.startswith("_")]
