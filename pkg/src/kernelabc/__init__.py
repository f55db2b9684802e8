"""Likelihood-free Bayesian inference with kernel-embedding distances.

Rejection ABC, soft-weighted ABC over MMD or Parzen-smoothed embedding
distances, and ABC-SMC, with two benchmark models (uniform mixture,
blowfly population dynamics) and the matching evaluation protocols.
"""

__version__ = "0.1.0"

from ._backend import BACKEND
from .kernels import KernelConfig, convolved_kernel, gaussian_kernel, select_bandwidth_mise
from .distances import (
    DistanceSpec,
    mmd_biased,
    mmd_unbiased,
    parzen_distance,
    soft_weight,
    summary_distance,
)
from .engines import (
    GenerationBudgetError,
    ModelSpec,
    ParamSupport,
    SmcSchedule,
    WeightedPosterior,
    abc_rejection,
    abc_smc,
    abc_weighted,
    perturb,
    posterior_mean,
    simulation_stream,
    smc_stream,
    substream,
)
from .models import (
    TRUE_MIXTURE_WEIGHTS,
    BlowflyParams,
    MixtureParams,
    blowfly_model,
    blowfly_prior_density,
    blowfly_summaries,
    sample_blowfly_prior,
    sample_dirichlet,
    series_is_valid,
    simulate_blowfly,
    simulate_uniform_mixture,
    synthetic_blowfly_series,
    toy_summaries,
    uniform_mixture_model,
)
from .evaluation import (
    cross_correlation,
    observation_sweep,
    rmse,
    run_method,
    top_k_rho_protocol,
    weighted_kde_posterior,
)
from .harness import (
    ConfigError,
    ExperimentConfig,
    ExperimentReport,
    load_config,
    load_report,
    load_series_csv,
    run_experiment,
    write_report,
)
