"""Variational estimation of Renyi divergences from samples.

The package provides:

- reference distributions with seeded, reproducible samplers
  (:mod:`renyivar.distributions`);
- exact divergence values via closed forms and a quadrature oracle
  (:mod:`renyivar.exact_divergence`);
- the variational objective and its gradients (:mod:`renyivar.objective`);
- MLP and exponential-family critics (:mod:`renyivar.critics`);
- Adam-based training of the sample estimator (:mod:`renyivar.training`);
- a sufficient-sample-size calculator (:mod:`renyivar.complexity`);
- a reproducible experiment harness and CLI (:mod:`renyivar.experiments`,
  :mod:`renyivar.cli`).
"""

from .complexity import ComplexityInput, SampleComplexityBound, sample_complexity_bound
from .critics import (
    ExpFamCritic,
    MlpCritic,
    ParamGradient,
    clip_params,
    critic_from_checkpoint,
    critic_to_checkpoint,
    get_statistic,
    init_mlp,
)
from .distributions import (
    AlphaOrder,
    BetaProduct,
    BetaProductSpec,
    Distribution,
    EmbeddingSpec,
    Gaussian,
    GaussianSpec,
    JointCorrelatedGaussian,
    ProductOfMarginals,
    Pushforward,
    SampleBatch,
    UnsupportedDensityError,
    distribution_from_config,
)
from .exact_divergence import (
    beta_natural_params,
    beta_product_log_partition,
    gaussian_mean_log_partition,
    gaussian_natural_log_partition,
    gaussian_natural_params,
    kl_gaussian_exact,
    renyi_exact,
    renyi_expfam_exact,
    renyi_gaussian_exact,
    renyi_quadrature_oracle,
    renyi_symmetry_check,
)
from .objective import (
    CriticOutputs,
    ObjectiveValue,
    bootstrap_objective_se,
    empirical_objective,
    logmeanexp,
    objective_gradient,
    population_objective,
)
from .training import (
    AdamState,
    CriticConfig,
    EstimateTrace,
    TrainConfig,
    TrainingError,
    adam_step,
    estimate_mutual_information,
    init_adam_state,
    train_estimator,
)

__version__ = "0.1.0"

__all__ = [
    "AlphaOrder",
    "GaussianSpec",
    "BetaProductSpec",
    "EmbeddingSpec",
    "SampleBatch",
    "Distribution",
    "Gaussian",
    "BetaProduct",
    "Pushforward",
    "JointCorrelatedGaussian",
    "ProductOfMarginals",
    "UnsupportedDensityError",
    "distribution_from_config",
    "renyi_gaussian_exact",
    "renyi_expfam_exact",
    "renyi_quadrature_oracle",
    "renyi_symmetry_check",
    "renyi_exact",
    "kl_gaussian_exact",
    "beta_product_log_partition",
    "beta_natural_params",
    "gaussian_mean_log_partition",
    "gaussian_natural_log_partition",
    "gaussian_natural_params",
    "CriticOutputs",
    "ObjectiveValue",
    "logmeanexp",
    "empirical_objective",
    "objective_gradient",
    "population_objective",
    "bootstrap_objective_se",
    "MlpCritic",
    "ExpFamCritic",
    "ParamGradient",
    "init_mlp",
    "clip_params",
    "get_statistic",
    "critic_to_checkpoint",
    "critic_from_checkpoint",
    "TrainConfig",
    "CriticConfig",
    "AdamState",
    "EstimateTrace",
    "TrainingError",
    "adam_step",
    "init_adam_state",
    "train_estimator",
    "estimate_mutual_information",
    "ComplexityInput",
    "SampleComplexityBound",
    "sample_complexity_bound",
]
