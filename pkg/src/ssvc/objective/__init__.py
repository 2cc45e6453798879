"""Semi-supervised variational objective: priors, bounds, batch loss."""

from .bounds import (
    LossBreakdown,
    ObjectiveBatch,
    elbo_supervised,
    elbo_unsupervised_continuous,
    elbo_unsupervised_discrete,
    objective_total,
)
from .terms import (
    LOG_VAR_MAX,
    LOG_VAR_MIN,
    LatentSample,
    categorical_entropy,
    clamp_log_var,
    gaussian_log_density_rows,
    kl_diag_gaussian_rows,
    kl_diag_gaussian_standard,
    log_prior_zs,
    reparameterize,
    std_normal_log_density_rows,
)

__all__ = [
    "LOG_VAR_MAX",
    "LOG_VAR_MIN",
    "LatentSample",
    "LossBreakdown",
    "ObjectiveBatch",
    "categorical_entropy",
    "clamp_log_var",
    "elbo_supervised",
    "elbo_unsupervised_continuous",
    "elbo_unsupervised_discrete",
    "gaussian_log_density_rows",
    "kl_diag_gaussian_rows",
    "kl_diag_gaussian_standard",
    "log_prior_zs",
    "objective_total",
    "reparameterize",
    "std_normal_log_density_rows",
]
