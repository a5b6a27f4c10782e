"""Variance estimation, Bernstein bounds and normal approximation for
bounded functions of independent variables with weak interactions."""
from ._backend import BACKEND
from .bounds import (
    DeviationBound,
    NormalityReport,
    VarianceReport,
    bernstein_epsilon_oracle,
    bernstein_epsilon_weak,
    empirical_bernstein_epsilon,
    empirical_normality_test,
    k_minus,
    k_plus,
    mcdiarmid_epsilon,
    normality_bound,
    normality_bound_weak,
    raw_variance_band,
    variance_confidence_interval,
    wasserstein1_to_standard_normal,
)
from .compose import (
    SmoothMap,
    VectorStatistic,
    add_statistics,
    chain_params,
    compose_statistic,
    interval,
    probe_derivative_bound,
    scale_statistic,
    shift_statistic,
    sup_norm_ball,
)
from .diffops import (
    SeminormReport,
    Statistic,
    WeakInteractionParams,
    delete,
    make_table_statistic,
    mixed_difference,
    partial_difference,
    random_table_statistic,
    replace,
    seminorms_exact,
    seminorms_probe,
    tabulate,
)
from .distributions import Bernoulli, FiniteAlphabet, Uniform01, parse_distribution
from .errors import BudgetExceededError, ConfigError, NumericalError, RangeError, WeakIntError
from .estimator import (
    conditional_variance,
    efron_stein_oracle,
    estimator_expectation_oracle,
    estimator_statistic,
    expectation_oracle,
    self_bounding_diagnostic,
    self_bounding_excess,
    sigma_sum,
    variance_estimator,
    variance_oracle,
)
from .statlib import (
    NAMED_KERNELS,
    GibbsModel,
    Kernel,
    LWeight,
    gibbs_measure,
    gibbs_true_measure,
    make_free_energy,
    make_gibbs_kl,
    make_l2_reg_delta,
    make_l_statistic,
    make_mean,
    make_smoothed_median,
    make_u_statistic,
    make_v_statistic,
)

__version__ = "0.1.0"
