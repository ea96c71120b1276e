"""Modified Jones-Faddy skew t-distribution for accumulated stock returns."""

__version__ = "0.1.0"

from .distributions import (
    MJF1Params,
    MomentSummary,
    StudentTParams,
    mjf1_cdf_gains,
    mjf1_cdf_losses,
    mjf1_logpdf,
    mjf1_mean,
    mjf1_median,
    mjf1_mode,
    mjf1_moments,
    mjf1_pdf,
    mjf1_quantile,
    mjf1_sample,
    mjf1_variance,
    mjf1_variance_approx,
    student_t_pdf,
    tail_exponent,
)
from .errors import (
    ConfigError,
    ContractError,
    ConvergenceError,
    DataError,
    DegenerateDataError,
    DomainError,
    MJFError,
    ParseError,
)
from .fitting import FitConfig, FitResult, PriorSpec, fit_all_taus, fit_mjf1, log_likelihood
from .pipeline import (
    PriceSeries,
    ReturnSample,
    accumulate_returns,
    empirical_moments,
    fit_drift,
    load_prices,
    log_price_path,
    variance_vs_tau,
)
from .report import RunConfig, run_report
from .taildiag import empirical_ccdf, model_ccdf, tail_linear_fit, u_test

__all__ = [
    "MJF1Params",
    "MomentSummary",
    "StudentTParams",
    "mjf1_cdf_gains",
    "mjf1_cdf_losses",
    "mjf1_logpdf",
    "mjf1_mean",
    "mjf1_median",
    "mjf1_mode",
    "mjf1_moments",
    "mjf1_pdf",
    "mjf1_quantile",
    "mjf1_sample",
    "mjf1_variance",
    "mjf1_variance_approx",
    "student_t_pdf",
    "tail_exponent",
    "ConfigError",
    "ContractError",
    "ConvergenceError",
    "DataError",
    "DegenerateDataError",
    "DomainError",
    "MJFError",
    "ParseError",
    "FitConfig",
    "FitResult",
    "PriorSpec",
    "fit_all_taus",
    "fit_mjf1",
    "log_likelihood",
    "PriceSeries",
    "ReturnSample",
    "accumulate_returns",
    "empirical_moments",
    "fit_drift",
    "load_prices",
    "log_price_path",
    "variance_vs_tau",
    "RunConfig",
    "run_report",
    "empirical_ccdf",
    "model_ccdf",
    "tail_linear_fit",
    "u_test",
]
