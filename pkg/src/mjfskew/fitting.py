"""
Bayesian estimation of mJF1 parameters.

The posterior over ``(alpha_g, alpha_l, theta, mu)`` is explored with an
adaptive random-walk Metropolis sampler in the coordinates
``(log alpha_g, log alpha_l, log theta, mu)``. During burn-in the proposal
covariance tracks the chain's empirical covariance (scaled by 2.38^2/d) and
a global step factor is tuned toward an acceptance rate of 0.234. Both are
frozen once burn-in ends, so retained draws come from a fixed Markov kernel.

Chains start from a maximum a posteriori point found by Nelder-Mead,
perturbed by an over-dispersed draw from its Laplace approximation, which
makes the split-R-hat check meaningful.
"""

import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import optimize

from . import specfun
from .distributions import MJF1Params, mjf1_moments
from .errors import ContractError, DataError, DomainError, MJFError
from .pipeline import accumulate_returns, fit_drift, log_price_path

__all__ = [
    "ParamPrior",
    "PriorSpec",
    "FitConfig",
    "ParamSummary",
    "FitResult",
    "FitFailure",
    "PARAM_NAMES",
    "log_likelihood",
    "log_posterior",
    "fit_mjf1",
    "sample_posterior",
    "fit_all_taus",
    "posterior_predictive_moments",
    "split_rhat",
    "effective_sample_size",
]

log = logging.getLogger(__name__)

PARAM_NAMES = ("alpha_g", "alpha_l", "theta", "mu")
MIN_FIT_SIZE = 100
_LOG_COORD = (True, True, True, False)


@dataclass(frozen=True)
class ParamPrior:
    """Prior on one parameter: ``'log-uniform'`` or ``'uniform'`` on ``[low, high]``."""

    family: str
    low: float
    high: float

    def __post_init__(self):
        if self.family not in ("log-uniform", "uniform"):
            raise DomainError(f"unknown prior family {self.family!r}")
        if not (np.isfinite(self.low) and np.isfinite(self.high) and self.low < self.high):
            raise DomainError("prior bounds must be finite with low < high")
        if self.family == "log-uniform" and self.low <= 0:
            raise DomainError("log-uniform prior needs a positive lower bound")

    def contains(self, value):
        return self.low <= value <= self.high


@dataclass(frozen=True)
class PriorSpec:
    """Independent priors on the four parameters."""

    alpha_g: ParamPrior = ParamPrior("log-uniform", 1e-7, 1e-2)
    alpha_l: ParamPrior = ParamPrior("log-uniform", 1e-7, 1e-2)
    theta: ParamPrior = ParamPrior("log-uniform", 1e-7, 1e-2)
    mu: ParamPrior = ParamPrior("uniform", -0.1, 0.1)

    def __post_init__(self):
        for name in ("alpha_g", "alpha_l", "theta"):
            if getattr(self, name).low <= 0:
                raise DomainError(f"{name} prior must live on positive values")
        if self.mu.family != "uniform":
            raise DomainError("mu takes a uniform prior")

    def priors(self):
        return (self.alpha_g, self.alpha_l, self.theta, self.mu)

    def log_density(self, phi):
        """Log prior density in sampling coordinates (up to a constant)."""
        total = 0.0
        for v, prior, is_log in zip(phi, self.priors(), _LOG_COORD):
            nat = np.exp(v) if is_log else v
            if not prior.contains(nat):
                return -np.inf
            if is_log and prior.family == "uniform":
                total += v  # Jacobian of the log transform
        return total

    def bounds(self):
        out = []
        for prior, is_log in zip(self.priors(), _LOG_COORD):
            if is_log:
                out.append((np.log(prior.low), np.log(prior.high)))
            else:
                out.append((prior.low, prior.high))
        return np.array(out)


@dataclass(frozen=True)
class FitConfig:
    """Sampler settings.

    ``iterations`` counts every step of a chain, burn-in included;
    ``burn_in`` is the fraction discarded (and used for adaptation).
    """

    chains: int = 4
    iterations: int = 50_000
    burn_in: float = 0.5
    seed: int = 0
    adapt_every: int = 100
    target_accept: float = 0.234
    rhat_threshold: float = 1.05
    workers: int = 1
    keep_draws: bool = True

    def __post_init__(self):
        if self.chains < 2:
            raise DomainError("at least two chains are needed for convergence diagnostics")
        if not 0.0 < self.burn_in < 1.0:
            raise DomainError("burn_in must be a fraction in (0, 1)")
        if self.burn_iterations < 1 or self.iterations - self.burn_iterations < 2:
            raise DomainError("iterations too small for the requested burn-in")

    @property
    def burn_iterations(self):
        return int(round(self.iterations * self.burn_in))


@dataclass(frozen=True)
class ParamSummary:
    mean: float
    median: float
    sd: float
    ci_low: float
    ci_high: float
    rhat: float
    ess: float


@dataclass
class FitResult:
    """Posterior summaries and diagnostics for one horizon.

    ``point`` is the posterior mean as :class:`MJF1Params`. ``draws`` holds
    retained samples with shape ``(chains, draws, 4)`` in natural units
    (empty when ``keep_draws`` is off).
    """

    tau: int
    n: int
    summaries: dict
    point: MJF1Params
    max_rhat: float
    acceptance_rate: float
    chain_acceptance: tuple
    log_likelihood: float
    converged: bool
    prior: PriorSpec
    config: FitConfig
    draws: np.ndarray = field(default=None, repr=False)

    def interval(self, fn, level=0.95):
        """Central posterior interval of a derived quantity ``fn(alpha_g, alpha_l, theta, mu)``."""
        if self.draws is None or self.draws.size == 0:
            raise MJFError("draws were not kept")
        flat = self.draws.reshape(-1, 4)
        vals = fn(flat[:, 0], flat[:, 1], flat[:, 2], flat[:, 3])
        q = (1.0 - level) / 2.0
        return float(np.quantile(vals, q)), float(np.quantile(vals, 1.0 - q))

    def to_dict(self):
        return {
            "tau": self.tau,
            "n": self.n,
            "converged": self.converged,
            "max_rhat": self.max_rhat,
            "acceptance_rate": self.acceptance_rate,
            "chain_acceptance": list(self.chain_acceptance),
            "log_likelihood": self.log_likelihood,
            "point_estimate": self.point.as_dict(),
            "parameters": {k: asdict(v) for k, v in self.summaries.items()},
            "prior": {k: asdict(v) for k, v in zip(PARAM_NAMES, self.prior.priors())},
            "config": asdict(self.config),
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


@dataclass(frozen=True)
class FitFailure:
    tau: int
    error: str


def _loglik_core(values, phi, tau):
    ag, al, th, mu = np.exp(phi[0]), np.exp(phi[1]), np.exp(phi[2]), phi[3]
    g = ag / th
    l = al / th
    scale = np.sqrt((ag + al) * tau)
    e_g = g + 1.5
    e_l = l + 1.5
    log_c = -(g + l + 1.0) * np.log(2.0) - specfun.ln_beta(l + 1.0, g + 1.0) - np.log(scale)
    z = (values - mu) / scale
    return (
        values.size * log_c
        + (e_l - e_g) * np.arcsinh(z).sum()
        - 0.5 * (e_l + e_g) * np.log1p(z * z).sum()
    )


def _to_phi(params):
    return np.array([np.log(params.alpha_g), np.log(params.alpha_l), np.log(params.theta), params.mu])


def _from_phi(phi, tau):
    return MJF1Params(float(np.exp(phi[0])), float(np.exp(phi[1])), float(np.exp(phi[2])), float(phi[3]), tau)


def log_likelihood(params, sample):
    """Sum of mJF1 log densities of the sample values.

    Raises
    ------
    ContractError
        ``params.tau`` differs from ``sample.tau``.
    """
    if params.tau != sample.tau:
        raise ContractError(f"parameter tau={params.tau} does not match sample tau={sample.tau}")
    return float(_loglik_core(sample.values, _to_phi(params), sample.tau))


def log_posterior(params, sample, prior=None):
    """Unnormalised log posterior in sampling coordinates; ``-inf`` off the prior support."""
    prior = PriorSpec() if prior is None else prior
    phi = _to_phi(params)
    lp = prior.log_density(phi)
    if not np.isfinite(lp):
        return -np.inf
    return lp + log_likelihood(params, sample)


class _Target:
    """Picklable log posterior in sampling coordinates."""

    def __init__(self, values, tau, prior):
        self.values = values
        self.tau = tau
        self.prior = prior

    def __call__(self, phi):
        lp = self.prior.log_density(phi)
        if not np.isfinite(lp):
            return -np.inf
        ll = _loglik_core(self.values, phi, self.tau)
        return lp + ll if np.isfinite(ll) else -np.inf


def _moment_start(values, tau, prior):
    var = values.var()
    theta = var / tau
    start = np.array([np.log(theta), np.log(theta), np.log(theta), np.median(values)])
    lo, hi = prior.bounds().T
    span = hi - lo
    return np.clip(start, lo + 1e-6 * span, hi - 1e-6 * span)


def _numerical_hessian(f, x, steps):
    d = x.size
    h = np.zeros((d, d))
    f0 = f(x)
    for i in range(d):
        ei = np.zeros(d)
        ei[i] = steps[i]
        fp, fm = f(x + ei), f(x - ei)
        h[i, i] = (fp - 2 * f0 + fm) / steps[i] ** 2
        for j in range(i):
            ej = np.zeros(d)
            ej[j] = steps[j]
            h[i, j] = h[j, i] = (
                f(x + ei + ej) - f(x + ei - ej) - f(x - ei + ej) + f(x - ei - ej)
            ) / (4 * steps[i] * steps[j])
    return h


def _laplace(target, values, tau, prior):
    """MAP in sampling coordinates and a proposal covariance around it."""
    x0 = _moment_start(values, tau, prior)
    sd = values.std() if values.std() > 0 else 1e-3
    # optimise in a rescaled space so the simplex has comparable edges
    unit = np.array([1.0, 1.0, 1.0, sd])

    def neg(y):
        v = target(x0 + y * unit)
        return 1e300 if not np.isfinite(v) else -v

    res = optimize.minimize(neg, np.zeros(4), method="Nelder-Mead",
                            options={"xatol": 1e-6, "fatol": 1e-6, "maxiter": 4000, "maxfev": 8000})
    res = optimize.minimize(neg, res.x, method="Nelder-Mead",
                            options={"xatol": 1e-8, "fatol": 1e-8, "maxiter": 4000, "maxfev": 8000})
    mode = x0 + res.x * unit
    fallback = np.diag((np.array([0.05, 0.05, 0.05, 0.05 * sd])) ** 2)
    try:
        steps = np.array([1e-3, 1e-3, 1e-3, 1e-3 * sd])
        with np.errstate(invalid="ignore", over="ignore"):
            hess = _numerical_hessian(lambda p: -target(p), mode, steps)
        if not np.all(np.isfinite(hess)):
            raise np.linalg.LinAlgError
        cov = np.linalg.inv(hess)
        np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        cov = fallback
    return mode, cov


def _run_chain(target, start, cov, iterations, burn, adapt_every, target_accept, seed, bounds):
    rng = np.random.default_rng(seed)
    d = start.size
    phi = start.copy()
    lp = target(phi)
    if not np.isfinite(lp):
        raise MJFError("chain started outside the posterior support")
    base = (2.38**2 / d) * cov
    chol = np.linalg.cholesky(base)
    log_lambda = 0.0
    n_keep = iterations - burn
    out = np.empty((n_keep, d))
    hist = np.empty((burn, d))
    accepted_post = 0
    accepted_window = 0
    for it in range(iterations):
        prop = phi + np.exp(log_lambda) * (chol @ rng.standard_normal(d))
        if np.all(prop >= bounds[:, 0]) and np.all(prop <= bounds[:, 1]):
            lp_prop = target(prop)
        else:
            lp_prop = -np.inf
        accept = np.log(rng.random()) < lp_prop - lp
        if accept:
            phi = prop
            lp = lp_prop
        if it < burn:
            hist[it] = phi
            accepted_window += accept
            if (it + 1) % adapt_every == 0:
                rate = accepted_window / adapt_every
                accepted_window = 0
                window = (it + 1) // adapt_every
                log_lambda += min(1.0, 10.0 / np.sqrt(window)) * (rate - target_accept)
                start_hist = (it + 1) // 2
                if it + 1 - start_hist >= 20 * d:
                    emp = np.cov(hist[start_hist: it + 1].T)
                    emp = (2.38**2 / d) * (emp + 1e-10 * np.diag(np.diag(emp) + 1e-12))
                    try:
                        chol = np.linalg.cholesky(emp)
                    except np.linalg.LinAlgError:
                        pass
        else:
            out[it - burn] = phi
            accepted_post += accept
    return out, accepted_post / n_keep


def split_rhat(draws):
    """Split-R-hat for one parameter; ``draws`` has shape ``(chains, n)``."""
    draws = np.asarray(draws, dtype=float)
    m, n = draws.shape
    half = n // 2
    if half < 2:
        return float("nan")
    parts = np.concatenate([draws[:, :half], draws[:, n - half:]], axis=0)
    means = parts.mean(axis=1)
    within = parts.var(axis=1, ddof=1).mean()
    between = half * means.var(ddof=1)
    if within == 0:
        return float("nan") if between == 0 else float("inf")
    var_plus = (half - 1) / half * within + between / half
    return float(np.sqrt(var_plus / within))


def _autocov(x):
    n = x.size
    xc = x - x.mean()
    size = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(xc, size)
    ac = np.fft.irfft(f * np.conj(f), size)[:n] / n
    return ac


def effective_sample_size(draws):
    """Multi-chain ESS with Geyer's initial monotone sequence."""
    draws = np.asarray(draws, dtype=float)
    m, n = draws.shape
    if n < 4:
        return float("nan")
    acov = np.array([_autocov(c) for c in draws])
    chain_var = acov[:, 0] * n / (n - 1)
    within = chain_var.mean()
    var_plus = within * (n - 1) / n
    if m > 1:
        var_plus += draws.mean(axis=1).var(ddof=1)
    if var_plus <= 0:
        return float("nan")
    rho = 1.0 - (within - acov.mean(axis=0)) / var_plus
    rho[0] = 1.0
    total = 0.0
    prev = np.inf
    t = 0
    while t + 1 < n:
        pair = rho[t] + rho[t + 1]
        if pair <= 0:
            break
        pair = min(pair, prev)
        total += pair
        prev = pair
        t += 2
    tau_int = -1.0 + 2.0 * total
    tau_int = max(tau_int, 1.0 / np.log10(m * n))
    return float(m * n / tau_int)


def _chain_job(args):
    return _run_chain(*args)


def fit_mjf1(sample, prior=None, config=None):
    """Sample the posterior of mJF1 parameters for one horizon.

    Parameters
    ----------
    sample : ReturnSample
        At least 100 values.
    prior : PriorSpec, optional
    config : FitConfig, optional

    Returns
    -------
    FitResult
        Non-converged fits (max split-R-hat above ``config.rhat_threshold``)
        are returned with ``converged=False``.
    """
    if len(sample) < MIN_FIT_SIZE:
        raise DataError(f"fitting needs at least {MIN_FIT_SIZE} values, got {len(sample)}")
    return sample_posterior(sample, prior, config)


def sample_posterior(sample, prior=None, config=None):
    """Run the sampler on any non-empty sample; :func:`fit_mjf1` without the size check."""
    prior = PriorSpec() if prior is None else prior
    config = FitConfig() if config is None else config
    values = np.ascontiguousarray(sample.values, dtype=float)
    if values.size == 0:
        raise DataError("cannot sample a posterior from no data")
    tau = sample.tau
    target = _Target(values, tau, prior)
    mode, cov = _laplace(target, values, tau, prior)
    bounds = prior.bounds()

    seeds = np.random.SeedSequence(config.seed).spawn(config.chains + 1)
    init_rng = np.random.default_rng(seeds[0])
    chol = np.linalg.cholesky(cov)
    starts = []
    for _ in range(config.chains):
        for _attempt in range(100):
            cand = mode + 2.0 * (chol @ init_rng.standard_normal(4))
            if np.all(cand > bounds[:, 0]) and np.all(cand < bounds[:, 1]) and np.isfinite(target(cand)):
                break
        else:
            cand = mode.copy()
        starts.append(cand)

    burn = config.burn_iterations
    jobs = [
        (target, starts[c], cov, config.iterations, burn, config.adapt_every,
         config.target_accept, seeds[c + 1], bounds)
        for c in range(config.chains)
    ]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            outs = list(pool.map(_chain_job, jobs))
    else:
        outs = [_chain_job(j) for j in jobs]

    phi_draws = np.stack([o[0] for o in outs])  # (chains, n, 4)
    acc = tuple(float(o[1]) for o in outs)
    nat = phi_draws.copy()
    nat[..., :3] = np.exp(nat[..., :3])

    summaries = {}
    rhats = []
    for k, name in enumerate(PARAM_NAMES):
        col = nat[..., k]
        flat = col.ravel()
        rh = split_rhat(col)
        rhats.append(rh)
        summaries[name] = ParamSummary(
            mean=float(flat.mean()),
            median=float(np.median(flat)),
            sd=float(flat.std(ddof=1)),
            ci_low=float(np.quantile(flat, 0.025)),
            ci_high=float(np.quantile(flat, 0.975)),
            rhat=rh,
            ess=effective_sample_size(col),
        )
    point = MJF1Params(
        summaries["alpha_g"].mean, summaries["alpha_l"].mean, summaries["theta"].mean,
        summaries["mu"].mean, tau,
    )
    max_rhat = float(np.nanmax(rhats)) if np.any(np.isfinite(rhats)) else float("nan")
    converged = bool(np.isfinite(max_rhat) and max_rhat <= config.rhat_threshold)
    if not converged:
        log.warning("tau=%d: max split-R-hat %.3f exceeds %.2f", tau, max_rhat, config.rhat_threshold)
    return FitResult(
        tau=tau,
        n=int(values.size),
        summaries=summaries,
        point=point,
        max_rhat=max_rhat,
        acceptance_rate=float(np.mean(acc)),
        chain_acceptance=acc,
        log_likelihood=float(_loglik_core(values, _to_phi(point), tau)),
        converged=converged,
        prior=prior,
        config=config,
        draws=nat if config.keep_draws else None,
    )


def _tau_config(config, tau):
    seed = int(np.random.SeedSequence([config.seed, tau]).generate_state(1)[0])
    fields = asdict(config)
    fields["seed"] = seed
    return FitConfig(**fields)


def fit_all_taus(series, taus=range(1, 11), prior=None, config=None, overlap=False):
    """Accumulate and fit each horizon; failures are reported, not raised.

    Returns
    -------
    list
        One :class:`FitResult` or :class:`FitFailure` per horizon, in order.
    """
    config = FitConfig() if config is None else config
    r = log_price_path(series)
    model = fit_drift(r)
    out = []
    for tau in taus:
        try:
            sample = accumulate_returns(r, model, tau, overlap)
            out.append(fit_mjf1(sample, prior, _tau_config(config, tau)))
        except MJFError as exc:
            log.error("tau=%d: fit failed: %s", tau, exc)
            out.append(FitFailure(int(tau), str(exc)))
    return out


def posterior_predictive_moments(result):
    """Closed-form moments (plus numerical median) at the posterior-mean parameters."""
    params = result.point if isinstance(result, FitResult) else result
    return mjf1_moments(params)
