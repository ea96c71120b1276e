"""
Modified Jones-Faddy skew t-distribution (mJF1) for accumulated returns,
and its symmetric Student-t special case.

With ``z = (x - mu) / s``, ``s = sqrt((alpha_g + alpha_l) * tau)`` and
``u = z / sqrt(1 + z**2)`` the density is

    f(x) = C (1 - u)**(alpha_g/theta + 3/2) (1 + u)**(alpha_l/theta + 3/2)

``(1 + u) / 2`` is Beta(alpha_l/theta + 1, alpha_g/theta + 1) distributed,
which gives closed-form CDFs and quantiles, hence an exact sampler. Densities
are evaluated in log space through ``asinh``:

    log(1 + u) =  asinh(z) - log(sqrt(1 + z**2))
    log(1 - u) = -asinh(z) - log(sqrt(1 + z**2))

which never forms ``1 - u`` and so stays accurate far in the tails.
"""

from dataclasses import dataclass

import numpy as np

from . import specfun
from .errors import DomainError

__all__ = [
    "MJF1Params",
    "StudentTParams",
    "MomentSummary",
    "mjf1_u",
    "mjf1_u_inverse",
    "mjf1_log_norm_const",
    "mjf1_norm_const",
    "mjf1_logpdf",
    "mjf1_pdf",
    "mjf1_cdf_gains",
    "mjf1_cdf_losses",
    "mjf1_quantile",
    "mjf1_sample",
    "mjf1_mean",
    "mjf1_mean_terms",
    "mjf1_variance",
    "mjf1_variance_legacy",
    "mjf1_variance_approx",
    "mjf1_mode",
    "mjf1_median",
    "mjf1_moments",
    "pearson_skewness",
    "student_t_logpdf",
    "student_t_pdf",
    "tail_exponent",
]


def _check_horizon(tau):
    if isinstance(tau, bool) or int(tau) != tau or tau < 1:
        raise DomainError(f"tau must be a positive integer number of days, got {tau!r}")


@dataclass(frozen=True)
class MJF1Params:
    """Parameters of the mJF1 density at one accumulation horizon.

    Attributes
    ----------
    alpha_g, alpha_l : float
        Gain- and loss-tail scales (squared log-return per day).
    theta : float
        Mean stochastic variance per day.
    mu : float
        Location (log-return units).
    tau : int
        Accumulation horizon in days.
    """

    alpha_g: float
    alpha_l: float
    theta: float
    mu: float = 0.0
    tau: int = 1

    def __post_init__(self):
        for name in ("alpha_g", "alpha_l", "theta"):
            v = getattr(self, name)
            if not np.isfinite(v) or v <= 0:
                raise DomainError(f"{name} must be positive and finite, got {v!r}")
        if not np.isfinite(self.mu):
            raise DomainError("mu must be finite")
        _check_horizon(self.tau)
        object.__setattr__(self, "tau", int(self.tau))

    @property
    def alpha(self):
        return 0.5 * (self.alpha_g + self.alpha_l)

    @property
    def delta(self):
        return self.alpha_g - self.alpha_l

    @property
    def shape_g(self):
        """``alpha_g / theta``."""
        return self.alpha_g / self.theta

    @property
    def shape_l(self):
        """``alpha_l / theta``."""
        return self.alpha_l / self.theta

    @property
    def scale(self):
        """``sqrt((alpha_g + alpha_l) * tau)``, the natural length scale."""
        return float(np.sqrt((self.alpha_g + self.alpha_l) * self.tau))

    def beta_shapes(self):
        """Shapes ``(a, b)`` of the Beta law of ``(1 + u) / 2``."""
        return self.shape_l + 1.0, self.shape_g + 1.0

    def replace(self, **changes):
        fields = dict(
            alpha_g=self.alpha_g, alpha_l=self.alpha_l, theta=self.theta, mu=self.mu, tau=self.tau
        )
        fields.update(changes)
        return MJF1Params(**fields)

    def as_dict(self):
        return {
            "alpha_g": self.alpha_g,
            "alpha_l": self.alpha_l,
            "theta": self.theta,
            "mu": self.mu,
            "tau": self.tau,
        }


@dataclass(frozen=True)
class StudentTParams:
    """Symmetric Student-t of returns: shape ``alpha / theta``, scale ``sqrt(2 alpha tau)``."""

    alpha: float
    theta: float
    tau: int = 1
    mu: float = 0.0

    def __post_init__(self):
        for name in ("alpha", "theta"):
            v = getattr(self, name)
            if not np.isfinite(v) or v <= 0:
                raise DomainError(f"{name} must be positive and finite, got {v!r}")
        _check_horizon(self.tau)
        object.__setattr__(self, "tau", int(self.tau))

    def as_mjf1(self):
        return MJF1Params(self.alpha, self.alpha, self.theta, self.mu, self.tau)


@dataclass(frozen=True)
class MomentSummary:
    """Moment summary of a return distribution.

    ``zeta1 = (m1 - mode) / sqrt(m2)`` and ``zeta2 = 3 (m1 - median) / sqrt(m2)``.
    """

    m1: float
    m2: float
    mode: float
    median: float
    zeta1: float
    zeta2: float

    @property
    def std(self):
        return float(np.sqrt(self.m2))


def pearson_skewness(m1, m2, mode, median):
    """First (mode) and second (median) Pearson skewness coefficients.

    The median coefficient carries the conventional factor of 3.
    """
    if not m2 > 0:
        raise DomainError("variance must be positive for skewness")
    sd = np.sqrt(m2)
    return float((m1 - mode) / sd), float(3.0 * (m1 - median) / sd)


def _std_z(params, x):
    return (np.asarray(x, dtype=float) - params.mu) / params.scale


def _half_log1p_sq(z):
    # log(sqrt(1 + z^2)) without overflow for huge |z|
    az = np.abs(z)
    with np.errstate(over="ignore", divide="ignore"):
        return np.where(az < 1e150, 0.5 * np.log1p(z * z), np.log(az))


def _beta_args(z):
    """Return ``((1 + u)/2, (1 - u)/2)``, each computed without cancellation."""
    w = np.hypot(z, 1.0)
    az = np.abs(z)
    with np.errstate(over="ignore"):
        far = 0.5 / (w * (w + az))  # the side that is small
    near = 0.5 * (w + az) / w
    pos = z >= 0
    return np.where(pos, near, far), np.where(pos, far, near)


def mjf1_u(params, x):
    """``u = (x - mu) / sqrt((x - mu)^2 + (alpha_g + alpha_l) tau)``, in (-1, 1)."""
    z = _std_z(params, x)
    u = z / np.hypot(z, 1.0)
    return float(u) if np.ndim(u) == 0 else u


def mjf1_u_inverse(params, u):
    """Exact inverse of :func:`mjf1_u`."""
    u = np.asarray(u, dtype=float)
    x = params.mu + params.scale * u / np.sqrt((1.0 - u) * (1.0 + u))
    return float(x) if np.ndim(x) == 0 else x


def mjf1_log_norm_const(params):
    a, b = params.beta_shapes()
    return -(a + b - 1.0) * np.log(2.0) - specfun.ln_beta(a, b) - np.log(params.scale)


def mjf1_norm_const(params):
    """Normalisation constant ``C``, formed in log space."""
    return float(np.exp(mjf1_log_norm_const(params)))


def mjf1_logpdf(params, x):
    z = _std_z(params, x)
    e_g = params.shape_g + 1.5  # exponent on (1 - u)
    e_l = params.shape_l + 1.5  # exponent on (1 + u)
    res = mjf1_log_norm_const(params) + (e_l - e_g) * np.arcsinh(z) - (e_l + e_g) * _half_log1p_sq(z)
    return float(res) if np.ndim(res) == 0 else res


def mjf1_pdf(params, x):
    """Density of accumulated returns at ``x`` (scalar or array)."""
    res = np.exp(mjf1_logpdf(params, x))
    return float(res) if np.ndim(res) == 0 else res


def _cdf_pair(params, x):
    z = _std_z(params, x)
    yp, ym = _beta_args(z)
    a, b = params.beta_shapes()
    return specfun.reg_inc_beta_pair(yp, ym, a, b)


def mjf1_cdf_gains(params, x):
    """``F_g(x) = P(X <= x) = I((1 + u)/2; alpha_l/theta + 1, alpha_g/theta + 1)``."""
    lower, _ = _cdf_pair(params, x)
    return lower


def mjf1_cdf_losses(params, x):
    """``F_l(x) = P(X >= x)``; computed directly, so it keeps relative accuracy in the right tail."""
    _, upper = _cdf_pair(params, x)
    return upper


def _u_from_beta(params, yp, ym):
    # (1 + u)/2 = yp, (1 - u)/2 = ym  =>  z = (yp - ym) / (2 sqrt(yp ym))
    with np.errstate(divide="ignore"):
        z = (yp - ym) / (2.0 * np.sqrt(yp) * np.sqrt(ym))
    return params.mu + params.scale * z


def mjf1_quantile(params, p):
    """Inverse of :func:`mjf1_cdf_gains`.

    Parameters
    ----------
    params : MJF1Params
    p : float or array_like
        Probabilities in (0, 1).
    """
    scalar = np.ndim(p) == 0
    p = np.asarray(p, dtype=float)
    if np.any(~(p > 0.0) | ~(p < 1.0)):
        raise DomainError("quantile probabilities must lie strictly inside (0, 1)")
    a, b = params.beta_shapes()
    yp, ym = specfun.inv_reg_inc_beta_pair(p, 1.0 - p, a, b)
    x = _u_from_beta(params, yp, ym)
    return float(x) if scalar else x


def mjf1_sample(params, n, seed=None):
    """Draw ``n`` i.i.d. returns by inverse-CDF sampling.

    Returns a :class:`~mjfskew.pipeline.ReturnSample` at ``params.tau``.
    """
    from .pipeline import ReturnSample

    n = int(n)
    if n < 1:
        raise DomainError("n must be at least 1")
    rng = np.random.default_rng(seed)
    # open interval (0, 1): random() can return exactly 0
    p = rng.random(n)
    p = np.where(p == 0.0, np.nextafter(0.0, 1.0), p)
    a, b = params.beta_shapes()
    yp, ym = specfun.inv_reg_inc_beta_pair(p, 1.0 - p, a, b)
    return ReturnSample(tau=params.tau, values=_u_from_beta(params, yp, ym))


def mjf1_mean_terms(params):
    """The two additive pieces of the mean: ``(mu, skew_term)``.

    For fitted index returns both pieces are typically two orders of
    magnitude larger than their sum.
    """
    g, l = params.shape_g, params.shape_l
    skew = (
        params.scale
        * specfun.beta(g + 0.5, 0.5)
        * specfun.beta(l + 0.5, 0.5)
        * (l - g)
        / (2.0 * np.pi)
    )
    return params.mu, float(skew)


def mjf1_mean(params):
    loc, skew = mjf1_mean_terms(params)
    return loc + skew


def mjf1_variance(params):
    """Exact variance.

    ``E[(x - mu)^2] = theta tau (g + l) ((g - l)^2 + g + l) / (4 g l)`` with
    ``g = alpha_g/theta``, ``l = alpha_l/theta``, minus the squared skew term
    of the mean. Reduces to ``theta * tau`` when ``alpha_g == alpha_l``.
    Finite only for ``g, l > 0``, which the parameter invariants guarantee.
    """
    g, l = params.shape_g, params.shape_l
    tt = params.theta * params.tau
    # grouped so that g == l gives exactly theta * tau
    four_gl = 4.0 * g * l
    gl_sum = g + l
    second = tt * (gl_sum * gl_sum / four_gl + gl_sum * (g - l) ** 2 / four_gl)
    _, skew = mjf1_mean_terms(params)
    return float(second - skew * skew)


def mjf1_variance_legacy(params):
    """Closed form in which the mean-squared term uses ``pi / (B(g, 1/2) B(l, 1/2))``.

    Equal to the true variance only for ``alpha_g == alpha_l``: the squared
    mean term is off by a factor ``(g l)^2``. Kept for reproducing moment
    tables computed with it; use :func:`mjf1_variance` for anything else.
    """
    ag, al, th, tau = params.alpha_g, params.alpha_l, params.theta, params.tau
    g, l = params.shape_g, params.shape_l
    bracket = th * th / (ag * al) - (np.pi / (specfun.beta(g, 0.5) * specfun.beta(l, 0.5))) ** 2
    return float(th * tau * (ag + al) ** 2 / (4.0 * ag * al) + (ag + al) * (ag - al) ** 2 * tau / (4.0 * th * th) * bracket)


def mjf1_variance_approx(params):
    """Small-skew expansion of ``m2 / (theta tau)``.

    Returns
    -------
    ratio, correction : float
        ``ratio = 1 + correction`` where, with ``alpha = (alpha_g + alpha_l)/2``,
        ``delta = alpha_g - alpha_l`` and ``r = alpha / theta``,
        ``correction = delta^2 / (4 alpha^2) * (1 + 2 r - 2 r^3 Γ(r + 1/2)^4 / Γ(r)^4)``.

    Notes
    -----
    This expands :func:`mjf1_variance_legacy`, not the exact variance.
    """
    a = params.alpha
    d = params.delta
    r = a / params.theta
    gam = np.exp(4.0 * (specfun.ln_gamma(r + 0.5) - specfun.ln_gamma(r)))
    corr = d * d / (4.0 * a * a) * (1.0 + 2.0 * r - 2.0 * r**3 * gam)
    return 1.0 + float(corr), float(corr)


def mjf1_mode(params):
    g, l = params.shape_g, params.shape_l
    return float(params.mu + params.scale * (l - g) / (2.0 * np.sqrt((g + 1.5) * (l + 1.5))))


def mjf1_median(params):
    return mjf1_quantile(params, 0.5)


def mjf1_moments(params):
    """Mean, variance, mode, median and Pearson skewness of the density."""
    m1 = mjf1_mean(params)
    m2 = mjf1_variance(params)
    mode = mjf1_mode(params)
    median = mjf1_median(params)
    z1, z2 = pearson_skewness(m1, m2, mode, median)
    return MomentSummary(m1=m1, m2=m2, mode=mode, median=median, zeta1=z1, zeta2=z2)


def student_t_logpdf(params, x):
    c = params.alpha / params.theta
    s2 = 2.0 * params.alpha * params.tau
    y = np.asarray(x, dtype=float) - params.mu
    res = (
        specfun.ln_gamma(c + 1.5)
        - 0.5 * np.log(np.pi)
        - specfun.ln_gamma(c + 1.0)
        - 0.5 * np.log(s2)
        - (c + 1.5) * np.log1p(y * y / s2)
    )
    return float(res) if np.ndim(res) == 0 else res


def student_t_pdf(params, x):
    """Symmetric Student-t density of returns with scale ``sqrt(2 alpha tau)``."""
    res = np.exp(student_t_logpdf(params, x))
    return float(res) if np.ndim(res) == 0 else res


def tail_exponent(params, side):
    """Power of the CCDF tail: ``2 alpha_g/theta + 2`` for gains, ``2 alpha_l/theta + 2`` for losses."""
    if side == "gains":
        return 2.0 * params.shape_g + 2.0
    if side == "losses":
        return 2.0 * params.shape_l + 2.0
    raise DomainError(f"side must be 'gains' or 'losses', got {side!r}")
