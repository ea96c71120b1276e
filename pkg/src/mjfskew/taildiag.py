"""
Tail diagnostics for gains and losses: empirical CCDFs with log-log line fits, plus U-test p-values.

Gains are returns above zero and losses are returns below zero. Abscissae
keep their sign, so a losses curve runs from small to large magnitudes
through decreasing (negative) values. Along each curve the CCDF is
non-increasing.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from . import specfun
from .distributions import mjf1_cdf_gains, mjf1_cdf_losses
from .errors import ContractError, DataError, DomainError

__all__ = [
    "CCDFCurve",
    "TailFit",
    "UTestReport",
    "empirical_ccdf",
    "model_ccdf",
    "tail_linear_fit",
    "tail_region",
    "u_test",
    "DEFAULT_TAIL_FRACTION",
    "MIN_TAIL_POINTS",
]

DEFAULT_TAIL_FRACTION = 0.02
MIN_TAIL_POINTS = 5


def _check_side(side):
    if side not in ("gains", "losses"):
        raise DomainError(f"side must be 'gains' or 'losses', got {side!r}")


@dataclass(frozen=True)
class CCDFCurve:
    """CCDF of one side of a sample.

    ``x`` holds signed abscissae ordered from the centre outwards; ``ccdf``
    is non-increasing along that order. ``count`` is the number of points
    the CCDF was normalised by.
    """

    side: str
    x: np.ndarray
    ccdf: np.ndarray
    count: int

    def __post_init__(self):
        _check_side(self.side)
        x = np.asarray(self.x, dtype=float)
        c = np.asarray(self.ccdf, dtype=float)
        if x.shape != c.shape or x.ndim != 1:
            raise DomainError("x and ccdf must be 1-D arrays of equal length")
        mag = x if self.side == "gains" else -x
        if np.any(np.diff(mag) < 0):
            raise DomainError("abscissae must move away from zero along the curve")
        if np.any(np.diff(c) > 0):
            raise DomainError("CCDF must be non-increasing along the curve")
        if np.any((c < 0) | (c > 1)):
            raise DomainError("CCDF values must lie in [0, 1]")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "ccdf", c)

    def __len__(self):
        return self.x.size

    @property
    def magnitudes(self):
        return np.abs(self.x)


@dataclass(frozen=True)
class TailFit:
    """OLS line through ``log10 CCDF`` against ``log10 |x|`` with a pointwise band.

    Arrays are aligned with ``curve.x[start:stop]``.
    """

    side: str
    start: int
    stop: int
    slope: float
    intercept: float
    r_squared: float
    level: float
    log_x: np.ndarray
    log_ccdf: np.ndarray
    fitted: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    @property
    def residuals(self):
        return self.log_ccdf - self.fitted

    @property
    def x_range(self):
        return float(10 ** self.log_x[0]), float(10 ** self.log_x[-1])


@dataclass(frozen=True)
class UTestReport:
    """Per-rank U-test p-values for the ``k`` most extreme points of one side.

    Rank 1 is the most extreme point. Small p-values flag points more
    extreme than the fitted law allows; large ones flag points that are
    not extreme enough.
    """

    side: str
    k: int
    n: int
    x: np.ndarray
    u: np.ndarray
    p_values: np.ndarray
    fraction_inside: float
    band: tuple = (0.05, 0.95)

    @property
    def fraction_defined(self):
        return self.k > 0


def _side_values(values, side):
    _check_side(side)
    values = np.asarray(values, dtype=float)
    if side == "gains":
        return np.sort(values[values > 0])
    return -np.sort(-values[values < 0])  # descending: -small ... -large


def empirical_ccdf(sample, side):
    """Empirical CCDF of the gains (``x > 0``) or losses (``x < 0``) of a sample.

    The i-th most extreme of the ``n`` side points gets CCDF ``i/n``.

    Raises
    ------
    DataError
        The requested side holds no points.
    """
    values = getattr(sample, "values", sample)
    x = _side_values(values, side)
    n = x.size
    if n == 0:
        raise DataError(f"sample has no {side}")
    ccdf = (n - np.arange(n)) / n
    return CCDFCurve(side, x, ccdf, n)


def model_ccdf(params, side, xs, conditional=False):
    """Model CCDF: ``P(X > x)`` for gains and ``P(X < x)`` for losses.

    With ``conditional`` the probability is divided by the mass of the side
    (``P(X > 0)`` or ``P(X < 0)``), which makes it comparable with
    :func:`empirical_ccdf`.
    """
    _check_side(side)
    xs = np.asarray(xs, dtype=float)
    if side == "gains":
        out = mjf1_cdf_losses(params, xs)
        norm = mjf1_cdf_losses(params, 0.0)
    else:
        out = mjf1_cdf_gains(params, xs)
        norm = mjf1_cdf_gains(params, 0.0)
    if conditional:
        out = np.minimum(out / norm, 1.0)
    return out


def tail_region(curve, fraction=DEFAULT_TAIL_FRACTION):
    """Index range ``(start, stop)`` of the most extreme ``fraction`` of the curve."""
    if not 0.0 < fraction <= 1.0:
        raise DomainError("tail fraction must lie in (0, 1]")
    n = len(curve)
    k = int(math.ceil(fraction * n))
    return n - k, n


def tail_linear_fit(curve, region=None, level=0.95, fraction=DEFAULT_TAIL_FRACTION):
    """Fit a straight line to the curve's tail in log10-log10 space.

    Parameters
    ----------
    curve : CCDFCurve
    region : tuple of int, optional
        ``(start, stop)`` indices into the curve. Defaults to the most
        extreme ``fraction`` of the points.
    level : float
        Confidence level of the band.

    Notes
    -----
    The band is ``fitted +/- z * sigma_i / (F_i ln 10)`` with the binomial
    standard deviation ``sigma_i = sqrt(F_i (1 - F_i) / n)`` of the CCDF
    value ``F_i`` carried to log space by the delta method.

    Raises
    ------
    DomainError
        Fewer than five points, zero CCDF values or zero abscissae in the region.
    """
    if not 0.0 < level < 1.0:
        raise DomainError("confidence level must lie in (0, 1)")
    start, stop = tail_region(curve, fraction) if region is None else (int(region[0]), int(region[1]))
    if not 0 <= start < stop <= len(curve):
        raise DomainError(f"region {start}:{stop} is outside the curve")
    if stop - start < MIN_TAIL_POINTS:
        raise DomainError(f"tail region holds {stop - start} points, at least {MIN_TAIL_POINTS} required")
    f = curve.ccdf[start:stop]
    mag = curve.magnitudes[start:stop]
    if np.any(f <= 0):
        raise DomainError("tail region contains zero CCDF values")
    if np.any(mag <= 0):
        raise DomainError("tail region contains zero abscissae")
    lx = np.log10(mag)
    ly = np.log10(f)
    if np.ptp(lx) == 0:
        raise DomainError("tail region abscissae are all equal")
    slope, intercept = np.polyfit(lx, ly, 1)
    fitted = intercept + slope * lx
    sst = np.sum((ly - ly.mean()) ** 2)
    r2 = 1.0 - np.sum((ly - fitted) ** 2) / sst if sst > 0 else 1.0
    z = stats.norm.ppf(0.5 + level / 2.0)
    sigma_log = np.sqrt(f * (1.0 - f) / curve.count) / (f * np.log(10.0))
    return TailFit(
        side=curve.side,
        start=start,
        stop=stop,
        slope=float(slope),
        intercept=float(intercept),
        r_squared=float(r2),
        level=level,
        log_x=lx,
        log_ccdf=ly,
        fitted=fitted,
        lower=fitted - z * sigma_log,
        upper=fitted + z * sigma_log,
    )


def u_test(sample, cdf, side, k, band=(0.05, 0.95)):
    """U-test of the ``k`` most extreme points of one side against a fitted law.

    Parameters
    ----------
    sample : ReturnSample or array_like
    cdf : callable
        Lower distribution function ``F(x) = P(X <= x)`` of the fitted law.
    side : {'gains', 'losses'}
    k : int
        Number of tail points; at most the number of points on that side.

    Notes
    -----
    With ``n`` the full sample size, the rank-``i`` gain has
    ``u = F(x)`` distributed under the null as the ``(n-i+1)``-th order
    statistic of ``n`` uniforms, ``Beta(n-i+1, i)``. Its p-value is the
    probability of a value at least as extreme,
    ``P(Beta(n-i+1, i) >= u) = I(1-u; i, n-i+1)``. Losses use ``1-F``.
    Under the null each p-value is Uniform(0, 1).

    Raises
    ------
    DomainError
        ``k`` is negative or exceeds the side count.
    ContractError
        ``cdf`` is not monotone on the tail points or leaves ``[0, 1]``.
    """
    values = np.asarray(getattr(sample, "values", sample), dtype=float)
    n = values.size
    side_pts = _side_values(values, side)
    k = int(k)
    if k < 0 or k > side_pts.size:
        raise DomainError(f"k={k} must lie in [0, {side_pts.size}]")
    if k == 0:
        empty = np.empty(0)
        return UTestReport(side, 0, n, empty, empty, empty, float("nan"), tuple(band))
    x = side_pts[::-1][:k]  # rank 1 first
    f = np.asarray(cdf(x), dtype=float)
    if np.any(~np.isfinite(f)) or np.any((f < 0) | (f > 1)):
        raise ContractError("cdf returned values outside [0, 1]")
    # tail values run outwards-to-inwards, so F must fall (gains) or rise (losses)
    d = np.diff(f)
    if (side == "gains" and np.any(d > 0)) or (side == "losses" and np.any(d < 0)):
        raise ContractError("cdf is not monotone on the tail points")
    # exceedance probability of each point in its own direction
    tail_prob = 1.0 - f if side == "gains" else f
    ranks = np.arange(1, k + 1, dtype=float)
    p = specfun.reg_inc_beta(np.clip(tail_prob, 0.0, 1.0), ranks, n - ranks + 1.0)
    p = np.clip(np.asarray(p, dtype=float), 0.0, 1.0)
    inside = float(np.mean((p > band[0]) & (p < band[1])))
    return UTestReport(side, k, n, x, f, p, inside, tuple(band))
