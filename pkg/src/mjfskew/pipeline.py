"""
Returns pipeline: price ingestion, log-price path, drift removal,
accumulation over ``tau`` days and empirical moments.

The daily log-price path ``r_t = log(S_t / S_0)`` is de-trended once with a
least-squares drift ``mu_1``; accumulated returns over ``tau`` days are then
increments of ``x_t = r_t - mu_1 t``.
"""

import csv
import datetime as _dt
import io
import os
from dataclasses import dataclass

import numpy as np
from scipy import optimize, signal

from .distributions import MomentSummary, pearson_skewness
from .errors import ContractError, DataError, DegenerateDataError, DomainError, ParseError

__all__ = [
    "PriceSeries",
    "DetrendModel",
    "ReturnSample",
    "EmpiricalMoments",
    "VarianceScaling",
    "load_prices",
    "log_price_path",
    "fit_drift",
    "accumulate_returns",
    "returns_for_tau",
    "silverman_bandwidth",
    "kde_mode",
    "empirical_moments",
    "variance_vs_tau",
    "price_series_from_returns",
]


@dataclass(frozen=True)
class PriceSeries:
    """Daily closes in chronological order; rows are consecutive trading days."""

    dates: np.ndarray  # datetime64[D]
    closes: np.ndarray

    def __post_init__(self):
        dates = np.asarray(self.dates, dtype="datetime64[D]")
        closes = np.asarray(self.closes, dtype=float)
        if dates.shape != closes.shape or closes.ndim != 1:
            raise DataError("dates and closes must be 1-d arrays of equal length")
        if closes.size < 2:
            raise DataError("a price series needs at least two rows")
        if not np.all(np.isfinite(closes)) or np.any(closes <= 0):
            raise DataError("closes must be positive and finite")
        if np.any(np.diff(dates) <= np.timedelta64(0, "D")):
            raise DataError("dates must be strictly increasing")
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "closes", closes)

    def __len__(self):
        return self.closes.size


@dataclass(frozen=True)
class DetrendModel:
    """Least-squares line ``r_t ~ intercept + mu_1 t`` through the log-price path."""

    mu_1: float
    intercept: float
    residual_rms: float
    mu_1_stderr: float = float("nan")

    def detrend(self, r):
        r = np.asarray(r, dtype=float)
        return r - self.mu_1 * np.arange(r.size)


@dataclass(frozen=True)
class ReturnSample:
    """De-trended returns accumulated over ``tau`` days."""

    tau: int
    values: np.ndarray
    overlap: bool = False

    def __post_init__(self):
        if isinstance(self.tau, bool) or int(self.tau) != self.tau or self.tau < 1:
            raise DomainError("tau must be a positive integer")
        values = np.asarray(self.values, dtype=float).ravel()
        if not np.all(np.isfinite(values)):
            raise DataError("sample values must be finite")
        object.__setattr__(self, "tau", int(self.tau))
        object.__setattr__(self, "values", values)

    def __len__(self):
        return self.values.size

    def shifted(self, c):
        return ReturnSample(self.tau, self.values + c, self.overlap)


@dataclass(frozen=True)
class EmpiricalMoments(MomentSummary):
    n: int = 0
    bandwidth: float = float("nan")


@dataclass(frozen=True)
class VarianceScaling:
    """Empirical moments per horizon plus the straight-line fit of ``m2`` on ``tau``."""

    taus: tuple
    moments: tuple
    slope: float
    intercept: float
    r_squared: float
    overlap: bool = False

    @property
    def m2(self):
        return np.array([m.m2 for m in self.moments])

    @property
    def m2_over_tau(self):
        return self.m2 / np.asarray(self.taus, dtype=float)

    def rows(self):
        """Table rows ``(tau, m1, m2, m2_over_tau, mode, median, zeta1, zeta2, n)``."""
        out = []
        for tau, m in zip(self.taus, self.moments):
            out.append((tau, m.m1, m.m2, m.m2 / tau, m.mode, m.median, m.zeta1, m.zeta2, m.n))
        return out


def _open_text(source):
    if isinstance(source, (str, os.PathLike)):
        return open(source, newline="", encoding="utf-8-sig"), True
    if isinstance(source, (bytes, bytearray)):
        return io.StringIO(bytes(source).decode("utf-8-sig")), True
    if isinstance(source, io.TextIOBase):
        return source, False
    # binary stream
    return io.TextIOWrapper(source, encoding="utf-8-sig", newline=""), False


def load_prices(source, date_column="Date", close_column="Close", delimiter=","):
    """Read a delimited price file with a header row.

    Parameters
    ----------
    source : path, bytes, or text/binary stream
    date_column, close_column : str
        Header names of the ISO-8601 date and closing-price columns.
    delimiter : str
        Field separator.

    Returns
    -------
    PriceSeries
        Sorted chronologically.

    Raises
    ------
    ParseError
        Missing columns, unparseable dates or numbers (with the line number).
    DataError
        Non-positive prices or duplicate dates.
    """
    fh, owned = _open_text(source)
    try:
        reader = csv.reader(fh, delimiter=delimiter)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty input", line=1) from None
        header = [h.strip() for h in header]
        for col in (date_column, close_column):
            if col not in header:
                raise ParseError(f"missing column {col!r} in header {header}", line=1)
        di = header.index(date_column)
        ci = header.index(close_column)
        dates = []
        closes = []
        seen = {}
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) <= max(di, ci):
                raise ParseError(f"expected at least {max(di, ci) + 1} fields, got {len(row)}", line=line)
            try:
                d = _dt.date.fromisoformat(row[di].strip()[:10])
            except ValueError:
                raise ParseError(f"bad date {row[di]!r}", line=line) from None
            try:
                c = float(row[ci])
            except ValueError:
                raise ParseError(f"bad close {row[ci]!r}", line=line) from None
            if not np.isfinite(c) or c <= 0:
                raise DataError(f"line {line}: close = {row[ci].strip()} is not a positive price")
            if d in seen:
                raise DataError(f"line {line}: duplicate date {d} (first seen on line {seen[d]})")
            seen[d] = line
            dates.append(np.datetime64(d, "D"))
            closes.append(c)
    finally:
        if owned:
            fh.close()
    if len(closes) < 2:
        raise DataError("need at least two price rows")
    dates = np.array(dates, dtype="datetime64[D]")
    order = np.argsort(dates, kind="stable")
    return PriceSeries(dates[order], np.asarray(closes)[order])


def log_price_path(series):
    """``r_t = log(S_t) - log(S_0)``; ``r_0`` is exactly zero."""
    logs = np.log(series.closes)
    return logs - logs[0]


def fit_drift(r):
    """Ordinary least squares of ``r_t`` on ``t = 0, 1, ...``."""
    r = np.asarray(r, dtype=float)
    if r.size < 2:
        raise DataError("drift fit needs at least two points")
    t = np.arange(r.size, dtype=float)
    tc = t - t.mean()
    sxx = tc @ tc
    slope = (tc @ (r - r.mean())) / sxx
    intercept = r.mean() - slope * t.mean()
    resid = r - (intercept + slope * t)
    rms = float(np.sqrt(np.mean(resid * resid)))
    if r.size > 2:
        stderr = float(np.sqrt((resid @ resid) / (r.size - 2) / sxx))
    else:
        stderr = float("nan")
    return DetrendModel(mu_1=float(slope), intercept=float(intercept), residual_rms=rms, mu_1_stderr=stderr)


def accumulate_returns(r, model, tau, overlap=False):
    """Increments of the de-trended path over ``tau`` days.

    Non-overlapping windows (default) give ``x[(k+1)tau] - x[k tau]``; a
    trailing partial window is dropped. Overlapping windows give
    ``x[k+tau] - x[k]`` for every ``k``.
    """
    r = np.asarray(r, dtype=float)
    if isinstance(tau, bool) or int(tau) != tau or tau < 1:
        raise DomainError("tau must be a positive integer")
    tau = int(tau)
    if tau >= r.size:
        raise DataError(f"tau={tau} needs a path longer than {r.size} points")
    if overlap:
        raw = r[tau:] - r[:-tau]
    else:
        ends = r[::tau]
        raw = np.diff(ends)
    # x_{a+tau} - x_a = (r_{a+tau} - r_a) - mu_1 tau
    return ReturnSample(tau=tau, values=raw - model.mu_1 * tau, overlap=bool(overlap))


def returns_for_tau(series, tau, overlap=False, model=None):
    """Accumulated returns straight from a price series, fitting the drift unless given."""
    r = log_price_path(series)
    if model is None:
        model = fit_drift(r)
    return accumulate_returns(r, model, tau, overlap)


def silverman_bandwidth(values):
    values = np.asarray(values, dtype=float)
    sd = values.std(ddof=1)
    q75, q25 = np.percentile(values, [75, 25])
    spread = min(sd, (q75 - q25) / 1.34) if q75 > q25 else sd
    return 0.9 * spread * values.size ** (-0.2)


def _kde(values, h, x):
    return np.exp(-0.5 * ((x - values) / h) ** 2).sum()


def kde_mode(values, bandwidth=None, grid_size=4096):
    """Location of the maximum of a Gaussian kernel density estimate.

    A binned FFT estimate on a grid spanning the central 99% of the data
    locates the peak; the exact estimate is then maximised near it.
    """
    values = np.asarray(values, dtype=float)
    h = silverman_bandwidth(values) if bandwidth is None else float(bandwidth)
    if not h > 0:
        raise DegenerateDataError("kernel bandwidth must be positive")
    lo, hi = np.percentile(values, [0.5, 99.5])
    lo -= 4 * h
    hi += 4 * h
    counts, edges = np.histogram(values, bins=grid_size, range=(lo, hi))
    dx = edges[1] - edges[0]
    half = int(np.ceil(5 * h / dx))
    k = np.exp(-0.5 * (np.arange(-half, half + 1) * dx / h) ** 2)
    dens = signal.fftconvolve(counts.astype(float), k, mode="same")
    i = int(np.argmax(dens))
    centre = 0.5 * (edges[i] + edges[i + 1])
    # restrict the exact evaluation to points that matter near the peak
    near = values[np.abs(values - centre) < 12 * h + 2 * dx]
    width = max(2 * dx, 0.5 * h)
    res = optimize.minimize_scalar(
        lambda x: -_kde(near, h, x),
        bounds=(centre - width, centre + width),
        method="bounded",
        options={"xatol": 1e-6 * h},
    )
    return float(res.x)


def empirical_moments(sample, mode_bandwidth=None):
    """Sample mean, unbiased variance, median, KDE mode and Pearson skewness.

    Raises
    ------
    DataError
        Fewer than 30 values.
    DegenerateDataError
        All values equal, so the skewness coefficients are undefined.
    """
    values = sample.values if isinstance(sample, ReturnSample) else np.asarray(sample, dtype=float)
    n = values.size
    if n < 30:
        raise DataError(f"empirical moments need at least 30 values, got {n}")
    m1 = float(values.mean())
    m2 = float(values.var(ddof=1))
    if not m2 > 0:
        raise DegenerateDataError("sample variance is zero; skewness undefined")
    median = float(np.median(values))
    h = silverman_bandwidth(values) if mode_bandwidth is None else float(mode_bandwidth)
    if not h > 0:
        h = np.sqrt(m2) * n ** (-0.2)
    mode = kde_mode(values, h)
    z1, z2 = pearson_skewness(m1, m2, mode, median)
    return EmpiricalMoments(m1=m1, m2=m2, mode=mode, median=median, zeta1=z1, zeta2=z2, n=n, bandwidth=h)


def variance_vs_tau(series, taus=range(1, 11), overlap=False, mode_bandwidth=None):
    """Empirical moments for each horizon and a linear fit of ``m2`` on ``tau``.

    The drift is fitted once on the daily path and reused for every horizon.
    """
    taus = tuple(int(t) for t in taus)
    if not taus:
        raise ContractError("need at least one horizon")
    r = log_price_path(series)
    model = fit_drift(r)
    moments = []
    for tau in taus:
        sample = accumulate_returns(r, model, tau, overlap)
        moments.append(empirical_moments(sample, mode_bandwidth))
    slope, intercept, r2 = _line_fit(np.asarray(taus, dtype=float), np.array([m.m2 for m in moments]))
    return VarianceScaling(taus, tuple(moments), slope, intercept, r2, bool(overlap))


def _line_fit(x, y):
    if x.size < 2 or np.ptp(x) == 0:
        return float("nan"), float("nan"), float("nan")
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    sst = np.sum((y - y.mean()) ** 2)
    if not sst > 0:
        raise DegenerateDataError("all variances equal; straight-line fit is degenerate")
    return float(slope), float(intercept), float(1.0 - resid @ resid / sst)


def price_series_from_returns(daily_returns, start="2000-01-03", s0=100.0):
    """Build a :class:`PriceSeries` whose daily log increments are ``daily_returns``.

    Dates are consecutive calendar days; only their order matters downstream.
    """
    inc = np.asarray(daily_returns, dtype=float)
    logs = np.concatenate([[0.0], np.cumsum(inc)])
    dates = np.datetime64(start, "D") + np.arange(logs.size)
    return PriceSeries(dates, s0 * np.exp(logs))
