"""
End-to-end report: fits per horizon, model and empirical moment tables,
variance scaling, rescaled densities and tail diagnostics, written as
tab-separated tables plus a JSON manifest.
"""

import json
import logging
import os
import platform
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .distributions import mjf1_cdf_gains, mjf1_mean_terms, mjf1_moments, mjf1_pdf, tail_exponent
from .errors import ConfigError, ContractError, MJFError
from .fitting import FitConfig, FitResult, PriorSpec, _tau_config, fit_mjf1
from .pipeline import accumulate_returns, empirical_moments, fit_drift, load_prices, log_price_path, _line_fit
from .taildiag import (
    DEFAULT_TAIL_FRACTION,
    MIN_TAIL_POINTS,
    empirical_ccdf,
    model_ccdf,
    tail_linear_fit,
    tail_region,
    u_test,
)

__all__ = [
    "RunConfig",
    "TailReport",
    "ReportBundle",
    "RatioRow",
    "MeanTerms",
    "rescaled_pdf",
    "ratio_diagnostics",
    "mean_decomposition",
    "tail_report",
    "run_report",
    "write_table",
    "format_value",
]

log = logging.getLogger(__name__)


def format_value(v):
    """Table cell text: integers as is, reals at 6 significant digits."""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    v = float(v)
    if np.isnan(v):
        return "nan"
    if v == 0:
        return "0"
    return f"{v:.6g}"


def write_table(path, header, rows, comments=()):
    """Write a tab-separated table with a header line; ``comments`` become ``#`` lines."""
    lines = [f"# {c}" for c in comments]
    lines.append("\t".join(header))
    lines.extend("\t".join(format_value(v) for v in row) for row in rows)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


@dataclass(frozen=True)
class RunConfig:
    """Settings of one report run."""

    input_path: str
    output_dir: str
    taus: tuple = tuple(range(1, 11))
    overlap: bool = False
    prior: PriorSpec = field(default_factory=PriorSpec)
    fit: FitConfig = field(default_factory=FitConfig)
    tail_fraction: float = DEFAULT_TAIL_FRACTION
    confidence: float = 0.95
    mode_bandwidth: float = None
    seed: int = 0
    workers: int = 1
    y_max: float = 10.0
    y_points: int = 401
    date_column: str = "Date"
    close_column: str = "Close"
    delimiter: str = ","

    def __post_init__(self):
        taus = tuple(int(t) for t in self.taus)
        if not taus:
            raise ConfigError("tau list is empty")
        if any(t < 1 for t in taus):
            raise ConfigError("every tau must be >= 1")
        if len(set(taus)) != len(taus):
            raise ConfigError("tau list has duplicates")
        object.__setattr__(self, "taus", taus)
        if not 0.0 < self.tail_fraction <= 1.0:
            raise ConfigError("tail_fraction must lie in (0, 1]")
        if not 0.0 < self.confidence < 1.0:
            raise ConfigError("confidence must lie in (0, 1)")
        if self.mode_bandwidth is not None and not self.mode_bandwidth > 0:
            raise ConfigError("mode_bandwidth must be positive")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.y_points < 2 or not self.y_max > 0:
            raise ConfigError("rescaled grid needs y_max > 0 and at least 2 points")

    def fit_config_for(self, tau):
        base = FitConfig(**{**asdict(self.fit), "seed": self.seed})
        return _tau_config(base, tau)

    def as_dict(self):
        d = asdict(self)
        d["taus"] = list(self.taus)
        return d


@dataclass(frozen=True)
class TailReport:
    """Tail diagnostics of one side at one horizon."""

    tau: int
    side: str
    curve: object
    model: np.ndarray
    fit: object
    utest: object
    exponent: float


@dataclass(frozen=True)
class RatioRow:
    tau: int
    alpha: float
    delta: float
    delta2_over_alpha2: float
    delta2_over_theta2: float
    mu: float


@dataclass(frozen=True)
class MeanTerms:
    tau: int
    mu_term: float
    skew_term: float
    m1: float


@dataclass
class ReportBundle:
    """All report tables, keyed by horizon where applicable."""

    taus: tuple
    fits: dict
    model_moments: dict
    empirical: dict
    rv: tuple
    ys: np.ndarray
    rescaled: dict
    tails: dict
    failures: dict
    warnings: dict = field(default_factory=dict)

    @property
    def ok(self):
        return not self.failures


def _point(p):
    return p.point if isinstance(p, FitResult) else p


def rescaled_pdf(params, ys):
    """Density of ``y = (x - mu) / sqrt((alpha_g + alpha_l) tau)``.

    Depends on the parameters only through ``alpha_g/theta`` and
    ``alpha_l/theta``.
    """
    s = params.scale
    ys = np.asarray(ys, dtype=float)
    return s * mjf1_pdf(params, params.mu + ys * s)


def ratio_diagnostics(fits):
    """Rows ``(tau, alpha, delta, delta^2/alpha^2, delta^2/theta^2, mu)`` from point estimates."""
    if not fits:
        raise ContractError("need at least one fit")
    out = []
    for f in fits:
        p = _point(f)
        a, d = p.alpha, p.delta
        out.append(RatioRow(p.tau, a, d, (d / a) ** 2, (d / p.theta) ** 2, p.mu))
    return out


def mean_decomposition(fits):
    """The location and skew terms of the mean, with their sum."""
    if not fits:
        raise ContractError("need at least one fit")
    out = []
    for f in fits:
        p = _point(f)
        mu_term, skew = mjf1_mean_terms(p)
        out.append(MeanTerms(p.tau, mu_term, skew, mu_term + skew))
    return out


def tail_report(sample, params, side, tail_fraction=DEFAULT_TAIL_FRACTION, confidence=0.95):
    """Empirical CCDF, conditional model CCDF, line fit and U-test for one side.

    The fit and U-test are skipped (``None``) when the tail holds fewer than
    the minimum number of points.
    """
    curve = empirical_ccdf(sample, side)
    model = model_ccdf(params, side, curve.x, conditional=True)
    start, stop = tail_region(curve, tail_fraction)
    fit = utest = None
    if stop - start >= MIN_TAIL_POINTS:
        fit = tail_linear_fit(curve, (start, stop), confidence)
        utest = u_test(sample, lambda x: mjf1_cdf_gains(params, x), side, stop - start)
    return TailReport(sample.tau, side, curve, model, fit, utest, tail_exponent(params, side))


def _tau_job(args):
    r, model, tau, overlap, prior, fit_cfg, bandwidth, tail_fraction, confidence = args
    sample = accumulate_returns(r, model, tau, overlap)
    emp = empirical_moments(sample, bandwidth)
    fit = fit_mjf1(sample, prior, fit_cfg)
    tails = {}
    for side in ("gains", "losses"):
        try:
            tails[side] = tail_report(sample, fit.point, side, tail_fraction, confidence)
        except MJFError as exc:
            tails[side] = exc
    return emp, fit, tails


def _prepare_output(path):
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {out}: {exc}") from exc
    if not os.access(out, os.W_OK | os.X_OK):
        raise ConfigError(f"output directory {out} is not writable")
    return out


def run_report(config):
    """Run the full analysis and write every table under ``config.output_dir``.

    Failures at individual horizons are recorded in ``bundle.failures`` (and
    the manifest) while the remaining horizons are still reported.

    Raises
    ------
    ConfigError
        The output directory cannot be written.
    DataError
        The price file is missing or invalid.
    """
    out = _prepare_output(config.output_dir)
    try:
        with open(config.input_path, "rb") as fh:
            series = load_prices(fh, config.date_column, config.close_column, config.delimiter)
    except OSError as exc:
        raise ConfigError(f"cannot read input {config.input_path}: {exc}") from exc
    r = log_price_path(series)
    drift = fit_drift(r)

    jobs = [
        (r, drift, tau, config.overlap, config.prior, config.fit_config_for(tau),
         config.mode_bandwidth, config.tail_fraction, config.confidence)
        for tau in config.taus
    ]
    results = {}
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            futures = {tau: pool.submit(_tau_job, job) for tau, job in zip(config.taus, jobs)}
            for tau, fut in futures.items():
                try:
                    results[tau] = fut.result()
                except MJFError as exc:
                    results[tau] = exc
    else:
        for tau, job in zip(config.taus, jobs):
            try:
                results[tau] = _tau_job(job)
            except MJFError as exc:
                results[tau] = exc

    fits, emp, model_m, tails, failures, warnings = {}, {}, {}, {}, {}, {}
    for tau in config.taus:
        res = results[tau]
        if isinstance(res, Exception):
            log.error("tau=%d failed: %s", tau, res)
            failures[tau] = str(res)
            continue
        emp[tau], fits[tau], side_reports = res
        model_m[tau] = mjf1_moments(fits[tau].point)
        if not fits[tau].converged:
            warnings[tau] = f"not converged (max split-R-hat {fits[tau].max_rhat:.4f})"
        for side, rep in side_reports.items():
            if isinstance(rep, Exception):
                failures.setdefault(tau, f"{side} tail: {rep}")
            else:
                tails[(tau, side)] = rep

    ok_taus = tuple(t for t in config.taus if t in fits)
    rv_line = (float("nan"),) * 3
    if len(ok_taus) >= 2:
        try:
            rv_line = _line_fit(np.asarray(ok_taus, float), np.array([emp[t].m2 for t in ok_taus]))
        except MJFError as exc:
            failures["rv"] = str(exc)
    ys = np.linspace(-config.y_max, config.y_max, config.y_points)
    rescaled = {t: rescaled_pdf(fits[t].point, ys) for t in ok_taus}
    bundle = ReportBundle(config.taus, fits, model_m, emp, rv_line, ys, rescaled, tails, failures, warnings)
    _write_bundle(out, config, bundle)
    return bundle


def _write_bundle(out, config, b):
    taus = [t for t in b.taus if t in b.fits]
    write_table(
        out / "params.tsv",
        ["tau", "alpha_g", "alpha_l", "theta", "mu", "max_rhat", "min_ess", "acceptance", "converged"],
        [
            (t, f.point.alpha_g, f.point.alpha_l, f.point.theta, f.point.mu, f.max_rhat,
             min(s.ess for s in f.summaries.values()), f.acceptance_rate, f.converged)
            for t, f in ((t, b.fits[t]) for t in taus)
        ],
    )
    write_table(
        out / "params_intervals.tsv",
        ["tau", "parameter", "mean", "median", "sd", "ci_low", "ci_high", "rhat", "ess"],
        [
            (t, name, s.mean, s.median, s.sd, s.ci_low, s.ci_high, s.rhat, s.ess)
            for t in taus for name, s in b.fits[t].summaries.items()
        ],
    )
    write_table(
        out / "moments.tsv",
        ["tau", "m1_empirical", "m2_empirical", "m1_model", "m2_model"],
        [(t, b.empirical[t].m1, b.empirical[t].m2, b.model_moments[t].m1, b.model_moments[t].m2) for t in taus],
    )
    write_table(
        out / "mode_median.tsv",
        ["tau", "mode_empirical", "median_empirical", "mode_model", "median_model"],
        [(t, b.empirical[t].mode, b.empirical[t].median, b.model_moments[t].mode, b.model_moments[t].median)
         for t in taus],
    )
    write_table(
        out / "skewness.tsv",
        ["tau", "zeta1_empirical", "zeta2_empirical", "zeta1_model", "zeta2_model"],
        [(t, b.empirical[t].zeta1, b.empirical[t].zeta2, b.model_moments[t].zeta1, b.model_moments[t].zeta2)
         for t in taus],
    )
    slope, intercept, r2 = b.rv
    write_table(
        out / "rv_fit.tsv",
        ["tau", "m1", "m2", "m2_over_tau", "mode", "median", "zeta1", "zeta2", "n", "m2_line"],
        [
            (t, e.m1, e.m2, e.m2 / t, e.mode, e.median, e.zeta1, e.zeta2, e.n, slope * t + intercept)
            for t, e in ((t, b.empirical[t]) for t in taus)
        ],
        comments=[f"slope={format_value(slope)} intercept={format_value(intercept)} r_squared={format_value(r2)}"],
    )
    write_table(
        out / "rescaled_pdf.tsv",
        ["y"] + [f"tau{t}" for t in taus],
        [(y, *(b.rescaled[t][i] for t in taus)) for i, y in enumerate(b.ys)],
    )
    write_table(
        out / "ratios.tsv",
        ["tau", "alpha", "delta", "delta2_over_alpha2", "delta2_over_theta2", "mu"],
        [tuple(asdict(r).values()) for r in ratio_diagnostics([b.fits[t] for t in taus])] if taus else [],
    )
    write_table(
        out / "mean_decomposition.tsv",
        ["tau", "mu_term", "skew_term", "m1"],
        [tuple(asdict(r).values()) for r in mean_decomposition([b.fits[t] for t in taus])] if taus else [],
    )
    for t in taus:
        _write_tails(out / f"tau_{t:02d}", t, b)
    (out / "manifest.json").write_text(_manifest(config, b) + "\n", encoding="utf-8")


def _write_tails(d, tau, b):
    d.mkdir(exist_ok=True)
    fit_rows = []
    for side in ("gains", "losses"):
        rep = b.tails.get((tau, side))
        if rep is None:
            continue
        c, fit = rep.curve, rep.fit
        lower = np.full(len(c), np.nan)
        upper = np.full(len(c), np.nan)
        line = np.full(len(c), np.nan)
        if fit is not None:
            lower[fit.start:fit.stop] = 10 ** fit.lower
            upper[fit.start:fit.stop] = 10 ** fit.upper
            line[fit.start:fit.stop] = 10 ** fit.fitted
            fit_rows.append((side, fit.slope, fit.intercept, fit.r_squared, fit.stop - fit.start,
                             c.x[fit.start], c.x[fit.stop - 1], fit.level, -rep.exponent))
        write_table(
            d / f"{side}_ccdf.tsv",
            ["x", "ccdf_empirical", "ccdf_model", "ccdf_fit", "band_lower", "band_upper"],
            zip(c.x, c.ccdf, rep.model, line, lower, upper),
        )
        if rep.utest is not None:
            u = rep.utest
            write_table(
                d / f"{side}_pvalues.tsv",
                ["rank", "x", "cdf", "p_value", "inside_band"],
                [(i + 1, u.x[i], u.u[i], u.p_values[i], bool(u.band[0] < u.p_values[i] < u.band[1]))
                 for i in range(u.k)],
                comments=[f"fraction_inside={format_value(u.fraction_inside)} n={u.n}"],
            )
    write_table(
        d / "fit.tsv",
        ["side", "slope", "intercept", "r_squared", "points", "x_start", "x_end", "level", "model_slope"],
        fit_rows,
    )


def _manifest(config, b):
    import scipy

    from . import __version__

    doc = {
        "config": config.as_dict(),
        "seed": config.seed,
        "versions": {
            "mjfskew": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
        "taus": list(b.taus),
        "failures": {str(k): v for k, v in b.failures.items()},
        "warnings": {str(k): v for k, v in b.warnings.items()},
        "rv_fit": dict(zip(("slope", "intercept", "r_squared"), (format_value(v) for v in b.rv))),
    }
    return json.dumps(doc, indent=2, sort_keys=True, default=str)
