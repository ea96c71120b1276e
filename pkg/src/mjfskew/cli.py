"""
Command-line front end.

Settings come from built-in defaults, then an optional flat ``key = value``
config file (``--config``), then command-line flags, later sources winning.

Exit status: 0 on success, 1 when some horizons failed, 2 on configuration
or input errors.
"""

import argparse
import configparser
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .distributions import MJF1Params, mjf1_moments
from .errors import ConfigError, DataError, DomainError, MJFError
from .fitting import FitConfig, FitFailure, ParamPrior, PriorSpec, fit_all_taus
from .pipeline import fit_drift, load_prices, log_price_path, variance_vs_tau
from .report import RunConfig, format_value, rescaled_pdf, run_report, tail_report, write_table, _write_tails

log = logging.getLogger("mjfskew")

EXIT_OK = 0
EXIT_PARTIAL = 1
EXIT_CONFIG = 2

DEFAULTS = {
    "input": None,
    "output_dir": None,
    "taus": "1-10",
    "overlap": False,
    "chains": 4,
    "iterations": 50_000,
    "burn_in": 0.5,
    "seed": 0,
    "workers": 1,
    "tail_fraction": 0.02,
    "confidence": 0.95,
    "mode_bandwidth": None,
    "prior_scale_low": 1e-7,
    "prior_scale_high": 1e-2,
    "prior_mu_low": -0.1,
    "prior_mu_high": 0.1,
    "date_column": "Date",
    "close_column": "Close",
    "delimiter": ",",
    "params": None,
    "alpha_g": None,
    "alpha_l": None,
    "theta": None,
    "mu": 0.0,
    "tau": None,
    "y_max": 10.0,
    "y_points": 401,
}

_CONVERT = {
    "overlap": "bool",
    "chains": int,
    "iterations": int,
    "seed": int,
    "workers": int,
    "y_points": int,
    "burn_in": float,
    "tail_fraction": float,
    "confidence": float,
    "mode_bandwidth": float,
    "prior_scale_low": float,
    "prior_scale_high": float,
    "prior_mu_low": float,
    "prior_mu_high": float,
    "alpha_g": float,
    "alpha_l": float,
    "theta": float,
    "mu": float,
    "tau": int,
    "y_max": float,
}


def parse_taus(text):
    """Parse ``"1-10"``, ``"1,2,5"`` or a mix such as ``"1-3,7"`` into a tuple."""
    out = []
    try:
        for part in str(text).split(","):
            part = part.strip()
            if not part:
                continue
            if "-" in part:
                lo, hi = (int(v) for v in part.split("-", 1))
                out.extend(range(lo, hi + 1))
            else:
                out.append(int(part))
    except ValueError as exc:
        raise ConfigError(f"bad tau list {text!r}") from exc
    if not out:
        raise ConfigError("tau list is empty")
    return tuple(out)


def _coerce(key, value):
    kind = _CONVERT.get(key)
    if value is None or kind is None or not isinstance(value, str):
        return value
    if kind == "bool":
        low = value.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {value!r}")
    if value.strip().lower() in ("", "none"):
        return None
    try:
        return kind(value)
    except ValueError as exc:
        raise ConfigError(f"{key}: cannot parse {value!r}") from exc


def read_config_file(path):
    """Read a flat ``key = value`` file (``#`` comments) into a settings dict."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    parser = configparser.ConfigParser(interpolation=None, comment_prefixes=("#", ";"))
    try:
        parser.read_string("[run]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config file {path}: {exc}") from exc
    out = {}
    for key, value in parser["run"].items():
        key = key.replace("-", "_")
        if key not in DEFAULTS:
            raise ConfigError(f"unknown config key {key!r}")
        out[key] = _coerce(key, value)
    return out


def resolve_settings(args):
    """Overlay the config file on the defaults, then the explicit flags."""
    settings = dict(DEFAULTS)
    if getattr(args, "config", None):
        settings.update(read_config_file(args.config))
    for key in DEFAULTS:
        if hasattr(args, key):
            settings[key] = _coerce(key, getattr(args, key))
    return settings


def _prior(s):
    try:
        scale = ParamPrior("log-uniform", s["prior_scale_low"], s["prior_scale_high"])
        return PriorSpec(scale, scale, scale, ParamPrior("uniform", s["prior_mu_low"], s["prior_mu_high"]))
    except DomainError as exc:
        raise ConfigError(f"invalid prior: {exc}") from exc


def _fit_config(s):
    try:
        return FitConfig(chains=s["chains"], iterations=s["iterations"], burn_in=s["burn_in"],
                         seed=s["seed"], workers=s["workers"])
    except DomainError as exc:
        raise ConfigError(f"invalid sampler settings: {exc}") from exc


def _load(s):
    if not s["input"]:
        raise ConfigError("no input price file given")
    try:
        with open(s["input"], "rb") as fh:
            return load_prices(fh, s["date_column"], s["close_column"], s["delimiter"])
    except OSError as exc:
        raise ConfigError(f"cannot read input {s['input']}: {exc}") from exc


def read_params_table(path):
    """Read ``tau, alpha_g, alpha_l, theta, mu`` rows from a tab-separated table."""
    try:
        lines = [ln for ln in Path(path).read_text(encoding="utf-8").splitlines()
                 if ln.strip() and not ln.startswith("#")]
    except OSError as exc:
        raise ConfigError(f"cannot read parameter table {path}: {exc}") from exc
    if not lines:
        raise DataError(f"parameter table {path} is empty")
    header = lines[0].split("\t")
    try:
        idx = [header.index(c) for c in ("tau", "alpha_g", "alpha_l", "theta", "mu")]
    except ValueError as exc:
        raise DataError(f"parameter table {path} lacks a required column") from exc
    out = []
    for k, line in enumerate(lines[1:], start=2):
        cells = line.split("\t")
        try:
            tau, ag, al, th, mu = (cells[i] for i in idx)
            out.append(MJF1Params(float(ag), float(al), float(th), float(mu), int(tau)))
        except (IndexError, ValueError) as exc:
            raise DataError(f"parameter table {path}, row {k}: {exc}") from exc
    return out


def _param_rows(s):
    if s["params"]:
        return read_params_table(s["params"])
    if None in (s["alpha_g"], s["alpha_l"], s["theta"]):
        raise ConfigError("give --params or all of --alpha-g, --alpha-l, --theta")
    taus = (s["tau"],) if s["tau"] is not None else parse_taus(s["taus"])
    try:
        return [MJF1Params(s["alpha_g"], s["alpha_l"], s["theta"], s["mu"], t) for t in taus]
    except DomainError as exc:
        raise ConfigError(f"invalid parameters: {exc}") from exc


def _emit(header, rows, out=None, comments=()):
    if out:
        write_table(out, header, rows, comments)
        return
    for c in comments:
        print(f"# {c}")
    print("\t".join(header))
    for row in rows:
        print("\t".join(format_value(v) for v in row))


def cmd_ingest(s, args):
    series = _load(s)
    r = log_price_path(series)
    model = fit_drift(r)
    rows = [
        ("rows", len(series)),
        ("first_date", str(series.dates[0])),
        ("last_date", str(series.dates[-1])),
        ("mu_1", model.mu_1),
        ("mu_1_stderr", model.mu_1_stderr),
        ("intercept", model.intercept),
        ("residual_rms", model.residual_rms),
        ("annual_growth", model.mu_1 * 252),
    ]
    _emit(["key", "value"], rows, args.out)
    return EXIT_OK


def cmd_rv(s, args):
    series = _load(s)
    res = variance_vs_tau(series, parse_taus(s["taus"]), s["overlap"], s["mode_bandwidth"])
    comment = (f"slope={format_value(res.slope)} intercept={format_value(res.intercept)} "
               f"r_squared={format_value(res.r_squared)}")
    _emit(["tau", "m1", "m2", "m2_over_tau", "mode", "median", "zeta1", "zeta2", "n"],
          res.rows(), args.out, [comment])
    return EXIT_OK


def cmd_fit(s, args):
    series = _load(s)
    results = fit_all_taus(series, parse_taus(s["taus"]), _prior(s), _fit_config(s), s["overlap"])
    rows = []
    status = EXIT_OK
    for res in results:
        if isinstance(res, FitFailure):
            log.error("tau=%d: %s", res.tau, res.error)
            status = EXIT_PARTIAL
            continue
        p = res.point
        rows.append((res.tau, p.alpha_g, p.alpha_l, p.theta, p.mu, res.max_rhat, res.converged))
        if args.json_dir:
            d = Path(args.json_dir)
            d.mkdir(parents=True, exist_ok=True)
            (d / f"fit_tau{res.tau:02d}.json").write_text(res.to_json() + "\n", encoding="utf-8")
    _emit(["tau", "alpha_g", "alpha_l", "theta", "mu", "max_rhat", "converged"], rows, args.out)
    return status


def cmd_moments(s, args):
    rows = []
    for p in _param_rows(s):
        m = mjf1_moments(p)
        rows.append((p.tau, m.m1, m.m2, m.mode, m.median, m.zeta1, m.zeta2))
    _emit(["tau", "m1", "m2", "mode", "median", "zeta1", "zeta2"], rows, args.out)
    return EXIT_OK


def cmd_scale(s, args):
    params = _param_rows(s)
    ys = np.linspace(-s["y_max"], s["y_max"], s["y_points"])
    cols = [rescaled_pdf(p, ys) for p in params]
    rows = [(y, *(c[i] for c in cols)) for i, y in enumerate(ys)]
    _emit(["y"] + [f"tau{p.tau}" for p in params], rows, args.out)
    return EXIT_OK


def cmd_tails(s, args):
    from .pipeline import accumulate_returns
    from .report import ReportBundle

    series = _load(s)
    r = log_price_path(series)
    model = fit_drift(r)
    rows = []
    status = EXIT_OK
    tails = {}
    for p in _param_rows(s):
        try:
            sample = accumulate_returns(r, model, p.tau, s["overlap"])
            for side in ("gains", "losses"):
                rep = tail_report(sample, p, side, s["tail_fraction"], s["confidence"])
                tails[(p.tau, side)] = rep
                slope = rep.fit.slope if rep.fit else float("nan")
                frac = rep.utest.fraction_inside if rep.utest else float("nan")
                rows.append((p.tau, side, len(rep.curve), slope, -rep.exponent, frac))
        except MJFError as exc:
            log.error("tau=%d: %s", p.tau, exc)
            status = EXIT_PARTIAL
    if s["output_dir"]:
        out = Path(s["output_dir"])
        out.mkdir(parents=True, exist_ok=True)
        bundle = ReportBundle((), {}, {}, {}, (), np.empty(0), {}, tails, {})
        for tau in sorted({t for t, _ in tails}):
            _write_tails(out / f"tau_{tau:02d}", tau, bundle)
    _emit(["tau", "side", "points", "tail_slope", "model_slope", "fraction_inside"], rows, args.out)
    return status


def cmd_report(s, args):
    if not s["input"]:
        raise ConfigError("no input price file given")
    if not s["output_dir"]:
        raise ConfigError("no output directory given")
    config = RunConfig(
        input_path=s["input"],
        output_dir=s["output_dir"],
        taus=parse_taus(s["taus"]),
        overlap=s["overlap"],
        prior=_prior(s),
        fit=_fit_config(s),
        tail_fraction=s["tail_fraction"],
        confidence=s["confidence"],
        mode_bandwidth=s["mode_bandwidth"],
        seed=s["seed"],
        workers=s["workers"],
        y_max=s["y_max"],
        y_points=s["y_points"],
        date_column=s["date_column"],
        close_column=s["close_column"],
        delimiter=s["delimiter"],
    )
    bundle = run_report(config)
    for tau, msg in bundle.warnings.items():
        log.warning("tau=%s: %s", tau, msg)
    for tau, msg in bundle.failures.items():
        log.error("tau=%s: %s", tau, msg)
    return EXIT_OK if bundle.ok else EXIT_PARTIAL


def _flag(parser, name, **kw):
    parser.add_argument("--" + name.replace("_", "-"), dest=name, default=argparse.SUPPRESS, **kw)


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value settings file")
    common.add_argument("-v", "--verbose", action="count", default=0)

    data = argparse.ArgumentParser(add_help=False)
    data.add_argument("input", nargs="?", default=argparse.SUPPRESS, help="price file with date and close columns")
    _flag(data, "date_column")
    _flag(data, "close_column")
    _flag(data, "delimiter")

    horizons = argparse.ArgumentParser(add_help=False)
    _flag(horizons, "taus", help="horizons, e.g. 1-10 or 1,2,5")
    _flag(horizons, "overlap", action="store_const", const=True, help="use overlapping windows")
    horizons.add_argument("--no-overlap", dest="overlap", action="store_const", const=False,
                          default=argparse.SUPPRESS, help="use non-overlapping windows")

    sampler = argparse.ArgumentParser(add_help=False)
    for name, kind in (("chains", int), ("iterations", int), ("burn_in", float), ("seed", int),
                       ("workers", int), ("prior_scale_low", float), ("prior_scale_high", float),
                       ("prior_mu_low", float), ("prior_mu_high", float)):
        _flag(sampler, name, type=kind)

    params = argparse.ArgumentParser(add_help=False)
    _flag(params, "params", help="tab-separated table with tau, alpha_g, alpha_l, theta, mu")
    for name in ("alpha_g", "alpha_l", "theta", "mu"):
        _flag(params, name, type=float)
    _flag(params, "tau", type=int)

    tails = argparse.ArgumentParser(add_help=False)
    _flag(tails, "tail_fraction", type=float)
    _flag(tails, "confidence", type=float)

    grid = argparse.ArgumentParser(add_help=False)
    _flag(grid, "y_max", type=float)
    _flag(grid, "y_points", type=int)

    out = argparse.ArgumentParser(add_help=False)
    out.add_argument("-o", "--out", help="write the table here instead of stdout")

    p = argparse.ArgumentParser(prog="mjfskew", description="Skew t-distribution analysis of accumulated returns.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("ingest", parents=[common, data, out], help="load prices and fit the drift")
    sp.set_defaults(func=cmd_ingest)
    sp = sub.add_parser("rv", parents=[common, data, horizons, out], help="realized variance against tau")
    _flag(sp, "mode_bandwidth", type=float)
    sp.set_defaults(func=cmd_rv)
    sp = sub.add_parser("fit", parents=[common, data, horizons, sampler, out], help="posterior fits per tau")
    sp.add_argument("--json-dir", help="write one JSON document per tau here")
    sp.set_defaults(func=cmd_fit)
    sp = sub.add_parser("moments", parents=[common, params, horizons, out], help="model moments from parameters")
    sp.set_defaults(func=cmd_moments)
    sp = sub.add_parser("scale", parents=[common, params, horizons, grid, out], help="rescaled densities")
    sp.set_defaults(func=cmd_scale)
    sp = sub.add_parser("tails", parents=[common, data, horizons, params, tails, out], help="tail diagnostics")
    _flag(sp, "output_dir", help="write per-tau tail tables here")
    sp.set_defaults(func=cmd_tails)
    sp = sub.add_parser("report", parents=[common, data, horizons, sampler, tails, grid], help="full pipeline")
    _flag(sp, "output_dir", help="directory for all tables")
    _flag(sp, "mode_bandwidth", type=float)
    sp.set_defaults(func=cmd_report)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        settings = resolve_settings(args)
        return args.func(settings, args)
    except (ConfigError, DataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MJFError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARTIAL


if __name__ == "__main__":
    sys.exit(main())
