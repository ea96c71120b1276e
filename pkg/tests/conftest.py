import numpy as np
import pytest

import reference_values as ref
from mjfskew import mjf1_sample
from mjfskew.pipeline import price_series_from_returns


def write_prices(path, series):
    lines = ["Date,Close"] + [f"{d},{float(c)!r}" for d, c in zip(series.dates.astype(str), series.closes)]
    path.write_text("\n".join(lines) + "\n")
    return path


@pytest.fixture(scope="session")
def synthetic_csv(tmp_path_factory):
    """Daily prices whose log increments are iid draws of the horizon-1 reference law."""
    daily = mjf1_sample(ref.params(1), 20_000, seed=99).values
    path = tmp_path_factory.mktemp("data") / "prices.csv"
    return write_prices(path, price_series_from_returns(daily))


@pytest.fixture(scope="session")
def small_csv(tmp_path_factory):
    daily = np.random.default_rng(1).standard_t(4, 3000) * 0.007 + 3e-4
    path = tmp_path_factory.mktemp("data") / "small.csv"
    return write_prices(path, price_series_from_returns(daily))


VERDICTS = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[VERDICTS] = []


@pytest.fixture
def verdict(request):
    """Record one PASS/FAIL line per acceptance criterion and print it in the run summary."""
    lines = request.config.stash[VERDICTS]

    def record(number, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'}  criterion {number:2d}: {detail}"
        lines.append((number, line))
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(VERDICTS, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
