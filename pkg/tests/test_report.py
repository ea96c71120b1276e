import csv
import json
import math
import os

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose
from scipy import integrate

import reference_values as ref
from mjfskew import MJF1Params, mjf1_moments, mjf1_sample, mjf1_variance
from mjfskew import report as rp
from mjfskew.errors import ConfigError, ContractError, DataError
from mjfskew.fitting import FitConfig

FAST = FitConfig(chains=2, iterations=3000)


def read_tsv(path):
    with open(path) as fh:
        rows = [r for r in csv.reader(fh, delimiter="\t") if not r[0].startswith("#")]
    return rows[0], rows[1:]


def column(path, name):
    header, rows = read_tsv(path)
    i = header.index(name)
    return np.array([float(r[i]) for r in rows])


class TestFormatting:
    @pytest.mark.parametrize(
        "value, text",
        [(3, "3"), (np.int64(7), "7"), (True, "1"), (0.0, "0"), (1.234567891e-5, "1.23457e-05"),
         (float("nan"), "nan"), (123456789.0, "1.23457e+08"), ("gains", "gains")],
    )
    def test_values(self, value, text):
        assert rp.format_value(value) == text

    def test_write_table(self, tmp_path):
        rp.write_table(tmp_path / "t.tsv", ["a", "b"], [(1, 0.5)], comments=["note"])
        assert (tmp_path / "t.tsv").read_text() == "# note\na\tb\n1\t0.5\n"


class TestRescaledPdf:
    @pytest.mark.parametrize("tau", ref.TAUS)
    def test_integrates_to_one(self, tau):
        p = ref.params(tau)
        total, _ = integrate.quad(lambda y: rp.rescaled_pdf(p, y), -np.inf, np.inf, epsabs=1e-12, limit=400)
        assert abs(total - 1) < 1e-6

    def test_even_when_symmetric(self):
        p = MJF1Params(8e-5, 8e-5, 1.3e-4, 2e-3, 3)
        y = np.linspace(0, 40, 1001)
        assert_allclose(rp.rescaled_pdf(p, y), rp.rescaled_pdf(p, -y), rtol=1e-13)

    @settings(max_examples=30, deadline=None)
    @given(st.floats(0.1, 3.0), st.floats(0.1, 3.0), st.integers(1, 20), st.floats(1e-5, 1e-3), st.floats(-0.05, 0.05))
    def test_collapse(self, g, l, tau, theta, mu):
        a = MJF1Params(g * 1e-4, l * 1e-4, 1e-4, 0.0, 1)
        b = MJF1Params(g * theta, l * theta, theta, mu, tau)
        y = np.linspace(-50, 50, 501)
        assert_allclose(rp.rescaled_pdf(a, y), rp.rescaled_pdf(b, y), rtol=1e-10, atol=0)


class TestRatios:
    def test_reference_row(self):
        (row,) = rp.ratio_diagnostics([ref.params(1)])
        assert_allclose(row.delta, 1.50e-5, rtol=1e-12)
        assert_allclose(row.alpha, 7.17e-5, rtol=1e-12)
        assert_allclose(row.delta2_over_alpha2, (1.5e-5 / 7.17e-5) ** 2, rtol=1e-12)
        assert row.mu == 8.46e-4 and row.tau == 1

    def test_symmetric(self):
        (row,) = rp.ratio_diagnostics([MJF1Params(5e-5, 5e-5, 5e-5, 0.0, 2)])
        assert row.delta2_over_alpha2 == 0.0 and row.delta2_over_theta2 == 0.0

    def test_ratios_track_when_alpha_near_theta(self):
        (row,) = rp.ratio_diagnostics([MJF1Params(1.01e-4, 0.99e-4, 1.0e-4, 0.0, 1)])
        assert_allclose(row.delta2_over_alpha2, row.delta2_over_theta2, rtol=1e-12)

    def test_empty(self):
        with pytest.raises(ContractError):
            rp.ratio_diagnostics([])


class TestMeanDecomposition:
    def test_reference_row(self):
        (row,) = rp.mean_decomposition([ref.params(1)])
        assert row.mu_term == 8.46e-4
        assert_allclose(row.skew_term, -8.0e-4, rtol=0.02)
        assert_allclose(row.m1, row.mu_term + row.skew_term, rtol=1e-15)
        assert_allclose(row.m1, 4.39e-5, rtol=0.15)

    def test_terms_dominate_sum(self):
        for row in rp.mean_decomposition(ref.all_params()):
            assert abs(row.mu_term) > 10 * abs(row.m1)
            assert abs(row.skew_term) > 10 * abs(row.m1)

    def test_symmetric(self):
        (row,) = rp.mean_decomposition([MJF1Params(5e-5, 5e-5, 6e-5, 1e-3, 4)])
        assert row.skew_term == 0.0 and row.m1 == 1e-3


class TestTailReport:
    def test_contents(self):
        p = ref.params(1)
        s = mjf1_sample(p, 20_000, seed=3)
        rep = rp.tail_report(s, p, "gains")
        assert rep.model.shape == rep.curve.x.shape
        assert rep.fit is not None and rep.utest.k == rep.fit.stop - rep.fit.start
        assert rep.exponent == pytest.approx(2 * p.alpha_g / p.theta + 2)

    def test_small_tail_skips_fit(self):
        p = ref.params(1)
        s = mjf1_sample(p, 100, seed=3)
        rep = rp.tail_report(s, p, "losses", tail_fraction=0.02)
        assert rep.fit is None and rep.utest is None


class TestRunConfig:
    @pytest.mark.parametrize(
        "kwargs",
        [dict(taus=()), dict(taus=(0, 1)), dict(taus=(1, 1)), dict(tail_fraction=0.0),
         dict(confidence=1.0), dict(mode_bandwidth=-1.0), dict(workers=0), dict(y_points=1)],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(ConfigError):
            rp.RunConfig("in.csv", "out", **kwargs)

    def test_seed_flows_into_fits(self):
        cfg = rp.RunConfig("in.csv", "out", seed=5)
        assert cfg.fit_config_for(1).seed != cfg.fit_config_for(2).seed
        assert cfg.fit_config_for(1) == rp.RunConfig("in.csv", "out", seed=5).fit_config_for(1)
        assert cfg.fit_config_for(1) != rp.RunConfig("in.csv", "out", seed=6).fit_config_for(1)


@pytest.fixture(scope="module")
def run(synthetic_csv, tmp_path_factory):
    out = tmp_path_factory.mktemp("report")
    cfg = rp.RunConfig(str(synthetic_csv), str(out), taus=(1, 2, 4), fit=FAST, seed=3)
    return cfg, rp.run_report(cfg), out


class TestRunReport:
    def test_files(self, run):
        _, bundle, out = run
        assert bundle.ok
        for name in ("params.tsv", "params_intervals.tsv", "moments.tsv", "mode_median.tsv", "skewness.tsv",
                     "rv_fit.tsv", "rescaled_pdf.tsv", "ratios.tsv", "mean_decomposition.tsv", "manifest.json"):
            assert (out / name).exists(), name
        for t in (1, 2, 4):
            d = out / f"tau_{t:02d}"
            for name in ("gains_ccdf.tsv", "losses_ccdf.tsv", "gains_pvalues.tsv", "losses_pvalues.tsv", "fit.tsv"):
                assert (d / name).exists(), name

    def test_tables_share_taus(self, run):
        _, _, out = run
        for name in ("params.tsv", "moments.tsv", "mode_median.tsv", "skewness.tsv", "rv_fit.tsv",
                     "ratios.tsv", "mean_decomposition.tsv"):
            assert list(column(out / name, "tau")) == [1, 2, 4], name

    def test_manifest(self, run):
        cfg, _, out = run
        doc = json.loads((out / "manifest.json").read_text())
        assert doc["seed"] == 3 and doc["taus"] == [1, 2, 4]
        assert doc["failures"] == {}
        assert set(doc["versions"]) >= {"mjfskew", "numpy", "scipy", "python"}
        assert doc["config"]["fit"]["iterations"] == 3000

    def test_moments_table_matches_params_table(self, run):
        _, _, out = run
        header, rows = read_tsv(out / "params.tsv")
        m1 = column(out / "moments.tsv", "m1_model")
        m2 = column(out / "moments.tsv", "m2_model")
        z1 = column(out / "skewness.tsv", "zeta1_model")
        for i, r in enumerate(rows):
            v = dict(zip(header, r))
            p = MJF1Params(float(v["alpha_g"]), float(v["alpha_l"]), float(v["theta"]), float(v["mu"]), int(v["tau"]))
            m = mjf1_moments(p)
            # the params table is rounded to 6 digits and m1 is a near-cancelling sum
            assert_allclose(m2[i], m.m2, rtol=1e-4)
            assert abs(m1[i] - m.m1) < 1e-4 * abs(p.mu)
            assert_allclose(z1[i], m.zeta1, rtol=1e-3, atol=1e-4)

    def test_bundle_matches_tables(self, run):
        _, bundle, out = run
        assert_allclose(column(out / "moments.tsv", "m2_empirical"),
                        [bundle.empirical[t].m2 for t in (1, 2, 4)], rtol=1e-5)
        assert_allclose(column(out / "rescaled_pdf.tsv", "tau2"), bundle.rescaled[2], rtol=1e-5, atol=1e-300)

    def test_self_consistent_variance(self, run):
        _, bundle, _ = run
        for t in (1, 2, 4):
            fit, emp = bundle.fits[t], bundle.empirical[t]
            lo, hi = fit.interval(lambda ag, al, th, mu: _m2_over_tau(ag, al, th, t), level=0.99)
            # empirical variance has its own sampling error of about sqrt(2/n)
            slack = 3 * math.sqrt(2 / emp.n) * emp.m2 / t
            assert lo - slack <= emp.m2 / t <= hi + slack

    def test_determinism(self, run, tmp_path):
        cfg, _, out = run
        again = tmp_path / "again"
        rp.run_report(rp.RunConfig(**{**cfg.__dict__, "output_dir": str(again)}))
        first = sorted(p.relative_to(out) for p in out.rglob("*.tsv"))
        second = sorted(p.relative_to(again) for p in again.rglob("*.tsv"))
        assert first == second
        for rel in first:
            assert (out / rel).read_bytes() == (again / rel).read_bytes(), rel

    def test_partial_failure_recorded(self, small_csv, tmp_path):
        cfg = rp.RunConfig(str(small_csv), str(tmp_path / "o"), taus=(1, 40), fit=FitConfig(chains=2, iterations=600))
        bundle = rp.run_report(cfg)
        assert not bundle.ok and 40 in bundle.failures and 1 in bundle.fits
        doc = json.loads((tmp_path / "o" / "manifest.json").read_text())
        assert "40" in doc["failures"]

    def test_unwritable_output(self, small_csv, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        with pytest.raises(ConfigError):
            rp.run_report(rp.RunConfig(str(small_csv), str(blocker / "sub"), taus=(1,)))

    @pytest.mark.skipif(os.geteuid() == 0, reason="root ignores directory permissions")
    def test_read_only_output(self, small_csv, tmp_path):
        d = tmp_path / "ro"
        d.mkdir()
        d.chmod(0o500)
        try:
            with pytest.raises(ConfigError):
                rp.run_report(rp.RunConfig(str(small_csv), str(d), taus=(1,)))
        finally:
            d.chmod(0o700)

    def test_missing_input(self, tmp_path):
        with pytest.raises(ConfigError):
            rp.run_report(rp.RunConfig(str(tmp_path / "nope.csv"), str(tmp_path / "o"), taus=(1,)))

    def test_bad_input(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("Date,Close\n2020-01-01,abc\n")
        with pytest.raises(DataError):
            rp.run_report(rp.RunConfig(str(bad), str(tmp_path / "o"), taus=(1,)))


def _m2_over_tau(ag, al, th, tau):
    return np.array([mjf1_variance(MJF1Params(a, b, c, 0.0, tau)) / tau for a, b, c in zip(ag, al, th)])
