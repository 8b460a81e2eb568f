import json

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from colored_mardia.engine import (
    TestReport,
    run_test,
    std_normal_cdf,
    std_normal_quantile,
    two_sided_p_value,
)
from colored_mardia.errors import DomainError, ModeDimensionMismatch
from colored_mardia.generators import SeededRng, ar1, embed
from colored_mardia.null_moments import EmbeddingCorrelation, ScalarCovSeq


def mp_cdf(z: float) -> float:
    mpmath.mp.dps = 40
    return float(mpmath.ncdf(mpmath.mpf(z)))


def test_cdf_at_zero():
    assert std_normal_cdf(0.0) == 0.5


def test_cdf_975_point():
    assert std_normal_cdf(1.959964) == pytest.approx(0.975, abs=1e-7)


@pytest.mark.parametrize("z", [-8.0, -5.3, -1.0, 0.25, 1.959964, 3.7, 6.0])
def test_cdf_matches_high_precision(z):
    assert std_normal_cdf(z) == pytest.approx(mp_cdf(z), rel=1e-14)


@given(st.floats(-30, 30))
def test_cdf_symmetry(z):
    assert std_normal_cdf(-z) + std_normal_cdf(z) == pytest.approx(1.0, abs=1e-15)


def test_quantile_examples():
    assert std_normal_quantile(0.5) == 0.0
    assert std_normal_quantile(0.975) == pytest.approx(1.959963984540054, abs=1e-12)


def test_quantile_round_trip():
    for u in np.linspace(1e-6, 1 - 1e-6, 2001):
        assert abs(std_normal_cdf(std_normal_quantile(u)) - u) <= 1e-10


@pytest.mark.parametrize("u", [0.0, 1.0, -0.1, 1.5])
def test_quantile_domain(u):
    with pytest.raises(DomainError):
        std_normal_quantile(u)


def test_p_value_tail():
    assert two_sided_p_value(0.0) == 1.0
    assert two_sided_p_value(1.959963984540054) == pytest.approx(0.05, rel=1e-12)
    # far tail stays accurate instead of cancelling to zero
    mpmath.mp.dps = 40
    exact = float(mpmath.erfc(9 / mpmath.sqrt(2)))
    assert two_sided_p_value(9.0) == pytest.approx(exact, rel=1e-13)


def test_report_json_fields():
    x = np.random.default_rng(0).standard_normal((2, 300))
    rep = run_test(x, "iid")
    d = json.loads(rep.to_json())
    assert list(d) == ["statistic", "null_mean", "null_std", "t", "p_value", "reject", "alpha",
                       "mode", "diagnostics"]
    assert d["diagnostics"]["n_samples"] == 300
    assert d["diagnostics"]["dimension"] == 2
    assert isinstance(rep, TestReport)
    assert "decision" in rep.to_text()


def test_report_consistency():
    x = np.random.default_rng(1).standard_normal((1, 500))
    rep = run_test(x, "scalar-colored", alpha=0.1)
    assert rep.t == pytest.approx((rep.statistic - rep.null_mean) / rep.null_std)
    assert rep.reject == (rep.p_value < 0.1)


@pytest.mark.parametrize("mode", ["iid", "scalar-colored"])
def test_scale_invariance(mode):
    x = np.random.default_rng(2).standard_normal((1, 400))
    a, b = run_test(x, mode), run_test(5.0 * x, mode)
    assert b.t == pytest.approx(a.t, rel=1e-9)


def test_mode_mismatch():
    x = np.random.default_rng(3).standard_normal((3, 100))
    with pytest.raises(ModeDimensionMismatch):
        run_test(x, "bivariate-colored")
    with pytest.raises(ModeDimensionMismatch):
        run_test(x, "scalar-colored")


def test_unknown_mode_and_alpha():
    x = np.random.default_rng(3).standard_normal((1, 100))
    with pytest.raises(ValueError):
        run_test(x, "nope")
    with pytest.raises(ValueError):
        run_test(x, "iid", alpha=1.0)


def test_known_covariance_used():
    x = np.random.default_rng(4).standard_normal((1, 200))
    rep = run_test(x, "scalar-colored", known_cov=ScalarCovSeq(1.0, np.zeros(10)))
    assert rep.diagnostics["covariance_source"] == "known"
    assert rep.null_mean == pytest.approx(3 - 6 / 200)


def test_embedded_scalar_input_matches_pre_embedded():
    rng = SeededRng(7).generator()
    y = ar1(0.5, 2003, rng)
    corr = EmbeddingCorrelation(0.5 ** np.arange(2100), 2)
    a = run_test(y[None, :], "embedded-bivariate", delta=2, known_cov=corr)
    b = run_test(embed(y, 2, 2), "embedded-bivariate", known_cov=corr)
    assert a.t == pytest.approx(b.t, rel=1e-12)
    with pytest.raises(ModeDimensionMismatch):
        run_test(y[None, :], "embedded-bivariate")


def test_iid_calibration():
    n, reps = 1000, 2000
    rejected = 0
    for r in range(reps):
        x = SeededRng(123, r).generator().standard_normal((2, n))
        rejected += run_test(x, "iid", 0.05).reject
    assert 0.04 <= rejected / reps <= 0.065


def _ar1_rates(mode: str, reps: int = 1000, seed: int = 9) -> float:
    rejected = 0
    for r in range(reps):
        y = ar1(0.8, 1000, SeededRng(seed, r).generator())
        rejected += run_test(y[None, :], mode, 0.05).reject
    return rejected / reps


def test_iid_mode_over_rejects_on_colored_data():
    assert _ar1_rates("iid") >= 0.10


def test_colored_mode_near_nominal():
    assert abs(_ar1_rates("scalar-colored") - 0.045) <= 0.02
