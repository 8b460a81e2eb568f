import math

import numpy as np
import pytest
from scipy import stats

from colored_mardia.errors import InsufficientLength, ParameterOutOfDomain
from colored_mardia.generators import (
    Family,
    ProcessSpec,
    SeededRng,
    amplitude_for_snr,
    ar1,
    ar2_stationary_variance,
    archimedean_pair,
    carrier_variance,
    clayton_conditional_inverse,
    colored_copula_process,
    corruption_variance,
    detection_mixture,
    embed,
    generate,
    gumbel_conditional_inverse,
    laplace,
    model_covariance,
    positive_stable,
    snr_for_amplitude,
)
from colored_mardia.stats import lag_covariance, sample_covariance


def yule_walker_ar2_variance(phi1, phi2, sigma2):
    """Solve the three Yule-Walker equations for (gamma0, gamma1, gamma2)."""
    a = np.array([[1.0, -phi1, -phi2], [-phi1, 1.0 - phi2, 0.0], [-phi2, -phi1, 1.0]])
    return np.linalg.solve(a, [sigma2, 0.0, 0.0])[0]


def rng(seed=0, stream=0):
    return SeededRng(seed, stream).generator()


def test_seeded_streams_are_reproducible_and_distinct():
    a = rng(5, 3).standard_normal(4)
    b = rng(5, 3).standard_normal(4)
    c = rng(5, 4).standard_normal(4)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(family="clayton-copula", theta=0.0),
        dict(family="clayton-copula", theta=-1.5),
        dict(family="gumbel-copula", theta=0.9),
        dict(family="gaussian-copula", r12=1.0),
        dict(family="ar1-gaussian", a=1.0),
        dict(family="detection-mixture"),
        dict(family="embedded", delta=0, inner=ProcessSpec("ar1-gaussian", a=0.5)),
    ],
)
def test_spec_domains(kwargs):
    with pytest.raises(ParameterOutOfDomain):
        ProcessSpec(**kwargs)


def test_spec_round_trip():
    spec = ProcessSpec("embedded", delta=2, inner=ProcessSpec("detection-mixture", snr_db=-3.0))
    assert ProcessSpec.from_dict(spec.to_dict()) == spec
    with pytest.raises(ValueError):
        ProcessSpec.from_dict({"family": "ar1-gaussian", "bogus": 1})


def test_default_burn_in():
    assert ProcessSpec("ar1-gaussian", a=0.5).burn_in == 1000


def test_white_ar1_variance():
    y = ar1(0.0, 100_000, rng(1))
    assert y.var() == pytest.approx(1.0, abs=3 * math.sqrt(2 / 100_000))


def test_ar1_lag_one_correlation():
    y = ar1(0.8, 100_000, rng(2))
    r1 = np.corrcoef(y[1:], y[:-1])[0, 1]
    assert r1 == pytest.approx(0.8, abs=0.01)


def test_ar1_deterministic():
    np.testing.assert_array_equal(ar1(0.8, 50, rng(3)), ar1(0.8, 50, rng(3)))


def _tau(u, v):
    return stats.kendalltau(u, v).statistic


@pytest.mark.parametrize("family, theta, tau", [
    ("clayton-copula", 2.0, 0.5),
    ("gumbel-copula", 5.0, 0.8),
    ("gumbel-copula", 1.0, 0.0),
    ("clayton-copula", -0.5, -0.5 / 1.5),
])
def test_archimedean_kendall_tau(family, theta, tau):
    u, v = archimedean_pair(family, theta, 100_000, rng(4))
    assert _tau(u, v) == pytest.approx(tau, abs=0.01)


@pytest.mark.parametrize("family, theta, tau", [("clayton-copula", 2.0, 0.5), ("gumbel-copula", 5.0, 0.8)])
@pytest.mark.parametrize("coupling", ["conditional", "frailty"])
def test_colored_copula_cross_section_tau(family, theta, tau, coupling):
    x = colored_copula_process(family, theta, 0.0, 100_000, rng(6), coupling=coupling)
    assert _tau(x.data[0], x.data[1]) == pytest.approx(tau, abs=0.01)


def test_conditional_inverse_inverts_conditional_cdf():
    u = np.linspace(0.05, 0.95, 7)
    w = np.linspace(0.02, 0.98, 7)
    theta = 2.0
    v = clayton_conditional_inverse(w, u, theta)
    # Clayton h-function dC/du at (u, v)
    h = u ** (-theta - 1) * (u**-theta + v**-theta - 1) ** (-1 / theta - 1)
    np.testing.assert_allclose(h, w, rtol=1e-10)
    theta = 5.0
    v = gumbel_conditional_inverse(w, u, theta)
    lu, lv = -np.log(u), -np.log(v)
    s = lu**theta + lv**theta
    h = np.exp(-s ** (1 / theta)) * s ** (1 / theta - 1) * lu ** (theta - 1) / u
    np.testing.assert_allclose(h, w, rtol=1e-9)


def test_conditional_inverse_extreme_tails():
    v = gumbel_conditional_inverse(np.array([1e-300, 0.5, 1 - 1e-15]), np.array([1e-12, 0.5, 1 - 1e-12]), 5.0)
    assert np.all(np.isfinite(v)) and np.all((v >= 0) & (v <= 1))


def test_positive_stable_laplace_transform():
    alpha = 0.4
    v = positive_stable(alpha, 200_000, rng(7))
    for s in (0.5, 1.0, 2.0):
        assert np.mean(np.exp(-s * v)) == pytest.approx(math.exp(-(s**alpha)), abs=0.005)


@pytest.mark.parametrize("family, param", [("gaussian-copula", 0.8), ("clayton-copula", 2.0),
                                           ("gumbel-copula", 5.0)])
def test_copula_marginals_standard_normal(family, param):
    x = colored_copula_process(family, param, 0.0, 100_000, rng(8))
    for a in range(2):
        assert stats.kstest(x.data[a], "norm").pvalue > 0.01


def test_gaussian_copula_correlations():
    x = colored_copula_process("gaussian-copula", 0.8, 0.8, 100_000, rng(9))
    assert np.corrcoef(x.data)[0, 1] == pytest.approx(0.8, abs=0.02)
    for a in range(2):
        r1 = np.corrcoef(x.data[a, 1:], x.data[a, :-1])[0, 1]
        assert r1 == pytest.approx(0.8, abs=0.02)


def test_gaussian_copula_model_covariance():
    spec = ProcessSpec("gaussian-copula", a=0.8, r12=0.8)
    x = generate(spec, 200_000, rng(10))
    emp = lag_covariance(x, 3)
    model = model_covariance(spec, 3)
    np.testing.assert_allclose(emp.lags, model.lags, atol=0.03)


def test_laplace_variance():
    z = laplace(400_000, rng(11))
    assert z.var() == pytest.approx(2.0, rel=0.02)
    assert abs(np.mean(z)) < 0.01


def test_detection_variances():
    assert carrier_variance() == pytest.approx(1 / (1 - 0.64), rel=1e-14)
    yw = yule_walker_ar2_variance(0.8, -0.5, 2.0)
    assert corruption_variance() == pytest.approx(yw, rel=1e-12)
    assert ar2_stationary_variance(0.8, -0.5, 2.0) == pytest.approx(3.7267080745341614, rel=1e-12)


def test_amplitude_snr_round_trip():
    for snr in (-30.0, -3.0, 0.0, 12.5):
        assert snr_for_amplitude(amplitude_for_snr(snr)) == pytest.approx(snr, abs=1e-12)
    assert amplitude_for_snr(0.0) ** 2 * corruption_variance() == pytest.approx(carrier_variance())


def test_detection_mixture_powers():
    n = 400_000
    y, snr = detection_mixture(n, rng(12), snr_db=0.0)
    assert snr == pytest.approx(0.0, abs=1e-12)
    assert y.var() == pytest.approx(2 * carrier_variance(), rel=0.03)


def test_zero_amplitude_is_gaussian_ar1():
    y, _ = detection_mixture(500_000, rng(13), k=0.0)
    # thin so the KS sample is effectively independent (0.8^50 ~ 1e-5)
    z = y[::50] / math.sqrt(carrier_variance())
    assert stats.kstest(z, "norm").pvalue > 0.01
    assert ProcessSpec("detection-mixture", k=0.0).is_gaussian


def test_embed_example():
    x = embed(np.arange(1, 11, dtype=float), 2, 2)
    np.testing.assert_array_equal(x.data, [[3, 5, 7, 9], [4, 6, 8, 10]])


def test_embed_stride_one_scalar():
    y = np.arange(6, dtype=float)
    np.testing.assert_array_equal(embed(y, 1, 1).data[0], y[1:])


def test_embed_too_short():
    with pytest.raises(InsufficientLength):
        embed(np.arange(5.0), 2, 2, n=3)


def test_embedding_covariance_identity():
    spec = ProcessSpec("embedded", delta=2, inner=ProcessSpec("ar1-gaussian", a=0.8))
    n = 100_000
    x = generate(spec, n, rng(14))
    emp = lag_covariance(x, 2)
    model = model_covariance(spec, 2)
    # standard error of a lag covariance of a unit AR(1) with coefficient 0.8 is about 3/sqrt(n)
    np.testing.assert_allclose(emp.lags, model.lags, atol=3 * 3 / math.sqrt(n))


def test_generate_dimensions_and_determinism():
    for spec in (ProcessSpec("iid-gaussian", p=3), ProcessSpec("clayton-copula", a=0.5, theta=2.0),
                 ProcessSpec("embedded", delta=2, inner=ProcessSpec("detection-mixture", snr_db=0.0))):
        a = generate(spec, 64, rng(15))
        b = generate(spec, 64, rng(15))
        assert a.data.shape == (spec.dimension, 64)
        np.testing.assert_array_equal(a.data, b.data)


def test_clayton_keeps_marginal_normal_under_colored_test():
    from colored_mardia.engine import run_test

    rejected = 0
    reps = 300
    spec = ProcessSpec(Family.CLAYTON_COPULA, a=0.8, theta=2.0)
    for r in range(reps):
        x = generate(spec, 1000, rng(16, r))
        rejected += run_test(x.component(1), "scalar-colored").reject
    assert abs(rejected / reps - 0.106) <= 0.05


def test_sample_covariance_of_generated_unit_marginals():
    x = generate(ProcessSpec("gumbel-copula", a=0.8, theta=5.0), 100_000, rng(17))
    np.testing.assert_allclose(np.diag(sample_covariance(x)), [1.0, 1.0], atol=0.05)
