import numpy as np
import pytest
from scipy import stats

from baldtr import rand
from baldtr.rand import NumericalError, RngStream, make_rng

N = 10**6


@pytest.fixture
def rng():
    return make_rng(12345, 7)


def test_same_stream_is_bit_identical():
    a = make_rng(3, 11).standard_normal(1000)
    b = RngStream(3, 11).generator().standard_normal(1000)
    assert np.array_equal(a, b)


def test_distinct_streams_differ_and_look_independent():
    a = make_rng(3, 0).standard_normal(20000)
    b = make_rng(3, 1).standard_normal(20000)
    assert not np.array_equal(a, b)
    assert abs(np.corrcoef(a, b)[0, 1]) < 4 / np.sqrt(a.size)


def test_stream_rejects_out_of_range_ids():
    with pytest.raises(ValueError):
        RngStream(1, -1)
    with pytest.raises(ValueError):
        RngStream(2**64, 0)


def test_normal_degenerate(rng):
    assert rand.normal(rng, 5.0, 0.0) == 5.0


def test_normal_moments(rng):
    x = rand.normal(rng, 0.0, 2.0, size=N)
    assert abs(x.mean()) < 0.01
    assert abs(x.var() - 2.0) < 0.02


def test_normal_negative_variance(rng):
    with pytest.raises(ValueError):
        rand.normal(rng, 0.0, -1.0)


def test_mvn_identity_is_standard_normal(rng):
    x = np.array([rand.mvn_from_precision(rng, np.eye(2), np.zeros(2)) for _ in range(20000)])
    assert np.allclose(x.mean(axis=0), 0, atol=0.03)
    assert np.allclose(np.cov(x.T), np.eye(2), atol=0.04)


def test_mvn_scalar(rng):
    x = np.array([rand.mvn_from_precision(rng, np.array([[4.0]]), np.array([8.0]))[0]
                  for _ in range(40000)])
    assert abs(x.mean() - 2.0) < 4 * 0.5 / np.sqrt(x.size)
    assert abs(x.var() - 0.25) < 0.01


def test_mvn_matches_dense_oracle(rng):
    A = make_rng(1).standard_normal((3, 3))
    P = A @ A.T + 3 * np.eye(3)
    b = np.array([1.0, -2.0, 0.5])
    cov = np.linalg.inv(P)
    mean = cov @ b
    x = np.array([rand.mvn_from_precision(rng, P, b) for _ in range(100000)])
    se = np.sqrt(np.diag(cov) / x.shape[0])
    assert np.all(np.abs(x.mean(axis=0) - mean) < 4 * se)
    assert np.allclose(np.cov(x.T), cov, atol=0.01 * np.abs(cov).max() + 2e-3)


def test_mvn_not_positive_definite(rng):
    with pytest.raises(NumericalError, match="eigenvalue"):
        rand.mvn_from_precision(rng, np.diag([1.0, -1.0]), np.zeros(2))


def test_mvn_asymmetric(rng):
    with pytest.raises(NumericalError):
        rand.mvn_from_precision(rng, np.array([[2.0, 1.0], [0.0, 2.0]]), np.zeros(2))


def test_inv_gamma_mean_mode_support(rng):
    x = rand.inv_gamma(rng, 3.0, 4.0, size=N)
    assert np.all(x > 0)
    assert abs(x.mean() - 2.0) < 0.02
    hist, edges = np.histogram(x, bins=np.linspace(0, 4, 81))
    mode = 0.5 * (edges[:-1] + edges[1:])[hist.argmax()]
    assert abs(mode - 1.0) < 0.1


@pytest.mark.parametrize("shape,scale", [(0.0, 1.0), (1.0, -1.0)])
def test_inv_gamma_bad_params(rng, shape, scale):
    with pytest.raises(ValueError):
        rand.inv_gamma(rng, shape, scale)


def test_bernoulli_edges(rng):
    assert rand.bernoulli(rng, 1.0) == 1
    assert rand.bernoulli(rng, 0.0) == 0
    with pytest.raises(ValueError):
        rand.bernoulli(rng, 1.5)


def test_signed_bernoulli_values(rng):
    x = rand.signed_bernoulli(rng, 0.3, size=100000)
    assert set(np.unique(x)) == {-1, 1}
    assert abs((x == 1).mean() - 0.3) < 0.006


def test_beta_uniform_mean(rng):
    assert abs(rand.beta(rng, 1.0, 1.0, size=N).mean() - 0.5) < 0.002


def test_discrete_uniform_frequencies(rng):
    x = rand.discrete_uniform(rng, 8, size=N)
    freq = np.bincount(x, minlength=8) / N
    assert np.all(np.abs(freq - 0.125) < 0.002)
    with pytest.raises(ValueError):
        rand.discrete_uniform(rng, 0)


@pytest.mark.parametrize("name,draw,cdf", [
    ("normal", lambda g: rand.normal(g, 1.0, 2.0, size=10**5), stats.norm(1.0, np.sqrt(2.0)).cdf),
    ("inv_gamma", lambda g: rand.inv_gamma(g, 3.0, 4.0, size=10**5), stats.invgamma(3.0, scale=4.0).cdf),
    ("beta", lambda g: rand.beta(g, 0.7, 1.6, size=10**5), stats.beta(0.7, 1.6).cdf),
])
def test_ks(name, draw, cdf):
    x = draw(make_rng(99, 1))
    assert stats.kstest(x, cdf).pvalue > 1e-3, name
