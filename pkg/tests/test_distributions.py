import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from simfit import (DistSpec, Family, InconsistentMoments, MeanOutOfRange,
                    ResidualView, geometric, invert_mean, weibull,
                    weibull_from_mean_and_tail, zeta_dist)
from simfit.distributions import (ZETA_MIN_ALPHA, ccdf, mean, pmf,
                                  residual_pmf, sample, sample_residual)

ALL_SPECS = [
    geometric(0.1), geometric(0.5), geometric(0.9),
    weibull(0.5, 0.3), weibull(1.5, 0.5), weibull(1.5, 1.0), weibull(3.0, 2.0),
    zeta_dist(1.5), zeta_dist(3.0),
]


# --- tail function values, directly against the defining formulas ----------

def test_ccdf_examples():
    assert ccdf(geometric(0.5), 3) == pytest.approx(0.25, abs=1e-15)
    assert ccdf(weibull(1.5, 0.5), 2) == pytest.approx(math.exp(-1.5))
    assert ccdf(zeta_dist(2.0), 4) == pytest.approx(1.0 / 16.0)


def test_ccdf_at_one_is_one():
    for d in ALL_SPECS:
        assert ccdf(d, 1) == pytest.approx(1.0, abs=1e-15)


def test_ccdf_vectorizes():
    d = geometric(0.3)
    ks = np.array([1, 2, 5])
    np.testing.assert_allclose(ccdf(d, ks), [ccdf(d, int(k)) for k in ks])


@pytest.mark.parametrize("d", ALL_SPECS, ids=str)
def test_pmf_telescopes_to_one(d):
    K = 5000
    total = float(np.sum(pmf(d, np.arange(1, K + 1)))) + ccdf(d, K + 1)
    assert total == pytest.approx(1.0, abs=1e-12)


def test_pmf_nonnegative():
    for d in ALL_SPECS:
        assert np.all(np.asarray(pmf(d, np.arange(1, 200))) >= 0.0)


def test_parameter_validation():
    with pytest.raises(ValueError):
        geometric(0.0)
    with pytest.raises(ValueError):
        geometric(1.0)
    with pytest.raises(ValueError):
        weibull(-1.0, 0.5)
    with pytest.raises(ValueError):
        weibull(1.0, 0.0)
    with pytest.raises(ValueError):
        zeta_dist(ZETA_MIN_ALPHA - 0.01)


# --- means ----------------------------------------------------------------

def test_mean_geometric_closed_form():
    for p in (0.1, 0.3, 0.5, 0.9):
        assert mean(geometric(p)) == pytest.approx(1.0 / p, rel=1e-15)


def test_mean_zeta_known_value():
    # Apery's constant, the k^-3 series
    assert mean(zeta_dist(3.0)) == pytest.approx(1.2020569031595943, rel=1e-12)


@pytest.mark.parametrize("lam,alpha", [(0.5, 0.5), (1.5, 0.5), (1.5, 0.3),
                                       (1.5, 1.0), (3.0, 2.0)])
def test_mean_weibull_against_direct_sum(lam, alpha):
    # independent oracle: brute-force partial sum of the tail series
    ks = np.arange(1, 2_000_001, dtype=np.float64)
    direct = float(np.exp(-lam * (ks - 1.0) ** alpha).sum())
    assert mean(weibull(lam, alpha)) == pytest.approx(direct, rel=1e-9)


def test_mean_weibull_at_alpha_one_is_geometric():
    # exp(-lam (k-1)) is geometric with 1 - p = exp(-lam)
    lam = 0.7
    assert mean(weibull(lam, 1.0)) == pytest.approx(
        1.0 / (1.0 - math.exp(-lam)), rel=1e-12)


# --- residual law ---------------------------------------------------------

@pytest.mark.parametrize("d", ALL_SPECS, ids=str)
def test_residual_pmf_normalizes(d):
    K = 200_000
    total = float(np.sum(residual_pmf(d, np.arange(1, K + 1))))
    # heavy-tailed members need ever more terms; the partial sum must
    # approach 1 from below
    assert total <= 1.0 + 1e-12
    assert total == pytest.approx(1.0, abs=5e-3 if d.family is Family.ZETA
                                  else 1e-5)


def test_residual_of_geometric_is_geometric():
    d = geometric(0.4)
    ks = np.arange(1, 50)
    np.testing.assert_allclose(residual_pmf(d, ks), pmf(d, ks), rtol=1e-12)


def test_residual_view_matches_residual_pmf():
    d = weibull(1.5, 0.5)
    view = ResidualView(d)
    ks = np.arange(1, 30)
    np.testing.assert_allclose(view.pmf(ks), residual_pmf(d, ks), rtol=1e-12)


# --- sampling -------------------------------------------------------------

@pytest.mark.parametrize("d", [geometric(0.3), weibull(1.5, 0.5),
                               weibull(1.5, 1.0), zeta_dist(3.0)], ids=str)
def test_sample_mean_matches(d):
    rng = np.random.default_rng(7)
    n = 200_000
    draws = sample(d, rng, n)
    assert draws.min() >= 1
    se = draws.std(ddof=1) / math.sqrt(n)
    assert abs(draws.mean() - mean(d)) < 5.0 * se


def test_sample_pmf_matches():
    d = weibull(1.5, 0.5)
    rng = np.random.default_rng(11)
    n = 200_000
    draws = sample(d, rng, n)
    for k in (1, 2, 3):
        freq = np.mean(draws == k)
        p = pmf(d, k)
        assert abs(freq - p) < 5.0 * math.sqrt(p * (1 - p) / n)


def test_sample_scalar_form():
    rng = np.random.default_rng(0)
    v = sample(geometric(0.5), rng)
    assert isinstance(v, int) and v >= 1


def test_residual_sampling_matches_residual_pmf():
    d = weibull(1.5, 0.5)
    rng = np.random.default_rng(13)
    n = 200_000
    draws = sample_residual(d, rng, n)
    for k in (1, 2, 5):
        freq = np.mean(draws == k)
        p = residual_pmf(d, k)
        assert abs(freq - p) < 5.0 * math.sqrt(p * (1 - p) / n)


def test_residual_sampling_geometric_short_circuit():
    # memorylessness: the residual law equals the base law
    d = geometric(0.25)
    rng = np.random.default_rng(17)
    draws = sample_residual(d, rng, 100_000)
    se = draws.std(ddof=1) / math.sqrt(draws.size)
    assert abs(draws.mean() - mean(d)) < 5.0 * se


# --- mean inversion -------------------------------------------------------

@given(st.floats(0.05, 0.95))
@settings(max_examples=50, deadline=None)
def test_invert_mean_geometric_round_trip(p):
    spec = invert_mean(Family.GEOMETRIC, (), mean(geometric(p)))
    assert spec.params[0] == pytest.approx(p, rel=1e-12)


@pytest.mark.parametrize("lam", [0.5, 1.5, 3.0])
@pytest.mark.parametrize("alpha", [0.3, 0.5, 1.0, 2.0])
def test_invert_mean_weibull_round_trip(lam, alpha):
    spec = invert_mean(Family.WEIBULL, (lam,), mean(weibull(lam, alpha)))
    assert spec.params[1] == pytest.approx(alpha, abs=1e-7)


@pytest.mark.parametrize("alpha", [1.2, 1.5, 2.0, 4.0])
def test_invert_mean_zeta_round_trip(alpha):
    spec = invert_mean(Family.ZETA, (), mean(zeta_dist(alpha)))
    assert spec.params[0] == pytest.approx(alpha, abs=1e-7)


def test_invert_mean_out_of_range():
    with pytest.raises(MeanOutOfRange):
        invert_mean(Family.GEOMETRIC, (), 0.9)
    # weibull(lam) mean is bounded below by 1 + exp(-lam)
    with pytest.raises(MeanOutOfRange):
        invert_mean(Family.WEIBULL, (1.5,), 1.0 + math.exp(-1.5) - 0.01)


# --- joint (lam, alpha) recovery ------------------------------------------

@pytest.mark.parametrize("lam", [0.5, 1.5, 3.0])
@pytest.mark.parametrize("alpha", [0.3, 0.5, 1.0, 2.0])
def test_weibull_from_mean_and_tail_round_trip(lam, alpha):
    d = weibull(lam, alpha)
    mu = mean(d)
    fbar2 = ccdf(d, 2) / mu
    lam_hat, alpha_hat = weibull_from_mean_and_tail(mu, fbar2)
    assert lam_hat == pytest.approx(lam, rel=1e-10)
    assert alpha_hat == pytest.approx(alpha, abs=1e-7)


def test_weibull_from_mean_and_tail_rejects_inconsistent():
    with pytest.raises(InconsistentMoments):
        weibull_from_mean_and_tail(0.9, 0.1)        # mean below support
    with pytest.raises(InconsistentMoments):
        weibull_from_mean_and_tail(5.0, 0.5)        # fbar2 * mu >= 1


# --- serialization --------------------------------------------------------

@pytest.mark.parametrize("d", ALL_SPECS, ids=str)
def test_json_round_trip(d):
    assert DistSpec.from_json(d.to_json()) == d
