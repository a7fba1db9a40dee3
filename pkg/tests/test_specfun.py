import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from greysim.specfun import (
    DomainError,
    GreyParams,
    gamma,
    m_wright_cdf,
    m_wright_logpdf,
    m_wright_pdf,
    m_wright_tail,
    m_wright_truncation,
    mittag_leffler,
    reciprocal_gamma,
)

# Frozen oracle values: 400-digit mpmath partial sums of the defining series
# (sum x^n / Gamma(beta n + 1), sum (-tau)^n / (n! Gamma(1 - beta - beta n)) and
# its termwise integral).
ML_ORACLE = [
    (0.3, -0.5, 0.6326490059435991),
    (0.5, -1.0, 0.427583576155807),
    (0.5, -4.0, 0.13699945762506138),
    (0.7, -2.5, 0.16863128667619576),
    (0.9, -10.0, 0.0128206060511021),
    (0.6, -30.0, 0.015211431482801458),
    (0.25, -3.0, 0.2190044275604068),
]
MW_ORACLE = [
    (0.3, 0.2, 0.6825313345053796),
    (0.3, 1.5, 0.26115102031517884),
    (0.5, 0.7, 0.4991418560723049),
    (0.7, 0.3, 0.41769048460521696),
    (0.7, 1.2, 0.5442838705333688),
    (0.7, 3.0, 0.007451474682640964),
    (0.8, 2.0, 0.13288480043900966),
    (0.4, 4.0, 0.017703699590908645),
]
CDF_ORACLE = [
    (0.3, 0.5, 0.3314062435863287),
    (0.5, 1.0, 0.5204998778130465),
    (0.7, 1.5, 0.7273051425857515),
    (0.8, 0.9, 0.3585382981065846),
    (0.4, 3.0, 0.9515739196010383),
]


def test_gamma_values():
    assert gamma(1.0) == 1.0
    assert gamma(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-14)
    oracle = quad(lambda t: t**0.7 * math.exp(-t), 0, math.inf, epsabs=0, epsrel=1e-13)[0]
    assert gamma(1.7) == pytest.approx(oracle, rel=1e-12)


def test_gamma_overflow():
    with pytest.raises(OverflowError):
        gamma(171.5)
    with pytest.raises(DomainError):
        gamma(-1.0)


def test_reciprocal_gamma_poles_and_reflection():
    assert reciprocal_gamma(0.0) == 0.0
    assert reciprocal_gamma(-1.0) == 0.0
    assert reciprocal_gamma(-7.0) == 0.0
    # Gamma(-1/2) = Gamma(1/2) / (-1/2) and Gamma(1/2) = 2 Gamma(3/2)
    assert reciprocal_gamma(-0.5) == pytest.approx(-0.5 / (2 * gamma(1.5)), rel=1e-14)
    assert reciprocal_gamma(-0.5) == pytest.approx(-1 / (2 * math.sqrt(math.pi)), rel=1e-14)


@given(st.floats(0.01, 160.0))
def test_reciprocal_gamma_matches_gamma(x):
    assert reciprocal_gamma(x) * gamma(x) == pytest.approx(1.0, rel=1e-12)


@pytest.mark.parametrize("beta,x,expected", ML_ORACLE)
def test_mittag_leffler_oracle(beta, x, expected):
    assert mittag_leffler(beta, x) == pytest.approx(expected, abs=1e-10, rel=1e-12)


def test_mittag_leffler_trivial():
    assert mittag_leffler(0.7, 0.0) == 1.0
    assert mittag_leffler(1.0, -1.0) == pytest.approx(0.3678794412, abs=1e-10)
    x = np.linspace(-20, 0, 81)
    assert np.allclose(mittag_leffler(1.0, x), np.exp(x), rtol=0, atol=1e-12)


def test_mittag_leffler_half_closed_form():
    # E_{1/2}(-x) = exp(x^2) erfc(x)
    from scipy.special import erfcx

    for x in (0.1, 1.0, 3.0, 7.0, 20.0, 50.0):
        assert mittag_leffler(0.5, -x) == pytest.approx(erfcx(x), rel=1e-11)


def test_mittag_leffler_domain():
    with pytest.raises(DomainError):
        mittag_leffler(0.5, 1.0)
    with pytest.raises(DomainError):
        mittag_leffler(1.2, -1.0)
    with pytest.raises(DomainError):
        mittag_leffler(0.0, -1.0)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.05, 1.0), st.floats(0.0, 50.0), st.floats(0.0, 50.0))
def test_mittag_leffler_bounded_monotone(beta, a, b):
    lo, hi = sorted((a, b))
    e_lo, e_hi = mittag_leffler(beta, -lo), mittag_leffler(beta, -hi)
    assert 0 < e_hi <= e_lo <= 1.0 + 1e-15


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 0.95), st.floats(0.05, 40.0))
def test_mittag_leffler_complete_monotone_differences(beta, x):
    # second difference of a completely monotone function is nonnegative
    h = 0.05 * (1 + x)
    f = [mittag_leffler(beta, -(x + k * h)) for k in range(3)]
    assert f[0] - 2 * f[1] + f[2] >= -1e-12


@pytest.mark.parametrize("beta,tau,expected", MW_ORACLE)
def test_m_wright_oracle(beta, tau, expected):
    assert m_wright_pdf(beta, tau) == pytest.approx(expected, rel=1e-12)


def test_m_wright_examples():
    assert m_wright_pdf(0.5, 0.0) == pytest.approx(0.5641895835, abs=1e-10)
    assert m_wright_pdf(0.5, 1.0) == pytest.approx(math.exp(-0.25) / math.sqrt(math.pi), rel=1e-13)
    for s in (0.5, 1.0, 2.0):
        val = quad(lambda t: math.exp(-s * t) * m_wright_pdf(0.5, t), 0, 60, epsabs=1e-14, limit=200)[0]
        assert val == pytest.approx(mittag_leffler(0.5, -s), abs=1e-10)


def test_m_wright_half_sup_error():
    tau = np.linspace(0, 10, 4001)
    err = np.abs(m_wright_pdf(0.5, tau) - np.exp(-tau**2 / 4) / math.sqrt(math.pi))
    assert err.max() <= 1e-8


def test_m_wright_domain():
    with pytest.raises(DomainError):
        m_wright_pdf(0.5, -1.0)
    with pytest.raises(DomainError):
        m_wright_pdf(1.0, 1.0)
    with pytest.raises(DomainError):
        m_wright_tail(1.0, 1.0)


@pytest.mark.parametrize("beta", [0.3, 0.5, 0.7, 0.9])
def test_m_wright_moments(beta):
    top = m_wright_truncation(beta)
    for n in range(0, 5):
        val = sum(
            quad(lambda t: t**n * m_wright_pdf(beta, t), lo, hi, epsabs=1e-13, epsrel=1e-12, limit=200)[0]
            for lo, hi in ((0, 1), (1, 3), (3, top))
        )
        assert val == pytest.approx(math.factorial(n) / gamma(beta * n + 1), abs=1e-6)


def test_m_wright_tail_half_exact():
    y = np.array([1.0, 5.0, 10.0, 20.0])
    assert np.allclose(m_wright_tail(0.5, y), np.exp(-y**2 / 4) / math.sqrt(math.pi), rtol=1e-13)
    assert abs(m_wright_tail(0.5, 10.0) / m_wright_pdf(0.5, 10.0) - 1) < 0.1


def test_m_wright_tail_ratio_beta07():
    # the asymptotic is within 5% beyond tau* = 2
    for tau in (2.0, 3.0, 4.0, 6.0):
        assert abs(m_wright_pdf(0.7, tau) / m_wright_tail(0.7, tau) - 1) < 0.05
    r = [abs(m_wright_pdf(0.7, t) / m_wright_tail(0.7, t) - 1) for t in (2.0, 4.0, 6.0)]
    assert r[0] > r[1] > r[2]


def test_m_wright_tail_monotone_beta09():
    from greysim.specfun import m_wright_log_tail

    # at y = 5 the value is exp(-3.8e5): positive, but only representable in log form
    y = np.linspace(5, 8, 20)
    lt = m_wright_log_tail(0.9, y)
    assert np.all(np.isfinite(lt)) and np.all(np.diff(lt) < 0)
    y = np.linspace(1.6, 2.3, 20)
    t = m_wright_tail(0.9, y)
    assert np.all(t > 0) and np.all(np.diff(t) < 0)


def test_m_wright_logpdf_far_tail():
    from greysim.specfun import m_wright_log_tail

    # beta = 1/2: the asymptotic is exact
    assert m_wright_logpdf(0.5, 40.0) == pytest.approx(-400.0 - 0.5 * math.log(math.pi), rel=1e-13)
    # far in the tail the relative error of the asymptotic is invisible in log scale
    assert m_wright_logpdf(0.9, 300.0) == pytest.approx(m_wright_log_tail(0.9, 300.0), rel=1e-9)
    assert m_wright_logpdf(0.7, 1.3) == pytest.approx(math.log(m_wright_pdf(0.7, 1.3)), rel=1e-13)


@pytest.mark.parametrize("beta,tau,expected", CDF_ORACLE)
def test_m_wright_cdf_oracle(beta, tau, expected):
    assert m_wright_cdf(beta, tau) == pytest.approx(expected, abs=1e-12)


def test_m_wright_cdf_examples():
    from scipy.special import erf

    assert m_wright_cdf(0.5, 0.0) == 0.0
    assert m_wright_cdf(0.5, 60.0) == pytest.approx(1.0, abs=1e-10)
    assert m_wright_cdf(0.5, 1.0) == pytest.approx(erf(0.5), abs=1e-13)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.05, 0.95), st.lists(st.floats(0.0, 30.0), min_size=2, max_size=8))
def test_m_wright_cdf_monotone_bounded(beta, taus):
    t = np.sort(np.array(taus))
    c = m_wright_cdf(beta, t)
    assert np.all((c >= 0) & (c <= 1))
    assert np.all(np.diff(c) >= -1e-14)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.05, 0.95), st.floats(0.0, 20.0))
def test_m_wright_pdf_nonnegative(beta, tau):
    assert m_wright_pdf(beta, tau) >= 0.0


@pytest.mark.parametrize("beta", [0.2, 0.5, 0.8])
def test_m_wright_cdf_is_integral_of_pdf(beta):
    for tau in (0.3, 1.0, 2.5):
        val = quad(lambda t: m_wright_pdf(beta, t), 0, tau, epsabs=1e-14, epsrel=1e-13)[0]
        assert m_wright_cdf(beta, tau) == pytest.approx(val, abs=1e-12)


def test_grey_params():
    p = GreyParams(1.5, 0.7)
    assert p.hurst == 0.75
    with pytest.raises(DomainError):
        GreyParams(2.0, 0.5)
    with pytest.raises(DomainError):
        GreyParams(1.0, 0.0)
    with pytest.raises(DomainError):
        GreyParams(0.8, 0.5).require_sde_regime()
    GreyParams(1.2, 1.0).require_sde_regime()
