"""Gamma, Mittag-Leffler and M-Wright functions on the real half-lines used by ggBm.

The M-Wright density is evaluated through two routes:

* the power series ``sum (-tau)^n / (n! Gamma(1 - beta - beta n))`` for small tau,
* the Zolotarev/Kanter integral

      M_beta(tau) = tau^(beta/(1-beta)) / (1-beta) * int_0^1 A(u) exp(-A(u) tau^(1/(1-beta))) du

  where ``A`` is the Zolotarev function of the one-sided beta-stable law.  The
  integrand is positive, so there is no cancellation in the tail.

The Mittag-Leffler function ``E_beta(-x)`` uses the series while it is well
conditioned and the spectral (complete-monotonicity) representation

      E_beta(-x) = sin(beta pi) / (beta pi) * int_0^inf exp(-(x rho)^(1/beta)) / (rho^2 + 2 rho cos(beta pi) + 1) drho

otherwise.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import IntegrationWarning, quad
from scipy.optimize import brentq

__all__ = [
    "GreyParams",
    "DomainError",
    "gamma",
    "reciprocal_gamma",
    "mittag_leffler",
    "m_wright_pdf",
    "m_wright_logpdf",
    "m_wright_tail",
    "m_wright_log_tail",
    "m_wright_cdf",
    "m_wright_truncation",
    "zolotarev_a",
]

# series in tau is used below this point, the Zolotarev integral above it
_MW_SERIES_MAX = 0.5
# the Mittag-Leffler series is accepted while its largest term stays below this
_ML_MAX_TERM = 1e3
_GAMMA_MAX = 170.0


class DomainError(ValueError):
    """Argument outside the domain on which a special function is defined here."""


@dataclass(frozen=True)
class GreyParams:
    """ggBm parameters (alpha, beta); the Hurst index of the fBm driver is alpha / 2."""

    alpha: float
    beta: float

    def __post_init__(self):
        if not (0.0 < self.alpha < 2.0):
            raise DomainError(f"alpha must lie in (0, 2), got {self.alpha}")
        if not (0.0 < self.beta <= 1.0):
            raise DomainError(f"beta must lie in (0, 1], got {self.beta}")

    @property
    def hurst(self) -> float:
        return self.alpha / 2

    def require_sde_regime(self) -> None:
        """Raise unless 1 < alpha < 2, the range in which Young integration applies."""
        if not (1.0 < self.alpha < 2.0):
            raise DomainError(
                f"SDE solving needs 1 < alpha < 2 (H > 1/2), got alpha={self.alpha}"
            )


def gamma(x: float) -> float:
    """Gamma function for 0 < x <= 170."""
    if not x > 0:
        raise DomainError(f"gamma expects x > 0, got {x}; use reciprocal_gamma")
    if x > _GAMMA_MAX:
        raise OverflowError(f"gamma({x}) exceeds the supported range x <= 170")
    return math.gamma(x)


def reciprocal_gamma(x: float) -> float:
    """1 / Gamma(x) for any real x, exactly 0 at the poles 0, -1, -2, ..."""
    if x > 0:
        if x > _GAMMA_MAX:
            return math.exp(-math.lgamma(x))
        return 1.0 / math.gamma(x)
    if x == math.floor(x):
        return 0.0
    # reflection: 1/Gamma(x) = sin(pi x) Gamma(1 - x) / pi
    s = math.sin(math.pi * x)
    log_mag = math.lgamma(1.0 - x) + math.log(abs(s)) - math.log(math.pi)
    return math.copysign(math.exp(log_mag), s)


def _check_beta(beta: float, *, allow_one: bool) -> None:
    hi_ok = beta <= 1.0 if allow_one else beta < 1.0
    if not (beta > 0.0 and hi_ok):
        bound = "(0, 1]" if allow_one else "(0, 1)"
        raise DomainError(f"beta must lie in {bound}, got {beta}")


# ---------------------------------------------------------------------------
# Mittag-Leffler


def _ml_log_term(beta: float, ax: float, n: int) -> float:
    return n * math.log(ax) - math.lgamma(beta * n + 1.0)


def _ml_peak_index(beta: float, ax: float) -> int:
    # digamma(beta n + 1) ~ log(ax) / beta puts the largest term near ax^(1/beta)
    return max(0, int((ax ** (1.0 / beta) - 1.0) / beta))


def _ml_series(beta: float, x: float) -> float:
    """Sum x^n / Gamma(beta n + 1) for x < 0 with exact (fsum) accumulation."""
    ax = -x
    n_peak = _ml_peak_index(beta, ax)
    log_peak = max(0.0, _ml_log_term(beta, ax, n_peak))
    terms = [1.0]
    n = 1
    while True:
        log_t = _ml_log_term(beta, ax, n)
        terms.append(math.copysign(math.exp(log_t), (-1.0) ** n))
        if n > n_peak and log_t < log_peak - 45.0:
            break
        n += 1
    return math.fsum(terms)


def _ml_series_ok(beta: float, x: float) -> bool:
    ax = -x
    n = _ml_peak_index(beta, ax)
    log_peak = max(_ml_log_term(beta, ax, k) for k in (n, n + 1))
    return log_peak < math.log(_ML_MAX_TERM)


def _ml_spectral(beta: float, x: float) -> float:
    s = x ** (1.0 / beta)
    c = math.cos(beta * math.pi)

    def f(rho):
        return math.exp(-s * rho ** (1.0 / beta)) / (rho * rho + 2.0 * rho * c + 1.0)

    opts = dict(epsabs=1e-15, epsrel=1e-13, limit=400)
    # the requested tolerance sits at the rounding floor; quad may say so
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        v = quad(f, 0.0, 1.0, **opts)[0] + quad(f, 1.0, np.inf, **opts)[0]
    return math.sin(beta * math.pi) / (beta * math.pi) * v


def _mittag_leffler_scalar(beta: float, x: float) -> float:
    if x > 0:
        raise DomainError(f"mittag_leffler is only supported for x <= 0, got {x}")
    if beta == 1.0:
        return math.exp(x)
    if x == 0.0:
        return 1.0
    if -x <= 1.0 or _ml_series_ok(beta, x):
        return _ml_series(beta, x)
    return _ml_spectral(beta, -x)


def mittag_leffler(beta, x):
    """Mittag-Leffler function E_beta(x) for 0 < beta <= 1 and x <= 0.

    Accepts scalars or arrays for ``x``.  The result lies in (0, 1] and is
    completely monotone in -x.
    """
    _check_beta(beta, allow_one=True)
    if np.ndim(x) == 0:
        return _mittag_leffler_scalar(beta, float(x))
    xa = np.asarray(x, dtype=float)
    return np.array([_mittag_leffler_scalar(beta, float(v)) for v in xa.ravel()]).reshape(xa.shape)


# ---------------------------------------------------------------------------
# M-Wright


def zolotarev_a(u, beta: float):
    """Zolotarev function A(u) of the one-sided beta-stable law, u in (0, 1)."""
    u = np.asarray(u, dtype=float)
    e = 1.0 / (1.0 - beta)
    with np.errstate(divide="ignore", invalid="ignore"):
        a = (
            np.sin(beta * np.pi * u) ** (beta * e)
            * np.sin((1.0 - beta) * np.pi * u)
            / np.sin(np.pi * u) ** e
        )
    return a


def _zolotarev_a0(beta: float) -> float:
    """Limit of A(u) as u -> 0, the minimum of A on (0, 1)."""
    return beta ** (beta / (1.0 - beta)) * (1.0 - beta)


def _log_sinc(z):
    """log(sin z / z), accurate for small z."""
    z = np.asarray(z, dtype=float)
    z2 = z * z
    small = -z2 * (1 / 6 + z2 * (1 / 180 + z2 * (1 / 2835 + z2 / 37800)))
    with np.errstate(divide="ignore", invalid="ignore"):
        big = np.log(np.sin(z) / z)
    return np.where(np.abs(z) < 0.1, small, big)


def _zolotarev_excess(u, beta: float):
    """A(u) - A(0+) without cancellation; nonnegative on (0, 1)."""
    u = np.asarray(u, dtype=float)
    e = 1.0 / (1.0 - beta)
    d = (
        beta * e * _log_sinc(beta * np.pi * u)
        + _log_sinc((1.0 - beta) * np.pi * u)
        - e * _log_sinc(np.pi * u)
    )
    return _zolotarev_a0(beta) * np.expm1(np.maximum(d, 0.0))


@lru_cache(maxsize=1)
def _graded_nodes(levels: int = 16, k: int = 20) -> tuple[np.ndarray, np.ndarray]:
    # composite Gauss-Legendre on (0, 1), panels refined geometrically at both ends
    x, w = np.polynomial.legendre.leggauss(k)
    br = np.array([0.0] + [2.0**-j for j in range(levels, 0, -1)])
    edges = np.unique(np.concatenate([br, 1.0 - br[::-1][1:]]))
    us, ws = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        us.append(0.5 * (b - a) * x + 0.5 * (a + b))
        ws.append(0.5 * (b - a) * w)
    return np.concatenate(us), np.concatenate(ws)


@lru_cache(maxsize=64)
def _kanter_table(beta: float) -> tuple[np.ndarray, np.ndarray, float]:
    u, w = _graded_nodes()
    excess = _zolotarev_excess(u, beta)
    a0 = _zolotarev_a0(beta)
    return excess, w, a0


@lru_cache(maxsize=64)
def _mw_series_coeffs(beta: float, nmax: int = 120) -> np.ndarray:
    return np.array(
        [reciprocal_gamma(1.0 - beta - beta * n) / math.factorial(n) for n in range(nmax)]
    )


@lru_cache(maxsize=64)
def _mw_cdf_series_coeffs(beta: float, nmax: int = 120) -> np.ndarray:
    # F(tau) = -sum_{n>=1} (-tau)^n / (n! Gamma(1 - beta n))
    c = [0.0] + [-reciprocal_gamma(1.0 - beta * n) / math.factorial(n) for n in range(1, nmax)]
    return np.array(c)


def _power_series(coeffs: np.ndarray, tau: np.ndarray) -> np.ndarray:
    # terms are bounded by 0.5^n on the series branch; Horner is accurate here
    z = -tau
    acc = np.zeros_like(tau)
    for c in coeffs[::-1]:
        acc = acc * z + c
    return acc


def _mw_integral_branch(beta: float, tau: np.ndarray) -> np.ndarray:
    excess, w, a0 = _kanter_table(beta)
    out = np.empty_like(tau)
    e = 1.0 / (1.0 - beta)
    # chunk to bound memory at (chunk, nodes)
    for start in range(0, tau.size, 4096):
        t = tau[start : start + 4096]
        x = t**e
        s = np.exp(-np.outer(x, excess)) @ (w * (excess + a0))
        out[start : start + 4096] = t ** (beta * e) * e * np.exp(-a0 * x) * s
    return out


def _mw_cdf_integral_branch(beta: float, tau: np.ndarray) -> np.ndarray:
    excess, w, a0 = _kanter_table(beta)
    out = np.empty_like(tau)
    e = 1.0 / (1.0 - beta)
    for start in range(0, tau.size, 4096):
        t = tau[start : start + 4096]
        x = t**e
        s = np.exp(-np.outer(x, excess)) @ w
        out[start : start + 4096] = 1.0 - np.exp(-a0 * x) * s
    return out


def m_wright_pdf(beta: float, tau):
    """M-Wright density M_beta(tau) for 0 < beta < 1, tau >= 0 (scalar or array)."""
    _check_beta(beta, allow_one=False)
    scalar = np.ndim(tau) == 0
    t = np.atleast_1d(np.asarray(tau, dtype=float))
    if np.any(t < 0) or np.any(np.isnan(t)):
        raise DomainError("m_wright_pdf expects tau >= 0")
    out = np.empty_like(t)
    small = t <= _MW_SERIES_MAX
    if small.any():
        out[small] = _power_series(_mw_series_coeffs(beta), t[small])
    if (~small).any():
        out[~small] = _mw_integral_branch(beta, t[~small])
    out = np.maximum(out, 0.0)
    return float(out[0]) if scalar else out


def m_wright_cdf(beta: float, tau):
    """Distribution function of M_beta, int_0^tau M_beta (scalar or array).

    The integral over [0, tau] is carried out in the Zolotarev variable, where
    ``1 - F(tau) = int_0^1 exp(-A(u) tau^(1/(1-beta))) du``.
    """
    _check_beta(beta, allow_one=False)
    scalar = np.ndim(tau) == 0
    t = np.atleast_1d(np.asarray(tau, dtype=float))
    if np.any(t < 0) or np.any(np.isnan(t)):
        raise DomainError("m_wright_cdf expects tau >= 0")
    out = np.empty_like(t)
    small = t <= _MW_SERIES_MAX
    if small.any():
        out[small] = _power_series(_mw_cdf_series_coeffs(beta), t[small])
    big = ~small
    if big.any():
        trunc = m_wright_truncation(beta)
        tb = t[big]
        vals = np.ones_like(tb)
        inside = tb < trunc
        vals[inside] = _mw_cdf_integral_branch(beta, tb[inside])
        out[big] = vals
    out = np.clip(out, 0.0, 1.0)
    return float(out[0]) if scalar else out


def m_wright_log_tail(beta: float, y):
    """Logarithm of :func:`m_wright_tail`."""
    _check_beta(beta, allow_one=False)
    y = np.asarray(y, dtype=float)
    if np.any(y <= 0):
        raise DomainError("m_wright_tail expects y > 0")
    z = beta * y
    e = 1.0 / (1.0 - beta)
    out = (
        -0.5 * np.log(2.0 * np.pi * (1.0 - beta))
        + (beta - 0.5) * e * np.log(z)
        - (1.0 - beta) / beta * z**e
    )
    return float(out) if out.ndim == 0 else out


def m_wright_tail(beta: float, y):
    """Large-argument asymptotic of M_beta(y).

    Evaluates ``(2 pi (1-beta))^(-1/2) z^((beta-1/2)/(1-beta)) exp(-(1-beta)/beta z^(1/(1-beta)))``
    at ``z = beta * y``.  Exact for beta = 1/2.
    """
    return np.exp(m_wright_log_tail(beta, y))


def m_wright_logpdf(beta: float, tau: float) -> float:
    """log M_beta(tau) for a scalar tau > 0, stable far into the tail."""
    _check_beta(beta, allow_one=False)
    if tau <= 0:
        raise DomainError("m_wright_logpdf expects tau > 0")
    if tau <= 2.0:
        v = m_wright_pdf(beta, tau)
        if v > 1e-250:
            return math.log(v)
    e = 1.0 / (1.0 - beta)
    x = tau**e
    a0 = _zolotarev_a0(beta)
    # A(u) - A0 ~ c u^2 near 0: integrate the shifted kernel on a scale-aware window
    c = float(_zolotarev_excess(1e-3, beta)) / 1e-6
    width = min(1.0, 1.0 / math.sqrt(max(c * x, 1e-300)))

    def f(u):
        ex = float(_zolotarev_excess(u, beta))
        if not np.isfinite(ex):
            return 0.0
        return (ex + a0) * math.exp(-ex * x)

    pts = [p for p in (width, 10 * width, 50 * width) if p < 1.0]
    edges = [0.0, *pts, 1.0]
    s = sum(
        quad(f, lo, hi, epsabs=0.0, epsrel=1e-12, limit=200)[0]
        for lo, hi in zip(edges[:-1], edges[1:])
    )
    return beta * e * math.log(tau) + math.log(e) - a0 * x + math.log(s)


@lru_cache(maxsize=64)
def m_wright_truncation(beta: float, eps: float = 1e-14) -> float:
    """Point beyond which the M-Wright tail asymptotic drops below ``eps``."""
    _check_beta(beta, allow_one=False)
    g = lambda y: m_wright_log_tail(beta, y) - math.log(eps)  # noqa: E731
    lo, hi = 1.0, 2.0
    while g(hi) > 0:
        hi *= 2.0
    # the asymptotic may still be increasing at y=1 for small beta; start past the mode
    while g(lo) < 0 and lo > 1e-3:
        lo /= 2.0
    return brentq(g, lo, hi, xtol=1e-12)
