"""Law of X_t(Y_beta): KDE, Gaussian-mixture quadrature, tail bound and F-integral finiteness.

For constant fields X_t(y) = x0 + b t + sqrt(y) sigma B_H(t) is Gaussian with
covariance y t^(2H) sigma sigma^T, so the law of X_t(Y_beta) is a variance
mixture over M_beta.  The y-integral is done in v = sqrt(y) (y = v^2,
dy = 2v dv) with a fixed composite Gauss-Legendre rule truncated where the
M-Wright tail asymptotic falls below 1e-14.
"""

from __future__ import annotations

import csv
import math
import time
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import IntegrationWarning, quad
from scipy.optimize import brentq
from scipy.special import gammaln, logsumexp, ndtr

from .fbm import fbm_covariance, fernique_tail_constants
from .report import RULE_LE, RunReport, rule_le_se
from .rng import RngStream
from .sampler import _draw_y
from .sde import VectorFieldSet
from .specfun import (
    DomainError,
    GreyParams,
    m_wright_logpdf,
    m_wright_pdf,
    m_wright_truncation,
)

__all__ = [
    "DensityEstimate",
    "silverman_bandwidth",
    "kde_estimate",
    "mixture_rule",
    "mixture_density_constant_fields",
    "mixture_cdf_constant_fields",
    "ggbm_joint_density",
    "sample_constant_field_marginal",
    "kde_mixture_check",
    "TailBoundParams",
    "tail_bound_params",
    "tail_bound",
    "tail_bound_check",
    "mixture_bound_dominance_check",
    "log_f_integral",
    "f_integral",
    "mixture_bound_finiteness",
    "default_f_tau",
]


@dataclass
class DensityEstimate:
    grid: np.ndarray
    values: np.ndarray
    method: str
    bandwidth: float | np.ndarray | None = None
    sample_count: int | None = None

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if np.any(self.values < 0):
            raise ValueError("density values must be nonnegative")

    @property
    def dim(self) -> int:
        return 1 if self.grid.ndim == 1 else self.grid.shape[1]

    def integral(self) -> float:
        """Trapezoid integral on a 1-d grid."""
        if self.dim != 1:
            raise ValueError("integral() only implemented for 1-d grids")
        return float(np.trapezoid(self.values, self.grid))

    def to_csv(self, path) -> None:
        g = self.grid.reshape(len(self.values), -1)
        header = ["z", "p"] if g.shape[1] == 1 else [f"z{i + 1}" for i in range(g.shape[1])] + ["p"]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for row, p in zip(g, self.values):
                w.writerow([f"{v:.17g}" for v in row] + [f"{p:.17g}"])


# ---------------------------------------------------------------------------
# KDE


def silverman_bandwidth(samples) -> float | np.ndarray:
    """0.9 min(sd, IQR/1.34) N^(-1/5) in one dimension; per-axis sd (4/((n+2)N))^(1/(n+4)) otherwise."""
    x = np.asarray(samples, dtype=float)
    if x.ndim == 1:
        sd = x.std(ddof=1)
        q75, q25 = np.percentile(x, [75, 25])
        spread = min(sd, (q75 - q25) / 1.34) if q75 > q25 else sd
        return 0.9 * spread * len(x) ** -0.2
    N, n = x.shape
    return x.std(axis=0, ddof=1) * (4.0 / ((n + 2) * N)) ** (1.0 / (n + 4))


def kde_estimate(samples, grid, bandwidth=None, chunk: int = 64) -> DensityEstimate:
    """Gaussian-kernel density estimate on ``grid``.

    ``samples`` is (N,) or (N, n) and ``grid`` is (G,) or (G, n).  The default
    bandwidth is Silverman's rule; in n > 1 dimensions the kernel is a product
    of per-axis Gaussians.
    """
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        raise ValueError("empty sample set")
    if len(x) < 100:
        raise ValueError(f"need at least 100 samples, got {len(x)}")
    g = np.asarray(grid, dtype=float)
    h = silverman_bandwidth(x) if bandwidth is None else bandwidth
    if np.any(np.asarray(h) <= 0):
        raise ValueError("bandwidth must be positive (degenerate sample? pass one explicitly)")
    xs = x[:, None] if x.ndim == 1 else x
    gs = g[:, None] if g.ndim == 1 else g
    hv = np.broadcast_to(np.asarray(h, dtype=float), (xs.shape[1],))
    norm = len(xs) * np.prod(hv) * (2 * np.pi) ** (xs.shape[1] / 2)
    out = np.empty(len(gs))
    for i in range(0, len(gs), chunk):
        u = (gs[i : i + chunk, None, :] - xs[None, :, :]) / hv
        out[i : i + chunk] = np.exp(-0.5 * (u**2).sum(axis=2)).sum(axis=1) / norm
    return DensityEstimate(g, out, "KDE", h if np.ndim(h) else float(h), len(xs))


# ---------------------------------------------------------------------------
# Gaussian mixture over M_beta


@lru_cache(maxsize=32)
def mixture_rule(
    beta: float, panels: int = 128, order: int = 16, graded: int = 56
) -> tuple[np.ndarray, np.ndarray]:
    """Nodes v and weights w with sum_k w_k f(v_k^2) ~ int_0^inf f(y) M_beta(y) dy.

    Composite Gauss-Legendre on [0, sqrt(y_max)] in v = sqrt(y); weights carry
    the factor 2 v M_beta(v^2).  The first uniform panel is replaced by
    ``graded`` panels halving toward 0, so Gaussian kernels exp(-q / (2 v^2))
    with a small quadratic form q are still resolved.  beta = 1 gives the
    single node v = 1.
    """
    if beta == 1.0:
        return np.ones(1), np.ones(1)
    vmax = math.sqrt(m_wright_truncation(beta))
    x, w = np.polynomial.legendre.leggauss(order)
    uniform = np.linspace(0.0, vmax, panels + 1)
    edges = np.concatenate([[0.0], uniform[1] * 0.5 ** np.arange(graded, 0, -1), uniform[1:]])
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    v = (mid[:, None] + half[:, None] * x).ravel()
    wv = (half[:, None] * w).ravel()
    weights = wv * 2.0 * v * m_wright_pdf(beta, v * v)
    for arr in (v, weights):
        arr.setflags(write=False)
    return v, weights


def _constant_field_gaussian(params, sigma, b, x0, t):
    sigma = np.atleast_2d(np.asarray(sigma, dtype=float))
    n = sigma.shape[0]
    if t <= 0:
        raise DomainError("t must be positive")
    cov = t ** (2 * params.hurst) * sigma @ sigma.T
    if np.linalg.matrix_rank(cov) < n:
        raise DomainError("sigma sigma^T is singular; the density does not exist")
    b = np.zeros(n) if b is None else np.broadcast_to(np.asarray(b, dtype=float), (n,))
    x0 = np.zeros(n) if x0 is None else np.broadcast_to(np.asarray(x0, dtype=float), (n,))
    return n, x0 + b * t, cov


def mixture_density_constant_fields(params: GreyParams, sigma, b, x0, t: float, z):
    """Density of x0 + b t + sqrt(Y_beta) sigma B_H(t) at z.

    ``z`` is a point (n,) or an array of points (m, n); for n = 1 scalars and
    1-d arrays are accepted.  Summed in log space, so the result stays
    strictly positive far in the tails.
    """
    n, mean, cov = _constant_field_gaussian(params, sigma, b, x0, t)
    z = np.asarray(z, dtype=float)
    scalar = z.ndim == 0 or (z.ndim == 1 and n > 1)
    zz = z.reshape(-1, n)
    diff = zz - mean
    q = np.einsum("mi,ij,mj->m", diff, np.linalg.inv(cov), diff)
    _, logdet = np.linalg.slogdet(cov)
    v, w = mixture_rule(params.beta)
    keep = w > 0
    v, w = v[keep], w[keep]
    base = np.log(w) - n * np.log(v)
    inv2v2 = 1.0 / (2.0 * v * v)
    out = np.empty(len(q))
    for i in range(0, len(q), 2048):
        logs = base[None, :] - q[i : i + 2048, None] * inv2v2[None, :]
        out[i : i + 2048] = logsumexp(logs, axis=1)
    out = np.exp(out - 0.5 * (n * math.log(2 * math.pi) + logdet))
    return float(out[0]) if scalar else out


def mixture_cdf_constant_fields(params: GreyParams, sigma: float, b: float, x0: float, t: float, z):
    """Distribution function of the scalar (n = d = 1) constant-field marginal."""
    _, mean, cov = _constant_field_gaussian(params, [[sigma]], b, x0, t)
    s = math.sqrt(cov[0, 0])
    v, w = mixture_rule(params.beta)
    z = np.asarray(z, dtype=float)
    zz = np.atleast_1d(z)
    out = np.empty(len(zz))
    for i in range(0, len(zz), 2048):
        u = (zz[i : i + 2048, None] - mean[0]) / (s * v[None, :])
        out[i : i + 2048] = ndtr(u) @ w
    out = np.clip(out / w.sum(), 0.0, 1.0)
    return float(out[0]) if z.ndim == 0 else out


def ggbm_joint_density(params: GreyParams, times, x) -> float:
    """Joint density of (B_{alpha,beta}(t_1), ..., B_{alpha,beta}(t_n)) at x.

    Adaptive quadrature in tau of
    (2 pi)^(-n/2) det(S)^(-1/2) tau^(-n/2) exp(-x^T S^-1 x / (2 tau)) M_beta(tau),
    S the fBm covariance matrix at the given times.
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    x = np.atleast_1d(np.asarray(x, dtype=float))
    n = len(times)
    S = fbm_covariance(params.hurst, times[:, None], times[None, :])
    q = float(x @ np.linalg.solve(S, x))
    _, logdet = np.linalg.slogdet(S)
    pref = math.exp(-0.5 * (n * math.log(2 * math.pi) + logdet))
    if params.beta == 1.0:
        return pref * math.exp(-0.5 * q)

    def f(tau):
        if tau <= 0:
            return 0.0
        return tau ** (-n / 2) * math.exp(-q / (2 * tau)) * m_wright_pdf(params.beta, tau)

    top = m_wright_truncation(params.beta)
    pts = sorted(p for p in {1.0, q / n} if 0 < p < top)
    edges = [0.0, *pts, top]
    return pref * sum(
        quad(f, lo, hi, epsabs=0.0, epsrel=1e-12, limit=400)[0] for lo, hi in zip(edges[:-1], edges[1:])
    )


def sample_constant_field_marginal(params, sigma, b, x0, t, rng: RngStream, size: int) -> np.ndarray:
    """Exact draws of X_t(Y_beta) = x0 + b t + sqrt(Y) t^H sigma Z for constant fields, shape (size, n)."""
    sigma = np.atleast_2d(np.asarray(sigma, dtype=float))
    n, d = sigma.shape
    mean = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float)
    if b is not None:
        mean = mean + np.asarray(b, dtype=float) * t
    y = _draw_y(params.beta, rng.substream(0).generator(), size)
    z = rng.substream(1).generator().standard_normal((size, d))
    return mean + np.sqrt(y)[:, None] * t**params.hurst * (z @ sigma.T)


def kde_mixture_check(
    params: GreyParams,
    N: int,
    rng: RngStream,
    t: float = 1.0,
    sigma: float = 1.0,
    tolerance: float = 0.02,
    points: int = 401,
    bandwidth: float | None = None,
) -> RunReport:
    """Sup |KDE - mixture| / peak for the scalar constant-field marginal.

    ``details['smoothed_sup_rel']`` compares the KDE with the mixture density
    convolved with the kernel (the KDE's expectation), which separates
    sampling error from smoothing bias.
    """
    t0 = time.perf_counter()
    x = sample_constant_field_marginal(params, [[sigma]], None, None, t, rng, N)[:, 0]
    sd = sigma * t**params.hurst * math.sqrt(1.0 / math.gamma(1.0 + params.beta))
    grid = np.linspace(-5 * sd, 5 * sd, points)
    est = kde_estimate(x, grid, bandwidth)
    exact = mixture_density_constant_fields(params, [[sigma]], None, None, t, grid)
    peak = float(exact.max())
    rel = float(np.max(np.abs(est.values - exact)) / peak)
    h = float(est.bandwidth)
    s = sigma * t**params.hurst
    v, w = mixture_rule(params.beta)
    var = (s * v[None, :]) ** 2 + h * h
    smoothed = (np.exp(-grid[:, None] ** 2 / (2 * var)) / np.sqrt(2 * np.pi * var)) @ w
    return RunReport(
        check_id=f"kde_vs_mixture_beta{params.beta:g}",
        statistic=rel,
        theoretical=tolerance,
        stderr=None,
        tolerance_rule=RULE_LE,
        runtime_ms=int(1000 * (time.perf_counter() - t0)),
        seed=rng.seed,
        details={
            "bandwidth": h,
            "peak": peak,
            "N": N,
            "smoothed_sup_rel": float(np.max(np.abs(est.values - smoothed)) / peak),
            "kde_integral": est.integral(),
        },
    )


# ---------------------------------------------------------------------------
# tail bound


@dataclass(frozen=True)
class TailBoundParams:
    """Constants of the Gaussian-type tail bound for X_t(y).

    c3 = 1/(2 d M^2 exp(2 theta t) t^(2H) y^2) with M the squared spectral
    norm of sigma and theta the Lipschitz constant of V0.
    """

    c2: float
    c3: float
    M: float
    theta: float
    c2_stderr: float | None = None

    def __post_init__(self):
        if not (self.c3 > 0 and self.c2 >= 0):
            raise ValueError("need c2 >= 0 and c3 > 0")


def _require_constant(fields: VectorFieldSet):
    if fields.name != "constant":
        raise ValueError("tail bound is only available for constant fields")
    sigma = np.asarray(fields.params["sigma"], dtype=float)
    b = np.asarray(fields.params["b"], dtype=float)
    return sigma, b


def tail_bound_params(
    params: GreyParams,
    fields: VectorFieldSet,
    x0,
    t: float,
    y: float,
    N: int = 100_000,
    rng: RngStream | None = None,
    c2: float | None = None,
) -> TailBoundParams:
    """Constants for fixed y; c2 = sqrt(d) E max_i |X_t^i(y) - x0| by Monte Carlo unless given."""
    sigma, b = _require_constant(fields)
    d = fields.d
    M = float(np.linalg.norm(sigma, 2)) ** 2
    theta = float(fields.drift_lipschitz or 0.0)
    c3 = 1.0 / (2 * d * M**2 * math.exp(2 * theta * t) * t ** (2 * params.hurst) * y**2)
    se = None
    if c2 is None:
        if rng is None:
            raise ValueError("need rng to estimate c2")
        z = rng.generator().standard_normal((N, d))
        dev = b * t + math.sqrt(y) * t**params.hurst * (z @ sigma.T)
        m = math.sqrt(d) * np.abs(dev).max(axis=1)
        c2, se = float(m.mean()), float(m.std(ddof=1) / math.sqrt(N))
    return TailBoundParams(c2, c3, M, theta, se)


def tail_bound(tp: TailBoundParams, z):
    """exp(-c3 (|z| - c2)^2) for |z| > c2, else 1."""
    r = np.abs(np.asarray(z, dtype=float))
    out = np.where(r > tp.c2, np.exp(-tp.c3 * (r - tp.c2) ** 2), 1.0)
    return float(out) if out.ndim == 0 else out


def tail_bound_check(
    params: GreyParams,
    fields: VectorFieldSet,
    x0,
    t: float,
    y: float,
    N: int,
    rng: RngStream,
    n_z: int = 10,
    k: float = 4.0,
) -> RunReport:
    """One-sided MC check of P[|X_t(y) - x0| > z] <= tail bound at ``n_z`` radii beyond c2.

    c2 is estimated on substream 0 and the survival on substream 1.  The
    statistic is the largest standardized excess (emp - bound)/se, with se the
    binomial standard error at the bound; pass when <= k.
    """
    t0 = time.perf_counter()
    sigma, b = _require_constant(fields)
    tp = tail_bound_params(params, fields, x0, t, y, N, rng.substream(0))
    g = rng.substream(1).generator()
    z = g.standard_normal((N, fields.d))
    dev = b * t + math.sqrt(y) * t**params.hurst * (z @ sigma.T)
    r = np.sqrt((dev**2).sum(axis=1))
    x0v = np.broadcast_to(np.asarray(x0, dtype=float), (fields.n,))
    r_raw = np.sqrt(((x0v + dev) ** 2).sum(axis=1))
    top = float(np.quantile(r, 1.0 - 20.0 / N)) if N >= 100 else float(r.max())
    radii = np.linspace(tp.c2, max(top, 1.01 * tp.c2), n_z + 1)[1:]
    emp = np.array([(r > z_).mean() for z_ in radii])
    emp_raw = np.array([(r_raw > z_).mean() for z_ in radii])
    bound = tail_bound(tp, radii)
    se = np.sqrt(np.maximum(bound * (1 - bound), 1.0 / N) / N)
    zscore = (emp - bound) / se
    return RunReport(
        check_id=f"tail_bound_y{y:g}",
        statistic=float(zscore.max()),
        theoretical=0.0,
        stderr=1.0,
        tolerance_rule=rule_le_se(k),
        runtime_ms=int(1000 * (time.perf_counter() - t0)),
        seed=rng.seed,
        details={
            "c2": tp.c2,
            "c2_stderr": tp.c2_stderr,
            "c3": tp.c3,
            "M": tp.M,
            "theta": tp.theta,
            "radii": radii,
            "survival_centered": emp,
            "survival_uncentered": emp_raw,
            "bound": bound,
        },
    )


def mixture_bound_dominance_check(
    params: GreyParams,
    sigma: float,
    t: float,
    N: int,
    rng: RngStream,
    n_z: int = 20,
    margin: float = 1.1,
) -> RunReport:
    """p(z) <= c1 int rho(z, y) M_beta(y) dy for the scalar constant-field marginal.

    rho(z, y) = exp(-c3(y) (|z| - c2(y))^2) beyond c2(y) and 1 inside, with
    c2(y) = sqrt(y) c2(1) by scaling.  c1 is the largest ratio p/envelope on a
    pilot estimate of c2(1) (substream 0) times ``margin``; the check then
    uses a fresh estimate (substream 1).  Statistic: max of p/(c1 envelope) - 1.
    """
    t0 = time.perf_counter()
    fields_sigma = [[float(sigma)]]
    sd = abs(sigma) * t**params.hurst / math.sqrt(math.gamma(1 + params.beta))
    z = np.linspace(0.0, 8 * sd, n_z)
    p = mixture_density_constant_fields(params, fields_sigma, None, None, t, z)
    v, w = mixture_rule(params.beta)
    y = v * v
    H = params.hurst
    c3 = 1.0 / (2 * sigma**4 * t ** (2 * H) * np.maximum(y, 1e-300) ** 2)

    def envelope(c2_unit):
        c2 = np.sqrt(y) * c2_unit
        gap = np.maximum(z[:, None] - c2[None, :], 0.0)
        return np.exp(-c3[None, :] * gap**2) @ w

    def c2_estimate(stream):
        zz = stream.generator().standard_normal(N)
        return float(np.mean(np.abs(sigma * t**H * zz)))

    pilot = envelope(c2_estimate(rng.substream(0)))
    c1 = margin * float(np.max(p / pilot))
    env = envelope(c2_estimate(rng.substream(1)))
    worst = float(np.max(p / (c1 * env)) - 1.0)
    return RunReport(
        check_id=f"mixture_dominance_beta{params.beta:g}",
        statistic=worst,
        theoretical=0.0,
        stderr=None,
        tolerance_rule=RULE_LE,
        runtime_ms=int(1000 * (time.perf_counter() - t0)),
        seed=rng.seed,
        details={"c1": c1, "z": z, "density": p, "envelope": c1 * env},
    )


# ---------------------------------------------------------------------------
# F integral


def _f_peak(a: float, tau: float, K: float, e: float) -> float:
    # stationary point of a log u - tau u^2 + K u^e, solved in log u
    def phi(lu):
        return a - 2 * tau * math.exp(2 * lu) + K * e * math.exp(e * lu)

    lo, hi = -1.0, 1.0
    while phi(lo) <= 0:
        lo -= 2.0
    while phi(hi) > 0:
        hi += 2.0
    return math.exp(brentq(phi, lo, hi, xtol=1e-15, rtol=1e-15))


def log_f_integral(t: float, delta: float, C: float, y: float, tau_param: float) -> float:
    """log of int_0^inf u^(1/delta - 1) exp(-tau u^2) exp(C t y^(1/(2 delta)) u^(1/delta)) du.

    Integrated in the relative variable u = u*(1 + s) around the peak u* of
    the integrand, where the log-integrand minus its peak value can be written
    without cancellation.  Usable far beyond the range where F overflows.
    """
    if not (0.5 < delta < 1.0):
        raise DomainError("need 1/2 < delta < 1")
    if tau_param <= 0:
        raise DomainError("tau_param must be positive")
    if y < 0 or C < 0 or t < 0:
        raise DomainError("t, C, y must be nonnegative")
    e = 1.0 / delta
    a = e - 1.0
    K = C * t * y ** (e / 2.0)
    if K == 0.0:
        return -0.5 * e * math.log(tau_param) + float(gammaln(0.5 * e)) - math.log(2.0)
    ustar = _f_peak(a, tau_param, K, e)
    q = tau_param * ustar * ustar
    gstar = a * math.log(ustar) - q + K * ustar**e

    # (2/e)((1+s)^e - 1) - 2s - s^2 = sum_k c_k s^k, k >= 2, for small |s|
    coef = [e - 2.0]
    binom = e * (e - 1.0) / 2.0
    for k in range(3, 40):
        binom *= (e - k + 1.0) / k
        coef.append(2.0 / e * binom)

    def quad_part(s):
        if abs(s) < 0.1:
            acc = 0.0
            for c in reversed(coef):
                acc = acc * s + c
            return acc * s * s
        return (2.0 / e) * math.expm1(e * math.log1p(s)) - 2.0 * s - s * s

    def shifted(s):
        # g(u*(1+s)) - g(u*) using K u*^e = (2 q - a)/e
        L = math.log1p(s)
        return a * (L - math.expm1(e * L) / e) + q * quad_part(s)

    def h(s):
        return math.exp(shifted(s)) if s > -1.0 else 0.0

    w = 1.0 / math.sqrt(a * e + 2.0 * q * (2.0 - e))
    right = 40.0 * w
    while shifted(right) > -40.0:
        right *= 2.0
    left = max(-1.0, -40.0 * w)
    edges = sorted({-1.0, left, 0.0, right})
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        tot = sum(quad(h, lo, hi, epsabs=0.0, epsrel=1e-12, limit=200)[0] for lo, hi in zip(edges[:-1], edges[1:]))
    return gstar + math.log(ustar) + math.log(tot)


def f_integral(t: float, delta: float, C: float, y: float, tau_param: float) -> float:
    """F(t, 1/delta - 1, 1/delta, C y^(1/(2 delta))); may overflow to inf."""
    lf = log_f_integral(t, delta, C, y, tau_param)
    return math.exp(lf) if lf < 709.0 else math.inf


def _segment_log_integral(hfun, lo: float, hi: float, probes: int = 65):
    # log int_lo^hi exp(h); h is shifted by its probe maximum before quadrature
    ys = np.linspace(lo, hi, probes)
    ys[0] = max(ys[0], 1e-12)
    hv = np.array([hfun(float(u)) for u in ys])
    k = int(hv.argmax())
    hmax = float(hv[k])

    def f(u):
        return math.exp(min(hfun(max(u, 1e-12)) - hmax, 700.0))

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        pts = [float(ys[k])] if lo < ys[k] < hi else None
        s = quad(f, lo, hi, epsabs=0.0, epsrel=1e-10, limit=200, points=pts)[0]
    if not s > 0:
        s = (hi - lo) / (probes - 1)
    return hmax + math.log(s), hv, ys


def mixture_bound_finiteness(
    beta: float,
    p: float,
    t: float,
    delta: float,
    C: float,
    tau_param: float,
    tol: float = 1e-6,
    max_doublings: int = 12,
) -> RunReport:
    """Truncation study of log int_0^Y F(y)^p M_beta(y) dy as Y doubles.

    Segments [Y_{k-1}, Y_k] are integrated in log space and accumulated.  The
    statistic is the relative contribution of the last segment; the check
    passes when it is below ``tol`` and the log-integrand is decreasing at the
    last truncation.  For large y, log F grows like y^(1/(2 delta - 1)) while
    log M_beta decays like -y^(1/(1 - beta)), so the integral is finite only
    when 2 delta - 1 > 1 - beta, the boundary case being decided by constants.
    When the log-integrand exceeds about 1e15 its absolute rounding error
    exceeds one unit, so segment values are only good to leading order; the
    truncation shares used by the check are unaffected.
    """
    if not (0.0 < beta < 1.0):
        raise DomainError("need 0 < beta < 1")
    if p <= 0:
        raise DomainError("p must be positive")
    t0 = time.perf_counter()

    def hfun(y):
        return p * log_f_integral(t, delta, C, y, tau_param) + m_wright_logpdf(beta, y)

    edges = [0.0, m_wright_truncation(beta)]
    logs: list[float] = []
    rel = math.inf
    status = "not converged"
    slope = h_end = hmax = math.nan
    try:
        for k in range(max_doublings + 1):
            seg, hv, ys = _segment_log_integral(hfun, edges[-2], edges[-1])
            logs.append(seg)
            hmax = max(float(hv.max()), hmax) if k else float(hv.max())
            total = float(logsumexp(logs))
            rel = math.exp(logs[-1] - total) if k else math.inf
            h_end = float(hv[-1])
            slope = float((hv[-1] - hv[-2]) / (ys[-1] - ys[-2]))
            if k and rel < tol and slope < 0:
                status = "converged"
                break
            edges.append(2 * edges[-1])
        else:
            status = "diverging" if slope > 0 else "not converged"
    except (FloatingPointError, OverflowError, ValueError) as exc:
        status = f"numerical failure: {exc}"
        rel = math.inf
    return RunReport(
        check_id=f"finiteness_p{p:g}_beta{beta:g}_delta{delta:g}",
        statistic=rel,
        theoretical=tol,
        stderr=None,
        tolerance_rule=RULE_LE,
        runtime_ms=int(1000 * (time.perf_counter() - t0)),
        details={
            "status": status,
            "truncations": edges,
            "log_segments": logs,
            "log_integrand_max": hmax,
            "log_integrand_end": h_end,
            "log_integrand_slope_end": slope,
            "growth_exponent_logF": 1.0 / (2 * delta - 1),
            "decay_exponent_logM": 1.0 / (1 - beta),
            "tau": tau_param,
            "C": C,
        },
    )


def default_f_tau(delta: float, H: float = 0.75, horizon: float = 1.0) -> float:
    """The Fernique tau (half the admissible supremum) used for F in the verify suite."""
    return fernique_tail_constants(H, delta, horizon)[0]
