"""Sampling the mixing variable Y_beta and generalized grey Brownian motion.

ggBm is sampled through its variance-mixture form ``B_{alpha,beta} = sqrt(Y_beta) B_H``
with ``H = alpha/2`` and ``Y_beta`` independent of the fBm ``B_H``.

``Y_beta`` (density M_beta) is drawn as ``S^(-beta)`` where ``S`` is one-sided
beta-stable with Laplace transform ``exp(-lambda^beta)``.  With Kanter's
representation ``S = (A(U)/E)^((1-beta)/beta)`` this becomes

    Y = (E / A(U))^(1 - beta),   U ~ Uniform(0, 1),  E ~ Exp(1).
"""

from __future__ import annotations

import math

import numpy as np

from .fbm import SamplePath, TimeGrid, generate_fbm
from .rng import RngStream
from .specfun import GreyParams, gamma, zolotarev_a

__all__ = [
    "sample_y",
    "y_moment",
    "sample_ggbm_marginal",
    "sample_ggbm_path",
    "sample_ggbm_paths",
    "ggbm_moment",
]


def _draw_y(beta: float, gen: np.random.Generator, m: int) -> np.ndarray:
    if beta == 1.0:
        return np.ones(m)
    u = gen.uniform(size=m)
    e = gen.exponential(size=m)
    # u == 0 has probability zero but Philox can return it
    u = np.where(u == 0.0, np.nextafter(0.0, 1.0), u)
    return (e / zolotarev_a(u, beta)) ** (1.0 - beta)


def sample_y(params: GreyParams, rng: RngStream, size: int | None = None):
    """Draw Y_beta (density M_beta). Exactly 1.0 when beta == 1."""
    m = 1 if size is None else size
    y = _draw_y(params.beta, rng.generator(), m)
    return float(y[0]) if size is None else y


def y_moment(beta: float, n: int) -> float:
    """E Y_beta^n = n! / Gamma(beta n + 1)."""
    if n < 1:
        raise ValueError("moment order must be >= 1")
    return math.factorial(n) / gamma(beta * n + 1.0)


def ggbm_moment(params: GreyParams, t: float, order: int) -> float:
    """E B_{alpha,beta}(t)^order: zero for odd orders, (2n)! t^(n alpha) / (2^n Gamma(beta n + 1)) for order 2n."""
    if order % 2:
        return 0.0
    n = order // 2
    return math.factorial(2 * n) / (2.0**n * gamma(params.beta * n + 1.0)) * t ** (n * params.alpha)


def sample_ggbm_marginal(params: GreyParams, t: float, d: int, rng: RngStream, size: int | None = None):
    """Draw B_{alpha,beta}(t) in R^d as sqrt(Y) t^(alpha/2) N(0, I_d).

    Returns shape (d,) or (size, d).
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    m = 1 if size is None else size
    y = _draw_y(params.beta, rng.substream(0).generator(), m)
    z = rng.substream(1).generator().standard_normal((m, d))
    out = np.sqrt(y)[:, None] * (t**params.hurst) * z
    return out[0] if size is None else out


def sample_ggbm_paths(
    params: GreyParams,
    grid: TimeGrid,
    d: int,
    rng: RngStream,
    size: int,
    method: str = "circulant",
) -> tuple[np.ndarray, np.ndarray]:
    """Draw ``size`` ggBm paths; returns (paths[size, steps+1, d], y[size]).

    One Y draw scales the whole d-dimensional fBm path.  Y and the fBm come
    from distinct substreams.
    """
    y = _draw_y(params.beta, rng.substream(0).generator(), size)
    b = generate_fbm(params.hurst, grid, d, rng.substream(1), size=size, method=method)
    return np.sqrt(y)[:, None, None] * b, y


def sample_ggbm_path(
    params: GreyParams, grid: TimeGrid, d: int, rng: RngStream, method: str = "circulant"
) -> SamplePath:
    """One ggBm path; the mixing draw is stored in ``meta['y']``."""
    paths, y = sample_ggbm_paths(params, grid, d, rng, 1, method)
    return SamplePath(grid, paths[0], meta={"y": float(y[0])})
