"""Fractional Brownian motion on a uniform grid, and discrete Hoelder norms.

Two exact generators are provided: a Cholesky factorization of the full
covariance (O(n^3), guarded at n <= 4096) and circulant embedding of the
fractional Gaussian noise (O(n log n)).  Coordinates of a d-dimensional path
are independent.
"""

from __future__ import annotations

import csv
import logging
import math
import time
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Any

import numpy as np

from .report import RULE_LE, RunReport
from .rng import RngStream, shard_sizes

log = logging.getLogger(__name__)

__all__ = [
    "TimeGrid",
    "SamplePath",
    "HoelderNorm",
    "CirculantFallbackWarning",
    "fbm_covariance",
    "generate_fbm_cholesky",
    "generate_fbm_circulant",
    "generate_fbm",
    "hoelder_norm",
    "hoelder_seminorms",
    "fernique_moment_bound",
    "fernique_tail_constants",
    "hoelder_norm_moments",
    "hoelder_tail_check",
    "write_paths_csv",
    "read_paths_csv",
]

CHOLESKY_MAX_STEPS = 4096
ALL_PAIRS_MAX_STEPS = 2048
EIGEN_CLIP = 1e-9


class CirculantFallbackWarning(RuntimeWarning):
    """Circulant embedding produced a negative eigenvalue; Cholesky was used instead."""


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid t_k = k T / n, k = 0..n."""

    horizon: float
    steps: int

    def __post_init__(self):
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")
        if int(self.steps) != self.steps or self.steps < 1:
            raise ValueError("steps must be an integer >= 1")

    @property
    def dt(self) -> float:
        return self.horizon / self.steps

    @property
    def times(self) -> np.ndarray:
        t = np.arange(self.steps + 1) * self.dt
        t[-1] = self.horizon
        return t

    def coarsen(self, factor: int) -> "TimeGrid":
        if self.steps % factor:
            raise ValueError(f"{self.steps} steps not divisible by {factor}")
        return TimeGrid(self.horizon, self.steps // factor)


@dataclass
class SamplePath:
    """Values of one path on a grid, shape (steps + 1, dim)."""

    grid: TimeGrid
    values: np.ndarray
    meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.shape[0] != self.grid.steps + 1:
            raise ValueError(f"expected {self.grid.steps + 1} rows, got {v.shape[0]}")
        if not np.all(np.isfinite(v)):
            raise ValueError("path contains non-finite values")
        self.values = v

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def to_csv(self, path) -> None:
        write_paths_csv(path, self.grid, self.values[None])

    @classmethod
    def from_csv(cls, path) -> "SamplePath":
        grid, values = read_paths_csv(path)
        if values.shape[0] != 1:
            raise ValueError("file holds several paths; use read_paths_csv")
        return cls(grid, values[0])


@dataclass(frozen=True)
class HoelderNorm:
    delta: float
    sup_norm: float
    hoelder_seminorm: float

    @property
    def total(self) -> float:
        return self.sup_norm + self.hoelder_seminorm


def fbm_covariance(H: float, t, s):
    """Cov(B_H(t), B_H(s)) = (t^2H + s^2H - |t-s|^2H) / 2."""
    t = np.asarray(t, dtype=float)
    s = np.asarray(s, dtype=float)
    h2 = 2.0 * H
    out = 0.5 * (t**h2 + s**h2 - np.abs(t - s) ** h2)
    return float(out) if out.ndim == 0 else out


def _check_hurst(H: float) -> None:
    if not (0.0 < H < 1.0):
        raise ValueError(f"Hurst index must lie in (0, 1), got {H}")


@lru_cache(maxsize=16)
def _cholesky_factor(H: float, horizon: float, steps: int) -> np.ndarray:
    t = TimeGrid(horizon, steps).times[1:]
    cov = fbm_covariance(H, t[:, None], t[None, :])
    return np.linalg.cholesky(cov)


def generate_fbm_cholesky(H: float, grid: TimeGrid, d: int, rng: RngStream, size: int | None = None):
    """Exact fBm by Cholesky factorization of the covariance on the grid.

    Returns a :class:`SamplePath` when ``size`` is None, else an array of shape
    (size, steps + 1, d).  Raises ``numpy.linalg.LinAlgError`` if the
    covariance is numerically not positive definite.
    """
    _check_hurst(H)
    if grid.steps > CHOLESKY_MAX_STEPS:
        raise ValueError(f"Cholesky generator limited to {CHOLESKY_MAX_STEPS} steps")
    L = _cholesky_factor(H, grid.horizon, grid.steps)
    m = 1 if size is None else size
    z = rng.generator().standard_normal((m, d, grid.steps))
    inner = z @ L.T  # (m, d, steps)
    out = np.zeros((m, grid.steps + 1, d))
    out[:, 1:, :] = np.swapaxes(inner, 1, 2)
    return SamplePath(grid, out[0]) if size is None else out


def _fgn_autocov(H: float, n: int) -> np.ndarray:
    k = np.arange(n + 1, dtype=float)
    h2 = 2.0 * H
    return 0.5 * (np.abs(k + 1) ** h2 - 2.0 * k**h2 + np.abs(k - 1) ** h2)


@lru_cache(maxsize=16)
def _circulant_eigs(H: float, n: int) -> np.ndarray | None:
    g = _fgn_autocov(H, n)
    c = np.concatenate([g, g[-2:0:-1]])  # length 2n
    lam = np.fft.fft(c).real
    if lam.min() < -EIGEN_CLIP:
        return None
    lam = np.clip(lam, 0.0, None)
    lam.setflags(write=False)
    return lam


def generate_fbm_circulant(H: float, grid: TimeGrid, d: int, rng: RngStream, size: int | None = None):
    """Exact fBm by circulant embedding of fractional Gaussian noise.

    Same law and return convention as :func:`generate_fbm_cholesky`.  If the
    embedding has an eigenvalue below -1e-9 the call falls back to Cholesky and
    emits :class:`CirculantFallbackWarning`.
    """
    _check_hurst(H)
    n = grid.steps
    lam = _circulant_eigs(H, n)
    if lam is None:
        msg = f"circulant embedding not nonnegative for H={H}, n={n}; using Cholesky"
        log.warning(msg)
        warnings.warn(msg, CirculantFallbackWarning, stacklevel=2)
        return generate_fbm_cholesky(H, grid, d, rng, size)
    m = 1 if size is None else size
    need = m * d
    n_fft = (need + 1) // 2
    gen = rng.generator()
    xi = gen.standard_normal((n_fft, 2 * n)) + 1j * gen.standard_normal((n_fft, 2 * n))
    w = np.fft.fft(np.sqrt(lam / (2 * n)) * xi, axis=1)[:, :n]
    # real and imaginary parts are independent fGn samples
    fgn = np.concatenate([w.real, w.imag], axis=0)[:need]
    incr = fgn.reshape(m, d, n) * grid.dt**H
    out = np.zeros((m, n + 1, d))
    out[:, 1:, :] = np.swapaxes(np.cumsum(incr, axis=2), 1, 2)
    return SamplePath(grid, out[0]) if size is None else out


def generate_fbm(H, grid, d, rng, size=None, method: str = "circulant"):
    if method == "circulant":
        return generate_fbm_circulant(H, grid, d, rng, size)
    if method == "cholesky":
        return generate_fbm_cholesky(H, grid, d, rng, size)
    raise ValueError(f"unknown fBm method {method!r}")


# ---------------------------------------------------------------------------
# Hoelder norms


def _pair_lags(steps: int) -> np.ndarray:
    if steps <= ALL_PAIRS_MAX_STEPS:
        return np.arange(1, steps + 1)
    dyadic = 2 ** np.arange(int(math.log2(steps)) + 1)
    lags = np.unique(np.concatenate([dyadic, 3 * dyadic, [steps]]))
    return lags[lags <= steps]


def hoelder_seminorms(values: np.ndarray, dt: float, delta: float) -> np.ndarray:
    """Discrete delta-Hoelder seminorm of a batch of paths.

    ``values`` has shape (paths, steps + 1, d) or (steps + 1, d); the vector
    increment is measured in the Euclidean norm.  All grid pairs are used up
    to 2048 steps, a dyadic subset of lags above that.
    """
    v = np.asarray(values, dtype=float)
    single = v.ndim == 2
    if single:
        v = v[None]
    steps = v.shape[1] - 1
    best = np.zeros(v.shape[0])
    for lag in _pair_lags(steps):
        diff = v[:, lag:, :] - v[:, :-lag, :]
        incr = np.sqrt(np.einsum("pkd,pkd->pk", diff, diff)).max(axis=1)
        np.maximum(best, incr / (lag * dt) ** delta, out=best)
    return best[0] if single else best


def hoelder_norm(path: SamplePath, delta: float) -> HoelderNorm:
    """Sup norm and discrete delta-Hoelder seminorm of a sampled path.

    The discrete seminorm is a lower bound for the continuum one.
    """
    sup = float(np.sqrt((path.values**2).sum(axis=1)).max())
    semi = float(hoelder_seminorms(path.values, path.grid.dt, delta))
    return HoelderNorm(delta, sup, semi)


def fernique_moment_bound(H: float, delta: float, horizon: float, k: int) -> float:
    """32^k (2T)^(2k(H - delta)) (2k)!"""
    return 32.0**k * (2.0 * horizon) ** (2 * k * (H - delta)) * math.factorial(2 * k)


def fernique_tail_constants(H: float, delta: float, horizon: float, fraction: float = 0.5):
    """(tau, M) for the Gaussian tail bound of the Hoelder seminorm.

    ``tau`` is ``fraction`` of the admissible supremum 1/(128 (2T)^(2(H-delta))).
    """
    if not (0.0 < fraction < 1.0):
        raise ValueError("fraction must lie in (0, 1)")
    scale = 128.0 * (2.0 * horizon) ** (2.0 * (H - delta))
    tau = fraction / scale
    M = (1.0 - scale * tau) ** -0.5
    return tau, M


def _sample_seminorms(H, delta, grid, n_paths, d, seed, streams, method, batch=500):
    out = []
    for sid, m in enumerate(shard_sizes(n_paths, streams)):
        rs = RngStream(seed, sid)
        for j, start in enumerate(range(0, m, batch)):
            b = min(batch, m - start)
            paths = generate_fbm(H, grid, d, rs.substream(j), size=b, method=method)
            out.append(hoelder_seminorms(paths, grid.dt, delta))
    return np.concatenate(out)


def hoelder_norm_moments(
    H: float,
    delta: float,
    grid: TimeGrid,
    k: int,
    N: int,
    rng: RngStream,
    d: int = 1,
    streams: int = 1,
    method: str = "circulant",
    norms: np.ndarray | None = None,
) -> RunReport:
    """One-sided check of E ||B_H||_delta^(2k) <= 32^k (2T)^(2k(H-delta)) (2k)!.

    ``norms`` may pass precomputed seminorms to share one Monte Carlo sample
    between several checks.
    """
    if not (0.5 < delta < H < 1.0):
        raise ValueError("need 1/2 < delta < H < 1")
    t0 = time.perf_counter()
    if norms is None:
        norms = _sample_seminorms(H, delta, grid, N, d, rng.seed, streams, method)
    vals = norms ** (2 * k)
    est = float(vals.mean())
    se = float(vals.std(ddof=1) / math.sqrt(len(vals)))
    return RunReport(
        check_id=f"fernique_moment_k{k}",
        statistic=est,
        theoretical=fernique_moment_bound(H, delta, grid.horizon, k),
        stderr=se,
        tolerance_rule=RULE_LE,
        runtime_ms=int(1000 * (time.perf_counter() - t0)),
        seed=rng.seed,
        stream_count=streams,
        details={"H": H, "delta": delta, "paths": int(len(vals)), "steps": grid.steps},
    )


def hoelder_tail_check(
    H: float,
    delta: float,
    grid: TimeGrid,
    N: int,
    rng: RngStream,
    radii=None,
    d: int = 1,
    streams: int = 1,
    method: str = "circulant",
    norms: np.ndarray | None = None,
    fraction: float = 0.5,
) -> RunReport:
    """One-sided check P[||B_H||_delta > r] <= M exp(-tau r^2) at each radius.

    The statistic is the largest excess of the empirical survival function over
    the bound; the check passes when it is <= 0.
    """
    t0 = time.perf_counter()
    if norms is None:
        norms = _sample_seminorms(H, delta, grid, N, d, rng.seed, streams, method)
    tau, M = fernique_tail_constants(H, delta, grid.horizon, fraction)
    if radii is None:
        radii = np.quantile(norms, np.linspace(0.05, 0.999, 20))
    radii = np.asarray(radii, dtype=float)
    emp = np.array([(norms > r).mean() for r in radii])
    bound = M * np.exp(-tau * radii**2)
    excess = emp - bound
    return RunReport(
        check_id="fernique_tail",
        statistic=float(excess.max()),
        theoretical=0.0,
        stderr=None,
        tolerance_rule=RULE_LE,
        runtime_ms=int(1000 * (time.perf_counter() - t0)),
        seed=rng.seed,
        stream_count=streams,
        details={"tau": tau, "M": M, "radii": radii, "empirical": emp, "bound": bound},
    )


# ---------------------------------------------------------------------------
# CSV


def write_paths_csv(path, grid: TimeGrid, values: np.ndarray) -> None:
    """Write paths with header ``t,x1,...,xd``; 17 significant digits.

    ``path`` may be a filename or an open text stream.  A single path (values
    of shape (steps+1, d) or (1, steps+1, d)) uses exactly that header.  Several paths get a leading ``path`` column.
    """
    v = np.asarray(values, dtype=float)
    if v.ndim == 2:
        v = v[None]
    n_paths, _, d = v.shape
    t = grid.times
    header = ["t"] + [f"x{j + 1}" for j in range(d)]
    multi = n_paths > 1
    if multi:
        header = ["path"] + header
    if hasattr(path, "write"):
        _write_rows(path, header, t, v, multi)
    else:
        with open(Path(path), "w", newline="") as fh:
            _write_rows(fh, header, t, v, multi)


def _write_rows(fh, header, t, v, multi) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(header)
    for p in range(v.shape[0]):
        for k in range(len(t)):
            row = [f"{t[k]:.17g}"] + [f"{x:.17g}" for x in v[p, k]]
            w.writerow([p, *row] if multi else row)


def read_paths_csv(path) -> tuple[TimeGrid, np.ndarray]:
    """Inverse of :func:`write_paths_csv`; returns (grid, values[paths, steps+1, d])."""
    with open(Path(path), newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    multi = header[0] == "path"
    data = np.array([[float(x) for x in r] for r in body])
    if multi:
        ids = data[:, 0].astype(int)
        data = data[:, 1:]
        n_paths = ids.max() + 1
    else:
        n_paths = 1
    per = len(data) // n_paths
    t = data[:per, 0]
    grid = TimeGrid(float(t[-1]), per - 1)
    return grid, data[:, 1:].reshape(n_paths, per, -1)
