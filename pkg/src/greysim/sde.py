"""Euler scheme for SDEs driven by sqrt(y) B_H and the grey-noise substitution pipeline.

The frozen-parameter equation is

    X_t(y) = x0 + sqrt(y) sum_j int_0^t V_j(X_s(y)) dB_H^j(s) + int_0^t V_0(X_s(y)) ds,

discretized with left-point (Young/Riemann) sums.  Substituting a draw of
Y_beta for y gives a solution of the equation driven by ggBm.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .fbm import SamplePath, TimeGrid, generate_fbm, hoelder_seminorms
from .report import RULE_LE, RunReport, rule_abs
from .rng import RngStream
from .sampler import _draw_y
from .specfun import GreyParams

__all__ = [
    "VectorFieldSet",
    "SolveConfig",
    "BUILTIN_FIELDS",
    "constant_field",
    "linear_bounded_field",
    "sine_field",
    "geometric_field",
    "make_field",
    "smooth_cutoff",
    "euler_solve",
    "solve_grey_sde",
    "substitution_identity_check",
    "y_lipschitz_pathwise",
    "y_regularity_stat",
    "calibrate_apriori_constant",
    "apriori_bound_check",
    "SolverDivergence",
]


class SolverDivergence(FloatingPointError):
    """The Euler iterate left the finite range."""

    def __init__(self, step: int):
        super().__init__(f"non-finite state at step {step}")
        self.step = step


@dataclass(frozen=True)
class VectorFieldSet:
    """Drift V0: R^n -> R^n and diffusion V: R^n -> R^(n x d).

    Both callables act on arrays of shape (..., n).  ``flags`` records which of
    the smoothness / non-degeneracy hypotheses H1, H2, H4, H5 the field set is
    known to satisfy; they are assigned by hand for each built-in.
    ``drift_lipschitz`` is the Lipschitz constant of V0 and ``diffusion_sup``
    is sup_x ||V(x)||_2 (None when not known in closed form).
    """

    name: str
    n: int
    d: int
    drift: Callable[[np.ndarray], np.ndarray]
    diffusion: Callable[[np.ndarray], np.ndarray]
    flags: dict[str, bool] = field(default_factory=dict)
    drift_lipschitz: float | None = None
    diffusion_sup: float | None = None
    params: dict = field(default_factory=dict)


def smooth_cutoff(r):
    """C-infinity function equal to 1 on [0, 1] and 0 on [2, inf)."""
    r = np.asarray(r, dtype=float)

    def psi(s):
        with np.errstate(divide="ignore", over="ignore"):
            return np.where(s > 0, np.exp(-1.0 / np.where(s > 0, s, 1.0)), 0.0)

    a, b = psi(2.0 - r), psi(r - 1.0)
    return a / (a + b)


def constant_field(sigma, b=None) -> VectorFieldSet:
    """V0(x) = b, V(x) = sigma (n x d)."""
    sigma = np.atleast_2d(np.asarray(sigma, dtype=float))
    n, d = sigma.shape
    b = np.zeros(n) if b is None else np.broadcast_to(np.asarray(b, dtype=float), (n,)).copy()

    def drift(x):
        return np.broadcast_to(b, np.shape(x)).copy()

    def diffusion(x):
        return np.broadcast_to(sigma, np.shape(x)[:-1] + (n, d)).copy()

    full_rank = np.linalg.matrix_rank(sigma) == n
    return VectorFieldSet(
        "constant", n, d, drift, diffusion,
        flags={"H1": True, "H2": True, "H4": bool(full_rank), "H5": True},
        drift_lipschitz=0.0,
        diffusion_sup=float(np.linalg.norm(sigma, 2)),
        params={"sigma": sigma.tolist(), "b": b.tolist()},
    )


def linear_bounded_field(sigma, a: float = 0.5, c: float = 0.5) -> VectorFieldSet:
    """Saturating linear fields: V0(x) = -a tanh(x), V_ij(x) = sigma_ij (1 + c tanh(x_i)).

    With |c| < 1 and sigma of full row rank the diffusion spans R^n everywhere.
    """
    sigma = np.atleast_2d(np.asarray(sigma, dtype=float))
    n, d = sigma.shape
    if abs(c) >= 1:
        raise ValueError("need |c| < 1")

    def drift(x):
        return -a * np.tanh(x)

    def diffusion(x):
        return (1.0 + c * np.tanh(x))[..., :, None] * sigma

    return VectorFieldSet(
        "linear_bounded", n, d, drift, diffusion,
        flags={"H1": True, "H2": True, "H4": bool(np.linalg.matrix_rank(sigma) == n), "H5": False},
        drift_lipschitz=abs(a),
        diffusion_sup=float((1 + abs(c)) * np.linalg.norm(sigma, 2)),
        params={"sigma": sigma.tolist(), "a": a, "c": c},
    )


def sine_field(sigma, a: float = 0.5, c: float = 0.5) -> VectorFieldSet:
    """V0(x) = a sin(x), V_ij(x) = sigma_ij (1 + c sin(x_i)), componentwise."""
    sigma = np.atleast_2d(np.asarray(sigma, dtype=float))
    n, d = sigma.shape
    if abs(c) >= 1:
        raise ValueError("need |c| < 1")

    def drift(x):
        return a * np.sin(x)

    def diffusion(x):
        return (1.0 + c * np.sin(x))[..., :, None] * sigma

    return VectorFieldSet(
        "sine", n, d, drift, diffusion,
        flags={"H1": True, "H2": True, "H4": bool(np.linalg.matrix_rank(sigma) == n), "H5": False},
        drift_lipschitz=abs(a),
        diffusion_sup=float((1 + abs(c)) * np.linalg.norm(sigma, 2)),
        params={"sigma": sigma.tolist(), "a": a, "c": c},
    )


def geometric_field(a: float = 0.5, mu: float = 0.0, radius: float = 1e3) -> VectorFieldSet:
    """Scalar V(x) = a x chi(|x|/R), V0(x) = mu x chi(|x|/R) with a smooth cutoff chi.

    Inside the ball |x| <= R the pathwise solution with mu = 0 is
    x0 exp(a sqrt(y) B_H(t)).
    """

    def drift(x):
        return mu * x * smooth_cutoff(np.abs(x) / radius)

    def diffusion(x):
        return (a * x * smooth_cutoff(np.abs(x) / radius))[..., :, None]

    return VectorFieldSet(
        "geometric", 1, 1, drift, diffusion,
        flags={"H1": True, "H2": True, "H4": False, "H5": True},
        drift_lipschitz=None,
        diffusion_sup=None,
        params={"a": a, "mu": mu, "radius": radius},
    )


def _zero_field(n: int = 1, d: int = 1) -> VectorFieldSet:
    return constant_field(np.zeros((n, d)), np.zeros(n))


BUILTIN_FIELDS = {
    "constant": constant_field,
    "linear_bounded": linear_bounded_field,
    "sine": sine_field,
    "geometric": geometric_field,
}


def make_field(name: str, **params) -> VectorFieldSet:
    try:
        factory = BUILTIN_FIELDS[name]
    except KeyError:
        raise ValueError(f"unknown field {name!r}; choose from {sorted(BUILTIN_FIELDS)}") from None
    return factory(**params)


@dataclass(frozen=True)
class SolveConfig:
    grid: TimeGrid
    x0: tuple
    y: float | None = 1.0
    method: str = "euler"

    def __post_init__(self):
        if self.y is not None and np.any(np.asarray(self.y) <= 0):
            raise ValueError("y must be positive")
        if self.method != "euler":
            raise ValueError("only the euler method is implemented")


def euler_solve(fields: VectorFieldSet, cfg: SolveConfig, driver, y=None):
    """Left-point Euler scheme X_{k+1} = X_k + V0(X_k) dt + sqrt(y) V(X_k) dB_k.

    ``driver`` is a :class:`SamplePath` (returns a SamplePath) or an array of
    shape (paths, steps+1, d) (returns (paths, steps+1, n)).  ``y`` overrides
    ``cfg.y`` and may be a per-path array.  Raises :class:`SolverDivergence`
    with the step index on overflow.
    """
    single = isinstance(driver, SamplePath)
    if single:
        if driver.grid != cfg.grid:
            raise ValueError("driver grid differs from solver grid")
        b = driver.values[None]
    else:
        b = np.asarray(driver, dtype=float)
        if b.ndim == 2:
            b = b[None]
    if b.shape[1] != cfg.grid.steps + 1:
        raise ValueError("driver length does not match the grid")
    if b.shape[2] != fields.d:
        raise ValueError(f"driver dimension {b.shape[2]} != field dimension {fields.d}")
    y = cfg.y if y is None else y
    y = 1.0 if y is None else y
    sy = np.sqrt(np.broadcast_to(np.asarray(y, dtype=float), (b.shape[0],)))[:, None]
    db = np.diff(b, axis=1)
    dt = cfg.grid.dt
    x = np.broadcast_to(np.asarray(cfg.x0, dtype=float), (b.shape[0], fields.n)).copy()
    out = np.empty((b.shape[0], cfg.grid.steps + 1, fields.n))
    out[:, 0] = x
    for k in range(cfg.grid.steps):
        noise = np.einsum("pnd,pd->pn", fields.diffusion(x), db[:, k])
        x = x + fields.drift(x) * dt + sy * noise
        if not np.all(np.isfinite(x)):
            raise SolverDivergence(k + 1)
        out[:, k + 1] = x
    return SamplePath(cfg.grid, out[0]) if single else out


def solve_grey_sde(
    fields: VectorFieldSet,
    x0,
    params: GreyParams,
    grid: TimeGrid,
    rng: RngStream,
    size: int | None = None,
    method: str = "circulant",
):
    """Draw Y_beta and an fBm with H = alpha/2, then solve with y = Y_beta.

    With ``size=None`` returns a SamplePath whose ``meta['y']`` holds the draw;
    otherwise returns (paths[size, steps+1, n], y[size]).  Uses the same
    substreams as :func:`greysim.sampler.sample_ggbm_paths`, so for constant
    fields X - x0 - b t is exactly the ggBm path of that call times sigma.
    """
    params.require_sde_regime()
    m = 1 if size is None else size
    y = _draw_y(params.beta, rng.substream(0).generator(), m)
    b = generate_fbm(params.hurst, grid, fields.d, rng.substream(1), size=m, method=method)
    cfg = SolveConfig(grid, tuple(np.atleast_1d(x0)), 1.0)
    xs = euler_solve(fields, cfg, b, y=y)
    if size is None:
        return SamplePath(grid, xs[0], meta={"y": float(y[0])})
    return xs, y


def _rel_discrepancy(a: np.ndarray, b: np.ndarray) -> float:
    scale = max(float(np.max(np.abs(b))), 1e-300)
    return float(np.max(np.abs(a - b))) / scale


def substitution_identity_check(
    fields: VectorFieldSet,
    x0,
    params: GreyParams,
    grid: TimeGrid,
    rng: RngStream,
    y: float | None = None,
    size: int = 1,
) -> RunReport:
    """Solve once with driver sqrt(y) B_H and once with B_H and factor sqrt(y).

    The two discretizations agree algebraically; the report's statistic is the
    relative max pathwise discrepancy (pass at <= 1e-12).
    """
    params.require_sde_regime()
    t0 = time.perf_counter()
    if y is None:
        ys = _draw_y(params.beta, rng.substream(0).generator(), size)
    else:
        ys = np.full(size, float(y))
    b = generate_fbm(params.hurst, grid, fields.d, rng.substream(1), size=size)
    cfg = SolveConfig(grid, tuple(np.atleast_1d(x0)), 1.0)
    driver_scaled = euler_solve(fields, cfg, np.sqrt(ys)[:, None, None] * b, y=1.0)
    coef_scaled = euler_solve(fields, cfg, b, y=ys)
    disc = _rel_discrepancy(driver_scaled, coef_scaled)
    return RunReport(
        check_id=f"substitution_{fields.name}",
        statistic=disc,
        theoretical=0.0,
        stderr=None,
        tolerance_rule=rule_abs(1e-12),
        runtime_ms=int(1000 * (time.perf_counter() - t0)),
        seed=rng.seed,
        stream_count=1,
        details={"y": ys, "field": fields.name},
    )


def _hoelder_total(values: np.ndarray, dt: float, delta: float) -> np.ndarray:
    # values (paths, steps+1, n): sup norm + discrete delta-seminorm
    sup = np.sqrt((values**2).sum(axis=2)).max(axis=1)
    return sup + hoelder_seminorms(values, dt, delta)


def y_lipschitz_pathwise(
    fields: VectorFieldSet,
    x0,
    grid: TimeGrid,
    driver,
    y: float,
    y_tilde: Sequence[float] | None = None,
    delta: float = 0.6,
    max_spread: float = 10.0,
) -> RunReport:
    """Ratio ||X(y) - X(y~)||_delta / |sqrt(y) - sqrt(y~)| for a fixed driver.

    ``y_tilde`` defaults to y (1 + 2^-j), j = 1..6.  The statistic is the
    spread max/min of the ratios along the sequence; the check passes when it
    is at most ``max_spread``.  Identically zero differences count as spread 1.
    """
    t0 = time.perf_counter()
    if y_tilde is None:
        y_tilde = [y * (1 + 2.0**-j) for j in range(1, 7)]
    b = driver.values[None] if isinstance(driver, SamplePath) else np.asarray(driver)[None]
    cfg = SolveConfig(grid, tuple(np.atleast_1d(x0)), y)
    base = euler_solve(fields, cfg, b, y=y)
    ratios, diffs = [], []
    for yt in y_tilde:
        other = euler_solve(fields, cfg, b, y=yt)
        nd = float(_hoelder_total(other - base, grid.dt, delta)[0])
        diffs.append(nd)
        gap = abs(math.sqrt(y) - math.sqrt(yt))
        ratios.append(nd / gap if gap > 0 else 0.0)
    ratios = np.array(ratios)
    pos = ratios[ratios > 0]
    if len(pos) == 0:
        spread = 1.0
    elif len(pos) < len(ratios):
        spread = math.inf
    else:
        spread = float(pos.max() / pos.min())
    return RunReport(
        check_id=f"y_lipschitz_{fields.name}",
        statistic=spread,
        theoretical=max_spread,
        stderr=None,
        tolerance_rule=RULE_LE,
        runtime_ms=int(1000 * (time.perf_counter() - t0)),
        details={
            "y": y,
            "y_tilde": list(y_tilde),
            "ratios": ratios,
            "norm_differences": diffs,
            "driver_seminorm": float(hoelder_seminorms(b[0], grid.dt, delta)),
        },
    )


def y_regularity_stat(
    fields: VectorFieldSet,
    x0,
    H: float,
    grid: TimeGrid,
    y: float,
    y_tilde: Sequence[float] | None,
    N: int,
    rng: RngStream,
    max_growth: float = 10.0,
    method: str = "circulant",
) -> RunReport:
    """Monte Carlo of E sup_s |X_s(y) - X_s(y~)|^4 / |y - y~|^2 along y~ -> y.

    ``y_tilde`` defaults to y (1 + 2^-j), j = 1..5; the first entry is the
    largest gap.  The statistic is max_j ratio_j / ratio_0 and must stay below
    ``max_growth``.
    """
    t0 = time.perf_counter()
    if y_tilde is None:
        y_tilde = [y * (1 + 2.0**-j) for j in range(1, 6)]
    b = generate_fbm(H, grid, fields.d, rng, size=N, method=method)
    cfg = SolveConfig(grid, tuple(np.atleast_1d(x0)), y)
    base = euler_solve(fields, cfg, b, y=y)
    est, se, ratios = [], [], []
    for yt in y_tilde:
        other = euler_solve(fields, cfg, b, y=yt)
        sup4 = (np.sqrt(((other - base) ** 2).sum(axis=2)).max(axis=1)) ** 4
        m = float(sup4.mean())
        est.append(m)
        se.append(float(sup4.std(ddof=1) / math.sqrt(N)))
        ratios.append(m / (y - yt) ** 2)
    ratios = np.array(ratios)
    growth = float(ratios.max() / ratios[0]) if ratios[0] > 0 else (0.0 if ratios.max() == 0 else math.inf)
    return RunReport(
        check_id=f"y_regularity_{fields.name}",
        statistic=growth,
        theoretical=max_growth,
        stderr=None,
        tolerance_rule=RULE_LE,
        runtime_ms=int(1000 * (time.perf_counter() - t0)),
        seed=rng.seed,
        details={"y": y, "y_tilde": list(y_tilde), "fourth_moment": est, "stderr": se, "ratios": ratios},
    )


def _apriori_terms(fields, x0, y, drivers, delta, grid):
    cfg = SolveConfig(grid, tuple(np.atleast_1d(x0)), y)
    xs = euler_solve(fields, cfg, drivers, y=y)
    lhs = np.sqrt((xs**2).sum(axis=2)).max(axis=1)
    semi = hoelder_seminorms(drivers, grid.dt, delta)
    scale = y ** (1.0 / (2.0 * delta)) * grid.horizon * semi ** (1.0 / delta)
    return lhs, scale


def calibrate_apriori_constant(fields, x0, y, drivers, delta, grid, safety: float = 2.0) -> float:
    """Smallest C making sup|X| <= |x0| + y^(1/2delta) C T ||B||^(1/delta) on pilot drivers, times ``safety``."""
    lhs, scale = _apriori_terms(fields, x0, y, drivers, delta, grid)
    excess = lhs - float(np.linalg.norm(np.atleast_1d(x0)))
    with np.errstate(divide="ignore", invalid="ignore"):
        c = np.where(scale > 0, excess / scale, 0.0)
    return safety * max(float(np.max(c)), 0.0)


def apriori_bound_check(fields, x0, y, drivers, delta, grid, C: float) -> RunReport:
    """Check sup_t |X_t(y)| <= |x0| + y^(1/(2 delta)) C T ||B_H||_delta^(1/delta) on every driver.

    The statistic is the largest violation (<= 0 passes).
    """
    t0 = time.perf_counter()
    drivers = np.asarray(drivers)
    if drivers.ndim == 2:
        drivers = drivers[None]
    lhs, scale = _apriori_terms(fields, x0, y, drivers, delta, grid)
    rhs = float(np.linalg.norm(np.atleast_1d(x0))) + C * scale
    viol = lhs - rhs
    return RunReport(
        check_id=f"apriori_{fields.name}",
        statistic=float(viol.max()),
        theoretical=0.0,
        stderr=None,
        tolerance_rule=RULE_LE,
        runtime_ms=int(1000 * (time.perf_counter() - t0)),
        details={"C": C, "y": y, "delta": delta, "paths": int(len(lhs))},
    )
