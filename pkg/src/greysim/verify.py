"""Verification suites: each returns RunReports built from the library's checks.

Every check owns the stream ids 1000*check .. 1000*check + 999, so adding or
reordering suites never changes another check's randomness.
Crashes inside a check become failed reports with an ``error: ...`` rule.
"""

from __future__ import annotations

import math
import time
import traceback
from typing import Callable

import numpy as np
from scipy import stats
from scipy.integrate import quad

from . import density, fbm, sde, young
from .config import ExperimentConfig
from .fbm import TimeGrid
from .report import RULE_GT, RULE_LE, RunReport, rule_abs, rule_se
from .rng import RngStream, shard_sizes
from .sampler import _draw_y, ggbm_moment, sample_ggbm_paths, y_moment
from .specfun import GreyParams, m_wright_cdf, m_wright_pdf, mittag_leffler

__all__ = ["SUITES", "verify_suite", "run_suite"]

KS_LEVEL = 0.01
SE_K = 4.0


def _stream(cfg: ExperimentConfig, check: int, shard: int = 0) -> RngStream:
    return RngStream(cfg.seed, 1000 * check + shard)


def _sharded(cfg, check, total, draw: Callable[[RngStream, int], np.ndarray]) -> np.ndarray:
    parts = [draw(_stream(cfg, check, sid), m) for sid, m in enumerate(shard_sizes(total, cfg.streams)) if m]
    return np.concatenate(parts)


def _mean_report(check_id, values, theory, cfg, t0, **details) -> RunReport:
    values = np.asarray(values, dtype=float)
    return RunReport(
        check_id=check_id,
        statistic=float(values.mean()),
        theoretical=float(theory),
        stderr=float(values.std(ddof=1) / math.sqrt(len(values))),
        tolerance_rule=rule_se(SE_K),
        runtime_ms=int(1000 * (time.perf_counter() - t0)),
        seed=cfg.seed,
        stream_count=cfg.streams,
        details=details,
    )


def _ks_report(check_id, pvalue, cfg, t0, **details) -> RunReport:
    return RunReport(
        check_id=check_id,
        statistic=float(pvalue),
        theoretical=KS_LEVEL,
        stderr=None,
        tolerance_rule=RULE_GT,
        runtime_ms=int(1000 * (time.perf_counter() - t0)),
        seed=cfg.seed,
        stream_count=cfg.streams,
        details=details,
    )


def _params(cfg) -> GreyParams:
    return GreyParams(cfg.alpha, cfg.beta)


# ---------------------------------------------------------------------------
# special functions


def laplace_pair_error(beta: float, s: float) -> float:
    """|int_0^inf exp(-s tau) M_beta(tau) dtau - E_beta(-s)| by adaptive quadrature."""
    top = 60.0 / s + 50.0
    f = lambda tau: math.exp(-s * tau) * m_wright_pdf(beta, tau)  # noqa: E731
    val = sum(quad(f, lo, hi, epsabs=1e-14, epsrel=1e-12, limit=200)[0] for lo, hi in ((0, 1), (1, 5), (5, top)))
    return abs(val - mittag_leffler(beta, -s))


def suite_specfun(cfg) -> list[RunReport]:
    out = []
    for beta in (0.3, 0.5, 0.7, 0.9):
        t0 = time.perf_counter()
        errs = [laplace_pair_error(beta, s) for s in (0.25, 1.0, 4.0)]
        out.append(RunReport(f"laplace_pair_beta{beta:g}", max(errs), 0.0, None, rule_abs(1e-6),
                             int(1000 * (time.perf_counter() - t0)), cfg.seed, cfg.streams,
                             {"s": [0.25, 1.0, 4.0], "errors": errs}))
    t0 = time.perf_counter()
    tau = np.linspace(0.0, 10.0, 2001)
    err = float(np.max(np.abs(m_wright_pdf(0.5, tau) - np.exp(-tau * tau / 4) / math.sqrt(math.pi))))
    out.append(RunReport("m_wright_half_closed_form", err, 0.0, None, rule_abs(1e-8),
                         int(1000 * (time.perf_counter() - t0)), cfg.seed, cfg.streams))
    return out


# ---------------------------------------------------------------------------
# sampler and ggBm laws


def y_sampler_reports(beta: float, N: int, cfg, check: int) -> list[RunReport]:
    t0 = time.perf_counter()
    y = _sharded(cfg, check, N, lambda r, m: _draw_y(beta, r.generator(), m))
    out = [_mean_report(f"y_moment{n}_beta{beta:g}", y**n, y_moment(beta, n), cfg, t0) for n in range(1, 5)]
    if beta < 1.0:
        t0 = time.perf_counter()
        p = stats.kstest(y, lambda x: m_wright_cdf(beta, np.maximum(x, 0.0))).pvalue
        out.append(_ks_report(f"y_ks_beta{beta:g}", p, cfg, t0, N=N))
    return out


def suite_sampler(cfg) -> list[RunReport]:
    return y_sampler_reports(cfg.beta, cfg.samples, cfg, 10)


def ggbm_moment_reports(params: GreyParams, t: float, N: int, cfg, check: int) -> list[RunReport]:
    t0 = time.perf_counter()
    grid = TimeGrid(t, 1)

    def draw(r, m):
        paths, _ = sample_ggbm_paths(params, grid, 1, r, m, method="cholesky")
        return paths[:, -1, 0]

    x = _sharded(cfg, check, N, draw)
    return [_mean_report(f"ggbm_moment{k}", x**k, ggbm_moment(params, t, k), cfg, t0, N=N) for k in (2, 3, 4)]


def suite_moments(cfg) -> list[RunReport]:
    return ggbm_moment_reports(_params(cfg), cfg.horizon, cfg.samples, cfg, 20)


def increment_cf_reports(params: GreyParams, N: int, cfg, check: int, t=1.0, s=0.5) -> list[RunReport]:
    t0 = time.perf_counter()
    grid = TimeGrid(t, 2)  # nodes 0, t/2, t

    def draw(r, m):
        paths, _ = sample_ggbm_paths(params, grid, 1, r, m, method="cholesky")
        return paths[:, 2, 0] - paths[:, 1, 0]

    inc = _sharded(cfg, check, N, draw)
    out = []
    for u in (0.5, 1.0, 2.0):
        theory = mittag_leffler(params.beta, -(u * u) * abs(t - s) ** params.alpha / 2.0)
        out.append(_mean_report(f"increment_cf_u{u:g}", np.cos(u * inc), theory, cfg, t0, t=t, s=s))
    return out


def suite_cf(cfg) -> list[RunReport]:
    return increment_cf_reports(_params(cfg), cfg.samples, cfg, 30)


COV_PAIRS = ((1.0, 0.5), (0.75, 0.25), (1.0, 1.0), (0.5, 0.125), (0.25, 0.875))


def covariance_reports(params: GreyParams, N: int, cfg, check: int) -> list[RunReport]:
    t0 = time.perf_counter()
    grid = TimeGrid(1.0, 8)

    def draw(r, m):
        return sample_ggbm_paths(params, grid, 1, r, m)[0][:, :, 0]

    x = _sharded(cfg, check, N, draw)
    g = math.gamma(params.beta + 1.0)
    out = []
    for t, s in COV_PAIRS:
        i, j = round(t * 8), round(s * 8)
        theory = (t**params.alpha + s**params.alpha - abs(t - s) ** params.alpha) / (2.0 * g)
        out.append(_mean_report(f"covariance_t{t:g}_s{s:g}", x[:, i] * x[:, j], theory, cfg, t0, N=N))
    return out


def suite_covariance(cfg) -> list[RunReport]:
    return covariance_reports(_params(cfg), min(cfg.samples, 100_000), cfg, 40)


# ---------------------------------------------------------------------------
# fBm


def fbm_generator_reports(N: int, cfg, check: int, steps: int = 64) -> list[RunReport]:
    out = []
    grid = TimeGrid(1.0, steps)
    for h_idx, H in enumerate((0.6, 0.75, 0.9)):
        t0 = time.perf_counter()
        a = _sharded(cfg, check + h_idx, N, lambda r, m: fbm.generate_fbm_cholesky(H, grid, 1, r, size=m)[..., 0])
        b = _sharded(cfg, check + 5 + h_idx, N, lambda r, m: fbm.generate_fbm_circulant(H, grid, 1, r, size=m)[..., 0])
        for t in (0.25, 0.5, 1.0):
            k = round(t * steps)
            p = stats.ks_2samp(a[:, k], b[:, k]).pvalue
            out.append(_ks_report(f"fbm_chol_vs_circ_H{H:g}_t{t:g}", p, cfg, t0))
        for t, s in ((1.0, 0.5), (0.5, 0.25), (1.0, 1.0)):
            i, j = round(t * steps), round(s * steps)
            out.append(_mean_report(f"fbm_covariance_H{H:g}_t{t:g}_s{s:g}", b[:, i] * b[:, j],
                                    fbm.fbm_covariance(H, t, s), cfg, t0))
    return out


def suite_fbm(cfg) -> list[RunReport]:
    return fbm_generator_reports(min(cfg.samples, 20_000), cfg, 50)


def fernique_reports(N: int, steps: int, cfg, check: int, H=0.75, delta=0.6) -> list[RunReport]:
    grid = TimeGrid(1.0, steps)

    def draw(r, m):
        return np.concatenate([
            fbm.hoelder_seminorms(fbm.generate_fbm(H, grid, 1, r.substream(j), size=min(500, m - lo)), grid.dt, delta)
            for j, lo in enumerate(range(0, m, 500))
        ])

    norms = _sharded(cfg, check, N, draw)
    rng = _stream(cfg, check)
    out = [fbm.hoelder_norm_moments(H, delta, grid, k, N, rng, streams=cfg.streams, norms=norms) for k in (1, 2)]
    out.append(fbm.hoelder_tail_check(H, delta, grid, N, rng, streams=cfg.streams, norms=norms))
    return out


def suite_fernique(cfg) -> list[RunReport]:
    return fernique_reports(cfg.paths, 512, cfg, 60)


def suite_young(cfg) -> list[RunReport]:
    out = []
    for name, err, tol, _ in young.selftest(cfg.seed):
        if name.endswith("refinement"):
            # error ratio fine / coarse must drop below one
            out.append(RunReport(f"young_{name}", float(err), 1.0, None, RULE_LE, 0, cfg.seed, 1))
        else:
            out.append(RunReport(f"young_{name}", float(err), 0.0, None, rule_abs(tol), 0, cfg.seed, 1))
    return out


# ---------------------------------------------------------------------------
# SDE


def geometric_convergence_reports(n_paths: int, cfg, check: int, a=0.5, H=0.75, levels=range(8, 14)) -> list[RunReport]:
    t0 = time.perf_counter()
    levels = list(levels)
    top = 2 ** levels[-1]
    fine = TimeGrid(1.0, top)
    b = fbm.generate_fbm(H, fine, 1, _stream(cfg, check), size=n_paths)
    field = sde.geometric_field(a)
    exact = np.exp(a * b[:, -1, 0])
    errs = []
    for k in levels:
        grid = TimeGrid(1.0, 2**k)
        x = sde.euler_solve(field, sde.SolveConfig(grid, (1.0,), 1.0), b[:, :: top // 2**k])
        errs.append(float(np.mean(np.abs(x[:, -1, 0] - exact))))
    order = -float(np.polyfit(np.array(levels) * math.log(2), np.log(errs), 1)[0])
    rt = int(1000 * (time.perf_counter() - t0))
    det = {"levels": levels, "errors": errs}
    return [
        RunReport("euler_geometric_order", order, 0.4, None, RULE_GT, rt, cfg.seed, 1, det),
        RunReport("euler_geometric_error", errs[-1], 5e-3, None, RULE_LE, rt, cfg.seed, 1, det),
    ]


def suite_euler(cfg) -> list[RunReport]:
    return geometric_convergence_reports(200, cfg, 70)


def builtin_field_corpus() -> list[sde.VectorFieldSet]:
    return [
        sde.constant_field([[1.0]], [0.3]),
        sde.constant_field([[1.0, 0.2], [0.0, 0.7]], [0.1, -0.2]),
        sde.linear_bounded_field([[1.0]]),
        sde.linear_bounded_field([[1.0, 0.3], [-0.2, 0.8]]),
        sde.sine_field([[0.8]]),
        sde.sine_field([[0.8, 0.1], [0.0, 0.6]]),
        sde.geometric_field(0.5),
    ]


def substitution_reports(seeds: int, cfg, check: int, steps: int = 256) -> list[RunReport]:
    params = _params(cfg)
    if not params.alpha > 1:
        params = GreyParams(1.5, params.beta)
    grid = TimeGrid(1.0, steps)
    out = []
    for fields in builtin_field_corpus():
        t0 = time.perf_counter()
        x0 = np.full(fields.n, 0.5)
        worst = 0.0
        for k in range(seeds):
            r = sde.substitution_identity_check(fields, x0, params, grid, _stream(cfg, check, k))
            worst = max(worst, r.statistic)
        out.append(RunReport(f"substitution_{fields.name}_n{fields.n}", worst, 0.0, None, rule_abs(1e-12),
                             int(1000 * (time.perf_counter() - t0)), cfg.seed, seeds, {"seeds": seeds}))
    return out


def suite_substitution(cfg) -> list[RunReport]:
    return substitution_reports(100, cfg, 80)


def regularity_reports(N: int, cfg, check: int, H=0.75, steps=256) -> list[RunReport]:
    grid = TimeGrid(1.0, steps)
    out = []
    for i, (fields, x0) in enumerate(((sde.constant_field([[1.0]]), (0.0,)), (sde.geometric_field(0.5), (1.0,)))):
        out.append(sde.y_regularity_stat(fields, x0, H, grid, 1.0, None, N, _stream(cfg, check, i)))
        drv = fbm.generate_fbm(H, grid, 1, _stream(cfg, check, 10 + i))
        out.append(sde.y_lipschitz_pathwise(fields, x0, grid, drv, 1.0, delta=0.6))
    fields = sde.constant_field([[1.0]])
    pilot = fbm.generate_fbm(H, grid, 1, _stream(cfg, check, 20), size=200)
    C = sde.calibrate_apriori_constant(fields, (0.0,), 1.0, pilot, 0.6, grid)
    runs = fbm.generate_fbm(H, grid, 1, _stream(cfg, check, 21), size=N)
    for y in (1.0, 2.0, 4.0):
        r = sde.apriori_bound_check(fields, (0.0,), y, runs, 0.6, grid, C)
        r.check_id += f"_y{y:g}"
        r.seed = cfg.seed
        out.append(r)
    return out


def suite_regularity(cfg) -> list[RunReport]:
    return regularity_reports(500, cfg, 90)


# ---------------------------------------------------------------------------
# density


def end_to_end_ks_report(params: GreyParams, N: int, cfg, check: int, steps: int = 64) -> RunReport:
    t0 = time.perf_counter()
    grid = TimeGrid(1.0, steps)
    field = sde.constant_field([[1.0]], [0.0])

    def draw(r, m):
        xs, _ = sde.solve_grey_sde(field, (0.0,), params, grid, r, size=m)
        return xs[:, -1, 0]

    x = _sharded(cfg, check, N, draw)
    p = stats.kstest(x, lambda z: density.mixture_cdf_constant_fields(params, 1.0, 0.0, 0.0, 1.0, z)).pvalue
    return _ks_report(f"end_to_end_ks_a{params.alpha:g}_b{params.beta:g}", p, cfg, t0, N=N)


def mixture_property_reports(params: GreyParams, cfg) -> list[RunReport]:
    out = []
    t0 = time.perf_counter()
    sd = math.sqrt(1.0 / math.gamma(1.0 + params.beta)) if params.beta < 1 else 1.0
    z = np.linspace(-8 * sd, 8 * sd, 161)
    p = density.mixture_density_constant_fields(params, [[1.0]], None, None, 1.0, z)
    out.append(RunReport("mixture_positivity_8sd", float(p.min()), 0.0, None, RULE_GT,
                         int(1000 * (time.perf_counter() - t0)), cfg.seed, 1))
    t0 = time.perf_counter()
    zz = np.linspace(-80 * sd, 80 * sd, 160_001)
    mass = float(np.trapezoid(density.mixture_density_constant_fields(params, [[1.0]], None, None, 1.0, zz), zz))
    out.append(RunReport("mixture_normalization", mass, 1.0, None, rule_abs(1e-3),
                         int(1000 * (time.perf_counter() - t0)), cfg.seed, 1))
    t0 = time.perf_counter()
    pts = np.linspace(-4 * sd, 4 * sd, 17)
    a = density.mixture_density_constant_fields(params, [[1.0]], None, None, 1.0, pts)
    b = np.array([density.ggbm_joint_density(params, [1.0], [v]) for v in pts])
    out.append(RunReport("mixture_vs_joint_density", float(np.max(np.abs(a - b))), 0.0, None, rule_abs(1e-8),
                         int(1000 * (time.perf_counter() - t0)), cfg.seed, 1))
    return out


def suite_density(cfg) -> list[RunReport]:
    params = _params(cfg)
    if not params.alpha > 1:
        params = GreyParams(1.5, params.beta)
    out = mixture_property_reports(params, cfg)
    out.append(density.kde_mixture_check(params, min(cfg.samples, 100_000), _stream(cfg, 100)))
    out[-1].stream_count = 1
    out.append(end_to_end_ks_report(params, 10_000, cfg, 101))
    out.append(density.mixture_bound_dominance_check(params, 1.0, 1.0, 100_000, _stream(cfg, 102)))
    return out


def suite_tail(cfg) -> list[RunReport]:
    params = _params(cfg)
    if not params.alpha > 1:
        params = GreyParams(1.5, params.beta)
    fields = sde.constant_field([[1.0]])
    return [density.tail_bound_check(params, fields, (0.0,), 1.0, y, 100_000, _stream(cfg, 110, i))
            for i, y in enumerate((0.5, 1.0, 2.0))]


FINITENESS_GRID = [(p, beta, delta) for p in (1, 2) for beta in (0.5, 0.9) for delta in (0.55, 0.6)]


def suite_finiteness(cfg) -> list[RunReport]:
    out = []
    for p, beta, delta in FINITENESS_GRID:
        r = density.mixture_bound_finiteness(beta, p, 1.0, delta, 1.0, density.default_f_tau(delta))
        r.seed = cfg.seed
        out.append(r)
    return out


SUITES: dict[str, Callable[[ExperimentConfig], list[RunReport]]] = {
    "specfun": suite_specfun,
    "sampler": suite_sampler,
    "moments": suite_moments,
    "cf": suite_cf,
    "covariance": suite_covariance,
    "fbm": suite_fbm,
    "fernique": suite_fernique,
    "young": suite_young,
    "euler": suite_euler,
    "substitution": suite_substitution,
    "regularity": suite_regularity,
    "density": suite_density,
    "tail": suite_tail,
    "finiteness": suite_finiteness,
}


def run_suite(name: str, cfg: ExperimentConfig) -> list[RunReport]:
    try:
        return SUITES[name](cfg)
    except Exception as exc:  # a crashing check is a failed check
        msg = f"{type(exc).__name__}: {exc}"
        return [RunReport(f"{name}_crashed", math.nan, math.nan, None, f"error: {msg}", 0, cfg.seed,
                          cfg.streams, {"traceback": traceback.format_exc()})]


def verify_suite(cfg: ExperimentConfig) -> list[RunReport]:
    names = list(SUITES) if "all" in cfg.suite else list(cfg.suite)
    unknown = [n for n in names if n not in SUITES]
    if unknown:
        raise ValueError(f"unknown suite(s): {unknown}; choose from {['all', *SUITES]}")
    out = []
    for n in names:
        out.extend(run_suite(n, cfg))
    return out
