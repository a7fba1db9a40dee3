"""Pathwise Young (Riemann-Stieltjes) integrals and p-variation on a uniform grid."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["IntegralResult", "young_integral", "p_variation", "selftest"]


@dataclass(frozen=True)
class IntegralResult:
    """Left-point Riemann sum and its value on the grid coarsened by two.

    ``richardson_pair`` is (value at mesh 2h, value at mesh h); the gap between
    them is the convergence diagnostic.  It is None when the grid has an odd
    number of steps.
    """

    value: np.ndarray | float
    mesh: float
    richardson_pair: tuple | None

    @property
    def refinement_gap(self) -> float | None:
        if self.richardson_pair is None:
            return None
        coarse, fine = self.richardson_pair
        return float(np.max(np.abs(np.asarray(fine) - np.asarray(coarse))))


def _left_sum(f: np.ndarray, g: np.ndarray):
    dg = np.diff(g, axis=0)
    if f.ndim == 1 and g.ndim == 1:
        return float(np.dot(f[:-1], dg))
    # vector-valued: f (n+1, m) or (n+1,), g (n+1, m) -> componentwise sums
    return (f[:-1] * dg if f.ndim == g.ndim else f[:-1, None] * dg).sum(axis=0)


def young_integral(f_values, g_values, mesh: float = 1.0) -> IntegralResult:
    """sum_k f(t_k) (g(t_{k+1}) - g(t_k)) over the grid.

    ``f_values`` and ``g_values`` share the grid (same leading length).  The
    sum converges to the Young integral when the Hoelder exponents of f and g
    add up to more than 1.
    """
    f = np.asarray(f_values, dtype=float)
    g = np.asarray(g_values, dtype=float)
    if f.shape[0] != g.shape[0]:
        raise ValueError(f"length mismatch: {f.shape[0]} vs {g.shape[0]}")
    if f.shape[0] < 2:
        raise ValueError("need at least two grid points")
    value = _left_sum(f, g)
    steps = f.shape[0] - 1
    pair = None
    if steps % 2 == 0:
        pair = (_left_sum(f[::2], g[::2]), value)
    return IntegralResult(value, mesh, pair)


def p_variation(values, p: float, levels: int | None = None) -> float:
    """Lower estimate of the p-variation of a sampled path.

    Evaluates sum |increment|^p on the mesh partition and on its dyadic
    coarsenings and returns the largest.  ``values`` is (n+1,) or (n+1, d);
    vector increments use the Euclidean norm.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    v = np.asarray(values, dtype=float)
    if v.ndim == 1:
        v = v[:, None]
    best = 0.0
    step = 1
    n = v.shape[0] - 1
    level = 0
    while step <= n:
        idx = np.arange(0, n + 1, step)
        if idx[-1] != n:
            idx = np.append(idx, n)
        inc = np.sqrt((np.diff(v[idx], axis=0) ** 2).sum(axis=1))
        best = max(best, float((inc**p).sum()))
        step *= 2
        level += 1
        if levels is not None and level >= levels:
            break
    return best


def selftest(seed: int = 0) -> list[tuple[str, float, float, bool]]:
    """Deterministic checks as (name, error, tolerance, ok).

    The two refinement entries compare the error on the full grid with the
    error on the grid coarsened by two (tolerance 0: the ratio must be < 1).
    """
    from .fbm import TimeGrid, generate_fbm_circulant
    from .rng import RngStream

    out = []
    n = 2**12
    t = np.linspace(0.0, 1.0, n + 1)
    r = young_integral(t, t**2, 1.0 / n)
    err_fine, err_coarse = (abs(v - 2 / 3) for v in (r.value, r.richardson_pair[0]))
    out.append(("smooth_t_dt2", err_fine, 1e-3, bool(err_fine <= 1e-3)))
    out.append(("smooth_refinement", err_fine / err_coarse, 1.0, bool(err_fine < err_coarse)))
    r1 = young_integral(np.ones_like(t), np.sin(t))
    e1 = abs(r1.value - np.sin(1.0))
    out.append(("constant_integrand", e1, 1e-12, bool(e1 <= 1e-12)))
    grid = TimeGrid(1.0, 2**14)
    b = generate_fbm_circulant(0.75, grid, 1, RngStream(seed)).values[:, 0]
    r2 = young_integral(b, b, grid.dt)
    exact = (b[-1] ** 2 - b[0] ** 2) / 2
    err_fine, err_coarse = (abs(v - exact) for v in (r2.value, r2.richardson_pair[0]))
    out.append(("fbm_b_db_H0.75", err_fine, 5e-3, bool(err_fine <= 5e-3)))
    out.append(("fbm_refinement", err_fine / err_coarse, 1.0, bool(err_fine < err_coarse)))
    pv = abs(p_variation(t, 1.0) - 1.0)
    out.append(("one_variation_of_t", pv, 1e-12, bool(pv <= 1e-12)))
    return out
