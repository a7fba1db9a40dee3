import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from greysim import sde
from greysim.fbm import SamplePath, TimeGrid, generate_fbm, hoelder_seminorms
from greysim.rng import RngStream
from greysim.sampler import sample_ggbm_paths
from greysim.specfun import DomainError, GreyParams

GRID = TimeGrid(1.0, 64)


def corpus():
    return [
        sde.constant_field([[1.0]], [0.3]),
        sde.constant_field([[1.0, 0.2], [0.0, 0.5]], [0.1, -0.1]),
        sde.linear_bounded_field([[0.8]]),
        sde.linear_bounded_field([[1.0, 0.3], [-0.2, 0.7]]),
        sde.sine_field([[1.0]]),
        sde.sine_field([[0.5, 0.1], [0.2, 0.9]], a=0.3, c=-0.4),
        sde.geometric_field(0.5, 0.1),
    ]


def test_smooth_cutoff():
    r = np.array([0.0, 0.5, 1.0, 1.5, 2.0, 5.0])
    c = sde.smooth_cutoff(r)
    assert np.array_equal(c[[0, 1, 2, 4, 5]], [1, 1, 1, 0, 0])
    assert 0 < c[3] < 1
    assert np.all(np.diff(sde.smooth_cutoff(np.linspace(0, 3, 200))) <= 0)


def test_flags_and_factory():
    assert sde.constant_field([[1.0, 0.0]]).flags["H4"]
    assert not sde.constant_field([[1.0], [1.0]]).flags["H4"]
    assert not sde.geometric_field().flags["H4"]
    f = sde.make_field("sine", sigma=[[1.0]], a=0.2)
    assert f.name == "sine" and f.params["a"] == 0.2
    with pytest.raises(ValueError):
        sde.make_field("nope")
    with pytest.raises(ValueError):
        sde.linear_bounded_field([[1.0]], c=1.0)


def test_solve_config_validation():
    with pytest.raises(ValueError):
        sde.SolveConfig(GRID, (0.0,), y=0.0)
    with pytest.raises(ValueError):
        sde.SolveConfig(GRID, (0.0,), method="milstein")


def test_zero_fields_constant_path():
    f = sde._zero_field(2, 2)
    driver = generate_fbm(0.75, GRID, 2, RngStream(0))
    x = sde.euler_solve(f, sde.SolveConfig(GRID, (1.0, -2.0), 3.0), driver)
    assert np.all(x.values == np.array([1.0, -2.0]))


@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(0.1, 4), st.floats(-1, 1))
def test_affine_exact_with_smooth_driver(sigma, b, y, x0):
    t = GRID.times
    f = sde.constant_field([[sigma]], [b])
    x = sde.euler_solve(f, sde.SolveConfig(GRID, (x0,), y), SamplePath(GRID, t[:, None]))
    assert np.allclose(x.values[:, 0], x0 + b * t + math.sqrt(y) * sigma * t, atol=1e-12)


def test_driver_validation():
    f = sde.constant_field([[1.0]])
    cfg = sde.SolveConfig(GRID, (0.0,))
    with pytest.raises(ValueError):
        sde.euler_solve(f, cfg, generate_fbm(0.75, TimeGrid(1.0, 32), 1, RngStream(0)))
    with pytest.raises(ValueError):
        sde.euler_solve(f, cfg, np.zeros((1, 65, 2)))


def test_divergence_reports_step():
    f = sde.constant_field([[10.0]])
    b = np.zeros((65, 1))
    b[3:] = 1e308
    with pytest.raises(sde.SolverDivergence) as err:
        sde.euler_solve(f, sde.SolveConfig(GRID, (0.0,)), b)
    assert err.value.step == 3


def test_deterministic():
    f = sde.sine_field([[1.0]])
    d = generate_fbm(0.75, GRID, 1, RngStream(1))
    cfg = sde.SolveConfig(GRID, (0.2,), 1.5)
    assert np.array_equal(sde.euler_solve(f, cfg, d).values, sde.euler_solve(f, cfg, d).values)


def test_geometric_strong_order():
    a, H = 0.5, 0.75
    fine = TimeGrid(1.0, 2**12)
    b = generate_fbm(H, fine, 1, RngStream(2), size=40)
    f = sde.geometric_field(a)
    exact = np.exp(a * b[:, -1, 0])
    levels = [2**k for k in range(6, 12)]
    errs = []
    for n in levels:
        g = TimeGrid(1.0, n)
        x = sde.euler_solve(f, sde.SolveConfig(g, (1.0,)), b[:, :: fine.steps // n])
        errs.append(np.mean(np.abs(x[:, -1, 0] - exact)))
    order = -np.polyfit(np.log(levels), np.log(errs), 1)[0]
    assert order >= 0.4


def test_solve_grey_sde_constant_is_scaled_ggbm():
    p = GreyParams(1.5, 0.6)
    f = sde.constant_field([[2.0]], [0.5])
    xs, y = sde.solve_grey_sde(f, [1.0], p, GRID, RngStream(4), size=5)
    paths, y2 = sample_ggbm_paths(p, GRID, 1, RngStream(4), 5)
    assert np.array_equal(y, y2)
    assert np.allclose(xs - 1.0 - 0.5 * GRID.times[None, :, None], 2.0 * paths, atol=1e-12)
    one = sde.solve_grey_sde(f, [1.0], p, GRID, RngStream(4))
    assert one.meta["y"] == sde.solve_grey_sde(f, [1.0], p, GRID, RngStream(4), size=1)[1][0]


def test_solve_grey_sde_zero_diffusion_is_ode_flow():
    f = sde.linear_bounded_field([[0.0]], a=1.0)
    outs = [sde.solve_grey_sde(f, [1.0], GreyParams(1.5, b), GRID, RngStream(s)).values
            for b, s in ((0.3, 1), (0.9, 2))]
    assert np.array_equal(outs[0], outs[1])
    # explicit Euler for x' = -tanh(x)
    x = 1.0
    for _ in range(GRID.steps):
        x = x - math.tanh(x) * GRID.dt
    assert outs[0][-1, 0] == pytest.approx(x, abs=1e-14)


def test_solve_grey_sde_regime():
    with pytest.raises(DomainError):
        sde.solve_grey_sde(sde.constant_field([[1.0]]), [0.0], GreyParams(0.8, 0.5), GRID, RngStream(0))


@pytest.mark.parametrize("idx", range(7))
def test_substitution_identity(idx):
    f = corpus()[idx]
    x0 = np.full(f.n, 0.3)
    for seed in range(5):
        r = sde.substitution_identity_check(f, x0, GreyParams(1.5, 0.6), GRID, RngStream(seed), size=3)
        assert r.passed, r.statistic


def test_substitution_y_one_matches_plain_solve():
    f = sde.sine_field([[1.0]])
    d = generate_fbm(0.75, GRID, 1, RngStream(6), size=2)
    cfg = sde.SolveConfig(GRID, (0.1,))
    assert np.array_equal(sde.euler_solve(f, cfg, d, y=1.0), sde.euler_solve(f, cfg, 1.0 * d, y=None))
    r = sde.substitution_identity_check(f, [0.1], GreyParams(1.5, 0.6), GRID, RngStream(6), y=1.0)
    assert r.statistic == 0.0


def test_y_lipschitz_trivial_cases():
    d = generate_fbm(0.75, GRID, 1, RngStream(0))
    r = sde.y_lipschitz_pathwise(sde.sine_field([[1.0]]), [0.0], GRID, d, 1.0, [1.0])
    assert r.details["norm_differences"] == [0.0]
    zero = sde.linear_bounded_field([[0.0]])
    r = sde.y_lipschitz_pathwise(zero, [0.5], GRID, d, 1.0)
    assert r.passed and r.statistic == 1.0


def test_y_lipschitz_closed_forms():
    # constant field: X(y) - X(y~) = (sqrt(y) - sqrt(y~)) sigma B exactly
    d = generate_fbm(0.75, GRID, 1, RngStream(3))
    r = sde.y_lipschitz_pathwise(sde.constant_field([[2.0]]), [0.0], GRID, d, 1.0, delta=0.6)
    expect = 2.0 * (np.abs(d.values).max() + hoelder_seminorms(d.values, GRID.dt, 0.6))
    assert np.allclose(r.details["ratios"], expect, rtol=1e-10)
    g = sde.y_lipschitz_pathwise(sde.geometric_field(0.5), [1.0], GRID, d, 1.0)
    assert g.passed


def test_y_regularity_constant_field_closed_form():
    N = 300
    sigma = 1.5
    r = sde.y_regularity_stat(sde.constant_field([[sigma]]), [0.0], 0.75, GRID, 1.0, None, N, RngStream(8))
    b = generate_fbm(0.75, GRID, 1, RngStream(8), size=N)
    s4 = np.mean(np.abs(b[..., 0]).max(axis=1) ** 4)
    for yt, m in zip(r.details["y_tilde"], r.details["fourth_moment"]):
        assert m == pytest.approx((abs(1 - math.sqrt(yt)) * sigma) ** 4 * s4, rel=1e-9)
    assert r.passed


def test_apriori_zero_fields_and_constant():
    drivers = generate_fbm(0.75, GRID, 1, RngStream(1), size=50)
    z = sde.apriori_bound_check(sde._zero_field(), [2.0], 1.0, drivers, 0.6, GRID, 0.0)
    assert z.statistic == pytest.approx(0.0, abs=1e-15) and z.passed
    f = sde.constant_field([[1.0]])
    C = sde.calibrate_apriori_constant(f, [0.0], 1.0, drivers[:25], 0.6, GRID)
    assert C > 0
    assert sde.apriori_bound_check(f, [0.0], 1.0, drivers[:25], 0.6, GRID, C).passed
    # y^(1/(2 delta)) grows faster than sqrt(y): larger y keeps the margin
    assert sde.apriori_bound_check(f, [0.0], 4.0, drivers[:25], 0.6, GRID, C).statistic < 0
