import math

import numpy as np
import pytest

from kgblowup.field import Grid
from kgblowup.functionals import action, nehari
from kgblowup.ground_state import (
    GroundStateError, dichotomy_experiment, elliptic_residual, soliton_profile,
    solve_ground_state, solve_ground_state_1d, solve_ground_state_radial,
)
from kgblowup.nonlinearity import NonlinearityModel
from kgblowup.solver import BLOWUP_DETECTED, REACHED_HORIZON, SolverConfig


def test_soliton_closed_form():
    x = np.linspace(-5, 5, 11)
    np.testing.assert_allclose(soliton_profile(3, x), math.sqrt(2) / np.cosh(x), rtol=1e-14)
    np.testing.assert_allclose(soliton_profile(2, x), 1.5 / np.cosh(x / 2) ** 2, rtol=1e-14)


def test_1d_p3_L40():
    gs = solve_ground_state_1d(3, Grid(1, 40.0, 512), tol=1e-7, tail_tol=1e-8)
    assert gs.d == pytest.approx(4 / 3, abs=1e-8)
    assert abs(nehari(gs.grid, gs.profile, NonlinearityModel.pure_power(3))) < 1e-8
    # sech^2 = 2, sech^2 tanh^2 = 2/3 (times 2 for u = sqrt2 sech) and sech^4 = 4/3
    assert gs.grid.l2_norm_sq(gs.profile) == pytest.approx(4.0, rel=1e-8)
    assert gs.grid.grad_norm_sq(gs.profile) == pytest.approx(4 / 3, rel=1e-8)


def test_1d_p2_residual():
    gs = solve_ground_state_1d(2, Grid(1, 80.0, 1024))
    assert gs.residual < 1e-8
    assert gs.center_value == pytest.approx(1.5)
    assert gs.d == pytest.approx(1.2, rel=1e-10)


def test_1d_tail_too_large():
    with pytest.raises(GroundStateError):
        solve_ground_state_1d(3, Grid(1, 10.0, 256))


def test_elliptic_residual_detects_wrong_profile():
    g = Grid(1, 60.0, 1024)
    assert elliptic_residual(g, 1.1 * soliton_profile(3, g.x), 3) > 1e-2


@pytest.fixture(scope="module")
def gs3():
    return solve_ground_state(2, Grid(3, 40.0, 128))


def test_3d_p2_shooting(gs3):
    assert 4.0 <= gs3.center_value <= 5.0
    assert gs3.nehari_rel < 1e-6
    assert gs3.residual < 1e-6
    assert gs3.d > 0


def test_3d_profile_shape(gs3):
    assert np.all(gs3.profile > 0)
    r = np.linspace(0, 15, 300)
    assert np.all(np.diff(gs3.radial(r)) <= 1e-14)


def test_3d_scaling_identity(gs3):
    g, u, p = gs3.grid, gs3.profile, 2.0
    assert gs3.d == pytest.approx((0.5 - 1 / (p + 1)) * g.integrate(np.abs(u) ** (p + 1)), rel=1e-6)
    assert gs3.d_radial == pytest.approx(gs3.d, rel=1e-5)


def test_r_max_too_small():
    with pytest.raises(GroundStateError):
        solve_ground_state_radial(2, 3, r_max=5.0)


def test_radial_out_of_range():
    with pytest.raises(ValueError):
        solve_ground_state_radial(5, 3)


def _project_to_nehari(g, u, p):
    h1 = g.l2_norm_sq(u) + g.grad_norm_sq(u)
    return u * (h1 / g.integrate(np.abs(u) ** (p + 1))) ** (1 / (p - 1))


def test_minimality_probe(gs3):
    g, p = gs3.grid, 2.0
    rng = np.random.default_rng(7)
    for _ in range(5):
        w = g.sample(lambda x, y, z: np.exp(-((x - rng.normal()) ** 2 + y ** 2 + z ** 2)))
        v = _project_to_nehari(g, gs3.profile + 0.05 * rng.normal() * w, p)
        assert action(g, v, p) >= gs3.d - 1e-6


def gradient_flow_ground_state(grid, p, tau=0.5, iters=2000, tol=1e-11):
    """Sobolev (H^1) gradient descent on J, projected back onto the Nehari manifold."""
    denom = 1.0 + grid.k_sq_half
    u = np.exp(-grid.r ** 2)
    u = _project_to_nehari(grid, u, p)
    d_old = math.inf
    for _ in range(iters):
        grad = u - np.fft.irfftn(np.fft.rfftn(np.abs(u) ** (p - 1) * u) / denom, s=grid.shape, axes=grid.axes)
        u = _project_to_nehari(grid, u - tau * grad, p)
        d = action(grid, u, p)
        if abs(d - d_old) < tol * d:
            break
        d_old = d
    return d


def test_2d_p3_two_methods_agree():
    grid = Grid(2, 40.0, 256)
    shoot = solve_ground_state(3, grid)
    flow = gradient_flow_ground_state(grid, 3.0)
    assert shoot.d == pytest.approx(flow, rel=1e-4)
    assert shoot.d == pytest.approx(5.8504, rel=1e-4)


def test_dichotomy_short_run():
    gs = solve_ground_state_1d(3, Grid(1, 60.0, 512), tol=1e-7, tail_tol=1e-8)
    rows = dichotomy_experiment(gs, [1.2, 0.5], SolverConfig(t_end=3.0), jobs=2)
    assert [r.outcome for r in rows] == [BLOWUP_DETECTED, REACHED_HORIZON]
    assert rows[0].E0 == pytest.approx(1.0752) and rows[0].I0 < 0
    assert rows[1].E0 == pytest.approx(0.58333333333) and rows[1].I0 > 0
    with pytest.raises(ValueError):
        dichotomy_experiment(gs, [1.0], SolverConfig(t_end=1.0))
