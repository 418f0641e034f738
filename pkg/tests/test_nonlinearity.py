import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from kgblowup.nonlinearity import (
    NonlinearityModel, eval_F, eval_df, eval_f, p_upper_bound, pc1_sample_grid,
    verify_local_existence_hypotheses, verify_pc1,
)


def test_eval_f_examples():
    assert eval_f(NonlinearityModel.pure_power(3), 2.0) == 8.0
    assert eval_f(NonlinearityModel.pure_power(3), -1.0) == -1.0
    assert eval_f(NonlinearityModel.pure_power(2), -2.0) == -4.0


def test_eval_F_examples():
    m = NonlinearityModel.pure_power(3)
    assert eval_F(m, 2.0) == pytest.approx(4.0)
    assert eval_F(m, -2.0) == pytest.approx(4.0)
    assert eval_F(m, 0.0) == 0.0
    assert eval_F(NonlinearityModel.custom(lambda s: s ** 3 + s ** 5, epsilon=2), 0.0) == 0.0


def test_coefficient_b_scales_F():
    m = NonlinearityModel.pure_power(3, b=2.5)
    assert eval_F(m, 2.0) == pytest.approx(10.0)
    assert m.epsilon == 2.0


def test_f_zero_at_zero():
    for p in (1.5, 2, 3, 5):
        assert eval_f(NonlinearityModel.pure_power(p), 0.0) == 0.0


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0, 4.5])
def test_power_identity_on_sample_grid(p):
    m = NonlinearityModel.pure_power(p)
    s = pc1_sample_grid(1e3, 400)
    s = s[s != 0]
    lhs = eval_f(m, s) * s
    rhs = (p + 1) * eval_F(m, s)
    np.testing.assert_allclose(lhs, rhs, rtol=1e-12)


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_F_matches_quadrature(p):
    m = NonlinearityModel.pure_power(p)
    for s in np.linspace(-10, 10, 41):
        ref = quad(lambda x: float(eval_f(m, x)), 0.0, s, epsabs=0, epsrel=1e-13)[0]
        assert eval_F(m, s) == pytest.approx(ref, rel=1e-10, abs=1e-14)


def test_custom_F_by_quadrature():
    m = NonlinearityModel.custom(lambda s: s ** 3 + s ** 5, epsilon=2)
    assert eval_F(m, 1.5) == pytest.approx(1.5 ** 4 / 4 + 1.5 ** 6 / 6, rel=1e-10)


def test_pc1_examples():
    rep = verify_pc1(NonlinearityModel.pure_power(3, epsilon=2))
    assert rep.ok and rep.max_eps == pytest.approx(2.0, rel=1e-12)
    assert not verify_pc1(NonlinearityModel.pure_power(3, epsilon=2.5)).ok
    rep = verify_pc1(NonlinearityModel.pure_power(1.5, epsilon=0.5))
    assert rep.ok and rep.max_eps == pytest.approx(0.5, rel=1e-12)


def test_pc1_custom_sum_of_powers():
    m = NonlinearityModel.custom(lambda s: s ** 3 + s ** 5, lambda s: s ** 4 / 4 + s ** 6 / 6, epsilon=2)
    rep = verify_pc1(m, s_max=1e2)
    assert rep.ok
    assert rep.max_eps == pytest.approx(2.0, rel=1e-6)


@settings(max_examples=30, deadline=None)
@given(st.floats(min_value=1.05, max_value=8.0))
def test_auto_eps_always_passes(p):
    assert verify_pc1(NonlinearityModel.pure_power(p)).ok


def test_sample_grid_symmetric_with_zero():
    s = pc1_sample_grid(1e3, 100)
    assert 0.0 in s
    np.testing.assert_array_equal(np.sort(-s), s)
    assert s.max() == pytest.approx(1e3)


def test_eval_df():
    m = NonlinearityModel.pure_power(3)
    assert eval_df(m, 2.0) == pytest.approx(12.0)


def test_local_existence_examples():
    assert not verify_local_existence_hypotheses(NonlinearityModel.pure_power(3), 3).ok
    assert verify_local_existence_hypotheses(NonlinearityModel.pure_power(3), 1).ok
    assert verify_local_existence_hypotheses(NonlinearityModel.pure_power(2.9), 3).ok
    assert p_upper_bound(2) == np.inf and p_upper_bound(3) == 3.0


def test_invalid_models_rejected():
    with pytest.raises(ValueError):
        NonlinearityModel.pure_power(1.0)
    with pytest.raises(ValueError):
        NonlinearityModel.pure_power(3, epsilon=-1)
