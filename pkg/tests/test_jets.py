import numpy as np
import pytest

from nijenhuis.errors import DimensionError, DomainError
from nijenhuis.jets import (
    DiffConfig,
    Jet2,
    fd_hessian,
    fd_jacobian,
    jet_combine,
    jet_cos,
    jet_div,
    jet_exp,
    jet_lift_var,
    jet_log,
    jet_pow,
    jet_sin,
)


def vars_at(p):
    return [jet_lift_var(i, p) for i in range(len(p))]


def test_lift_var_is_coordinate_function():
    x, y = vars_at([0.3, -2.0])
    assert x.value == 0.3 and list(x.grad) == [1.0, 0.0] and not x.hess.any()
    assert list(y.grad) == [0.0, 1.0]


def test_lift_var_out_of_range():
    with pytest.raises(DimensionError):
        jet_lift_var(2, [0.0, 1.0])


def test_product_rule():
    x, y = vars_at([2.0, 3.0])
    f = x * x * y  # x^2 y
    assert f.value == pytest.approx(12.0)
    np.testing.assert_allclose(f.grad, [12.0, 4.0])
    np.testing.assert_allclose(f.hess, [[6.0, 4.0], [4.0, 0.0]])


def test_quotient_rule_and_exact_value():
    x, y = vars_at([1.0, 3.0])
    f = jet_div(x, y)
    assert f.value == 1.0 / 3.0
    np.testing.assert_allclose(f.grad, [1 / 3, -1 / 9])
    np.testing.assert_allclose(f.hess, [[0, -1 / 9], [-1 / 9, 2 / 27]])


def test_chain_rule_elementary():
    (x,) = vars_at([0.7])
    for jet, f, d1, d2 in [(jet_sin(x), np.sin, np.cos, lambda t: -np.sin(t)),
                           (jet_cos(x), np.cos, lambda t: -np.sin(t), lambda t: -np.cos(t)),
                           (jet_exp(x), np.exp, np.exp, np.exp),
                           (jet_log(x), np.log, lambda t: 1 / t, lambda t: -1 / t ** 2)]:
        assert jet.value == pytest.approx(f(0.7))
        assert jet.grad[0] == pytest.approx(d1(0.7))
        assert jet.hess[0, 0] == pytest.approx(d2(0.7))


def test_integer_power():
    (x,) = vars_at([1.5])
    f = jet_pow(x, 3)
    assert (f.value, f.grad[0], f.hess[0, 0]) == pytest.approx((3.375, 6.75, 9.0))
    g = jet_pow(x, 0)
    assert g.value == 1.0 and g.grad[0] == 0.0


def test_hessian_symmetric():
    x, y, z = vars_at([0.2, -0.4, 1.1])
    f = jet_sin(x * y) * jet_exp(z * x) + jet_div(y, z * z + 1.0)
    np.testing.assert_array_equal(f.hess, np.swapaxes(f.hess, -1, -2))


def test_domain_errors():
    x, y = vars_at([1.0, 0.0])
    with pytest.raises(DomainError):
        jet_div(x, y)
    with pytest.raises(DomainError):
        jet_log(y)
    with pytest.raises(DomainError):
        jet_log(-x)


def test_combine_dispatch():
    x, y = vars_at([2.0, 5.0])
    assert jet_combine("add", [x, y]).value == 7.0
    assert jet_combine("pow-int", [x], 2).value == 4.0
    assert jet_combine("neg", [y]).value == -5.0
    with pytest.raises(ValueError):
        jet_combine("tan", [x])


def test_batched_jets():
    p = np.array([[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]])
    x, y = jet_lift_var(0, p), jet_lift_var(1, p)
    f = x * y
    np.testing.assert_allclose(f.value, [2, 12, 30])
    np.testing.assert_allclose(f.grad, p[:, ::-1])
    assert f.hess.shape == (3, 2, 2)


def test_constant_jet():
    c = Jet2.constant(4.0, 3)
    assert c.value == 4.0 and c.grad.shape == (3,) and c.hess.shape == (3, 3)


def test_fd_oracle_matches_polynomial():
    f = lambda p: np.array([p[0] ** 2 * p[1], np.sin(p[1])])  # noqa: E731
    p = np.array([0.3, 0.8])
    J = fd_jacobian(f, p)
    np.testing.assert_allclose(J, [[2 * 0.3 * 0.8, 0.09], [0.0, np.cos(0.8)]], atol=1e-9)
    H = fd_hessian(lambda q: q[0] ** 2 * q[1], p)
    np.testing.assert_allclose(H, [[1.6, 0.6], [0.6, 0.0]], atol=1e-6)


def test_fd_stencil_domain_error():
    with pytest.raises(DomainError):
        fd_jacobian(lambda p: np.log(p), np.array([0.0]))


def test_diff_config_bounds():
    DiffConfig(1e-8, 1e-2)
    with pytest.raises(ValueError):
        DiffConfig(1e-9)
    with pytest.raises(ValueError):
        DiffConfig(fd_step2=0.1)
