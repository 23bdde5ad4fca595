import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from foliation_lab import jet as J
from foliation_lab.jet import Jet

pts = arrays(np.float64, (4, 2), elements=st.floats(-1.0, 1.0))


def _fd(fun, P, h=1e-4):
    """Gradient and Hessian of a pointwise function by central differences."""
    m = P.shape[1]
    eye = np.eye(m)
    grad = np.stack([(fun(P + h * eye[i]) - fun(P - h * eye[i])) / (2 * h) for i in range(m)], -1)
    hess = np.empty(P.shape[:1] + (m, m))
    for i in range(m):
        for j in range(m):
            a, b = h * eye[i], h * eye[j]
            hess[:, i, j] = (fun(P + a + b) - fun(P + a - b) - fun(P - a + b) + fun(P - a - b)) / (4 * h * h)
    return grad, hess


@settings(max_examples=40, deadline=None)
@given(pts)
def test_composite_matches_finite_differences(P):
    def via_jets(x, y):
        return J.atan(x * J.exp(y)) / (2 + J.sin(x - y)) + J.sqrt(1 + x * x) * J.tanh(y) ** 3

    def plain(Q):
        x, y = Q[:, 0], Q[:, 1]
        return np.arctan(x * np.exp(y)) / (2 + np.sin(x - y)) + np.sqrt(1 + x * x) * np.tanh(y) ** 3

    out = via_jets(*J.variables(P, order=2))
    g, H = _fd(plain, P)
    np.testing.assert_allclose(out.v, plain(P), rtol=1e-14, atol=1e-14)
    np.testing.assert_allclose(out.d, g, atol=1e-7)
    np.testing.assert_allclose(out.h, H, atol=1e-5)


@settings(max_examples=25, deadline=None)
@given(arrays(np.float64, (3, 2), elements=st.floats(-1.0, 1.0)))
def test_matrix_inverse_jet(P):
    x, y = J.variables(P, order=2)
    one = J.lift(1.0, 3, 2, 2)
    zero = J.lift(0.0, 3, 2, 2)
    a = J.stack([J.stack([2 + x * x, x * y]), J.stack([x * y, 3 + J.cos(y)])])
    ai = J.inv(a)
    prod = J.contract("ab,bc->ac", a, ai)
    ident = J.stack([J.stack([one, zero]), J.stack([zero, one])])
    diff = prod - ident
    assert np.max(np.abs(diff.v)) < 1e-14
    assert np.max(np.abs(diff.d)) < 1e-13
    assert np.max(np.abs(diff.h)) < 1e-12


def test_orders_combine_to_minimum():
    P = np.array([[0.2, 0.3]])
    x, y = J.variables(P, order=2)
    assert (x * y).order == 2
    assert (x.truncate(1) * y).order == 1
    assert (x.truncate(0) + y).order == 0
    assert J.grad(x * y).order == 1


def test_grad_of_product():
    P = np.array([[0.5, -1.5]])
    x, y = J.variables(P, order=2)
    g = J.grad(x * x * y)
    np.testing.assert_allclose(g.v[0], [2 * 0.5 * -1.5, 0.25])
    np.testing.assert_allclose(g.d[0], [[-3.0, 1.0], [1.0, 0.0]])


def test_where_selects_per_point():
    P = np.array([[1.0], [2.0]])
    (x,) = J.variables(P, order=2)
    out = J.where(np.array([True, False]), x * x, -x)
    np.testing.assert_allclose(out.v, [1.0, -2.0])
    np.testing.assert_allclose(out.d[:, 0], [2.0, -1.0])


def test_sqrt_of_zero_value_only_is_quiet():
    with np.errstate(all="raise"):
        out = J.sqrt(Jet(np.zeros(3)))
    assert out.order == 0 and np.all(out.v == 0)


def test_second_derivative_without_first_is_rejected():
    with pytest.raises(ValueError):
        Jet(np.zeros(1), None, np.zeros((1, 1, 1)))
