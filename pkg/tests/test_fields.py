from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pacal.errors import NumericError, UsageError
from pacal.fields import (BilinearMap, CovectorField, ScalarField, basis_field, constant_covector,
                          constant_scalar, constant_vector, expression_scalar, expression_vector,
                          parse_expression, polynomial_scalar, polynomial_vector,
                          random_polynomial_vector)

x = st.floats(-3.0, 3.0, allow_nan=False)


@given(x, x)
def test_expression_matches_python(a, b):
    f = parse_expression("2*x0^2 - sin(x1) + exp(x0/4) * cos(x1) - (x0 - 1)/3", 2)
    expect = 2 * a**2 - math.sin(b) + math.exp(a / 4) * math.cos(b) - (a - 1) / 3
    assert f(np.array([a, b])) == pytest.approx(expect, rel=1e-14, abs=1e-14)


@pytest.mark.parametrize("text", ["", "x2", "y", "abs(x0)", "x0.real", "__import__('os')",
                                  "[x0]", "x0 if x1 else 1", "sin(x0, x1)", "x0 +"])
def test_expression_rejects(text):
    with pytest.raises(UsageError):
        parse_expression(text, 2)


def test_expression_runtime_errors_are_numeric():
    f = parse_expression("1/x0", 1)
    with pytest.raises(NumericError):
        f(np.array([0.0]))


def test_expression_vector_dimension():
    v = expression_vector(["x1", "-x0"], 2)
    assert np.array_equal(v([1.0, 2.0]), [2.0, -1.0])
    with pytest.raises(UsageError):
        expression_vector(["x0"], 2)
    with pytest.raises(UsageError):
        expression_vector("x0", 1)
    assert expression_scalar("x0*x1", 2)([2.0, 3.0]) == 6.0


def test_field_algebra():
    phi = ScalarField(lambda p: p[0])
    v = constant_vector([1.0, 2.0])
    w = basis_field(2, 1)
    p = np.array([3.0, 0.5])
    assert np.array_equal((v + w)(p), [1.0, 3.0])
    assert np.array_equal((v - w)(p), [1.0, 1.0])
    assert np.array_equal((2.0 * v)(p), [2.0, 4.0])
    assert np.array_equal((phi * v)(p), [3.0, 6.0])
    assert (phi + 1.0)(p) == 4.0 and (phi * phi)(p) == 9.0
    assert constant_scalar(2.5)(p) == 2.5
    with pytest.raises(UsageError):
        v + constant_vector([1.0, 2.0, 3.0])


def test_covector_pairing():
    phi = constant_covector([2.0, -1.0])
    assert isinstance(phi, CovectorField)
    v = constant_vector([3.0, 4.0])
    assert phi.pair(v)([0.0, 0.0]) == 2.0
    assert isinstance(-phi, CovectorField)


def test_polynomials():
    f = polynomial_scalar([(0, 0), (2, 0), (1, 1)], [1.0, 3.0, -2.0])
    assert f([2.0, 5.0]) == 1 + 12 - 20
    g = polynomial_vector([(1, 0), (0, 2)], [[1.0, 0.0], [0.0, 1.0]])
    assert np.array_equal(g([2.0, 3.0]), [2.0, 9.0])
    with pytest.raises(UsageError):
        polynomial_scalar([(1, 0)], [1.0, 2.0])
    r = random_polynomial_vector(3, np.random.default_rng(0))
    assert r([0.1, 0.2, 0.3]).shape == (3,)


def test_bilinear_values():
    a, b = np.array([1.0, 2.0, 3.0]), np.array([-1.0, 0.5, 2.0])
    assert BilinearMap("inner", 3)(a, b)[0] == pytest.approx(6.0)
    assert np.allclose(BilinearMap("cross", 3)(a, b), np.cross(a, b))
    assert np.array_equal(BilinearMap("tensor", 3)(a, b), np.outer(a, b).ravel())
    wedge = BilinearMap("exterior", 3)(a, b)
    assert np.allclose(wedge, [a[0] * b[1] - a[1] * b[0], a[0] * b[2] - a[2] * b[0],
                               a[1] * b[2] - a[2] * b[1]])
    geo = BilinearMap("geometric", 3)(a, b)
    assert np.allclose(geo, np.concatenate(([a @ b], wedge)))
    g = np.diag([2.0, 1.0, 1.0])
    assert BilinearMap("inner", 3, g)(a, b)[0] == pytest.approx(a @ g @ b)
    assert BilinearMap("pairing", 3)(a, b)[0] == pytest.approx(a @ b)
    assert BilinearMap("scalar", 1)(2.0, 3.0)[0] == 6.0
    with pytest.raises(UsageError):
        BilinearMap("cross", 2)
    with pytest.raises(UsageError):
        BilinearMap("wedge", 2)


@given(st.lists(st.floats(-5, 5, allow_nan=False), min_size=9, max_size=9), st.floats(-3, 3))
def test_bilinearity(vals, k):
    a, b, c = np.array(vals[:3]), np.array(vals[3:6]), np.array(vals[6:])
    for kind in ("inner", "cross", "tensor", "exterior", "geometric"):
        B = BilinearMap(kind, 3)
        lhs = B(k * a + c, b)
        rhs = k * B(a, b) + B(c, b)
        assert np.allclose(lhs, rhs, rtol=1e-12, atol=1e-10)
