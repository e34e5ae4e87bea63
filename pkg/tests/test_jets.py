"""Exactness checks for the forward-mode jet engine."""

import math

import numpy as np
import pytest

from mlc.errors import UsageError
from mlc.jets import Jet2Scalar, exp, promote, reciprocal, sqrt


def coords(px, py):
    return Jet2Scalar.coordinate(px, 0), Jet2Scalar.coordinate(py, 1)


def test_coordinate_jets_have_unit_gradients():
    x, y = coords(1.3, -0.7)
    assert x.value == 1.3 and y.value == -0.7
    assert np.array_equal(x.first, [1.0, 0.0])
    assert np.array_equal(y.first, [0.0, 1.0])
    assert np.all(x.second == 0.0) and np.all(x.third == 0.0)
    assert x.order == 3


def test_polynomial_derivatives_are_exact():
    # f = x^3 y^2 + 2x - 5
    px, py = 1.3, -0.7
    x, y = coords(px, py)
    f = x * x * x * y * y + 2.0 * x - 5.0
    assert f.value == pytest.approx(px**3 * py**2 + 2 * px - 5, rel=1e-15)
    assert f.first[0] == pytest.approx(3 * px**2 * py**2 + 2, rel=1e-14)
    assert f.first[1] == pytest.approx(2 * px**3 * py, rel=1e-14)
    assert f.second[0, 0] == pytest.approx(6 * px * py**2, rel=1e-14)
    assert f.second[0, 1] == pytest.approx(6 * px**2 * py, rel=1e-14)
    assert f.second[1, 1] == pytest.approx(2 * px**3, rel=1e-14)
    assert f.third[0, 0, 0] == pytest.approx(6 * py**2, rel=1e-14)
    assert f.third[0, 0, 1] == pytest.approx(12 * px * py, rel=1e-14)
    assert f.third[0, 1, 1] == pytest.approx(6 * px**2, rel=1e-14)
    assert f.third[1, 1, 1] == 0.0


def test_second_and_third_slots_stay_symmetric():
    x, y = coords(0.4, 0.9)
    f = exp(x * y) * (1.0 + x * x) / (2.0 + y)
    assert abs(f.second[0, 1] - f.second[1, 0]) < 1e-15
    perms = {(a, b, c) for a in range(2) for b in range(2) for c in range(2)}
    for a, b, c in perms:
        assert f.third[a, b, c] == pytest.approx(f.third[c, a, b], abs=1e-13)
        assert f.third[a, b, c] == pytest.approx(f.third[b, a, c], abs=1e-13)


def test_product_against_expanded_polynomial():
    x, y = coords(-0.6, 1.1)
    f = x * x + y
    g = x - 2.0 * y * y
    prod = f * g
    expanded = x * x * x - 2.0 * x * x * y * y + x * y - 2.0 * y * y * y
    assert prod.value == pytest.approx(expanded.value, rel=1e-14)
    assert np.allclose(prod.first, expanded.first, atol=1e-13)
    assert np.allclose(prod.second, expanded.second, atol=1e-13)
    assert np.allclose(prod.third, expanded.third, atol=1e-13)


def test_reciprocal_and_sqrt_satisfy_defining_identities():
    x, y = coords(0.8, -0.3)
    f = 1.0 + x * x + y * y * y * x
    one = f * reciprocal(f)
    assert one.value == pytest.approx(1.0, rel=1e-15)
    assert np.allclose(one.first, 0.0, atol=1e-14)
    assert np.allclose(one.second, 0.0, atol=1e-13)
    assert np.allclose(one.third, 0.0, atol=1e-13)
    r = sqrt(f)
    back = r * r
    assert back.value == pytest.approx(f.value, rel=1e-15)
    assert np.allclose(back.first, f.first, atol=1e-14)
    assert np.allclose(back.second, f.second, atol=1e-13)
    assert np.allclose(back.third, f.third, atol=1e-13)


def test_exp_of_linear_function():
    x, y = coords(0.25, 0.5)
    f = exp(2.0 * x - y)
    e = math.exp(2 * 0.25 - 0.5)
    assert f.value == pytest.approx(e, rel=1e-15)
    assert f.first[0] == pytest.approx(2 * e, rel=1e-14)
    assert f.first[1] == pytest.approx(-e, rel=1e-14)
    assert f.second[0, 1] == pytest.approx(-2 * e, rel=1e-14)
    assert f.third[0, 0, 1] == pytest.approx(-4 * e, rel=1e-14)
    inv = exp(-(2.0 * x - y))
    one = f * inv
    assert np.allclose(one.first, 0.0, atol=1e-13)
    assert np.allclose(one.third, 0.0, atol=1e-13)


def test_quotient_derivatives_match_hand_computation():
    # f = x / (x + 3): f' = 3/(x+3)^2, f'' = -6/(x+3)^3, f''' = 18/(x+3)^4
    px = 0.7
    x, _ = coords(px, 0.0)
    f = x / (x + 3.0)
    d = px + 3.0
    assert f.first[0] == pytest.approx(3 / d**2, rel=1e-14)
    assert f.second[0, 0] == pytest.approx(-6 / d**3, rel=1e-14)
    assert f.third[0, 0, 0] == pytest.approx(18 / d**4, rel=1e-14)


def test_partial_lowers_order_and_matches_slots():
    x, y = coords(0.3, 0.6)
    f = x * x * y + exp(y)
    fx = f.partial(0)
    assert fx.order == 2
    assert fx.value == pytest.approx(f.first[0], rel=1e-15)
    assert np.allclose(fx.first, f.second[0], atol=1e-15)
    assert np.allclose(fx.second, f.third[0], atol=1e-15)
    fxy = fx.partial(1)
    assert fxy.order == 1
    assert fxy.value == pytest.approx(f.second[0, 1], rel=1e-15)
    fxyx = fxy.partial(0)
    assert fxyx.order == 0
    with pytest.raises(UsageError):
        fxyx.partial(0)


def test_order_propagates_through_arithmetic():
    x, y = coords(0.2, 0.4)
    low = (x * y).partial(0)
    assert (low + y).order == 2
    assert (low * exp(x)).order == 2
    assert reciprocal(1.0 + low).order == 2


def test_scalar_mixing_and_promote():
    x, _ = coords(2.0, 0.0)
    f = 1.0 + x
    g = (3.0 - f) / 2.0
    assert g.value == pytest.approx(0.0, abs=1e-15)
    assert g.first[0] == pytest.approx(-0.5, rel=1e-15)
    j = promote(4.25)
    assert j.value == 4.25 and j.order == 3
    assert promote(j) is j


def test_reciprocal_of_zero_rejected():
    x, _ = coords(0.0, 0.0)
    with pytest.raises(UsageError):
        reciprocal(x)
    with pytest.raises(UsageError):
        sqrt(x - 1.0)


def test_integer_power():
    x, y = coords(0.9, -0.2)
    f = (1.0 + x * x + y * y) ** 2
    g = (1.0 + x * x + y * y) * (1.0 + x * x + y * y)
    assert f.value == pytest.approx(g.value, rel=1e-15)
    assert np.allclose(f.third, g.third, atol=1e-14)
    with pytest.raises(UsageError):
        (x + 1.0) ** (-1)
