import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hetnet.numerics import (DivergenceError, NonFiniteIntegrandError, QuadratureError,
                             QuadratureSpec, hermite_rule, integrate, integrate_improper,
                             lognormal_expectation, lognormal_nodes)

LN10 = math.log(10.0)


def test_spec_validation():
    with pytest.raises(ValueError):
        QuadratureSpec(rel_tol=0.0)
    with pytest.raises(ValueError):
        QuadratureSpec(hermite_order=4)


def test_hermite_rule_normalized():
    z, w = hermite_rule(30)
    assert w.sum() == pytest.approx(1.0)
    assert np.dot(w, z**2) == pytest.approx(1.0)


def test_lognormal_point_mass():
    assert lognormal_expectation(lambda g: g, 0.0) == pytest.approx(1.0)
    g, w = lognormal_nodes(0.0)
    assert g.tolist() == [1.0] and w.tolist() == [1.0]


def test_lognormal_moments_closed_form():
    # g = 10^(X/10) with X ~ N(0, sigma^2): E[g^n] = exp((n sigma ln10 / 10)^2 / 2).
    assert lognormal_expectation(lambda g: g, 8.0) == pytest.approx(
        math.exp(0.5 * (8 * LN10 / 10) ** 2), rel=1e-6)
    assert lognormal_expectation(lambda g: g**2, 4.0) == pytest.approx(
        math.exp(2.0 * (4 * LN10 / 10) ** 2), rel=1e-9)


@given(st.floats(0.0, 6.0), st.floats(-1.0, 2.0))
def test_lognormal_power_moments(sigma, n):
    expected = math.exp(0.5 * (n * sigma * LN10 / 10) ** 2)
    assert lognormal_expectation(lambda g: g**n, sigma) == pytest.approx(expected, rel=1e-6)


def test_lognormal_nonfinite_names_node():
    with pytest.raises(NonFiniteIntegrandError, match="node"):
        lognormal_expectation(lambda g: np.where(g > 2, np.inf, g), 8.0)


def test_integrate_examples():
    assert integrate(lambda x: np.ones_like(x), 0.0, 1.0) == pytest.approx(1.0)
    assert integrate_improper(lambda y: y * np.exp(-y**2), 0.0) == pytest.approx(0.5, rel=1e-8)
    assert integrate_improper(lambda y: 2 * np.pi * y / (1 + y**4), 0.0) == pytest.approx(
        np.pi**2 / 2, rel=1e-7)
    assert integrate_improper(lambda y: np.exp(-y), 0.0) == pytest.approx(1.0, rel=1e-8)
    assert integrate_improper(lambda y: y**-3.0, 1.0) == pytest.approx(0.5, rel=1e-8)


def test_integrate_batched():
    s = np.array([0.5, 1.0, 4.0])
    out = integrate_improper(lambda y: s[:, None] * np.exp(-s[:, None] * y[None, :]), 0.0)
    np.testing.assert_allclose(out, 1.0, rtol=1e-8)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 10.0), st.floats(-3.0, 3.0))
def test_integrate_polynomial_exact(width, a):
    b = a + width
    got = integrate(lambda x: 3 * x**2 - x, a, b)
    assert got == pytest.approx((b**3 - a**3) - (b**2 - a**2) / 2, rel=1e-10, abs=1e-10)


@pytest.mark.parametrize("power", [1.0, 1.05])
def test_divergence_detected(power):
    with pytest.raises(DivergenceError):
        integrate_improper(lambda y: (1.0 + y) ** -power, 0.0)


def test_budget_exhaustion():
    spec = QuadratureSpec(max_subdivisions=3, rel_tol=1e-14, abs_tol=1e-300)
    with pytest.raises(QuadratureError) as info:
        integrate(lambda x: np.sin(1.0 / (x + 1e-4)), 0.0, 1.0, spec)
    assert info.value.estimate is not None
