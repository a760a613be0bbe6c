import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from glassydicke.quadrature import composite_rule, gauss_hermite

# adaptive-quadrature value of  int Dz tanh^2(2 sqrt(0.5) z), frozen before the solver existed
TANH2_REF = 0.5199757456639487


def gauss(f, kink=0.0):
    """Adaptive integral of f against Dz; ``kink`` marks where f varies fastest."""
    val, _ = integrate.quad(lambda z: f(z) * math.exp(-0.5 * z * z) / math.sqrt(2 * math.pi),
                            -12.0, 12.0, points=[min(max(kink, -11.0), 11.0)],
                            epsabs=1e-15, epsrel=1e-13, limit=1000)
    return val


def test_frozen_reference_still_matches_adaptive():
    assert gauss(lambda z: math.tanh(math.sqrt(2) * z) ** 2) == pytest.approx(TANH2_REF, abs=1e-13)


@pytest.mark.parametrize("order", [2, 3, 8, 40, 80, 200])
def test_hermite_normalization_and_moments(order):
    r = gauss_hermite(order)
    assert len(r) == order
    assert abs(r.weights.sum() - 1) < 1e-14
    assert np.all(r.weights > 0)
    np.testing.assert_array_equal(r.nodes, -r.nodes[::-1])
    if order >= 8:
        assert abs(r.integrate(r.nodes**2) - 1) < 1e-12
        assert abs(r.integrate(r.nodes**4) - 3) < 1e-12
        assert abs(r.integrate(r.nodes**3)) < 1e-14


def test_hermite_matches_numpy():
    x, w = np.polynomial.hermite.hermgauss(60)
    r = gauss_hermite(60)
    np.testing.assert_allclose(r.nodes, math.sqrt(2) * x, atol=1e-13)
    np.testing.assert_allclose(r.weights, w / math.sqrt(math.pi), rtol=1e-11, atol=1e-300)


def test_hermite_exact_for_polynomials():
    r = gauss_hermite(10)
    # exact through degree 2n - 1 = 19: E[z^18] = 17!!
    assert r.integrate(r.nodes**18) == pytest.approx(float(np.prod(np.arange(1, 18, 2))), rel=1e-12)


def test_hermite_rejects_small_order():
    for bad in (1, 0, -3, 2.5):
        with pytest.raises(ValueError):
            gauss_hermite(bad)


def test_hermite_high_order_reaches_adaptive_value():
    r = gauss_hermite(400)
    assert abs(r.integrate(np.tanh(math.sqrt(2) * r.nodes) ** 2) - TANH2_REF) < 1e-13


@pytest.mark.xfail(strict=True, reason="Hermite rules converge only algebraically for tanh, whose poles "
                                       "sit pi/(2 sqrt 2) off the real axis; orders 40 and 80 differ by ~4e-5")
def test_hermite_order_40_vs_80():
    f = lambda r: r.integrate(np.tanh(math.sqrt(2) * r.nodes) ** 2)
    assert abs(f(gauss_hermite(40)) - f(gauss_hermite(80))) < 1e-12


def test_composite_normalization_and_moments():
    for sharp in (0.0, 1.0, 20.0):
        r = composite_rule(16, sharp)
        assert abs(r.weights.sum() - 1) < 1e-14
        assert abs(r.integrate(r.nodes**2) - 1) < 1e-12
        assert abs(r.integrate(r.nodes**4) - 3) < 1e-12


def test_composite_tanh_self_consistency():
    f = lambda r: r.integrate(np.tanh(math.sqrt(2) * r.nodes) ** 2)
    a, b = f(composite_rule(16, math.sqrt(2))), f(composite_rule(32, math.sqrt(2)))
    assert abs(a - b) < 1e-12
    assert abs(a - TANH2_REF) < 1e-13


@settings(max_examples=25, deadline=None)
@given(sharp=st.floats(0.05, 40.0), shift=st.floats(-3.0, 3.0))
def test_composite_resolves_sharp_tanh(sharp, shift):
    r = composite_rule(16, sharp)
    ref = gauss(lambda z: math.tanh(sharp * z + shift) ** 2, -shift / sharp)
    assert abs(r.integrate(np.tanh(sharp * r.nodes + shift) ** 2) - ref) < 1e-11


def test_composite_rejects_bad_arguments():
    with pytest.raises(ValueError):
        composite_rule(1)
    with pytest.raises(ValueError):
        composite_rule(16, -1.0)
