import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from edpqm.polygauss import (
    DivergentIntegralError,
    GaussianWeight,
    Polynomial,
    gaussian_integral,
    gaussian_moment,
    hermite,
    weighted_overlap,
)


def test_hermite_low_orders():
    assert hermite(0).coeffs == (1.0,)
    assert hermite(1).coeffs == (0.0, 2.0)
    assert hermite(4).coeffs == (12.0, 0.0, -48.0, 0.0, 16.0)


def test_hermite_matches_numpy():
    from numpy.polynomial.hermite import herm2poly

    for n in range(13):
        ref = herm2poly([0] * n + [1])
        np.testing.assert_allclose(hermite(n).coeffs, ref, rtol=0, atol=0)


@pytest.mark.parametrize("m", range(13))
def test_hermite_orthogonality(m):
    w = GaussianWeight(1.0)
    for n in range(13):
        got = gaussian_integral(hermite(m) * hermite(n), w)
        norm = lambda k: 2.0**k * math.factorial(k) * math.sqrt(math.pi)
        assert abs(got / math.sqrt(norm(m) * norm(n)) - (m == n)) <= 1e-10


def test_moments_closed_form():
    a = 1.7
    assert gaussian_moment(0, a) == pytest.approx(math.sqrt(math.pi / a), rel=1e-15)
    assert gaussian_moment(2, a) == pytest.approx(math.sqrt(math.pi / a) / (2 * a), rel=1e-15)
    assert gaussian_moment(3, a) == 0.0


def test_divergent_weight():
    with pytest.raises(DivergentIntegralError):
        GaussianWeight(0.0)
    with pytest.raises(DivergentIntegralError):
        gaussian_moment(2, -1.0)


def test_polynomial_algebra():
    p = Polynomial([1, 2])
    q = Polynomial([0, 0, 3, 0, 0])
    assert q.degree == 2
    assert (p * q).coeffs == (0.0, 0.0, 3.0, 6.0)
    assert (p + q).coeffs == (1.0, 2.0, 3.0)
    assert p.compose_scaled(2.0)(1.5) == pytest.approx(p(3.0))
    assert Polynomial([0, 0]).is_zero


coeff = st.floats(-3, 3, allow_nan=False)


@pytest.mark.filterwarnings("ignore::scipy.integrate.IntegrationWarning")
@settings(max_examples=100, deadline=None)
@given(
    m=st.integers(0, 6),
    n=st.integers(0, 6),
    sa=st.floats(0.5, 2.0),
    sb=st.floats(0.5, 2.0),
    extra=st.lists(coeff, min_size=1, max_size=5),
)
def test_exact_vs_quadrature(m, n, sa, sb, extra):
    """Exact polynomial-Gaussian integration against adaptive quadrature."""
    alpha = 0.5 * (sa * sa + sb * sb)
    ex = Polynomial(extra)
    got = weighted_overlap(hermite(m), sa, hermite(n), sb, ex, GaussianWeight(alpha))

    def f(x):
        return hermite(m)(sa * x) * hermite(n)(sb * x) * ex(x) * math.exp(-alpha * x * x)

    ref = quad(f, -np.inf, np.inf, epsabs=1e-13, epsrel=1e-13, limit=200)[0]
    absf = quad(lambda x: abs(f(x)), -np.inf, np.inf, limit=200)[0]
    assert abs(got - ref) <= 1e-9 * max(1.0, absf)
