import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import minimize_scalar

from zarafem import Nonlinearity, benchmark1, benchmark2, check_growth, cq, flux
from zarafem.model import (GrowthConditionError, ScalarProductSpec, exponential_nonlinearity,
                           linear_nonlinearity, rational_nonlinearity, zero_problem)


def g_prime(nl, t):
    """d/dt of mu(t^2) t."""
    return nl.mu(t * t) + 2.0 * t * t * nl.dmu(t * t)


def test_scalar_product_names():
    assert ScalarProductSpec("h1") is ScalarProductSpec.H1
    assert ScalarProductSpec("mu") is ScalarProductSpec.WEIGHTED_EXACT
    assert ScalarProductSpec("iterate") is ScalarProductSpec.WEIGHTED_ITERATE
    with pytest.raises(ValueError):
        ScalarProductSpec("l2")


def test_flux_shape_and_values():
    nl = exponential_nonlinearity()
    xi = np.array([[3.0, 4.0], [0.0, 0.0]])
    np.testing.assert_allclose(flux(nl, xi), [[3 * (1 + math.exp(-25)), 4 * (1 + math.exp(-25))],
                                              [0, 0]])


def test_exponential_constants_are_extremes_of_derivative():
    nl = exponential_nonlinearity()
    lo = minimize_scalar(lambda t: g_prime(nl, t), bounds=(0, 5), method="bounded",
                         options={"xatol": 1e-12})
    assert lo.fun == pytest.approx(nl.alpha, abs=1e-12)
    assert lo.x == pytest.approx(math.sqrt(1.5), abs=1e-5)
    assert g_prime(nl, 0.0) == nl.lipschitz == 2.0


def test_cq_makes_tau_the_sharp_monotonicity_constant():
    # c_q places the minimum of d/dt(mu(t^2) t) exactly at tau; the maximum 1 sits at t = 0
    t = np.linspace(0, 50, 500_001)
    for q in (0.55, 0.7, 1.0, 2.0):
        for tau in (0.01, 0.3):
            nl = rational_nonlinearity(tau, q)
            g = g_prime(nl, t)
            t0 = t[g.argmin()]
            lo = minimize_scalar(lambda s: g_prime(nl, s), bounds=(max(t0 - 0.1, 0), t0 + 0.1),
                                 method="bounded", options={"xatol": 1e-12})
            assert lo.fun == pytest.approx(tau, abs=1e-12)
            assert g.max() == pytest.approx(1.0, abs=1e-15)
            assert t[g.argmax()] == 0.0


def test_cq_value_and_domain():
    assert cq(11 / 20) == pytest.approx(2 * (0.1 / 3.1) ** 1.55, rel=1e-15)
    with pytest.raises(ValueError):
        cq(0.5)


def test_check_growth_estimates():
    t = np.linspace(0, 10, 200_001)
    a, L = check_growth(exponential_nonlinearity(), t)
    assert a == pytest.approx(1 - 2 * math.exp(-1.5), abs=1e-8)
    assert L == pytest.approx(2.0, abs=1e-8)
    assert check_growth(linear_nonlinearity(), t) == (1.0, 1.0)


def test_check_growth_rejects_wrong_constants():
    nl = exponential_nonlinearity()
    bad = Nonlinearity(nl.mu, nl.dmu, alpha=nl.alpha, lipschitz=1.5)
    with pytest.raises(GrowthConditionError, match="Lipschitz"):
        check_growth(bad, np.linspace(0, 3, 1000))
    with pytest.raises(GrowthConditionError, match="monotonicity"):
        check_growth(Nonlinearity(nl.mu, nl.dmu, alpha=0.8, lipschitz=2.0),
                     np.linspace(0, 3, 1000))
    with pytest.raises(ValueError):
        check_growth(nl, [1.0])


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-50, 50), min_size=4, max_size=4), st.booleans())
def test_vector_flux_monotone_and_lipschitz(coords, first):
    nl = exponential_nonlinearity() if first else rational_nonlinearity()
    x, y = np.array(coords[:2]), np.array(coords[2:])
    d = x - y
    dd = d @ d
    if dd < 1e-20:
        return
    dF = flux(nl, x) - flux(nl, y)
    assert dF @ d >= nl.alpha * dd * (1 - 1e-12)
    assert dF @ dF <= (nl.lipschitz ** 2) * dd * (1 + 1e-12)


def _fd_points(rng, n=50):
    # interior points of the L-shape away from the corner
    r = rng.uniform(0.1, 0.9, n)
    phi = rng.uniform(0.05, 1.5 * np.pi - 0.05, n)
    return np.column_stack([r * np.cos(phi), r * np.sin(phi)])


def test_benchmark2_gradient_matches_finite_differences(rng):
    p = benchmark2()
    x = _fd_points(rng)
    h = 1e-6
    fd = np.column_stack([
        (p.exact_value(x + [h, 0]) - p.exact_value(x - [h, 0])) / (2 * h),
        (p.exact_value(x + [0, h]) - p.exact_value(x - [0, h])) / (2 * h)])
    np.testing.assert_allclose(p.exact_gradient(x), fd, rtol=1e-6)
    r = np.hypot(x[:, 0], x[:, 1])
    np.testing.assert_allclose(np.sum(p.exact_gradient(x) ** 2, axis=1),
                               4 / 9 * r ** (-2 / 3), rtol=1e-13)


def test_benchmark2_source_is_minus_divergence_of_exact_flux(rng):
    p = benchmark2()
    x = _fd_points(rng)
    h = 1e-5

    def F(y):
        return flux(p.nonlinearity, p.exact_gradient(y))

    div = ((F(x + [h, 0])[:, 0] - F(x - [h, 0])[:, 0])
           + (F(x + [0, h])[:, 1] - F(x - [0, h])[:, 1])) / (2 * h)
    np.testing.assert_allclose(p.f(x), -div, rtol=1e-4, atol=1e-8)


def test_benchmark2_weight_gradient(rng):
    p = benchmark2()
    x = _fd_points(rng)
    h = 1e-6
    fd = np.column_stack([
        (p.exact_weight(x + [h, 0]) - p.exact_weight(x - [h, 0])) / (2 * h),
        (p.exact_weight(x + [0, h]) - p.exact_weight(x - [0, h])) / (2 * h)])
    np.testing.assert_allclose(p.exact_weight_gradient(x), fd, rtol=1e-5, atol=1e-10)


def test_benchmark2_neumann_datum_is_exact_normal_flux(rng):
    p = benchmark2()
    # top edge y = 1 with outward normal (0, 1)
    s = rng.uniform(-1, 1, 20)
    x = np.column_stack([s, np.ones_like(s)])
    n = np.tile([0.0, 1.0], (20, 1))
    np.testing.assert_allclose(p.neumann(x, n), flux(p.nonlinearity, p.exact_gradient(x))[:, 1],
                               rtol=1e-14)


def test_benchmark2_exact_solution_vanishes_on_dirichlet_edges():
    p = benchmark2()
    s = np.linspace(0.01, 1, 30)
    np.testing.assert_allclose(p.exact_value(np.column_stack([s, 0 * s])), 0, atol=1e-15)
    np.testing.assert_allclose(p.exact_value(np.column_stack([0 * s, -s])), 0, atol=1e-14)
    with pytest.raises(ValueError):
        p.exact_value(np.zeros((1, 2)))


def test_benchmark1_data():
    p = benchmark1()
    x = np.array([[0.9, 0.9], [0.2, 0.2], [-0.5, 0.5], [0.8, 0.6]])
    np.testing.assert_array_equal(p.fvec(x), [[1, 1], [0, 0], [0, 0], [1, 1]])
    np.testing.assert_array_equal(p.f(x), 0)
    assert p.suggested_delta == pytest.approx((1 - 2 * math.exp(-1.5)) / 4, rel=1e-15)
    assert p.exact_gradient is None


def test_zero_problem_has_no_data():
    p = zero_problem()
    x = np.random.default_rng(0).uniform(-1, 1, (5, 2))
    assert np.all(p.f(x) == 0) and np.all(p.fvec(x) == 0)
