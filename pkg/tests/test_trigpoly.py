"""Exactness tests for the trigonometric polynomial substrate."""

import numpy as np
import pytest

from ddeperiodic import GridTooCoarseError, TrigPoly, antiderivative_and_mean, project

TWO_PI = 2.0 * np.pi


def random_poly(rng, period=TWO_PI, degree=3, dim=2):
    return TrigPoly(period, rng.standard_normal((2 * degree + 1, dim)))


def test_evaluate_constant():
    u = TrigPoly.constant(TWO_PI, [2.0, -1.0])
    for t in (0.0, 1.3, -5.0):
        assert np.array_equal(u.evaluate(t), [2.0, -1.0])


def test_evaluate_first_harmonics():
    u = TrigPoly.from_harmonics(TWO_PI, [0.0, 0.0], cos_coeffs=[[1.0, 0.0]])
    assert np.allclose(u.evaluate(0.0), [1.0, 0.0], atol=1e-15)
    v = TrigPoly.from_harmonics(TWO_PI, [0.0, 0.0], sin_coeffs=[[1.0, 0.0]])
    assert np.allclose(v.evaluate(np.pi / 2), [1.0, 0.0], atol=1e-15)


def test_evaluate_is_periodic():
    rng = np.random.default_rng(1)
    u = random_poly(rng)
    t = rng.uniform(0, TWO_PI, 16)
    assert np.allclose(u.evaluate(t), u.evaluate(t + TWO_PI), atol=1e-12)


def test_delay_identity_shifts():
    rng = np.random.default_rng(2)
    u = random_poly(rng)
    assert u.delay(0.0).max_coeff_distance(u) == 0.0
    assert u.delay(TWO_PI).max_coeff_distance(u) < 1e-14


def test_delay_quarter_period_turns_cos_into_sin():
    u = TrigPoly.from_harmonics(TWO_PI, [0.0], cos_coeffs=[[1.0]])
    v = u.delay(np.pi / 2)
    assert abs(v.cos_coeffs[0, 0]) < 1e-15
    assert abs(v.sin_coeffs[0, 0] - 1.0) < 1e-15


def test_delay_composes_additively():
    rng = np.random.default_rng(3)
    for _ in range(20):
        u = random_poly(rng, degree=4)
        s, t = rng.uniform(-3, 3, 2)
        gap = u.delay(s).delay(t).max_coeff_distance(u.delay(s + t))
        assert gap < 1e-12


def test_delay_matches_pointwise_evaluation():
    rng = np.random.default_rng(4)
    for _ in range(100):
        u = random_poly(rng, degree=int(rng.integers(0, 5)), dim=int(rng.integers(1, 4)))
        tau = rng.uniform(-5, 5)
        t = rng.uniform(-5, 5)
        gap = np.max(np.abs(u.delay(tau).evaluate(t) - u.evaluate(t - tau)))
        assert gap < 1e-12


def test_derivative_basics():
    z = TrigPoly.constant(TWO_PI, [3.0]).derivative()
    assert np.max(np.abs(z.coeffs)) == 0.0
    u = TrigPoly.from_harmonics(TWO_PI, [0.0], cos_coeffs=[[1.0]]).derivative()
    assert abs(u.sin_coeffs[0, 0] + 1.0) < 1e-15  # cos' = -sin
    v = TrigPoly.from_harmonics(TWO_PI, [0.0], sin_coeffs=[[0.0], [1.0]]).derivative()
    assert abs(v.cos_coeffs[1, 0] - 2.0) < 1e-15  # sin(2t)' = 2 cos(2t)


def test_integral_basics():
    z, mean = antiderivative_and_mean(TrigPoly.zero(TWO_PI, 1))
    assert np.max(np.abs(z.drift)) == 0.0 and np.max(np.abs(z.poly.coeffs)) == 0.0
    assert np.max(np.abs(mean)) == 0.0

    c, mean = antiderivative_and_mean(TrigPoly.constant(TWO_PI, [2.5]))
    assert np.allclose(c.drift, [2.5]) and np.allclose(mean, [2.5])
    assert np.allclose(c.evaluate(1.7), [2.5 * 1.7])

    i, mean = antiderivative_and_mean(TrigPoly.from_harmonics(TWO_PI, [0.0], cos_coeffs=[[1.0]]))
    assert np.max(np.abs(mean)) == 0.0
    assert abs(i.poly.sin_coeffs[0, 0] - 1.0) < 1e-15  # integral of cos is sin
    assert np.max(np.abs(i.evaluate(0.0))) == 0.0


def test_integral_starts_at_zero_and_inverts_derivative():
    rng = np.random.default_rng(5)
    for _ in range(20):
        u = random_poly(rng, degree=5)
        i, mean = antiderivative_and_mean(u)
        assert np.allclose(mean, u.a0)
        assert np.max(np.abs(i.evaluate(0.0))) < 1e-14
        back = i.poly.derivative()
        restored = TrigPoly(u.period, np.vstack([i.drift[None, :], back.coeffs[1:]]))
        assert restored.max_coeff_distance(u) < 1e-12


def test_project_constant_and_pure_harmonic():
    c = project(np.tile([4.0, -2.0], (9, 1)), TWO_PI, 0)
    assert np.allclose(c.a0, [4.0, -2.0], atol=1e-14)

    t = np.arange(8) * TWO_PI / 8
    samples = np.stack([np.cos(t), np.zeros(8)], axis=1)
    p = project(samples, TWO_PI, 1)
    assert abs(p.cos_coeffs[0, 0] - 1.0) < 1e-14
    assert np.max(np.abs(p.coeffs)) <= 1.0 + 1e-14
    assert np.max(np.abs(p.sin_coeffs)) < 1e-14


def test_project_squared_cosine_double_angle():
    # cos(t)^2 = 1/2 + cos(2t)/2, so the grid data must project onto exactly
    # the constant and the second harmonic
    t = np.arange(8) * TWO_PI / 8
    p = project(np.cos(t) ** 2, TWO_PI, 2)
    assert abs(p.a0[0] - 0.5) < 1e-14
    assert abs(p.cos_coeffs[1, 0] - 0.5) < 1e-14
    assert abs(p.cos_coeffs[0, 0]) < 1e-14
    assert np.max(np.abs(p.sin_coeffs)) < 1e-14


def test_project_rejects_coarse_grids():
    with pytest.raises(GridTooCoarseError):
        project(np.zeros((7, 1)), TWO_PI, 3)


def test_projection_round_trip():
    rng = np.random.default_rng(6)
    for degree in (0, 1, 4, 7):
        u = random_poly(rng, degree=degree, dim=3)
        m = 2 * degree + 2
        back = project(u.values_on_grid(m), u.period, degree)
        assert back.max_coeff_distance(u) < 1e-13


def test_degree_padding_and_arithmetic():
    rng = np.random.default_rng(7)
    u = random_poly(rng, degree=2)
    v = random_poly(rng, degree=5)
    w = u + v - v
    assert w.max_coeff_distance(u.with_degree(5)) < 1e-14
    assert (2.0 * u).max_coeff_distance(u + u) == 0.0


def test_coefficients_are_frozen():
    u = TrigPoly.constant(TWO_PI, [1.0])
    with pytest.raises(ValueError):
        u.coeffs[0, 0] = 2.0
