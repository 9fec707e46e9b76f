import math

import numpy as np
import pytest

from skfluct.errors import ATViolation, NonFiniteFunctionValue
from skfluct.fixedpoint import (
    LimitLawSpec,
    gauss_hermite_expectation,
    limit_law_sample,
    limit_moments,
    sech2,
    solve_q,
)

from oracles import bisect_fixed_point, gaussian_expectation_quad


def test_weights_sum_to_one():
    for order in (1, 2, 16, 64):
        assert gauss_hermite_expectation(lambda z: np.ones_like(z), order) == pytest.approx(
            1.0, abs=1e-14
        )


def test_standard_normal_variance():
    for order in (2, 8, 64):
        assert gauss_hermite_expectation(lambda z: z**2, order) == pytest.approx(
            1.0, abs=1e-14
        )


def test_quadrature_vs_adaptive_integration():
    f = lambda z: np.tanh(0.4 + 0.3 * z) ** 2
    oracle = gaussian_expectation_quad(lambda z: math.tanh(0.4 + 0.3 * z) ** 2)
    assert gauss_hermite_expectation(f, 64) == pytest.approx(oracle, abs=1e-12)


def test_non_finite_integrand():
    with np.errstate(invalid="ignore", divide="ignore"):
        with pytest.raises(NonFiniteFunctionValue):
            gauss_hermite_expectation(lambda z: np.log(z), 8)  # NaN at negative nodes
        with pytest.raises(NonFiniteFunctionValue):
            gauss_hermite_expectation(lambda z: 1.0 / z, 9)  # inf at the zero node


def test_zero_field_solution():
    sol = solve_q(0.3, 0.0)
    assert sol.q == 0.0
    assert sol.mu == pytest.approx(1.0, abs=1e-14)
    assert sol.at_value == pytest.approx(0.3, abs=1e-14)
    assert sol.limit_scale == pytest.approx(math.sqrt(0.3 / 0.7), abs=1e-14)


def test_zero_interaction_solution():
    sol = solve_q(0.0, 0.7)
    assert sol.q == pytest.approx(math.tanh(0.7) ** 2, abs=1e-12)
    assert sol.mu == pytest.approx(sech2(np.array(0.7)) ** 2, abs=1e-12)


def test_fixed_point_vs_bisection_oracle():
    sol = solve_q(0.2, 0.4, tol=1e-13)
    oracle = bisect_fixed_point(0.2, 0.4)
    assert sol.q == pytest.approx(oracle, abs=1e-10)


def test_residual_and_order_stability():
    for t, h in ((0.2, 0.4), (0.5, 2.0), (0.4, -1.0)):
        s64 = solve_q(t, h, tol=1e-13, order=64)
        s128 = solve_q(t, h, tol=1e-13, order=128)
        assert abs(s64.q - s128.q) < 1e-10
        assert s64.residual < 1e-11


def test_monotone_in_field_magnitude():
    qs = [solve_q(0.2, h).q for h in (0.0, 0.2, 0.5, 1.0, 2.0)]
    assert all(b >= a for a, b in zip(qs, qs[1:]))


def test_mu_bounds():
    for t, h in ((0.0, 0.0), (0.2, 0.4), (0.5, 1.5), (0.9, 0.1)):
        sol = solve_q(t, h)
        sech2_mean = gauss_hermite_expectation(
            lambda z: sech2(h + np.sqrt(t * sol.q) * z)
        )
        assert 0.0 <= sol.mu <= sech2_mean <= 1.0


def test_at_violation_is_reported_not_raised():
    sol = solve_q(1.5, 0.0)  # q = 0, mu = 1, t*mu = 1.5
    assert sol.at_violated
    assert sol.limit_scale is None
    with pytest.raises(ATViolation):
        sol.require_stable()
    with pytest.raises(ATViolation):
        limit_law_sample(sol, 10, seed=0)
    with pytest.raises(ATViolation):
        limit_moments(sol, 4)


def test_limit_sample_gaussian_at_zero_field():
    sol = solve_q(0.2, 0.0)
    draws = limit_law_sample(sol, 1_000_000, seed=7)
    scale2 = 0.2 / 0.8
    assert draws.var() == pytest.approx(scale2, rel=0.01)
    m2 = (draws**2).mean()
    m4 = (draws**4).mean()
    kurt = m4 / m2**2 - 3.0
    se_kurt = math.sqrt(24.0 / draws.size)
    assert abs(kurt) < 4 * se_kurt


def test_limit_sample_mean_and_determinism():
    spec = LimitLawSpec.from_parameters(0.2, 0.4)
    draws = limit_law_sample(spec, 1_000_000, seed=11)
    assert np.array_equal(draws, limit_law_sample(spec, 1_000_000, seed=11))
    se = draws.std() / math.sqrt(draws.size)
    assert abs(draws.mean()) < 4 * se


def test_limit_sample_variance_formula():
    sol = solve_q(0.2, 0.4)
    draws = limit_law_sample(sol, 1_000_000, seed=3)
    expected = sol.t * sol.mu**2 / (1.0 - sol.at_value)
    assert draws.var() == pytest.approx(expected, rel=0.01)


def test_limit_moments_zero_field():
    sol = solve_q(0.2, 0.0)
    table = limit_moments(sol, 4)
    assert table.value(2) == pytest.approx(0.2 / 0.8, abs=1e-14)
    assert table.value(4) / table.value(2) ** 2 == pytest.approx(3.0, abs=1e-12)
    assert table.value(1) == 0.0
    assert table.value(3) == 0.0


def test_limit_moments_match_sample():
    from skfluct.stats import EmpiricalDistribution, moment_table

    spec = LimitLawSpec.from_parameters(0.2, 0.4)
    draws = limit_law_sample(spec, 10_000_000, seed=5)
    table = limit_moments(spec.solution, 4)
    empirical = moment_table(
        EmpiricalDistribution(draws), max_order=4, bootstrap_reps=60, seed=1
    )
    for order in (2, 4):
        diff = abs(empirical.value(order) - table.value(order))
        assert diff < 3 * empirical.std_error(order)
    assert spec.even_moments[0] == pytest.approx(table.value(2), abs=1e-15)
    assert spec.even_moments[1] == pytest.approx(table.value(4), abs=1e-15)
