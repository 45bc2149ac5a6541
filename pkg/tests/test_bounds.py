import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pnpcs.bounds import (
    BoundSpec,
    concentration_exponent,
    epsilon_for_beta,
    exact_measurement_bound,
    proposition_thresholds,
    robust_bound_value,
    robust_error_rhs,
    robust_measurement_bound,
)


def test_exponent_values():
    assert concentration_exponent("gaussian", 0.5) == pytest.approx(0.25 / 6)
    assert concentration_exponent("rademacher", 0.5) == pytest.approx(0.25 / 4 - 0.125 / 6)
    assert concentration_exponent("rademacher", 0.495) == pytest.approx(0.0410416875, abs=1e-12)


def test_exponent_strictly_increasing_on_grid():
    grid = np.linspace(1e-4, 1 - 1e-4, 1000)
    for ensemble in ("gaussian", "rademacher"):
        values = [concentration_exponent(ensemble, e) for e in grid]
        assert np.all(np.diff(values) > 0)


def test_exponent_domain():
    with pytest.raises(ValueError):
        concentration_exponent("gaussian", 0.0)
    with pytest.raises(ValueError):
        concentration_exponent("gaussian", 1.0)
    with pytest.raises(ValueError):
        concentration_exponent("uniform", 0.5)


def test_exact_bound_table_regression():
    expected = {50: 3113, 100: 6152, 150: 9192, 200: 12231}
    for r, value in expected.items():
        spec = BoundSpec(ensemble="rademacher", r=r, beta=0.1)
        assert abs(exact_measurement_bound(spec) - value) <= 1


def test_exact_bound_is_ceiled_formula():
    spec = BoundSpec(ensemble="gaussian", r=7, beta=0.25)
    raw = (math.log(2 / 0.25) + 7 * math.log(12 / 0.99)) / ((0.99 / 2) ** 2 / 6)
    assert exact_measurement_bound(spec) == math.ceil(raw)


def test_robust_bound_affine_coefficients():
    gamma = concentration_exponent("rademacher", 0.4)
    intercept = math.log(4 / 0.1) / gamma
    slope = math.log(12 / 0.8) / gamma
    assert intercept == pytest.approx(125.75, abs=0.01)
    assert slope == pytest.approx(92.32, abs=0.01)
    for r in (50, 123, 200):
        spec = BoundSpec(ensemble="rademacher", r=r, beta=0.1, epsilon=0.8)
        assert robust_bound_value(spec) == pytest.approx(intercept + slope * r, rel=1e-12)


def test_robust_bound_values():
    # independent evaluation of the ceiled formula
    for r in (50, 100, 150, 200):
        spec = BoundSpec(ensemble="rademacher", r=r, beta=0.1, epsilon=0.8)
        raw = (math.log(40.0) + r * math.log(15.0)) / (0.04 - 0.064 / 6)
        assert robust_measurement_bound(spec) == math.ceil(raw)
    assert robust_measurement_bound(
        BoundSpec(ensemble="rademacher", r=50, beta=0.1, epsilon=0.8)
    ) == 4742
    assert robust_measurement_bound(
        BoundSpec(ensemble="rademacher", r=200, beta=0.1, epsilon=0.8)
    ) == 18590


def test_robust_bound_requires_epsilon():
    with pytest.raises(ValueError):
        robust_bound_value(BoundSpec(ensemble="gaussian", r=3, beta=0.5))


def test_error_rhs():
    assert robust_error_rhs(0.8, 0.0, 0.0, 0.0) == 0.0
    value = robust_error_rhs(0.5, 0.2, 0.3, 0.7)
    assert value == pytest.approx((1 + 2 / 0.5) * 0.7 + (0.2 + 0.3) / 0.5)
    with pytest.raises(ValueError):
        robust_error_rhs(1.0, 0, 0, 0)


@settings(max_examples=50, deadline=None)
@given(
    beta=st.floats(0.01, 0.95),
    smaller=st.floats(0.01, 0.4),
    larger=st.floats(0.5, 0.99),
    r=st.integers(1, 40),
)
def test_bounds_decrease_in_beta_and_epsilon(beta, smaller, larger, r):
    for ensemble in ("gaussian", "rademacher"):
        low = robust_bound_value(BoundSpec(ensemble=ensemble, r=r, beta=beta, epsilon=larger))
        high = robust_bound_value(BoundSpec(ensemble=ensemble, r=r, beta=beta, epsilon=smaller))
        assert high > low
        lo_beta = robust_bound_value(
            BoundSpec(ensemble=ensemble, r=r, beta=min(beta + 0.03, 0.99), epsilon=larger)
        )
        assert lo_beta < low


def test_bound_blows_up_as_epsilon_vanishes():
    tiny = robust_bound_value(BoundSpec(ensemble="gaussian", r=5, beta=0.5, epsilon=1e-6))
    unit = robust_bound_value(BoundSpec(ensemble="gaussian", r=5, beta=0.5, epsilon=0.999999))
    assert tiny > 1e10 * unit


def test_exact_bound_decreasing_in_beta():
    values = [
        exact_measurement_bound(BoundSpec(ensemble="rademacher", r=30, beta=b))
        for b in np.linspace(0.01, 0.9, 30)
    ]
    assert np.all(np.diff(values) <= 0)


def test_thresholds_self_consistent():
    spec0 = BoundSpec(ensemble="gaussian", r=10, beta=0.5, epsilon=0.5)
    floor = robust_bound_value(
        BoundSpec(ensemble="gaussian", r=10, beta=1 - 1e-15, epsilon=1 - 1e-15)
    )
    n = int(2 * floor)
    spec = BoundSpec(ensemble="gaussian", r=10, beta=0.5, n=n)
    result = proposition_thresholds(spec)
    assert result is not None
    at_beta0 = robust_bound_value(
        BoundSpec(ensemble="gaussian", r=10, beta=result.beta0, epsilon=1 - 1e-15)
    )
    at_eps0 = robust_bound_value(
        BoundSpec(ensemble="gaussian", r=10, beta=1 - 1e-15, epsilon=result.epsilon0)
    )
    assert abs(at_beta0 - n) <= 2e-6 * n
    assert abs(at_eps0 - n) <= 2e-6 * n
    assert 0 < result.beta0 < 1 and 0 < result.epsilon0 < 1


def test_threshold_no_solution_below_floor():
    spec = BoundSpec(ensemble="gaussian", r=10, beta=0.5, n=100)
    assert proposition_thresholds(spec) is None


def test_epsilon_for_beta_unique_root():
    floor = robust_bound_value(
        BoundSpec(ensemble="rademacher", r=6, beta=1 - 1e-15, epsilon=1 - 1e-15)
    )
    n = int(3 * floor)
    spec = BoundSpec(ensemble="rademacher", r=6, beta=0.5, n=n)
    thresholds = proposition_thresholds(spec)
    beta1 = (thresholds.beta0 + 1.0) / 2
    eps1 = epsilon_for_beta(spec, beta1)
    assert thresholds.epsilon0 < eps1 < 1.0
    value = robust_bound_value(
        BoundSpec(ensemble="rademacher", r=6, beta=beta1, epsilon=eps1)
    )
    assert abs(value - n) <= 2e-6 * n
    with pytest.raises(ValueError):
        epsilon_for_beta(spec, thresholds.beta0 / 2)


def test_spec_validation():
    with pytest.raises(ValueError):
        BoundSpec(ensemble="poisson", r=3, beta=0.5)
    with pytest.raises(ValueError):
        BoundSpec(ensemble="gaussian", r=0, beta=0.5)
    with pytest.raises(ValueError):
        BoundSpec(ensemble="gaussian", r=3, beta=1.5)
    with pytest.raises(ValueError):
        BoundSpec(ensemble="gaussian", r=3, beta=0.5, epsilon=1.0)
