"""Closed-form sample-complexity and error-bound calculators.

All bounds are driven by the concentration exponent of the sensing ensemble:
gamma(eps) = eps^2/6 for Gaussian entries and eps^2/4 - eps^3/6 for
Rademacher entries.  Measurement-count bounds are "m >= expression", so the
integer calculators take the ceiling of the expression.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "BoundSpec",
    "ThresholdResult",
    "concentration_exponent",
    "exact_measurement_bound",
    "robust_measurement_bound",
    "robust_bound_value",
    "robust_error_rhs",
    "proposition_thresholds",
    "epsilon_for_beta",
]

ENSEMBLES = ("gaussian", "rademacher")
EXACT_EPSILON = 0.99
BISECT_REL_TOL = 1e-6
BISECT_MAX_ITERS = 200


@dataclass(frozen=True)
class BoundSpec:
    """Inputs of a bound query: ensemble, denoiser rank and probability knobs."""

    ensemble: str
    r: int
    beta: float
    epsilon: float | None = None
    n: int | None = None

    def __post_init__(self):
        if self.ensemble not in ENSEMBLES:
            raise ValueError(f"ensemble must be one of {ENSEMBLES}")
        if self.r < 1:
            raise ValueError("r must be >= 1")
        if not 0.0 < self.beta < 1.0:
            raise ValueError("beta must lie in (0, 1)")
        if self.epsilon is not None and not 0.0 < self.epsilon < 1.0:
            raise ValueError("epsilon must lie in (0, 1)")


@dataclass(frozen=True)
class ThresholdResult:
    """Solvability thresholds of the robust bound at ambient dimension n."""

    beta0: float
    epsilon0: float
    floor: float  # value of the bound at (1, 1), the infimum over both knobs


def concentration_exponent(ensemble: str, epsilon: float) -> float:
    """Exponent gamma(eps) of the norm-concentration inequality for one vector.

    Strictly increasing and continuous on (0, 1) for both ensembles.
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    if ensemble == "gaussian":
        return epsilon * epsilon / 6.0
    if ensemble == "rademacher":
        return epsilon * epsilon / 4.0 - epsilon**3 / 6.0
    raise ValueError(f"ensemble must be one of {ENSEMBLES}")


def exact_measurement_bound(spec: BoundSpec) -> int:
    """Measurements guaranteeing exact recovery with probability >= 1 - beta.

    ceil of (ln(2/beta) + r ln(12/0.99)) / gamma(0.99/2); the accuracy knob is
    hard-wired to 0.99 in this bound.
    """
    value = (
        math.log(2.0 / spec.beta) + spec.r * math.log(12.0 / EXACT_EPSILON)
    ) / concentration_exponent(spec.ensemble, EXACT_EPSILON / 2.0)
    return math.ceil(value)


def robust_bound_value(spec: BoundSpec) -> float:
    """Un-ceiled robust bound (ln(4/beta) + r ln(12/eps)) / gamma(eps/2)."""
    if spec.epsilon is None:
        raise ValueError("robust bound requires epsilon")
    return (
        math.log(4.0 / spec.beta) + spec.r * math.log(12.0 / spec.epsilon)
    ) / concentration_exponent(spec.ensemble, spec.epsilon / 2.0)


def robust_measurement_bound(spec: BoundSpec) -> int:
    """Measurements guaranteeing the robust error bound with probability >= 1 - beta."""
    return math.ceil(robust_bound_value(spec))


def robust_error_rhs(epsilon: float, delta: float, eta_norm: float, dist_xi: float) -> float:
    """Right-hand side of the robust recovery error bound.

    (1 + 2/(1 - eps)) * dist(ground truth, range(W)) + (delta + ||noise||) / (1 - eps).
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    return (1.0 + 2.0 / (1.0 - epsilon)) * dist_xi + (delta + eta_norm) / (1.0 - epsilon)


def _bound_at(ensemble: str, r: int, beta: float, epsilon: float) -> float:
    # same expression as robust_bound_value but defined on (0, 1] x (0, 1]
    if not 0.0 < beta <= 1.0 or not 0.0 < epsilon <= 1.0:
        raise ValueError("beta and epsilon must lie in (0, 1]")
    eps_half = epsilon / 2.0
    gamma = concentration_exponent(ensemble, eps_half)
    return (math.log(4.0 / beta) + r * math.log(12.0 / epsilon)) / gamma


def _bisect_decreasing(fun, target: float, lo: float, hi: float) -> float:
    """Root of fun(t) = target for fun strictly decreasing, fun(lo) > target > fun(hi)."""
    for _ in range(BISECT_MAX_ITERS):
        mid = 0.5 * (lo + hi)
        value = fun(mid)
        if abs(value - target) <= BISECT_REL_TOL * target:
            return mid
        if value > target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def proposition_thresholds(spec: BoundSpec) -> ThresholdResult | None:
    """Unique (beta0, epsilon0) with bound(beta0, 1) = bound(1, epsilon0) = n.

    The robust bound is strictly decreasing in both knobs and blows up as
    either tends to 0, so when n exceeds the floor value at (1, 1) the two
    thresholds exist, are unique, and are found by monotone bisection.
    Returns None when n <= floor (no solution).
    """
    if spec.n is None:
        raise ValueError("threshold queries require n")
    floor = _bound_at(spec.ensemble, spec.r, 1.0, 1.0)
    if spec.n <= floor:
        return None
    target = float(spec.n)

    lo = 1.0
    while _bound_at(spec.ensemble, spec.r, lo, 1.0) <= target:
        lo *= 0.5
        if lo < 1e-300:
            raise ArithmeticError("beta bracketing underflow")
    beta0 = _bisect_decreasing(
        lambda t: _bound_at(spec.ensemble, spec.r, t, 1.0), target, lo, 1.0
    )

    lo = 1.0
    while _bound_at(spec.ensemble, spec.r, 1.0, lo) <= target:
        lo *= 0.5
        if lo < 1e-300:
            raise ArithmeticError("epsilon bracketing underflow")
    epsilon0 = _bisect_decreasing(
        lambda t: _bound_at(spec.ensemble, spec.r, 1.0, t), target, lo, 1.0
    )
    return ThresholdResult(beta0=beta0, epsilon0=epsilon0, floor=floor)


def epsilon_for_beta(spec: BoundSpec, beta1: float) -> float:
    """Unique epsilon1 in (epsilon0, 1) with bound(beta1, epsilon1) = n.

    Requires beta1 in (beta0, 1); together with n > floor this guarantees the
    bound crosses n exactly once on (epsilon0, 1).
    """
    thresholds = proposition_thresholds(spec)
    if thresholds is None:
        raise ValueError("no thresholds exist: n <= bound floor at (1, 1)")
    if not thresholds.beta0 < beta1 < 1.0:
        raise ValueError(f"beta1 must lie in ({thresholds.beta0:.6g}, 1)")
    target = float(spec.n)
    return _bisect_decreasing(
        lambda t: _bound_at(spec.ensemble, spec.r, beta1, t),
        target,
        thresholds.epsilon0,
        1.0,
    )
