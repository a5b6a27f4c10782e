"""Deviation bounds, variance confidence intervals and normal approximation.

All calculators are closed-form and pure.  ``delta`` is always the failure
probability; the returned ``epsilon`` satisfies
``Pr{f - E[f] > epsilon} <= delta`` under the stated assumptions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from scipy.special import ndtr, ndtri

from .diffops import WeakInteractionParams

_SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class DeviationBound:
    epsilon: float
    delta: float
    method: Literal["mcdiarmid", "bernstein_oracle", "bernstein_weak", "empirical_bernstein"]
    inputs_echo: dict = field(default_factory=dict)


@dataclass(frozen=True)
class VarianceReport:
    v_value: float
    sigma_lower: float
    sigma_upper: float
    delta: float
    k_minus: float
    k_plus: float
    one_sided: bool


@dataclass(frozen=True)
class NormalityReport:
    test_A_passed: bool
    dN_bound: float | None
    empirical_W1: float | None
    delta: float

    @property
    def conclusive(self) -> bool:
        return self.test_A_passed


def _check_delta(delta):
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")


def _check_nonneg(**kw):
    for name, v in kw.items():
        if not v >= 0:
            raise ValueError(f"{name} must be nonnegative, got {v}")


def k_minus(params: WeakInteractionParams) -> float:
    return params.b / 2.0 + math.sqrt(2.0 * params.a**2 + 8.0 * params.b**2)


def k_plus(params: WeakInteractionParams) -> float:
    return math.sqrt(2.0 * params.a**2 + 8.0 * params.b**2)


def mcdiarmid_epsilon(M: float, n: int, delta: float) -> DeviationBound:
    """Bounded-differences deviation: ``M * sqrt(n ln(1/delta) / 2)``."""
    _check_delta(delta)
    _check_nonneg(M=M)
    if n < 1:
        raise ValueError("n must be at least 1")
    eps = M * math.sqrt(n * math.log(1.0 / delta) / 2.0)
    return DeviationBound(eps, delta, "mcdiarmid", {"M": M, "n": n})


def bernstein_epsilon_oracle(E_sigma2: float, M: float, J: float, delta: float) -> DeviationBound:
    """Bernstein deviation with the Efron-Stein variance proxy ``E[Sigma^2]``."""
    _check_delta(delta)
    _check_nonneg(E_sigma2=E_sigma2, M=M, J=J)
    L = math.log(1.0 / delta)
    eps = math.sqrt(2.0 * E_sigma2 * L) + (2.0 * M / 3.0 + J) * L
    return DeviationBound(eps, delta, "bernstein_oracle", {"E_sigma2": E_sigma2, "M": M, "J": J})


def bernstein_epsilon_weak(params: WeakInteractionParams, sigma2: float, n: int, delta: float) -> DeviationBound:
    """Bernstein deviation in terms of the true variance and (a, b).

    Only valid for ``delta <= 1/e``.
    """
    _check_delta(delta)
    if delta > math.exp(-1.0):
        raise ValueError(f"this Bernstein form holds only for delta <= 1/e, got {delta}")
    _check_nonneg(sigma2=sigma2)
    L = math.log(1.0 / delta)
    eps = math.sqrt(2.0 * sigma2 * L) + (2.0 * params.a / 3.0 + 1.5 * params.b) * L / n
    return DeviationBound(eps, delta, "bernstein_weak", {"a": params.a, "b": params.b, "n": n, "sigma2": sigma2})


def variance_confidence_interval(
    v_value: float,
    params: WeakInteractionParams,
    n: int,
    delta: float,
    one_sided: bool = False,
    apriori: bool = True,
) -> VarianceReport:
    """Confidence interval for sigma(f) from the estimator value ``v_f``.

    The lower end is clamped at 0.  With ``apriori`` the upper end is also
    capped at ``a / sqrt(4n)``, which holds for every f with (a, b)-weak
    interactions; if that cap falls below the lower end, the lower end is
    pulled down to it.
    """
    _check_delta(delta)
    if not v_value >= 0:
        raise ValueError(f"v_value must be nonnegative, got {v_value}")
    km, kp = k_minus(params), k_plus(params)
    L = math.sqrt(math.log((1.0 if one_sided else 2.0) / delta))
    root = math.sqrt(v_value)
    lower = max(0.0, root - km * L / n)
    upper = root + kp * L / n
    if apriori:
        upper = min(upper, params.a / math.sqrt(4.0 * n))
        lower = min(lower, upper)
    return VarianceReport(v_value, lower, upper, delta, km, kp, one_sided)


def raw_variance_band(v_value: float, M: float, J: float, delta: float, one_sided: bool = False) -> tuple[float, float]:
    """Interval for ``sqrt(E[Sigma^2(f)])`` from exact seminorms."""
    _check_delta(delta)
    _check_nonneg(v_value=v_value, M=M, J=J)
    width = math.sqrt((2.0 * M**2 + 8.0 * J**2) * math.log((1.0 if one_sided else 2.0) / delta))
    root = math.sqrt(v_value)
    return max(0.0, root - width), root + width


def empirical_bernstein_epsilon(v_value: float, params: WeakInteractionParams, n: int, delta: float) -> DeviationBound:
    """Fully empirical upper deviation ``sqrt(2 v ln(2/d)) + (8a/3 + 5b) ln(2/d) / n``."""
    _check_delta(delta)
    _check_nonneg(v_value=v_value)
    L = math.log(2.0 / delta)
    eps = math.sqrt(2.0 * v_value * L) + (8.0 * params.a / 3.0 + 5.0 * params.b) * L / n
    return DeviationBound(eps, delta, "empirical_bernstein", {"a": params.a, "b": params.b, "n": n, "v_f": v_value})


def normality_bound(M: float, J: float, sigma: float, n: int) -> float:
    """Upper bound on the Wasserstein distance of the standardized f(X) to N(0, 1).

    ``sigma`` should be a lower bound on the true standard deviation.
    """
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    _check_nonneg(M=M, J=J)
    return math.sqrt(n) * M * (J + M) / sigma**2 + n * M**3 / (2.0 * sigma**3)


def normality_bound_weak(params: WeakInteractionParams, C: float, p: float, n: int) -> float:
    """Normal-approximation bound when ``sigma(f) >= C n^{-p}``."""
    if not C > 0:
        raise ValueError("C must be positive")
    a, b = params.a, params.b
    return (C * a * (a + b) + a**3) / (C**3 * n ** (2.0 - 3.0 * p))


def empirical_normality_test(v_value: float, params: WeakInteractionParams, n: int, delta: float) -> NormalityReport:
    """Check whether v_f is large enough to certify approximate normality.

    If the test passes, ``dN_bound`` is a bound on the distance to normality
    that holds with probability at least ``1 - delta``.  It can be very large
    when the test passes only narrowly.  A failed test is inconclusive: n may
    simply be too small.
    """
    _check_delta(delta)
    _check_nonneg(v_value=v_value)
    a, b = params.a, params.b
    passed = v_value > 0 and math.sqrt(v_value) / 2.0 >= k_minus(params) * math.sqrt(math.log(1.0 / delta)) / n
    if not passed:
        return NormalityReport(False, None, None, delta)
    bound = 4.0 * (a * a + a * b) / (v_value * n**1.5) + 4.0 * a**3 / (v_value**1.5 * n * n)
    return NormalityReport(True, bound, None, delta)


def _antideriv_cdf(t):
    # G(t) = t*Phi(t) + phi(t), with G' = Phi and G(-inf) = 0
    t = np.asarray(t, dtype=float)
    return t * ndtr(t) + np.exp(-0.5 * t * t) / _SQRT_2PI


def wasserstein1_to_standard_normal(samples, loc: float | None = None, scale: float | None = None) -> float:
    """W1 distance between the standardized empirical law and N(0, 1).

    The sample is standardized by ``loc``/``scale`` when given (the true
    mean and standard deviation), else by its own mean and population
    standard deviation.  The integral of ``|F_emp - Phi|`` is evaluated in
    closed form between consecutive order statistics.
    """
    s = np.sort(np.asarray(samples, dtype=float))
    m = len(s)
    if m < 2:
        raise ValueError("need at least two samples")
    mu = float(np.mean(s)) if loc is None else float(loc)
    sd = float(np.std(s)) if scale is None else float(scale)
    if not sd > 0:
        raise ValueError("sample has zero variance")
    z = (s - mu) / sd
    G = _antideriv_cdf
    left = float(G(z[0]))
    right = float(G(-z[-1]))
    a, b = z[:-1], z[1:]
    c = np.arange(1, m) / m
    cross = ndtri(c)
    # on [a, b] the empirical cdf is c; split where Phi crosses c
    lo = np.clip(cross, a, b)
    seg_below = c * (lo - a) - (G(lo) - G(a))
    seg_above = (G(b) - G(lo)) - c * (b - lo)
    middle = np.sum(np.abs(seg_below) + np.abs(seg_above))
    return left + float(middle) + right
