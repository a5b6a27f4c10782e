"""Conditional variances, the Efron-Stein functional and the variance estimator v_f.

For f of n arguments, ``v_f`` takes n + 1 observations and averages the
squared change of f between ``x`` with coordinate j deleted and the same
vector with coordinate i overwritten by ``x_j`` (then j deleted).  Its
expectation under iid sampling equals ``E[Sigma^2(f)]``, the sum of the
expected conditional variances.  The ``*_oracle`` functions compute the
exact expectations by enumerating a finite alphabet.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .diffops import (
    Statistic,
    _check_arity,
    _check_index,
    make_table_statistic,
    replace,
    seminorms_exact,
    tabulate,
)
from .distributions import FiniteAlphabet, check_budget
from .errors import NumericalError


@dataclass(frozen=True)
class ConditionalVarianceProfile:
    per_coordinate: np.ndarray
    total: float


@dataclass(frozen=True)
class EstimatorEvaluation:
    value: float
    evaluations_used: int
    sample: np.ndarray


@dataclass(frozen=True)
class SelfBoundingReport:
    """Tables of g and of ``D^2 g(x) = sum_k (g(x) - min_y g(x; x_k = y))^2``."""

    values: np.ndarray
    d2: np.ndarray


def _exact_path(mu, method):
    if method == "exact":
        if not isinstance(mu, FiniteAlphabet) or mu.probs is None:
            raise ValueError("the exact path needs a finite alphabet with probabilities")
        return True
    if method == "mc":
        return False
    if isinstance(mu, FiniteAlphabet):
        if mu.probs is None:
            raise ValueError("finite alphabet without probabilities: cannot take expectations")
        return True
    return False


def conditional_variance(
    f: Statistic, x, k: int, mu, mc_trials: int = 10_000, rng_seed: int = 0, method: str = "auto"
) -> float:
    """``sigma_k^2(f)(x) = E[(D^k_{Y,Y'} f(x))^2] / 2`` with Y, Y' iid from ``mu``.

    Exact for finite alphabets with probabilities (``method="auto"`` or
    ``"exact"``); otherwise a plain Monte Carlo average over ``mc_trials``
    independent pairs.
    """
    x = np.asarray(x, dtype=float)
    _check_arity(f, x)
    _check_index(k, f.arity)
    if _exact_path(mu, method):
        vals = f.evaluate_batch(np.stack([replace(x, k, y) for y in mu.points]))
        p = mu.probs
        centred = vals - p @ vals
        return float(p @ (centred * centred))
    if mc_trials < 1:
        raise ValueError("mc_trials must be positive")
    rng = np.random.default_rng(rng_seed)
    ys = mu.sample(rng, 2 * mc_trials)
    X = np.repeat(x[None], 2 * mc_trials, axis=0)
    X[:, k] = ys
    vals = f.evaluate_batch(X)
    d = vals[:mc_trials] - vals[mc_trials:]
    return float(0.5 * np.mean(d * d))


def sigma_sum(f: Statistic, x, mu, mc_trials: int = 10_000, rng_seed: int = 0, method: str = "auto"):
    """Per-coordinate conditional variances and their sum ``Sigma^2(f)(x)``."""
    per = np.array(
        [conditional_variance(f, x, k, mu, mc_trials, rng_seed + k, method) for k in range(f.arity)]
    )
    return ConditionalVarianceProfile(per, math.fsum(per))


def variance_estimator(f: Statistic, x, parallelism: int = 1) -> EstimatorEvaluation:
    """The variance estimator ``v_f`` at a sample of ``n + 1`` observations.

    The n + 1 deleted vectors are evaluated once and reused for every inner
    term.  Inner sums are formed per deleted coordinate in a fixed order and
    combined with ``math.fsum``, so the value does not depend on
    ``parallelism``.  For n = 1 the formula is well defined but carries no
    statistical information.
    """
    x = np.asarray(x, dtype=float)
    n = f.arity
    if len(x) != n + 1:
        raise ValueError(f"v_f for arity {n} needs {n + 1} observations, got {len(x)}")
    evaluations = (n + 1) * (n + 1)
    if f.table is not None and f.alphabet is not None:
        try:
            idx = f.alphabet.indices_of(x)
        except ValueError:
            idx = None
        if idx is not None:
            return EstimatorEvaluation(float(kernels.vf_table_point(f.table, idx)), evaluations, x)

    deleted = np.stack([np.delete(x, j, axis=0) for j in range(n + 1)])
    base = f.evaluate_batch(deleted)
    if not np.all(np.isfinite(base)):
        raise NumericalError("f returned a non-finite value on a deleted sample")

    def inner(js):
        out = np.empty(len(js))
        for t, j in enumerate(js):
            patched = f.patched(deleted[j], np.repeat(x[j][None], n, axis=0))
            if not np.all(np.isfinite(patched)):
                raise NumericalError(f"f returned a non-finite value with observation {j} swapped in")
            out[t] = kernels.vf_inner_sums(base[j : j + 1], patched[None])[0]
        return out

    js = np.arange(n + 1)
    if parallelism > 1:
        parts = np.array_split(js, parallelism)
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            sums = np.concatenate(list(pool.map(inner, parts)))
    else:
        sums = inner(js)
    value = math.fsum(sums) / (2.0 * (n + 1))
    if not math.isfinite(value):
        raise NumericalError(f"v_f evaluated to {value}")
    return EstimatorEvaluation(value, evaluations, x)


def estimator_statistic(f: Statistic, alphabet: FiniteAlphabet | None = None) -> Statistic:
    """``v_f`` as a statistic of arity n + 1.

    With an alphabet, the whole table of v_f is computed up front by the
    compiled kernel and the result is a table statistic.
    """
    if alphabet is not None:
        T = tabulate(f, alphabet)
        check_budget(T.size * len(alphabet) * (f.arity + 1) ** 2, f"v_f table of {f.name}")
        return make_table_statistic(kernels.vf_table_all(T), alphabet, name=f"v[{f.name}]")
    return Statistic(f.arity + 1, lambda x: variance_estimator(f, x).value, name=f"v[{f.name}]")


# -- enumeration oracles -----------------------------------------------------


def _expect(T: np.ndarray, p: np.ndarray, axes: int) -> np.ndarray:
    out = T
    for _ in range(axes):
        out = np.tensordot(p, out, axes=(0, 0))
    return out


def expectation_oracle(g: Statistic, alphabet: FiniteAlphabet):
    """Exact ``E[g(X)]`` for iid draws from ``alphabet``."""
    T = tabulate(g, alphabet)
    out = _expect(T, alphabet.weights, g.arity)
    return float(out) if np.ndim(out) == 0 else out


def variance_oracle(g: Statistic, alphabet: FiniteAlphabet) -> float:
    """Exact variance of ``g(X)`` for iid draws from ``alphabet``."""
    T = tabulate(g, alphabet)
    c = T - _expect(T, alphabet.weights, g.arity)
    return float(_expect(c * c, alphabet.weights, g.arity))


def efron_stein_oracle(f: Statistic, alphabet: FiniteAlphabet) -> float:
    """Exact ``E[Sigma^2(f)]``."""
    T = tabulate(f, alphabet)
    p = alphabet.weights
    total = []
    for k in range(f.arity):
        A = np.moveaxis(T, k, 0)
        centred = A - np.tensordot(p, A, axes=(0, 0))
        var_k = np.tensordot(p, centred * centred, axes=(0, 0))
        total.append(float(_expect(var_k, p, f.arity - 1)))
    return math.fsum(total)


def estimator_expectation_oracle(f: Statistic, alphabet: FiniteAlphabet) -> float:
    """Exact ``E[v_f(X_1, ..., X_{n+1})]``."""
    v = estimator_statistic(f, alphabet)
    return float(_expect(v.table, alphabet.weights, v.arity))


def self_bounding_diagnostic(g: Statistic, alphabet: FiniteAlphabet) -> SelfBoundingReport:
    """Exact ``D^2 g`` at every point of the alphabet."""
    T = tabulate(g, alphabet)
    d2 = np.zeros_like(T)
    for k in range(g.arity):
        gap = T - T.min(axis=k, keepdims=True)
        d2 += gap * gap
    return SelfBoundingReport(T, d2)


def self_bounding_excess(f: Statistic, alphabet: FiniteAlphabet) -> float:
    """Largest ``D^2 v_f(x) - (M^2 + 4 J^2) v_f(x)`` over the alphabet.

    The self-bounding property of the estimator says this is never positive.
    """
    sn = seminorms_exact(f, alphabet)
    rep = self_bounding_diagnostic(estimator_statistic(f, alphabet), alphabet)
    coef = sn.m_value**2 + 4.0 * sn.j_value**2
    return float((rep.d2 - coef * rep.values).max())
