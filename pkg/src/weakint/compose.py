"""Chain rule for weak interactions and closure under simple operations.

If f has (a, b)-weak interactions with values in a convex set U and F is
twice differentiable on U with ``|F'| <= d1`` and ``|F''| <= d2``, then
``F o f`` has ``(a d1, a^2 d2 + b d1)``-weak interactions.  f may be
vector-valued, with norms taken in the sup norm.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .diffops import Statistic, WeakInteractionParams
from .errors import RangeError


@dataclass(frozen=True)
class SmoothMap:
    """Outer map F with caller-supplied derivative bounds on its domain.

    ``contains`` decides membership of a value in the domain U; when it is
    omitted every value is accepted.
    """

    eval: Callable
    d1_bound: float
    d2_bound: float
    contains: Callable | None = None
    name: str = "F"

    def __post_init__(self):
        for v in (self.d1_bound, self.d2_bound):
            if not (np.isfinite(v) and v >= 0):
                raise ValueError(f"derivative bounds must be finite and nonnegative, got {v}")


def interval(lo: float, hi: float) -> Callable:
    """Domain predicate for the closed interval ``[lo, hi]``."""
    return lambda v: bool(np.all((np.asarray(v) >= lo) & (np.asarray(v) <= hi)))


def sup_norm_ball(radius: float = 1.0) -> Callable:
    return lambda v: bool(np.max(np.abs(v)) <= radius + 1e-12)


class VectorStatistic(Statistic):
    """A statistic with values in R^d, measured in the sup norm."""

    def __call__(self, x) -> np.ndarray:
        return np.asarray(self.func(np.asarray(x, dtype=float)), dtype=float)

    def evaluate_batch(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if self._batch is not None:
            return np.asarray(self._batch(X), dtype=float)
        return np.stack([self(row) for row in X])


def chain_params(F: SmoothMap, f_params: WeakInteractionParams) -> WeakInteractionParams:
    """Weak-interaction parameters of ``F o f``."""
    a, b = f_params.a, f_params.b
    return WeakInteractionParams(a * F.d1_bound, a * a * F.d2_bound + b * F.d1_bound)


def compose_statistic(F: SmoothMap, f: Statistic, name: str | None = None) -> Statistic:
    """Pointwise composition ``F o f`` with params from :func:`chain_params`.

    Raises :class:`RangeError` at evaluation time if f leaves the domain of F.
    """
    params = chain_params(F, f.params) if f.params is not None else None

    def check(v):
        if F.contains is not None and not F.contains(v):
            raise RangeError(f"{f.name} produced {v!r}, outside the domain of {F.name}")
        return v

    def func(x):
        return F.eval(check(f(x)))

    def batch(X):
        vals = f.evaluate_batch(X)
        return np.array([F.eval(check(v)) for v in vals], dtype=float)

    return Statistic(
        f.arity,
        func,
        params,
        name or f"{F.name}({f.name})",
        batch=batch,
        symmetric=f.symmetric,
    )


def probe_derivative_bound(F: SmoothMap, sampler: Callable, segments: int = 1000, seed: int = 0) -> float:
    """Largest finite-difference slope ``|F(u) - F(v)| / |u - v|`` seen.

    ``sampler(rng)`` returns one point of the domain.  The result is a lower
    bound on the true Lipschitz constant and so must not exceed ``d1_bound``.
    """
    rng = np.random.default_rng(seed)
    best = 0.0
    for _ in range(segments):
        u, v = np.asarray(sampler(rng), float), np.asarray(sampler(rng), float)
        gap = float(np.max(np.abs(u - v)))
        if gap > 0:
            best = max(best, abs(float(F.eval(u)) - float(F.eval(v))) / gap)
    return best


def scale_statistic(f: Statistic, c: float) -> Statistic:
    """``c * f`` with params ``(|c| a, |c| b)``."""
    params = None if f.params is None else WeakInteractionParams(abs(c) * f.params.a, abs(c) * f.params.b)
    return Statistic(
        f.arity,
        lambda x: c * f(x),
        params,
        f"{c}*{f.name}",
        batch=lambda X: c * f.evaluate_batch(X),
        symmetric=f.symmetric,
    )


def shift_statistic(f: Statistic, c: float) -> Statistic:
    """``f + c``; params unchanged."""
    return Statistic(
        f.arity,
        lambda x: f(x) + c,
        f.params,
        f"{f.name}+{c}",
        batch=lambda X: f.evaluate_batch(X) + c,
        symmetric=f.symmetric,
    )


def add_statistics(f: Statistic, g: Statistic) -> Statistic:
    """``f + g`` with params added componentwise."""
    if f.arity != g.arity:
        raise ValueError("statistics must have the same arity")
    params = None
    if f.params is not None and g.params is not None:
        params = WeakInteractionParams(f.params.a + g.params.a, f.params.b + g.params.b)
    return Statistic(
        f.arity,
        lambda x: f(x) + g(x),
        params,
        f"{f.name}+{g.name}",
        batch=lambda X: f.evaluate_batch(X) + g.evaluate_batch(X),
        symmetric=f.symmetric and g.symmetric,
    )
