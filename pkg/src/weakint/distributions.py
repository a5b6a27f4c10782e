"""Sampling distributions over the observation space.

Two kinds are supported: finite alphabets, which also drive every exact
enumeration oracle, and a couple of named continuous laws used by the
Monte Carlo harness.
"""
from __future__ import annotations

import os

import numpy as np

from .errors import BudgetExceededError, ConfigError

DEFAULT_BUDGET = 10**7


def enumeration_budget() -> int:
    """Current enumeration budget; ``WEAKINT_BUDGET`` overrides the default."""
    raw = os.environ.get("WEAKINT_BUDGET")
    if raw is None:
        return DEFAULT_BUDGET
    try:
        value = int(float(raw))
    except ValueError:
        raise ConfigError(f"WEAKINT_BUDGET is not a number: {raw!r}") from None
    if value < 1:
        raise ConfigError(f"WEAKINT_BUDGET must be positive, got {value}")
    return value


def check_budget(count: int, what: str, budget: int | None = None) -> None:
    budget = enumeration_budget() if budget is None else budget
    if count > budget:
        raise BudgetExceededError(
            f"{what} needs {count} evaluations, budget is {budget}; "
            "use seminorms_probe / Monte Carlo paths or raise WEAKINT_BUDGET"
        )


class FiniteAlphabet:
    """A finite point set, optionally carrying probability weights.

    ``points`` may be scalars (shape ``(K,)``) or vectors (shape ``(K, d)``).
    Without ``probs`` the alphabet still supports enumeration of suprema;
    sampling then uses the uniform law on the points.
    """

    def __init__(self, points, probs=None):
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 0 or len(pts) == 0:
            raise ValueError("alphabet needs at least one point")
        flat = pts.reshape(len(pts), -1)
        if len({tuple(row) for row in flat}) != len(pts):
            raise ValueError("alphabet points must be distinct")
        self.points = pts
        if probs is not None:
            p = np.asarray(probs, dtype=float)
            if p.shape != (len(pts),):
                raise ValueError("probs must match the number of points")
            if np.any(p < 0):
                raise ValueError("probs must be nonnegative")
            if abs(p.sum() - 1.0) > 1e-12:
                raise ValueError(f"probs sum to {p.sum()!r}, not 1")
            self.probs = p
        else:
            self.probs = None
        self._index = {tuple(row): i for i, row in enumerate(flat)}

    def __len__(self):
        return len(self.points)

    def __repr__(self):
        return f"FiniteAlphabet(points={self.points.tolist()}, probs={None if self.probs is None else self.probs.tolist()})"

    @property
    def is_scalar(self) -> bool:
        return self.points.ndim == 1

    @property
    def weights(self) -> np.ndarray:
        if self.probs is None:
            raise ValueError("this alphabet carries no probabilities")
        return self.probs

    def indices_of(self, x) -> np.ndarray:
        """Map point values back to alphabet indices."""
        arr = np.asarray(x, dtype=float)
        if self.is_scalar:
            flat = arr.reshape(-1, 1)
        else:
            flat = arr.reshape(-1, self.points.shape[1])
        try:
            idx = [self._index[tuple(row)] for row in flat]
        except KeyError as exc:
            raise ValueError(f"value {exc.args[0]} is not an alphabet point") from None
        shape = arr.shape if self.is_scalar else arr.shape[:-1]
        return np.asarray(idx, dtype=np.int64).reshape(shape)

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        p = self.probs
        idx = rng.choice(len(self.points), size=size, p=p)
        return self.points[idx]

    def mean(self) -> float:
        return float(self.points @ self.weights)

    def var(self) -> float:
        m = self.mean()
        return float(((self.points - m) ** 2) @ self.weights)

    @property
    def is_finite(self) -> bool:
        return True


class Bernoulli(FiniteAlphabet):
    def __init__(self, p: float):
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"bernoulli parameter must be in [0, 1], got {p}")
        super().__init__([0.0, 1.0], [1.0 - p, p])
        self.p = p

    def sample(self, rng, size):
        # inverse-cdf draw keeps bernoulli:1.0 / bernoulli:0.0 exact
        return (rng.random(size) < self.p).astype(float)

    def __repr__(self):
        return f"Bernoulli({self.p})"


class Uniform01:
    """The uniform law on [0, 1)."""

    is_finite = False
    is_scalar = True

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        return rng.random(size)

    def mean(self) -> float:
        return 0.5

    def var(self) -> float:
        return 1.0 / 12.0

    def __repr__(self):
        return "Uniform01()"


def parse_distribution(spec: str):
    """Resolve a distribution spec string.

    Accepted forms: ``uniform01``, ``bernoulli:p``, ``alphabet:v1,v2,...`` and
    ``alphabet:v1,v2,...:p=p1,p2,...``.
    """
    parts = spec.strip().split(":")
    head = parts[0].lower()
    try:
        if head == "uniform01" and len(parts) == 1:
            return Uniform01()
        if head == "bernoulli" and len(parts) == 2:
            return Bernoulli(float(parts[1]))
        if head == "alphabet" and len(parts) in (2, 3):
            points = [float(v) for v in parts[1].split(",")]
            probs = None
            if len(parts) == 3:
                if not parts[2].startswith("p="):
                    raise ConfigError(f"bad alphabet token {parts[2]!r}")
                probs = [float(v) for v in parts[2][2:].split(",")]
            else:
                probs = [1.0 / len(points)] * len(points)
            return FiniteAlphabet(points, probs)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"bad distribution spec {spec!r}: {exc}") from None
    raise ConfigError(f"unknown distribution {spec!r}")
