"""Statistics, difference operators and the seminorms M and J.

A :class:`Statistic` wraps a function of ``n`` observations.  The operators
here act on it coordinate-wise: ``replace``/``delete`` rewrite the input
vector, ``partial_difference`` and ``mixed_difference`` are the first and
second order differences, and the seminorms measure their worst case either
exactly (by enumeration over a finite alphabet) or from below (by random
probing).

Coordinates are 0-based throughout.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Literal

import numpy as np

from ._backend import kernels
from .distributions import FiniteAlphabet, check_budget

_CHUNK = 1 << 15


@dataclass(frozen=True)
class WeakInteractionParams:
    """Declared weak-interaction parameters: ``M(f) <= a/n`` and ``J(f) <= b/n``."""

    a: float
    b: float

    def __post_init__(self):
        if not (self.a >= 0 and self.b >= 0):
            raise ValueError(f"weak-interaction params must be nonnegative, got ({self.a}, {self.b})")

    def bounds(self, n: int) -> tuple[float, float]:
        """The implied ceilings ``(a/n, b/n)`` on M and J."""
        return self.a / n, self.b / n


@dataclass(frozen=True)
class SeminormReport:
    m_value: float
    j_value: float
    method: Literal["exact", "probe"]
    probe_trials: int = 0


class Statistic:
    """A bounded real function of ``arity`` observations.

    Parameters
    ----------
    arity : int
        Number of arguments n.
    func : callable
        Maps one input vector (shape ``(n,)`` or ``(n, d)``) to a float.
    params : WeakInteractionParams, optional
        Declared (a, b); a contract, not checked on construction.
    name : str
    batch : callable, optional
        Vectorized evaluation over a stack of inputs ``(B, n, ...) -> (B,)``.
    patched : callable, optional
        ``patched(base, values)`` returns the n values of f at ``base`` with
        coordinate r replaced by ``values[r]``.  Lets the variance estimator
        skip materialising the n patched vectors.
    moments : callable, optional
        ``moments(dist) -> (mean, variance)`` of ``f(X)`` in closed form.
    table, alphabet : optional
        Values of f on every index tuple of a finite alphabet.
    symmetric : bool
        Whether f is invariant under permuting its arguments.
    """

    def __init__(
        self,
        arity: int,
        func: Callable,
        params: WeakInteractionParams | None = None,
        name: str = "f",
        *,
        batch: Callable | None = None,
        patched: Callable | None = None,
        moments: Callable | None = None,
        table: np.ndarray | None = None,
        alphabet: FiniteAlphabet | None = None,
        symmetric: bool = False,
    ):
        if int(arity) != arity or arity < 1:
            raise ValueError(f"arity must be a positive integer, got {arity}")
        self.arity = int(arity)
        self.func = func
        self.params = params
        self.name = name
        self._batch = batch
        self._patched = patched
        self.moments = moments
        self.table = table
        self.alphabet = alphabet
        self.symmetric = symmetric

    def __repr__(self):
        return f"Statistic(name={self.name!r}, arity={self.arity}, params={self.params})"

    def __call__(self, x) -> float:
        value = self.func(np.asarray(x, dtype=float))
        return float(value)

    def evaluate_batch(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if self._batch is not None:
            return np.asarray(self._batch(X), dtype=float)
        return np.array([self.func(row) for row in X], dtype=float)

    def patched(self, base, values) -> np.ndarray:
        base = np.asarray(base, dtype=float)
        values = np.asarray(values, dtype=float)
        if self._patched is not None:
            return np.asarray(self._patched(base, values), dtype=float)
        P = np.repeat(base[None], len(base), axis=0)
        r = np.arange(len(base))
        P[r, r] = values
        return self.evaluate_batch(P)

    @property
    def has_fast_patch(self) -> bool:
        return self._patched is not None

    def with_params(self, params: WeakInteractionParams | None, name: str | None = None) -> "Statistic":
        return Statistic(
            self.arity,
            self.func,
            params,
            name or self.name,
            batch=self._batch,
            patched=self._patched,
            moments=self.moments,
            table=self.table,
            alphabet=self.alphabet,
            symmetric=self.symmetric,
        )


def make_table_statistic(table, alphabet: FiniteAlphabet, params=None, name="table") -> Statistic:
    """A statistic given by its values on every index tuple of ``alphabet``."""
    T = np.ascontiguousarray(table, dtype=float)
    K = len(alphabet)
    if T.shape != (K,) * T.ndim:
        raise ValueError(f"table shape {T.shape} does not match alphabet size {K}")
    n = T.ndim
    flat = T.ravel()
    strides = K ** np.arange(n - 1, -1, -1, dtype=np.int64)

    def batch(X):
        return flat[alphabet.indices_of(X) @ strides]

    return Statistic(
        n,
        lambda x: flat[int(alphabet.indices_of(x) @ strides)],
        params,
        name,
        batch=batch,
        table=T,
        alphabet=alphabet,
    )


def random_table_statistic(alphabet: FiniteAlphabet, n: int, rng, name="random-table") -> Statistic:
    """Lookup-table statistic with iid uniform[0, 1) entries."""
    table = np.random.default_rng(rng).random((len(alphabet),) * n)
    return make_table_statistic(table, alphabet, name=name)


# -- operators ---------------------------------------------------------------


def _check_index(k, n, what="k"):
    if int(k) != k or not 0 <= k < n:
        raise IndexError(f"{what}={k} out of range for {n} coordinates")


def replace(x, k: int, y) -> np.ndarray:
    """Copy of ``x`` with coordinate ``k`` set to ``y``."""
    x = np.array(x, dtype=float)
    _check_index(k, len(x))
    x[k] = y
    return x


def delete(x, k: int) -> np.ndarray:
    """Copy of ``x`` with coordinate ``k`` removed; order of the rest kept."""
    x = np.asarray(x, dtype=float)
    _check_index(k, len(x))
    return np.delete(x, k, axis=0)


def _check_arity(f: Statistic, x):
    if len(x) != f.arity:
        raise ValueError(f"{f.name} takes {f.arity} arguments, got a vector of length {len(x)}")


def partial_difference(f: Statistic, x, k: int, y, y_prime):
    """``f(x with x_k = y) - f(x with x_k = y')``; independent of ``x[k]``."""
    x = np.asarray(x, dtype=float)
    _check_arity(f, x)
    _check_index(k, f.arity)
    vals = f.evaluate_batch(np.stack([replace(x, k, y), replace(x, k, y_prime)]))
    return vals[0] - vals[1]


def mixed_difference(f: Statistic, x, k: int, l: int, y, y_prime, z, z_prime):
    """Second difference: coordinate ``k`` over (y, y'), then ``l`` over (z, z')."""
    x = np.asarray(x, dtype=float)
    _check_arity(f, x)
    _check_index(k, f.arity)
    _check_index(l, f.arity, "l")
    if k == l:
        raise ValueError("mixed difference needs two distinct coordinates")
    pts = []
    for zz in (z, z_prime):
        for yy in (y, y_prime):
            v = replace(replace(x, l, zz), k, yy)
            pts.append(v)
    v = f.evaluate_batch(np.stack(pts))
    return (v[0] - v[1]) - (v[2] - v[3])


# -- tabulation and seminorms ------------------------------------------------


def tabulate(f: Statistic, alphabet: FiniteAlphabet, budget: int | None = None) -> np.ndarray:
    """Values of ``f`` on every point of ``alphabet ** n`` as an array ``(K,)*n``.

    Vector-valued statistics get their output dimension as trailing axes.
    """
    if f.table is not None and f.alphabet is alphabet:
        return f.table
    K, n = len(alphabet), f.arity
    total = K**n
    check_budget(total, f"tabulating {f.name} on {K}^{n} points", budget)
    grid = np.indices((K,) * n).reshape(n, -1).T
    chunks = []
    for start in range(0, total, _CHUNK):
        X = alphabet.points[grid[start : start + _CHUNK]]
        chunks.append(np.asarray(f.evaluate_batch(X), dtype=float))
    vals = np.concatenate(chunks, axis=0)
    return vals.reshape((K,) * n + vals.shape[1:])


def _vector_seminorms(T: np.ndarray, n: int) -> tuple[float, float]:
    # sup-norm over trailing output axes commutes with the max over arguments
    K = T.shape[0]
    m_val = 0.0
    for k in range(n):
        m_val = max(m_val, float((T.max(axis=k) - T.min(axis=k)).max()))
    j_val = 0.0
    for k in range(n):
        for l in range(k + 1, n):
            A = np.moveaxis(T, (k, l), (0, 1)).reshape(K, K, -1)
            for y in range(K):
                for y2 in range(y + 1, K):
                    d = A[y] - A[y2]
                    j_val = max(j_val, float((d.max(axis=0) - d.min(axis=0)).max()))
    return m_val, j_val


def seminorms_exact(f: Statistic, alphabet: FiniteAlphabet, budget: int | None = None) -> SeminormReport:
    """Exact M(f) and J(f) over a finite alphabet.

    M is the largest ``|D^k_{y,y'} f(x)|`` and J is ``n`` times the largest
    mixed second difference, both over all coordinates and alphabet points.
    """
    K, n = len(alphabet), f.arity
    check_budget(K**n * K * K, f"exact seminorms of {f.name} on {K}^{n} points", budget)
    T = tabulate(f, alphabet, budget=None if budget is None else budget)
    if T.ndim == n:
        m_val, jmix = kernels.seminorms_table(T)
    else:
        m_val, jmix = _vector_seminorms(T, n)
    return SeminormReport(float(m_val), float(n * jmix), "exact", 0)


def _norm(v):
    v = np.asarray(v, dtype=float)
    return np.abs(v) if v.ndim <= 1 else np.abs(v).reshape(len(v), -1).max(axis=1)


def seminorms_probe(f: Statistic, sampler, trials: int, rng_seed: int = 0) -> SeminormReport:
    """Monte Carlo lower bounds on M(f) and J(f).

    Each trial draws a base vector and fresh points from ``sampler``, and a
    coordinate pair (k, l) uniformly among ordered pairs of distinct indices.
    Draws are taken one trial at a time, so for a fixed seed the reported
    maxima can only grow with ``trials``.
    """
    if int(trials) != trials or trials < 1:
        raise ValueError(f"trials must be a positive integer, got {trials}")
    n = f.arity
    rng = np.random.default_rng(rng_seed)
    rows = []
    for _ in range(int(trials)):
        x = sampler.sample(rng, n)
        y, y2, z, z2 = sampler.sample(rng, 4)
        k = int(rng.integers(n))
        base_k = [replace(x, k, y), replace(x, k, y2)]
        if n > 1:
            l = int(rng.integers(n - 1))
            l = l + 1 if l >= k else l
            quad = [replace(replace(x, l, zz), k, yy) for zz in (z, z2) for yy in (y, y2)]
        else:
            quad = base_k + base_k
        rows.extend(base_k + quad)
    vals = np.concatenate(
        [np.asarray(f.evaluate_batch(np.stack(rows[s : s + _CHUNK])), dtype=float) for s in range(0, len(rows), _CHUNK)]
    )
    vals = vals.reshape((int(trials), 6) + vals.shape[1:])
    d1 = _norm(vals[:, 0] - vals[:, 1])
    d2 = _norm((vals[:, 2] - vals[:, 3]) - (vals[:, 4] - vals[:, 5]))
    j_val = float(n * d2.max()) if n > 1 else 0.0
    return SeminormReport(float(d1.max()), j_val, "probe", int(trials))
