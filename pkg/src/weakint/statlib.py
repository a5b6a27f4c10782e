"""Ready-made statistics with their declared weak-interaction parameters.

Families: sample mean, V- and U-statistics, Lipschitz L-statistics (with a
smoothed median), the free energy and KL divergence of a Gibbs posterior
over finitely many models, and the generalization gap of l2-regularized
empirical risk minimization.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations, product
from typing import Callable

import numpy as np
from scipy.special import logsumexp

from ._backend import kernels
from .compose import SmoothMap, VectorStatistic, sup_norm_ball
from .diffops import Statistic, WeakInteractionParams
from .distributions import FiniteAlphabet
from .errors import NumericalError

_PROBES = 1000
_MAX_BLOCK = 1 << 22


def _uniform_domain(rng, size):
    return rng.random(size)


# -- sample mean -------------------------------------------------------------


def make_mean(n: int) -> Statistic:
    """Sample mean on [0, 1]^n; (1, 0)-weak interactions."""
    if n < 1:
        raise ValueError("n must be at least 1")

    def patched(base, values):
        s = base.sum()
        return (s - base + values) / n

    return Statistic(
        n,
        lambda x: x.sum() / n,
        WeakInteractionParams(1.0, 0.0),
        "mean",
        batch=lambda X: X.sum(axis=-1) / n,
        patched=patched,
        moments=lambda dist: (dist.mean(), dist.var() / n),
        symmetric=True,
    )


# -- U- and V-statistics -----------------------------------------------------


@dataclass(frozen=True)
class Kernel:
    """A kernel of ``order`` arguments with values in [-1, 1].

    ``eval`` must broadcast over array arguments.  The range is spot-checked
    on ``domain`` (uniform on [0, 1] by default) at construction.
    """

    order: int
    eval: Callable
    symmetric: bool = True
    name: str = "kappa"
    domain: Callable = _uniform_domain

    def __post_init__(self):
        if self.order < 1:
            raise ValueError("kernel order must be at least 1")
        rng = np.random.default_rng(20240611)
        args = [self.domain(rng, _PROBES) for _ in range(self.order)]
        vals = np.asarray(self.eval(*args), dtype=float)
        if not np.all(np.abs(vals) <= 1.0 + 1e-12):
            raise ValueError(f"kernel {self.name} leaves [-1, 1] (max |value| {np.abs(vals).max():.3g})")


NAMED_KERNELS = {
    "var": Kernel(2, lambda u, v: 0.5 * (u - v) ** 2, True, "var"),
    "prod": Kernel(2, lambda u, v: u * v, True, "prod"),
    "absdiff": Kernel(2, lambda u, v: np.abs(u - v), True, "absdiff"),
    "identity": Kernel(1, lambda u: u * 1.0, True, "identity"),
}


def _index_sum_batch(kernel: Kernel, tuples: np.ndarray):
    m = tuples.shape[1]
    per_row = max(1, _MAX_BLOCK // max(1, len(tuples)))

    def batch(X):
        X = np.asarray(X, dtype=float)
        out = np.empty(len(X))
        for s in range(0, len(X), per_row):
            blk = X[s : s + per_row]
            vals = kernel.eval(*(blk[:, tuples[:, c]] for c in range(m)))
            out[s : s + per_row] = np.mean(vals, axis=1)
        return out

    return batch


def make_v_statistic(kernel: Kernel | None, m: int, n: int, kernel_provider: Callable | None = None) -> Statistic:
    """V-statistic: average of the kernel over all of ``{0..n-1}^m``.

    ``kernel_provider(j)`` may supply a different kernel per multi-index j;
    it overrides ``kernel``.  Declared params are ``(2m, 4m(m-1))``.
    """
    if not 1 <= m < n:
        raise ValueError(f"need 1 <= m < n, got m={m}, n={n}")
    tuples = np.array(list(product(range(n), repeat=m)), dtype=np.int64)
    params = WeakInteractionParams(2.0 * m, 4.0 * m * (m - 1))
    if kernel_provider is not None:
        ks = [kernel_provider(tuple(j)) for j in tuples]

        def func(x):
            return math.fsum(float(k.eval(*x[j])) for k, j in zip(ks, tuples)) / len(tuples)

        return Statistic(n, func, params, f"vstat[m={m},provider]")
    if kernel.order != m:
        raise ValueError(f"kernel order {kernel.order} does not match m={m}")
    batch = _index_sum_batch(kernel, tuples)
    return Statistic(n, lambda x: batch(x[None])[0], params, f"vstat[m={m},{kernel.name}]", batch=batch, symmetric=True)


def _ustat2_patched(kernel: Kernel, n: int):
    upper = np.triu(np.ones((n, n), dtype=bool), 1)
    lower = upper.T
    npairs = n * (n - 1) / 2

    def patched(base, values):
        Kd = kernel.eval(base[:, None], base[None, :])
        Ku = np.where(upper, Kd, 0.0)
        total = Ku.sum()
        old = Ku.sum(axis=0) + Ku.sum(axis=1)
        # coordinate r pairs with s < r as the second argument, s > r as the first
        left = kernel.eval(base[None, :], values[:, None])
        right = left if kernel.symmetric else kernel.eval(values[:, None], base[None, :])
        new = np.where(lower, left, 0.0).sum(axis=1) + np.where(upper, right, 0.0).sum(axis=1)
        return (total - old + new) / npairs

    return patched


def make_u_statistic(kernel: Kernel, m: int, n: int) -> Statistic:
    """U-statistic: average of the kernel over increasing index tuples.

    Declared params are ``(2m, 4m^2)``.  With ``kernel = NAMED_KERNELS["var"]``
    and m = 2 this is the unbiased sample variance.
    """
    if not 1 <= m < n:
        raise ValueError(f"need 1 <= m < n, got m={m}, n={n}")
    if kernel.order != m:
        raise ValueError(f"kernel order {kernel.order} does not match m={m}")
    tuples = np.array(list(combinations(range(n), m)), dtype=np.int64)
    batch = _index_sum_batch(kernel, tuples)
    return Statistic(
        n,
        lambda x: batch(x[None])[0],
        WeakInteractionParams(2.0 * m, 4.0 * m * m),
        f"ustat[m={m},{kernel.name}]",
        batch=batch,
        patched=_ustat2_patched(kernel, n) if m == 2 else None,
        symmetric=kernel.symmetric,
    )


# -- L-statistics ------------------------------------------------------------


@dataclass(frozen=True)
class LWeight:
    """Weight function on [0, 1] with its sup norm and Lipschitz constant.

    Both constants are spot-checked on random points at construction.
    """

    F: Callable
    sup_norm: float
    lip_const: float
    name: str = "F"

    def __post_init__(self):
        rng = np.random.default_rng(7)
        t = rng.random(_PROBES)
        s = rng.random(_PROBES)
        ft, fs = np.asarray(self.F(t), float), np.asarray(self.F(s), float)
        tol = 1e-9 * max(1.0, self.sup_norm, self.lip_const)
        if np.any(np.abs(ft) > self.sup_norm + tol):
            raise ValueError(f"{self.name} exceeds its declared sup norm")
        if np.any(np.abs(ft - fs) > self.lip_const * np.abs(t - s) + tol):
            raise ValueError(f"{self.name} exceeds its declared Lipschitz constant")


def make_l_statistic(w: LWeight, n: int) -> Statistic:
    """``(1/n) sum_i F(i/n) x_(i)`` over the ascending order statistic.

    Declared params are ``(sup |F|, Lip(F))``.
    """
    if n < 2:
        raise ValueError("L-statistics need n >= 2")
    weights = np.asarray(w.F(np.arange(1, n + 1) / n), dtype=float) * np.ones(n) / n
    weights = np.ascontiguousarray(weights)

    def batch(X):
        return np.sort(X, axis=-1, kind="stable") @ weights

    return Statistic(
        n,
        lambda x: float(np.sort(x, kind="stable") @ weights),
        WeakInteractionParams(float(w.sup_norm), float(w.lip_const)),
        f"lstat[{w.name}]",
        batch=batch,
        patched=lambda base, values: kernels.lstat_patched(base, values, weights),
        symmetric=True,
    )


CONSTANT_ONE = LWeight(lambda t: np.ones_like(np.asarray(t, dtype=float)), 1.0, 0.0, "one")


def smoothed_median_weight(zeta: float) -> LWeight:
    """Tent weight vanishing outside ``[zeta, 1 - zeta]`` and peaking at 1/2."""
    if not 0.0 < zeta < 0.5:
        raise ValueError(f"zeta must lie in (0, 1/2), got {zeta}")
    h = 0.5 - zeta

    def F(t):
        t = np.asarray(t, dtype=float)
        return np.maximum(0.0, h - np.abs(t - 0.5)) / (h * h)

    return LWeight(F, 1.0 / h, 1.0 / (h * h), f"median[zeta={zeta}]")


def make_smoothed_median(zeta: float, n: int) -> Statistic:
    return make_l_statistic(smoothed_median_weight(zeta), n)


# -- Gibbs posterior over finitely many models -------------------------------


class GibbsModel:
    """Finite model set with prior weights and a loss table.

    ``loss[w, i]`` is the loss of model w on the i-th point of ``alphabet``
    and must lie in [0, 1].
    """

    def __init__(self, rho, loss, beta: float, alphabet: FiniteAlphabet):
        rho = np.asarray(rho, dtype=float)
        loss = np.asarray(loss, dtype=float)
        if rho.ndim != 1 or np.any(rho <= 0):
            raise ValueError("prior weights must be a positive vector")
        if loss.shape != (len(rho), len(alphabet)):
            raise ValueError(f"loss table must have shape {(len(rho), len(alphabet))}, got {loss.shape}")
        if np.any(loss < 0) or np.any(loss > 1):
            raise ValueError("losses must lie in [0, 1]")
        if not beta >= 0:
            raise ValueError("beta must be nonnegative")
        self.rho = rho
        self.log_rho = np.log(rho)
        self.loss = loss
        self.beta = float(beta)
        self.alphabet = alphabet

    def __len__(self):
        return len(self.rho)

    def empirical_errors(self, X) -> np.ndarray:
        """``H(w, x)`` for a stack of samples: shape ``(B, n_models)``."""
        idx = self.alphabet.indices_of(np.asarray(X, dtype=float))
        return self.loss[:, idx].mean(axis=-1).T

    def true_errors(self, mu: FiniteAlphabet) -> np.ndarray:
        idx = self.alphabet.indices_of(mu.points)
        return self.loss[:, idx] @ mu.weights


def random_gibbs_model(n_models: int, alphabet: FiniteAlphabet, beta: float, seed: int = 0) -> GibbsModel:
    rng = np.random.default_rng(seed)
    return GibbsModel(rng.uniform(0.5, 1.5, n_models), rng.random((n_models, len(alphabet))), beta, alphabet)


def _log_softmax(logits):
    return logits - logsumexp(logits, axis=-1, keepdims=True)


def gibbs_measure(model: GibbsModel, x) -> np.ndarray:
    """Posterior weights ``pi_x(w) ~ rho(w) exp(-beta H(w, x))``."""
    H = model.empirical_errors(np.asarray(x, dtype=float)[None])[0]
    return np.exp(_log_softmax(model.log_rho - model.beta * H))


def gibbs_true_measure(model: GibbsModel, mu: FiniteAlphabet) -> np.ndarray:
    """Gibbs weights built from the expected loss under ``mu``."""
    return np.exp(_log_softmax(model.log_rho - model.beta * model.true_errors(mu)))


def make_free_energy(model: GibbsModel, n: int) -> Statistic:
    """``log sum_w rho(w) exp(-beta H(w, x))``; (beta, 2 beta^2)-weak interactions."""

    def batch(X):
        return logsumexp(model.log_rho - model.beta * model.empirical_errors(X), axis=-1)

    return Statistic(
        n,
        lambda x: float(batch(x[None])[0]),
        WeakInteractionParams(model.beta, 2.0 * model.beta**2),
        f"free-energy[beta={model.beta}]",
        batch=batch,
        symmetric=True,
    )


def make_gibbs_kl(model: GibbsModel, mu: FiniteAlphabet, n: int) -> Statistic:
    """KL divergence from the true Gibbs measure to the empirical one.

    Declared params ``(4 beta^2 + 2 beta, 12 beta^3 + 6 beta^2)``.
    """
    log_pi = _log_softmax(model.log_rho - model.beta * model.true_errors(mu))
    beta = model.beta

    def batch(X):
        log_px = _log_softmax(model.log_rho - beta * model.empirical_errors(X))
        kl = np.sum(np.exp(log_px) * (log_px - log_pi), axis=-1)
        return np.maximum(kl, 0.0)

    return Statistic(
        n,
        lambda x: float(batch(x[None])[0]),
        WeakInteractionParams(4 * beta**2 + 2 * beta, 12 * beta**3 + 6 * beta**2),
        f"gibbs-kl[beta={beta}]",
        batch=batch,
        symmetric=True,
    )


def gibbs_empirical_error(model: GibbsModel, n: int) -> VectorStatistic:
    """``x -> H(., x)`` as a vector statistic; (1, 0)-weak interactions in sup norm."""

    def batch(X):
        return model.empirical_errors(X)

    return VectorStatistic(
        n, lambda x: batch(x[None])[0], WeakInteractionParams(1.0, 0.0), "empirical-error", batch=batch, symmetric=True
    )


def free_energy_map(model: GibbsModel) -> SmoothMap:
    """``G -> log sum_w rho(w) exp(-beta G(w))`` on the unit sup-norm ball."""
    beta = model.beta
    return SmoothMap(
        lambda G: float(logsumexp(model.log_rho - beta * np.asarray(G, dtype=float))),
        beta,
        2.0 * beta**2,
        sup_norm_ball(1.0),
        "log-partition",
    )


# -- l2-regularized ERM ------------------------------------------------------


@dataclass(frozen=True)
class MarginLoss:
    """Convex margin loss with ``value(0) == 1`` and ``0 <= value'' <= curvature``."""

    value: Callable
    deriv: Callable
    curvature: float
    name: str


_LN2 = math.log(2.0)

MARGIN_LOSSES = {
    "logistic": MarginLoss(
        lambda t: np.logaddexp(0.0, -t) / _LN2,
        lambda t: -np.exp(-np.logaddexp(0.0, t)) / _LN2,
        0.25 / _LN2,
        "logistic",
    ),
    "squared": MarginLoss(lambda t: (1.0 - t) ** 2, lambda t: -2.0 * (1.0 - t), 2.0, "squared"),
}


def solve_regularized_erm(X, loss: MarginLoss, lam: float, tol: float = 1e-10, max_iter: int = 10**5) -> np.ndarray:
    """Minimize ``mean_i loss(<x_i, w>) + lam |w|^2`` for a stack of samples.

    ``X`` has shape ``(B, n, d)``; returns ``(B, d)``.  Plain gradient descent
    with step ``1 / (curvature + 2 lam)``; each sample stops as soon as its
    gradient norm is at most ``tol``.
    """
    X = np.asarray(X, dtype=float)
    B, n, d = X.shape
    step = 1.0 / (loss.curvature + 2.0 * lam)
    W = np.zeros((B, d))
    active = np.arange(B)
    for _ in range(max_iter):
        Xa, Wa = X[active], W[active]
        margins = np.einsum("bnd,bd->bn", Xa, Wa)
        grad = np.einsum("bn,bnd->bd", loss.deriv(margins), Xa) / n + 2.0 * lam * Wa
        gnorm = np.sqrt(np.sum(grad * grad, axis=1))
        done = gnorm <= tol
        W[active[~done]] = Wa[~done] - step * grad[~done]
        active = active[~done]
        if len(active) == 0:
            return W
    raise NumericalError(f"regularized ERM did not converge in {max_iter} iterations")


def make_l2_reg_delta(
    d: int,
    loss: MarginLoss | str,
    lam: float,
    n: int,
    surrogate: FiniteAlphabet,
    tol: float = 1e-10,
    max_iter: int = 10**5,
) -> Statistic:
    """Generalization gap ``L(x) - L_hat(x)`` of l2-regularized ERM.

    Inputs live in the unit ball of R^d.  The true risk is taken under the
    finite law ``surrogate``.  No weak-interaction params are declared; use
    :func:`~weakint.diffops.seminorms_probe` to explore them.
    """
    if isinstance(loss, str):
        loss = MARGIN_LOSSES[loss]
    if not 0.0 < lam < 1.0:
        raise ValueError(f"lambda must lie in (0, 1), got {lam}")
    pts = surrogate.points.reshape(len(surrogate), d)
    if np.any(np.linalg.norm(pts, axis=1) > 1 + 1e-12):
        raise ValueError("surrogate points must lie in the unit ball")
    probs = surrogate.weights

    def batch(X):
        X = np.asarray(X, dtype=float).reshape(-1, n, d)
        if np.any(np.linalg.norm(X, axis=-1) > 1 + 1e-12):
            raise ValueError("inputs must lie in the unit ball")
        W = solve_regularized_erm(X, loss, lam, tol, max_iter)
        emp = loss.value(np.einsum("bnd,bd->bn", X, W)).mean(axis=1)
        true = loss.value(W @ pts.T) @ probs
        return true - emp

    return Statistic(
        n,
        lambda x: float(batch(x[None])[0]),
        None,
        f"l2delta[{loss.name},lambda={lam}]",
        batch=batch,
        symmetric=True,
    )
