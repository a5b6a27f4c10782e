"""Resolve statistic spec strings such as ``ustat:m=2:kernel=var``.

A spec is a family name followed by colon-separated tokens, either bare
words (``lstat:median``) or ``key=value`` options.  Recognised families:

``mean``
    Sample mean.
``ustat`` / ``vstat``
    Options ``m`` (default 2) and ``kernel`` (a name from ``NAMED_KERNELS``).
``lstat:median`` / ``lstat:mean``
    Smoothed median (option ``zeta``, default 0.1) or the constant weight.
``gibbs:fe`` / ``gibbs:kl``
    Free energy or KL divergence of a random Gibbs model; options ``beta``
    (default 1), ``models`` (default 3) and ``seed`` (default 0).  Needs a
    finite distribution.
``l2delta``
    Options ``loss`` (logistic or squared) and ``lambda`` (default 0.5).
    Inputs are one-dimensional; the risk is computed under the distribution
    itself, or under a 256-point midpoint grid for ``uniform01``.
``table``
    Random lookup table over a finite distribution; option ``seed``.
"""
from __future__ import annotations

import numpy as np

from ..diffops import Statistic, random_table_statistic
from ..distributions import FiniteAlphabet, check_budget
from ..errors import ConfigError
from ..statlib import (
    CONSTANT_ONE,
    MARGIN_LOSSES,
    NAMED_KERNELS,
    make_free_energy,
    make_gibbs_kl,
    make_l2_reg_delta,
    make_l_statistic,
    make_mean,
    make_smoothed_median,
    make_u_statistic,
    make_v_statistic,
    random_gibbs_model,
)

FAMILIES = ("mean", "ustat", "vstat", "lstat", "gibbs", "l2delta", "table")


def _split(spec: str):
    tokens = [t.strip() for t in spec.strip().split(":") if t.strip()]
    if not tokens:
        raise ConfigError("empty statistic spec")
    words, opts = [], {}
    for tok in tokens[1:]:
        if "=" in tok:
            key, _, val = tok.partition("=")
            opts[key.strip()] = val.strip()
        else:
            words.append(tok)
    return tokens[0].lower(), words, opts


class _Options:
    def __init__(self, opts: dict):
        self._opts = dict(opts)

    def get(self, key, cast, default):
        if key not in self._opts:
            return default
        raw = self._opts.pop(key)
        try:
            return cast(raw)
        except ValueError:
            raise ConfigError(f"bad value in token {key + '=' + raw!r}") from None

    def finish(self):
        if self._opts:
            key = next(iter(self._opts))
            raise ConfigError(f"unknown option token {key + '=' + self._opts[key]!r}")


def _needs_finite(dist, family):
    if not isinstance(dist, FiniteAlphabet) or dist.probs is None:
        raise ConfigError(f"token {family!r} needs a finite distribution with probabilities")
    return dist


def _one_word(family, words, allowed):
    if len(words) != 1 or words[0] not in allowed:
        got = words[0] if words else "<missing>"
        raise ConfigError(f"token {got!r}: {family} expects one of {', '.join(allowed)}")
    return words[0]


def resolve_statistic(spec: str, n: int, dist) -> Statistic:
    """Build the statistic of arity ``n`` named by ``spec``."""
    family, words, raw = _split(spec)
    opts = _Options(raw)
    try:
        stat = _build(family, words, opts, n, dist)
    except ConfigError:
        raise
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"cannot build {spec!r}: {exc}") from None
    opts.finish()
    return stat


def _build(family, words, opts, n, dist):
    if family == "mean":
        if words:
            raise ConfigError(f"unexpected token {words[0]!r}")
        return make_mean(n)
    if family in ("ustat", "vstat"):
        if words:
            raise ConfigError(f"unexpected token {words[0]!r}")
        m = opts.get("m", int, 2)
        kname = opts.get("kernel", str, "var" if m == 2 else "identity")
        if kname not in NAMED_KERNELS:
            raise ConfigError(f"unknown kernel token {kname!r}")
        maker = make_u_statistic if family == "ustat" else make_v_statistic
        return maker(NAMED_KERNELS[kname], m, n)
    if family == "lstat":
        kind = _one_word(family, words, ("median", "mean"))
        if kind == "median":
            return make_smoothed_median(opts.get("zeta", float, 0.1), n)
        return make_l_statistic(CONSTANT_ONE, n)
    if family == "gibbs":
        kind = _one_word(family, words, ("fe", "kl"))
        alphabet = _needs_finite(dist, "gibbs")
        beta = opts.get("beta", float, 1.0)
        model = random_gibbs_model(opts.get("models", int, 3), alphabet, beta, opts.get("seed", int, 0))
        return make_free_energy(model, n) if kind == "fe" else make_gibbs_kl(model, alphabet, n)
    if family == "l2delta":
        if words:
            raise ConfigError(f"unexpected token {words[0]!r}")
        loss = opts.get("loss", str, "logistic")
        if loss not in MARGIN_LOSSES:
            raise ConfigError(f"unknown loss token {loss!r}")
        lam = opts.get("lambda", float, 0.5)
        if isinstance(dist, FiniteAlphabet) and dist.probs is not None:
            surrogate = dist
        else:
            grid = (np.arange(256) + 0.5) / 256
            surrogate = FiniteAlphabet(grid, np.full(256, 1.0 / 256))
        return make_l2_reg_delta(1, loss, lam, n, surrogate)
    if family == "table":
        if words:
            raise ConfigError(f"unexpected token {words[0]!r}")
        alphabet = _needs_finite(dist, "table")
        check_budget(len(alphabet) ** n, f"random table on {len(alphabet)}^{n} points")
        return random_table_statistic(alphabet, n, opts.get("seed", int, 0))
    raise ConfigError(f"unknown statistic token {family!r}")
