"""Seeded Monte Carlo experiments and oracle sweeps.

Replication r draws its sample from its own generator, a Philox stream
keyed by ``SeedSequence(master_seed, spawn_key=(r,))``.  Results therefore
do not depend on how replications are spread over worker threads, and
records and summaries are always assembled in replication order.
"""
from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from functools import lru_cache

import numpy as np
from scipy.stats import beta as beta_dist

from .. import __version__
from .._backend import BACKEND
from ..bounds import (
    empirical_bernstein_epsilon,
    empirical_normality_test,
    normality_bound,
    variance_confidence_interval,
    wasserstein1_to_standard_normal,
)
from ..diffops import seminorms_exact, seminorms_probe
from ..distributions import FiniteAlphabet, check_budget, enumeration_budget, parse_distribution
from ..errors import BudgetExceededError, ConfigError
from ..estimator import (
    efron_stein_oracle,
    estimator_expectation_oracle,
    expectation_oracle,
    self_bounding_excess,
    variance_estimator,
    variance_oracle,
)
from .specs import resolve_statistic

MODES = ("variance_ci", "empirical_bernstein", "normality", "oracle_verify", "seminorms")
FORMATS = ("csv", "json")
RNG_NAME = "Philox4x64-10 seeded from SeedSequence(master_seed, spawn_key=(r,)).generate_state(1, uint64)"
REFERENCE_KEY = 2**63

COVERAGE_COLUMNS = ("rep", "seed", "f_value", "v_f", "sigma_lower", "sigma_upper", "bound_epsilon", "covered")
NORMALITY_COLUMNS = ("rep", "seed", "f_value", "v_f", "test_A", "dN_bound", "violated")
_MC_BLOCK = 1 << 22


@dataclass
class ExperimentConfig:
    """Everything that determines an experiment; loadable from JSON."""

    stat: str = "mean"
    dist: str = "bernoulli:0.5"
    n: int = 100
    delta: float = 0.05
    replications: int = 2000
    master_seed: int = 0
    mode: str = "variance_ci"
    out: str | None = None
    format: str = "json"
    threads: int = 1
    reference_replicates: int = 10**6
    normality_replicates: int = 10**4
    slack: float = 0.05

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode token {self.mode!r}; expected one of {', '.join(MODES)}")
        if self.format not in FORMATS:
            raise ConfigError(f"unknown format token {self.format!r}")
        if int(self.n) != self.n or self.n < 2:
            raise ConfigError(f"n must be an integer >= 2, got {self.n}")
        if not 0.0 < self.delta < 1.0:
            raise ConfigError(f"delta must lie in (0, 1), got {self.delta}")
        if int(self.replications) != self.replications or self.replications < 1:
            raise ConfigError(f"replications must be a positive integer, got {self.replications}")
        if int(self.master_seed) != self.master_seed or not 0 <= self.master_seed < 2**64:
            raise ConfigError(f"master_seed must be a 64-bit unsigned integer, got {self.master_seed}")
        if int(self.threads) != self.threads or self.threads < 1:
            raise ConfigError(f"threads must be a positive integer, got {self.threads}")
        for name in ("reference_replicates", "normality_replicates"):
            if getattr(self, name) < 2:
                raise ConfigError(f"{name} must be at least 2")
        if not self.slack >= 0:
            raise ConfigError("slack must be nonnegative")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        for key in data:
            if key not in known:
                raise ConfigError(f"unknown config field {key!r}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                data = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(data)

    def with_overrides(self, **overrides) -> "ExperimentConfig":
        data = asdict(self)
        data.update({k: v for k, v in overrides.items() if v is not None})
        return ExperimentConfig.from_dict(data)


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    metadata: dict
    summary: dict
    records: list = field(default_factory=list)
    columns: tuple = ()

    def to_json(self) -> str:
        payload = {"metadata": self.metadata, "summary": self.summary, "records": self.records}
        return json.dumps(payload, indent=2, allow_nan=False) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        if self.columns:
            writer.writerow(self.columns)
            for rec in self.records:
                writer.writerow(_csv_cell(rec[c]) for c in self.columns)
        else:
            writer.writerow(("key", "value"))
            for key, value in self.summary.items():
                writer.writerow((key, _csv_cell(value)))
        return buf.getvalue()

    def render(self, fmt: str | None = None) -> str:
        return self.to_csv() if (fmt or self.config.format) == "csv" else self.to_json()

    def write(self, path, fmt: str | None = None) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.render(fmt))


def _csv_cell(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return int(v)
    if isinstance(v, float):
        return repr(v)
    return v


# -- seeding and sampling ----------------------------------------------------


def substream_seed(master_seed: int, r: int) -> int:
    """64-bit seed of replication r's generator."""
    ss = np.random.SeedSequence(int(master_seed), spawn_key=(int(r),))
    return int(ss.generate_state(1, np.uint64)[0])


def substream(master_seed: int, r: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(substream_seed(master_seed, r)))


def sample_product(distribution, size: int, rng: np.random.Generator) -> np.ndarray:
    """``size`` iid draws from ``distribution``."""
    return np.asarray(distribution.sample(rng, size), dtype=float)


def clopper_pearson(failures: int, trials: int, level: float = 0.99) -> tuple[float, float]:
    """Two-sided exact binomial confidence interval for a failure rate."""
    alpha = 1.0 - level
    lo = 0.0 if failures == 0 else float(beta_dist.ppf(alpha / 2, failures, trials - failures + 1))
    hi = 1.0 if failures == trials else float(beta_dist.ppf(1 - alpha / 2, failures + 1, trials - failures))
    return lo, hi


# -- reference values --------------------------------------------------------


def _enumerable(dist, n):
    return isinstance(dist, FiniteAlphabet) and dist.probs is not None and len(dist) ** n <= enumeration_budget()


@lru_cache(maxsize=32)
def _mc_reference(stat_spec: str, dist_spec: str, n: int, replicates: int, seed: int) -> tuple[float, float]:
    dist = parse_distribution(dist_spec)
    f = resolve_statistic(stat_spec, n, dist)
    rng = np.random.Generator(np.random.Philox(seed))
    block = max(1, _MC_BLOCK // n)
    vals = []
    for start in range(0, replicates, block):
        m = min(block, replicates - start)
        vals.append(f.evaluate_batch(sample_product(dist, m * n, rng).reshape(m, n)))
    v = np.concatenate(vals)
    return float(np.mean(v)), float(np.var(v))


def reference_moments(cfg: ExperimentConfig, f, dist) -> dict:
    """True mean and standard deviation of f(X), with how they were obtained."""
    if _enumerable(dist, cfg.n):
        mean, var, how = expectation_oracle(f, dist), variance_oracle(f, dist), "enumeration"
        extra = {}
    elif f.moments is not None:
        mean, var = f.moments(dist)
        how, extra = "closed_form", {}
    else:
        seed = substream_seed(cfg.master_seed, REFERENCE_KEY)
        mean, var = _mc_reference(cfg.stat, cfg.dist, cfg.n, cfg.reference_replicates, seed)
        how = "monte_carlo"
        extra = {"reference_replicates": cfg.reference_replicates, "reference_seed": seed}
    return {"true_mean": float(mean), "true_sigma": math.sqrt(max(float(var), 0.0)), "reference_method": how, **extra}


# -- runners -----------------------------------------------------------------


def _parallel_map(fn, count, threads):
    if threads <= 1:
        return [fn(r) for r in range(count)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(count)))


def _draw(cfg, dist, r):
    seed = substream_seed(cfg.master_seed, r)
    return seed, sample_product(dist, cfg.n + 1, np.random.Generator(np.random.Philox(seed)))


def _run_coverage(cfg, f, dist, meta):
    if f.params is None:
        raise ConfigError(f"mode {cfg.mode!r} needs declared params; statistic {cfg.stat!r} has none")
    ref = reference_moments(cfg, f, dist)
    meta.update(ref)
    n, params = cfg.n, f.params

    def one(r):
        seed, x = _draw(cfg, dist, r)
        fval = f(x[:n])
        ev = variance_estimator(f, x)
        ci = variance_confidence_interval(ev.value, params, n, cfg.delta)
        eps = empirical_bernstein_epsilon(ev.value, params, n, cfg.delta).epsilon
        if cfg.mode == "variance_ci":
            covered = ci.sigma_lower <= ref["true_sigma"] <= ci.sigma_upper
        else:
            covered = fval - ref["true_mean"] <= eps
        rec = {
            "rep": r,
            "seed": seed,
            "f_value": float(fval),
            "v_f": ev.value,
            "sigma_lower": ci.sigma_lower,
            "sigma_upper": ci.sigma_upper,
            "bound_epsilon": eps,
            "covered": int(covered),
        }
        return rec, ev.evaluations_used + 1

    out = _parallel_map(one, cfg.replications, cfg.threads)
    records = [rec for rec, _ in out]
    vs = np.array([rec["v_f"] for rec in records])
    failures = sum(1 - rec["covered"] for rec in records)
    lo, hi = clopper_pearson(failures, cfg.replications)
    summary = {
        "replications": cfg.replications,
        "failures": failures,
        "coverage": 1.0 - failures / cfg.replications,
        "failure_rate_ci99_lower": lo,
        "failure_rate_ci99_upper": hi,
        "v_f_mean": float(np.mean(vs)),
        "v_f_std": float(np.std(vs)),
        "true_mean": ref["true_mean"],
        "true_sigma": ref["true_sigma"],
        "evaluations": int(sum(ev for _, ev in out)),
    }
    return summary, records, COVERAGE_COLUMNS


def _run_normality(cfg, f, dist, meta):
    if f.params is None:
        raise ConfigError(f"mode 'normality' needs declared params; statistic {cfg.stat!r} has none")
    ref = reference_moments(cfg, f, dist)
    meta.update(ref)
    n, params = cfg.n, f.params
    # reference W1 from an independent batch of f-values
    ref_seed = substream_seed(cfg.master_seed, REFERENCE_KEY + 1)
    rng = np.random.Generator(np.random.Philox(ref_seed))
    block = max(1, _MC_BLOCK // n)
    fvals = []
    for start in range(0, cfg.normality_replicates, block):
        m = min(block, cfg.normality_replicates - start)
        fvals.append(f.evaluate_batch(sample_product(dist, m * n, rng).reshape(m, n)))
    w1 = wasserstein1_to_standard_normal(np.concatenate(fvals), ref["true_mean"], ref["true_sigma"])
    meta.update({"normality_replicates": cfg.normality_replicates, "normality_seed": ref_seed})
    a_n, b_n = params.bounds(n)
    theory = normality_bound(a_n, b_n, ref["true_sigma"], n) if ref["true_sigma"] > 0 else math.inf

    def one(r):
        seed, x = _draw(cfg, dist, r)
        ev = variance_estimator(f, x)
        rep = empirical_normality_test(ev.value, params, n, cfg.delta)
        violated = rep.test_A_passed and w1 > rep.dN_bound + cfg.slack
        rec = {
            "rep": r,
            "seed": seed,
            "f_value": float(f(x[:n])),
            "v_f": ev.value,
            "test_A": int(rep.test_A_passed),
            "dN_bound": rep.dN_bound,
            "violated": int(violated),
        }
        return rec, ev.evaluations_used + 1

    out = _parallel_map(one, cfg.replications, cfg.threads)
    records = [rec for rec, _ in out]
    passes = sum(rec["test_A"] for rec in records)
    violations = sum(rec["violated"] for rec in records)
    lo, hi = clopper_pearson(violations, cfg.replications)
    summary = {
        "replications": cfg.replications,
        "reference_w1": w1,
        "normality_bound": theory if math.isfinite(theory) else None,
        "w1_within_bound": bool(w1 <= theory + cfg.slack),
        "test_A_rate": passes / cfg.replications,
        "violations": violations,
        "violation_rate_ci99_lower": lo,
        "violation_rate_ci99_upper": hi,
        "true_mean": ref["true_mean"],
        "true_sigma": ref["true_sigma"],
        "evaluations": int(sum(ev for _, ev in out)),
    }
    return summary, records, NORMALITY_COLUMNS


def _run_oracle(cfg, f, dist, meta):
    if not isinstance(dist, FiniteAlphabet) or dist.probs is None:
        raise ConfigError(f"mode 'oracle_verify' needs a finite distribution, got {cfg.dist!r}")
    check_budget(len(dist) ** (cfg.n + 1) * (cfg.n + 1) ** 2, f"oracle sweep of {f.name}")
    e_v = estimator_expectation_oracle(f, dist)
    e_s = efron_stein_oracle(f, dist)
    var = variance_oracle(f, dist)
    sn = seminorms_exact(f, dist)
    summary = {
        "e_v_f": e_v,
        "e_sigma2": e_s,
        "unbiasedness_gap": e_v - e_s,
        "variance": var,
        "houdre_lower": e_s - sn.j_value**2 / 4.0,
        "sandwich_holds": bool(e_s - sn.j_value**2 / 4.0 <= var + 1e-10 and var <= e_s + 1e-10),
        "m_value": sn.m_value,
        "j_value": sn.j_value,
        "self_bounding_excess": self_bounding_excess(f, dist),
    }
    summary.update(_declared(f, cfg.n, sn))
    return summary, [], ()


def _declared(f, n, sn):
    if f.params is None:
        return {"a_over_n": None, "b_over_n": None, "within_declared": None}
    a_n, b_n = f.params.bounds(n)
    ok = sn.m_value <= a_n + 1e-10 and sn.j_value <= b_n + 1e-10
    return {"a_over_n": a_n, "b_over_n": b_n, "within_declared": bool(ok)}


def _run_seminorms(cfg, f, dist, meta):
    sn = None
    if isinstance(dist, FiniteAlphabet):
        try:
            sn = seminorms_exact(f, dist)
        except BudgetExceededError:
            sn = None
    if sn is None:
        seed = substream_seed(cfg.master_seed, REFERENCE_KEY)
        meta["probe_seed"] = seed
        sn = seminorms_probe(f, dist, cfg.replications, seed)
    summary = {"method": sn.method, "probe_trials": sn.probe_trials, "m_value": sn.m_value, "j_value": sn.j_value}
    summary.update(_declared(f, cfg.n, sn))
    return summary, [], ()


_RUNNERS = {
    "variance_ci": _run_coverage,
    "empirical_bernstein": _run_coverage,
    "normality": _run_normality,
    "oracle_verify": _run_oracle,
    "seminorms": _run_seminorms,
}


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """Run the experiment described by ``cfg``.

    The output depends only on ``cfg`` (apart from ``wall_time_s``), not on
    the number of threads.
    """
    cfg.validate()
    start = time.perf_counter()
    dist = parse_distribution(cfg.dist)
    f = resolve_statistic(cfg.stat, cfg.n, dist)
    meta = {
        "package_version": __version__,
        "backend": BACKEND,
        "rng": RNG_NAME,
        "mode": cfg.mode,
        "stat": cfg.stat,
        "dist": cfg.dist,
        "n": cfg.n,
        "delta": cfg.delta,
        "replications": cfg.replications,
        "master_seed": cfg.master_seed,
        "params": None if f.params is None else {"a": f.params.a, "b": f.params.b},
    }
    summary, records, columns = _RUNNERS[cfg.mode](cfg, f, dist, meta)
    summary["wall_time_s"] = time.perf_counter() - start
    return ExperimentResult(cfg, meta, summary, records, columns)
