"""Seeded Monte Carlo experiments checking the asymptotic claims.

Every replicate draws from its own Philox stream keyed by
``(master seed, replicate id)``, so a replicate can be rerun in isolation and
the aggregate does not depend on how replicates are scheduled over threads.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from statistics import NormalDist
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import special

from .empirical import (
    Sample,
    bahadur_gap,
    indicator_process_grid,
    make_bivariate_sample,
    make_sample,
    residual_process,
    uniform_quantile_function,
)
from .errors import ConfigError, DomainError, ExperimentError, GarkitError
from .functions import WeightFunction, checked
from .gar import GarRep, residual_rep
from .indexes import (
    CorrelationMoments,
    corr_asymptotic_variance,
    corr_estimate,
    correlation_gar,
    gini_estimate,
    gini_gar,
)
from .models import open_uniforms
from .quadrature import QuadratureRule, gauss_legendre
from .variance import moment_conditions_check, total_variance

_M64 = (1 << 64) - 1
_REPLICATE_BITS = 40
MAX_FAILURE_FRACTION = 0.01


def replicate_rng(seed: int, replicate: int, block: int = 0) -> np.random.Generator:
    """Independent counter-based stream for one replicate.

    The Philox key is ``(seed mod 2**64, block * 2**40 + replicate)``, so
    distinct ``(block, replicate)`` pairs never share a stream.
    """
    if not 0 <= replicate < (1 << _REPLICATE_BITS):
        raise ConfigError(f"replicate id out of range: {replicate}")
    key = np.array([int(seed) & _M64, (int(block) << _REPLICATE_BITS) | int(replicate)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def default_threads() -> int:
    cap = os.environ.get("GARKIT_THREADS")
    n = os.cpu_count() or 1
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            raise ConfigError(f"GARKIT_THREADS must be an integer, got {cap!r}") from None
    return n


def _parallel_map(fn: Callable, items: Sequence, threads: Optional[int]) -> list:
    threads = default_threads() if threads is None else max(1, int(threads))
    if threads == 1 or len(items) < 2:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        # map() returns results in input order whatever the completion order
        return list(pool.map(fn, items))


def _draw(model, n: int, rng: np.random.Generator):
    data = model.sample(n, rng)
    if getattr(model, "bivariate", False):
        return make_bivariate_sample(data)
    return make_sample(data)


def sample_from(model, n: int, seed: int, replicate: int = 0):
    """Inverse-CDF sample of size ``n``; identical for identical arguments."""
    if n < 1:
        raise ConfigError("sample size must be >= 1")
    return _draw(model, n, replicate_rng(seed, replicate))


# ------------------------------------------------------------------ KS test


def normal_cdf(x: np.ndarray, variance: float) -> np.ndarray:
    return 0.5 * special.erfc(-np.asarray(x, dtype=float) / math.sqrt(2.0 * variance))


def ks_test_normal(values: Sequence[float], variance: float) -> float:
    """One-sample Kolmogorov-Smirnov distance to ``N(0, variance)``."""
    if not variance > 0:
        raise DomainError("KS reference variance must be positive")
    x = np.sort(np.asarray(values, dtype=float))
    if x.size < 100:
        raise DomainError(f"KS statistic needs at least 100 values, got {x.size}")
    n = x.size
    cdf = normal_cdf(x, variance)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - cdf), np.max(cdf - (i - 1) / n)))


def _ks_point_mass(values: np.ndarray) -> float:
    # distance to the point mass at 0, used when the predicted variance is 0
    x = np.sort(values)
    n = x.size
    emp_below = np.searchsorted(x, 0.0, side="left") / n
    emp_at = np.searchsorted(x, 0.0, side="right") / n
    return float(max(emp_below, 1.0 - emp_at))


# ------------------------------------------------------------- experiments


@dataclass(frozen=True)
class ExperimentConfig:
    """One Monte Carlo experiment.

    ``index`` is ``"gini"``, ``"correlation"`` or ``"custom"``; the custom
    case needs ``estimator`` and ``rep``.
    """

    index: str
    model: object
    n: int
    reps: int
    seed: int
    quad: QuadratureRule = field(default_factory=gauss_legendre)
    estimator: Optional[Callable] = None
    rep: Optional[GarRep] = None
    level: float = 0.95
    threads: Optional[int] = None

    def __post_init__(self):
        if self.n < 2:
            raise ConfigError("experiment needs n >= 2")
        if self.reps < 100:
            raise ConfigError("experiment needs at least 100 replicates")
        if not 0 < self.level < 1:
            raise ConfigError("confidence level must lie in (0, 1)")
        if self.index not in ("gini", "correlation", "custom"):
            raise ConfigError(f"unknown index {self.index!r}")


@dataclass
class MonteCarloReport:
    n: int
    reps: int
    center: float
    empirical_mean: float
    empirical_var: float
    predicted_var: float
    ks_statistic: float
    var_ratio: float
    ci_coverage: float
    failures: int
    values: np.ndarray = field(repr=False)

    @property
    def ks_reference(self) -> float:
        return 1.36 / math.sqrt(self.values.size) if self.values.size else math.nan

    def to_dict(self) -> dict:
        def num(v: float):
            return None if not math.isfinite(v) else float(v)

        return {
            "n": self.n,
            "reps": self.reps,
            "valid_reps": int(self.values.size),
            "failures": self.failures,
            "center": num(self.center),
            "empirical_mean": num(self.empirical_mean),
            "empirical_var": num(self.empirical_var),
            "predicted_var": num(self.predicted_var),
            "var_ratio": num(self.var_ratio),
            "ks_statistic": num(self.ks_statistic),
            "ks_reference": num(self.ks_reference),
            "ci_coverage": num(self.ci_coverage),
        }


def resolve_index(cfg: ExperimentConfig):
    """Estimator, centring constant and predicted variance for ``cfg``."""
    model = cfg.model
    bivariate = getattr(model, "bivariate", False)
    if cfg.index == "gini":
        if bivariate:
            raise ConfigError("gini needs a univariate model")
        rep = gini_gar(model, cfg.quad)
        return gini_estimate, rep.constant, total_variance(rep, model, cfg.quad).total
    if cfg.index == "correlation":
        if not bivariate:
            raise ConfigError("correlation needs a bivariate model (binorm:...)")
        mom = CorrelationMoments.from_model(model)
        return corr_estimate, correlation_gar(model).constant, corr_asymptotic_variance(mom)
    if cfg.estimator is None or cfg.rep is None:
        raise ConfigError("custom index needs an estimator and a representation")
    return cfg.estimator, cfg.rep.constant, total_variance(cfg.rep, model, cfg.quad).total


def run_experiment(cfg: ExperimentConfig) -> MonteCarloReport:
    estimator, center, predicted = resolve_index(cfg)
    root_n = math.sqrt(cfg.n)

    def one(b: int) -> float:
        try:
            sample = _draw(cfg.model, cfg.n, replicate_rng(cfg.seed, b))
            return root_n * (estimator(sample) - center)
        except GarkitError:
            return math.nan

    raw = np.array(_parallel_map(one, range(cfg.reps), cfg.threads), dtype=float)
    ok = np.isfinite(raw)
    failures = int(raw.size - ok.sum())
    if failures > MAX_FAILURE_FRACTION * cfg.reps:
        raise ExperimentError(f"{failures} of {cfg.reps} replicates failed")
    values = raw[ok]

    emp_mean = float(np.mean(values))
    emp_var = float(np.var(values, ddof=1))
    z = NormalDist().inv_cdf(0.5 + cfg.level / 2)
    half_width = z * math.sqrt(max(predicted, 0.0))
    coverage = float(np.mean(np.abs(values) <= half_width))
    if predicted > 0:
        ks = ks_test_normal(values, predicted)
        ratio = emp_var / predicted
    else:
        ks = _ks_point_mass(values)
        ratio = math.nan
    return MonteCarloReport(cfg.n, cfg.reps, center, emp_mean, emp_var, predicted, ks, ratio, coverage, failures, values)


# ------------------------------------------------------ decay diagnostics


def loglog_slope(ns: Sequence[int], values: Sequence[float]) -> float:
    """Least-squares slope of ``log(values)`` against ``log(ns)``; nan if any value is 0."""
    v = np.asarray(values, dtype=float)
    if np.any(v <= 0) or not np.all(np.isfinite(v)):
        return math.nan
    return float(np.polyfit(np.log(np.asarray(ns, dtype=float)), np.log(v), 1)[0])


def strictly_decreasing(values: Sequence[float]) -> bool:
    return all(b < a for a, b in zip(values, values[1:]))


@dataclass
class DecayTable:
    """Median statistics per sample size."""

    columns: tuple
    rows: list
    warnings: list = field(default_factory=list)

    def column(self, name: str) -> list:
        return [r[name] for r in self.rows]

    @property
    def ns(self) -> list:
        return self.column("n")

    def slope(self, name: str) -> float:
        return loglog_slope(self.ns, self.column(name))

    def decreasing(self, name: str) -> bool:
        return strictly_decreasing(self.column(name))

    def to_dict(self) -> dict:
        return {
            "rows": [dict(r) for r in self.rows],
            "slopes": {c: _nullable(self.slope(c)) for c in self.columns},
            "decreasing": {c: self.decreasing(c) for c in self.columns},
            "warnings": list(self.warnings),
        }


def _nullable(v: float):
    return None if not math.isfinite(v) else v


def _uniform_and_sample(model, n: int, rng: np.random.Generator):
    u = open_uniforms(rng, n)
    return u, make_sample(np.asarray(model.quantile(u), dtype=float))


def representation_gap(
    rep: GarRep,
    model,
    n_grid: Sequence[int],
    reps: int,
    seed: int,
    quad: QuadratureRule | None = None,
    threads: Optional[int] = None,
) -> DecayTable:
    """Median ``|sqrt(n) Re_n - int G_n(1(. <= Q(s))) ell(s) ds|`` per ``n``.

    The left side is the residual sum over the sample; the right side the
    quadrature of the indicator process against ``ell``. They share only the
    sample.
    """
    if rep.residual is None or rep.residual.origin_q is None:
        raise ConfigError("representation_gap needs a residual weight with its originating q")
    quad = quad or gauss_legendre()
    q = rep.residual.origin_q
    ell = checked(rep.residual(quad.nodes), "ell(node)")
    rows = []
    for block, n in enumerate(n_grid, start=1):
        root_n = math.sqrt(n)

        def one(r: int) -> float:
            _, s = _uniform_and_sample(model, n, replicate_rng(seed, r, block))
            lhs = root_n * residual_process(s, model.cdf, q)
            rhs = quad.integrate(indicator_process_grid(s, model.quantile, quad.nodes) * ell)
            return abs(lhs - rhs)

        gaps = np.array(_parallel_map(one, range(reps), threads))
        rows.append({"n": int(n), "median_gap": float(np.median(gaps))})
    return DecayTable(("median_gap",), rows)


def residual_condition_diagnostic(
    q: WeightFunction,
    model,
    n_grid: Sequence[int],
    reps: int,
    seed: int,
    quad: QuadratureRule | None = None,
    threads: Optional[int] = None,
) -> DecayTable:
    """Medians of the three statistics whose vanishing justifies the residual step.

    ``cre2``: ``|int sqrt(n)(s - V_n(s)) Delta_n(s) ds|``;
    ``mg07``: ``int (s(1-s))^{1/2} |Delta_n(s)| ds``;
    ``mg06``: ``n^{-1/2} mean(q(X))``,
    with ``Delta_n(s) = q(Q(V_n(s))) - q(Q(s))`` and ``V_n`` the uniform
    quantile function of the underlying uniforms.
    """
    quad = quad or gauss_legendre()
    s = quad.nodes
    q_at_quantile = checked(q(model.quantile(s)), "q(Q(node))")
    columns = ("cre2", "mg07", "mg06")
    rows = []
    for block, n in enumerate(n_grid, start=1):
        root_n = math.sqrt(n)

        def one(r: int):
            u, x = _uniform_and_sample(model, n, replicate_rng(seed, r, block))
            u_sorted = np.sort(u)
            v = uniform_quantile_function(u_sorted, s)
            with np.errstate(all="ignore"):
                delta = q(model.quantile(v)) - q_at_quantile
                cre2 = abs(quad.integrate(root_n * (s - v) * delta))
                mg07 = quad.integrate(np.sqrt(s * (1 - s)) * np.abs(delta))
                mg06 = float(np.mean(q(x.values))) / root_n
            return cre2, mg07, mg06

        stats = np.array(_parallel_map(one, range(reps), threads), dtype=float)
        med = np.median(stats, axis=0)
        rows.append({"n": int(n), **{c: float(m) for c, m in zip(columns, med)}})
    table = DecayTable(columns, rows)
    for c in columns:
        vals = table.column(c)
        if not all(math.isfinite(v) for v in vals):
            table.warnings.append(f"{c}: non-finite statistic")
        elif any(v != 0 for v in vals) and not table.decreasing(c):
            table.warnings.append(f"{c}: medians not decreasing over the n grid")
    flags = moment_conditions_check(residual_rep(q, model.quantile), model, quad)
    if not flags["Th33"]:
        table.warnings.append("E q(X)^2 appears infinite (heavy tail); residual conditions unreliable")
    return table


def bahadur_decay(n_grid: Sequence[int], reps: int, seed: int, threads: Optional[int] = None) -> DecayTable:
    """Median Bahadur-Kiefer gap over uniform samples, per ``n``."""
    rows = []
    for block, n in enumerate(n_grid, start=1):
        def one(r: int) -> float:
            u = open_uniforms(replicate_rng(seed, r, block), n)
            return bahadur_gap(make_sample(u))

        gaps = np.array(_parallel_map(one, range(reps), threads))
        rows.append({"n": int(n), "median_gap": float(np.median(gaps))})
    return DecayTable(("median_gap",), rows)
