"""Samples, empirical distribution/quantile functions and the empirical processes.

Every process here is centred at the *model* (a user supplied CDF, quantile
or mean), never at sample quantities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import BadValue, DomainError, EmptySample, EvalError
from .functions import InfluenceFunction, WeightFunction, checked


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class Sample:
    """Univariate observations, kept both in insertion and ascending order.

    ``ranks[j]`` is the 1-based rank of ``values[j]`` among the order
    statistics; ties are broken by insertion order (stable sort).
    """

    values: np.ndarray
    sorted: np.ndarray
    ranks: np.ndarray

    @property
    def n(self) -> int:
        return int(self.values.shape[0])

    def __len__(self) -> int:
        return self.n

    def __repr__(self) -> str:
        return f"Sample(n={self.n})"


@dataclass(frozen=True, eq=False)
class BivariateSample:
    pairs: np.ndarray  # shape (n, 2)

    @property
    def n(self) -> int:
        return int(self.pairs.shape[0])

    @property
    def x(self) -> np.ndarray:
        return self.pairs[:, 0]

    @property
    def y(self) -> np.ndarray:
        return self.pairs[:, 1]

    def __len__(self) -> int:
        return self.n


def _as_finite_array(raw: Iterable[float]) -> np.ndarray:
    arr = np.array(list(raw) if not isinstance(raw, np.ndarray) else raw, dtype=float)
    if arr.size == 0:
        raise EmptySample("sample needs at least one value")
    bad = ~np.isfinite(arr.ravel())
    if bad.any():
        idx = int(np.flatnonzero(bad)[0])
        raise BadValue(idx, float(arr.ravel()[idx]))
    return arr


def make_sample(raw: Sequence[float] | np.ndarray) -> Sample:
    values = _as_finite_array(raw).ravel()
    order = np.argsort(values, kind="stable")
    ranks = np.empty(values.shape[0], dtype=np.int64)
    ranks[order] = np.arange(1, values.shape[0] + 1)
    return Sample(_frozen(values), _frozen(values[order]), _frozen(ranks))


def make_bivariate_sample(raw) -> BivariateSample:
    arr = _as_finite_array(raw)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise DomainError(f"bivariate sample needs shape (n, 2), got {arr.shape}")
    if arr.shape[0] < 2:
        raise EmptySample("bivariate sample needs at least two pairs")
    return BivariateSample(_frozen(arr))


def ecdf_eval(s: Sample, x):
    """``F_n(x)``: fraction of observations ``<= x`` (right-continuous)."""
    counts = np.searchsorted(s.sorted, x, side="right")
    out = counts / s.n
    return float(out) if np.ndim(out) == 0 else out


def _quantile_index(n: int, p: np.ndarray) -> np.ndarray:
    # smallest j in 1..n with j/n >= p
    j = np.ceil(n * p).astype(np.int64)
    j = np.where((j - 1) / n >= p, j - 1, j)
    j = np.where(j / n < p, j + 1, j)
    return np.clip(j, 1, n)


def equantile_eval(s: Sample, p):
    """``F_n^{-1}(p) = X_{j,n}`` for ``(j-1)/n < p <= j/n``."""
    p_arr = np.asarray(p, dtype=float)
    if np.any((p_arr <= 0.0) | (p_arr >= 1.0)) or np.any(np.isnan(p_arr)):
        raise DomainError("quantile level must lie in (0, 1)")
    out = s.sorted[_quantile_index(s.n, p_arr) - 1]
    return float(out) if np.ndim(out) == 0 else out


def fep_apply(s: Sample | BivariateSample, h: InfluenceFunction, mean_h: float) -> float:
    """Functional empirical process ``n^{-1/2} sum_j (h(X_j) - mean_h)``."""
    data = s.pairs if isinstance(s, BivariateSample) else s.values
    vals = checked(h(data), "h(X_j)")
    return float(np.sum(vals - mean_h) / math.sqrt(s.n))


def indicator_function(threshold: float) -> InfluenceFunction:
    t = float(threshold)
    return InfluenceFunction(lambda x: (x <= t).astype(float), f"1(x <= {t:g})")


def _check_open_unit(u, what: str = "u") -> np.ndarray:
    u_arr = np.asarray(u, dtype=float)
    if np.any(~((u_arr > 0.0) & (u_arr < 1.0))):
        raise DomainError(f"{what} must lie in (0, 1)")
    return u_arr


def indicator_process(s: Sample, F_inv: Callable, u: float) -> float:
    """``G_n`` applied to the indicator of ``(-inf, F^{-1}(u)]``, centred at ``u``."""
    _check_open_unit(u)
    threshold = float(np.asarray(F_inv(np.asarray(u, dtype=float))))
    return fep_apply(s, indicator_function(threshold), float(u))


def indicator_process_grid(s: Sample, F_inv: Callable, u: np.ndarray) -> np.ndarray:
    """Vectorised :func:`indicator_process` over many levels (same values up to rounding)."""
    u = _check_open_unit(u)
    thresholds = np.asarray(F_inv(u), dtype=float)
    counts = np.searchsorted(s.sorted, thresholds, side="right")
    return math.sqrt(s.n) * (counts / s.n - u)


def residual_process(s: Sample, F: Callable, q: WeightFunction) -> float:
    """Un-normalised residual sum ``(1/n) sum_j (F_n(X_j) - F(X_j)) q(X_j)``."""
    x = s.values
    weights = checked(q(x), "q(X_j)")
    fn = np.searchsorted(s.sorted, x, side="right") / s.n
    return float(np.sum((fn - np.asarray(F(x), dtype=float)) * weights) / s.n)


def residual_process_ranks(s: Sample, F: Callable, q: WeightFunction) -> float:
    """Rank form ``(1/n) sum_j (R_j/n - F(X_j)) q(X_j)``; equals the above for distinct values."""
    x = s.values
    weights = checked(q(x), "q(X_j)")
    return float(np.sum((s.ranks / s.n - np.asarray(F(x), dtype=float)) * weights) / s.n)


def uniform_quantile_function(u_sorted: np.ndarray, s) -> np.ndarray:
    """``V_n(s)`` for sorted uniforms: ``U_{j,n}`` on ``((j-1)/n, j/n]``, ``U_{1,n}`` at 0."""
    n = u_sorted.shape[0]
    s_arr = np.asarray(s, dtype=float)
    grid = np.arange(1, n + 1) / n
    j = np.searchsorted(grid, s_arr, side="left") + 1
    return u_sorted[np.clip(j, 1, n) - 1]


def bahadur_gap(u_sample: Sample) -> float:
    """Bahadur-Kiefer distance ``sup_s |alpha_n(s) + beta_n(s)|`` on [0, 1].

    ``alpha_n(s) = sqrt(n)(U_n(s) - s)`` is the uniform empirical process and
    ``beta_n(s) = sqrt(n)(V_n(s) - s)`` the uniform quantile process. The sum
    is piecewise linear with slope -2 between the jump points
    ``{U_{j,n}} u {j/n} u {0, 1}``, so the supremum is the largest absolute
    one-sided limit at those points.
    """
    u = u_sample.sorted
    if np.any((u <= 0.0) | (u >= 1.0)):
        raise DomainError("bahadur_gap needs values strictly inside (0, 1)")
    n = u.shape[0]
    grid = np.arange(1, n + 1) / n
    b = np.unique(np.concatenate(([0.0, 1.0], u, grid)))

    un_left = np.searchsorted(u, b, side="left") / n
    un_right = np.searchsorted(u, b, side="right") / n
    # V_n is left-continuous: value at b equals its left limit
    j_left = np.clip(np.searchsorted(grid, b, side="left") + 1, 1, n)
    j_right = np.clip(np.searchsorted(grid, b, side="right") + 1, 1, n)
    vn_left = u[j_left - 1]
    vn_right = u[j_right - 1]

    left = np.abs(un_left + vn_left - 2.0 * b)
    right = np.abs(un_right + vn_right - 2.0 * b)
    return float(math.sqrt(n) * max(left.max(), right.max()))
