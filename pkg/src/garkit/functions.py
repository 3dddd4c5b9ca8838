"""Evaluable real maps: influence functions, weight functions, residual weights.

All maps are vectorised: they take a numpy array and return an array of the
same shape. Composition is done by building new closures; there is no
symbolic layer.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import EvalError

ArrayMap = Callable[[np.ndarray], np.ndarray]


def _broadcast(func: ArrayMap, x: np.ndarray) -> np.ndarray:
    out = np.asarray(func(x), dtype=float)
    if out.shape != np.shape(x):
        out = np.broadcast_to(out, np.shape(x)).astype(float)
    return out


@dataclass(frozen=True)
class InfluenceFunction:
    """A real function of one observation.

    Univariate functions receive a 1-d array of observations. Bivariate ones
    (``bivariate=True``) receive an ``(n, 2)`` array of pairs.
    """

    func: ArrayMap
    tag: str = "h"
    bivariate: bool = False

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.bivariate:
            out = np.asarray(self.func(x), dtype=float)
            return np.broadcast_to(out, x.shape[:-1]).astype(float)
        return _broadcast(self.func, x)

    def __repr__(self) -> str:
        return f"InfluenceFunction({self.tag})"


def constant_function(c: float, bivariate: bool = False) -> InfluenceFunction:
    tag = "0" if c == 0 else repr(float(c))
    if bivariate:
        return InfluenceFunction(lambda xy: np.full(np.shape(xy)[:-1], float(c)), tag, True)
    return InfluenceFunction(lambda x: np.full(np.shape(x), float(c)), tag)


ZERO = constant_function(0.0)
IDENTITY = InfluenceFunction(lambda x: x, "x")


def linear_combination(a: float, f: InfluenceFunction, b: float, g: InfluenceFunction) -> InfluenceFunction:
    """Pointwise ``a*f + b*g``."""
    if f.bivariate != g.bivariate:
        # a univariate zero may still be combined with a bivariate map
        if f.tag == "0":
            f = constant_function(0.0, g.bivariate)
        elif g.tag == "0":
            g = constant_function(0.0, f.bivariate)
        else:
            raise ValueError("cannot combine univariate and bivariate influence functions")
    a = float(a)
    b = float(b)
    if b == 0.0 and a == 1.0:
        return f
    if a == 0.0 and b == 1.0:
        return g
    tag = f"{a:g}*({f.tag}) + {b:g}*({g.tag})"
    return InfluenceFunction(lambda x: a * f(x) + b * g(x), tag, f.bivariate)


def scale(c: float, f: InfluenceFunction) -> InfluenceFunction:
    c = float(c)
    if c == 1.0:
        return f
    return InfluenceFunction(lambda x: c * f(x), f"{c:g}*({f.tag})", f.bivariate)


@dataclass(frozen=True)
class WeightFunction:
    """The weight ``q`` multiplying ``F_n(X_j) - F(X_j)`` in a residual sum."""

    q: ArrayMap
    description: str = "q"

    def __call__(self, x) -> np.ndarray:
        return _broadcast(self.q, np.asarray(x, dtype=float))


@dataclass(frozen=True)
class ResidualWeight:
    """Quantile-domain weight of the residual integral, a map on (0, 1).

    When built from a weight ``q`` under a model with quantile ``Q`` it is
    ``s -> q(Q(s))``; see :func:`residual_weight_from_q`.
    """

    ell: ArrayMap
    origin_q: Optional[WeightFunction] = None
    tag: str = field(default="ell")

    def __call__(self, s) -> np.ndarray:
        return _broadcast(self.ell, np.asarray(s, dtype=float))


def residual_weight_from_q(q: WeightFunction, quantile: ArrayMap) -> ResidualWeight:
    return ResidualWeight(lambda s: q(quantile(s)), q, f"{q.description} o Finv")


def checked(values: np.ndarray, what: str = "function value") -> np.ndarray:
    """Raise :class:`EvalError` naming the first non-finite entry."""
    bad = ~np.isfinite(values)
    if bad.any():
        idx = int(np.flatnonzero(bad.ravel())[0])
        raise EvalError(f"non-finite {what}", idx)
    return values
