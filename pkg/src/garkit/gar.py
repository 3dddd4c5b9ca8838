"""First-order asymptotic representations and their algebra.

A :class:`GarRep` stands for

    J_n = C + n^{-1/2} ( G_n(h) + int_0^1 G_n(1(. <= Q(s))) ell(s) ds ) + o_P(n^{-1/2})

where ``G_n`` is the functional empirical process, ``Q`` the model quantile
function and ``ell`` the residual weight. The remainder is never stored.
Sums, products, quotients and smooth transforms of representations are again
representations; the influence terms and residual weights combine linearly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .empirical import BivariateSample, Sample, fep_apply, indicator_process_grid
from .errors import ConfigError, DivideByZeroConstant, EvalError
from .functions import (
    IDENTITY,
    ZERO,
    InfluenceFunction,
    ResidualWeight,
    WeightFunction,
    checked,
    linear_combination,
    residual_weight_from_q,
    scale,
)
from .quadrature import QuadratureRule, gauss_legendre


@dataclass(frozen=True)
class GarRep:
    """``fep_mean`` is ``E h(X)`` when known exactly; the algebra carries it
    along so evaluation need not fall back to quadrature."""

    constant: float
    fep_term: InfluenceFunction = ZERO
    residual: Optional[ResidualWeight] = None
    fep_mean: Optional[float] = None

    @property
    def is_simple(self) -> bool:
        """True for the residual-free (SGAR) form."""
        return self.residual is None

    @property
    def bivariate(self) -> bool:
        return self.fep_term.bivariate


def constant_rep(c: float) -> GarRep:
    return GarRep(float(c), ZERO, None, 0.0)


def mean_rep(h: InfluenceFunction, mean: float) -> GarRep:
    """Representation of ``(1/n) sum h(X_j)``; exact, no remainder."""
    return GarRep(float(mean), h, None, float(mean))


def residual_rep(q: WeightFunction, quantile: Callable, constant: float = 0.0) -> GarRep:
    """Representation of a pure residual sum ``(1/n) sum (F_n - F)(X_j) q(X_j)``."""
    return GarRep(float(constant), ZERO, residual_weight_from_q(q, quantile))


def _combine_residuals(a: float, ra: Optional[ResidualWeight], b: float, rb: Optional[ResidualWeight]):
    terms = [(c, r) for c, r in ((float(a), ra), (float(b), rb)) if r is not None and c != 0.0]
    if not terms:
        return None
    if len(terms) == 1:
        c, r = terms[0]
        if c == 1.0:
            return r
        origin = None
        if r.origin_q is not None:
            q0 = r.origin_q
            origin = WeightFunction(lambda x: c * q0(x), f"{c:g}*({q0.description})")
        return ResidualWeight(lambda s: c * r(s), origin, f"{c:g}*({r.tag})")
    (c1, r1), (c2, r2) = terms
    origin = None
    if r1.origin_q is not None and r2.origin_q is not None:
        q1, q2 = r1.origin_q, r2.origin_q
        origin = WeightFunction(lambda x: c1 * q1(x) + c2 * q2(x), f"{c1:g}*({q1.description}) + {c2:g}*({q2.description})")
    return ResidualWeight(lambda s: c1 * r1(s) + c2 * r2(s), origin, f"{c1:g}*({r1.tag}) + {c2:g}*({r2.tag})")


def _known_mean(r: GarRep) -> Optional[float]:
    return 0.0 if r.fep_term is ZERO else r.fep_mean


def _linear(c: float, a: float, ra: GarRep, b: float, rb: GarRep) -> GarRep:
    ma, mb = _known_mean(ra), _known_mean(rb)
    return GarRep(
        c,
        linear_combination(a, ra.fep_term, b, rb.fep_term),
        _combine_residuals(a, ra.residual, b, rb.residual),
        None if ma is None or mb is None else a * ma + b * mb,
    )


def gar_add(a: GarRep, b: GarRep) -> GarRep:
    return _linear(a.constant + b.constant, 1.0, a, 1.0, b)


def gar_mul(a: GarRep, b: GarRep) -> GarRep:
    # (A + dA)(B + dB) = AB + B dA + A dB + second order
    return _linear(a.constant * b.constant, b.constant, a, a.constant, b)


def gar_div(a: GarRep, b: GarRep) -> GarRep:
    if b.constant == 0.0:
        raise DivideByZeroConstant("denominator representation has zero constant")
    inv = 1.0 / b.constant
    return _linear(a.constant * inv, inv, a, -a.constant * inv * inv, b)


def gar_delta(a: GarRep, g: Callable[[float], float], g_prime: Callable[[float], float]) -> GarRep:
    """Smooth transform ``g(J_n) = g(C) + g'(C) (J_n - C) + ...``."""
    try:
        gc = float(g(a.constant))
        slope = float(g_prime(a.constant))
    except (ValueError, ZeroDivisionError, OverflowError) as exc:
        raise EvalError(f"g or g' failed at {a.constant!r}: {exc}") from exc
    if not (math.isfinite(gc) and math.isfinite(slope)):
        raise EvalError(f"g or g' is not finite at {a.constant!r}")
    m = _known_mean(a)
    return GarRep(gc, scale(slope, a.fep_term), _combine_residuals(slope, a.residual, 0.0, None),
                  None if m is None else slope * m)


def expectation(h: InfluenceFunction, model, quad: QuadratureRule | None = None) -> float:
    """``E h(X)`` under ``model``.

    Univariate models integrate ``h(Q(s))`` over (0, 1) with ``quad``;
    bivariate models use their own product rule.
    """
    if getattr(model, "bivariate", False):
        return model.expect(h)
    quad = quad or gauss_legendre()
    vals = checked(h(model.quantile(quad.nodes)), "h(Q(node))")
    return quad.integrate(vals)


def residual_integral(rep: GarRep, s: Sample, model, quad: QuadratureRule) -> float:
    """Quadrature of ``G_n(1(. <= Q(u))) ell(u)`` over (0, 1)."""
    if rep.residual is None:
        return 0.0
    ell = checked(rep.residual(quad.nodes), "ell(node)")
    proc = indicator_process_grid(s, model.quantile, quad.nodes)
    return quad.integrate(proc * ell)


def gar_evaluate(rep: GarRep, s: Sample | BivariateSample, model, quad: QuadratureRule | None = None) -> float:
    quad = quad or gauss_legendre()
    if quad.size < 2:
        raise ConfigError("quadrature needs at least 2 nodes")
    root_n = math.sqrt(s.n)
    value = rep.constant
    if rep.fep_term is not ZERO:
        mean = rep.fep_mean if rep.fep_mean is not None else expectation(rep.fep_term, model, quad)
        value += fep_apply(s, rep.fep_term, mean) / root_n
    if rep.residual is not None:
        if isinstance(s, BivariateSample):
            raise ConfigError("residual terms are univariate only")
        value += residual_integral(rep, s, model, quad) / root_n
    return value


__all__ = [
    "GarRep",
    "InfluenceFunction",
    "ResidualWeight",
    "IDENTITY",
    "ZERO",
    "constant_rep",
    "mean_rep",
    "residual_rep",
    "gar_add",
    "gar_mul",
    "gar_div",
    "gar_delta",
    "gar_evaluate",
    "expectation",
    "residual_integral",
]
