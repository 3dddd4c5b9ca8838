"""Asymptotic variance of a representation.

For ``J_n`` with influence term ``h`` and residual weight ``ell`` the limit
variance of ``sqrt(n)(J_n - C)`` is ``gamma1 + gamma2 + 2 gamma3`` with

    gamma1 = Cov(h(X), h(X))
    gamma2 = int int (min(s, t) - s t) ell(s) ell(t) ds dt
    gamma3 = int Cov(h(X), 1(X <= Q(s))) ell(s) ds

All integrals run over (0, 1) after substituting ``x = Q(s)``, so a density is
never needed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .functions import InfluenceFunction, ResidualWeight, checked
from .gar import GarRep, expectation
from .quadrature import QuadratureRule, gauss_legendre

MOMENT_TOLERANCE = 0.05


@dataclass(frozen=True)
class VarianceReport:
    gamma1: float
    gamma2: float
    gamma3: float
    moment_flags: dict = field(default_factory=dict)

    @property
    def total(self) -> float:
        return self.gamma1 + self.gamma2 + 2.0 * self.gamma3

    def to_dict(self) -> dict:
        return {
            "gamma1": self.gamma1,
            "gamma2": self.gamma2,
            "gamma3": self.gamma3,
            "total": self.total,
            "moment_flags": dict(self.moment_flags),
        }


def _values(h: InfluenceFunction, model, quad: QuadratureRule) -> np.ndarray:
    return checked(h(model.quantile(quad.nodes)), "h(Q(node))")


def gamma_cov(h1: InfluenceFunction, h2: InfluenceFunction, model, quad: QuadratureRule | None = None) -> float:
    """Covariance ``E[(h1 - E h1)(h2 - E h2)]`` under ``model``."""
    quad = quad or gauss_legendre()
    if getattr(model, "bivariate", False):
        m1 = model.expect(h1)
        m2 = model.expect(h2)
        return model.expect(lambda xy: (h1(xy) - m1) * (h2(xy) - m2))
    v1 = _values(h1, model, quad)
    v2 = v1 if h2 is h1 else _values(h2, model, quad)
    m1 = quad.integrate(v1)
    m2 = m1 if h2 is h1 else quad.integrate(v2)
    return quad.integrate((v1 - m1) * (v2 - m2))


def indicator_cov(s: float, t: float) -> float:
    """Covariance of ``1(U <= s)`` and ``1(U <= t)`` for a continuous law."""
    if not (0.0 < s < 1.0 and 0.0 < t < 1.0):
        raise DomainError("indicator_cov arguments must lie in (0, 1)")
    return min(s, t) - s * t


def gamma2(ell: ResidualWeight, quad: QuadratureRule | None = None) -> float:
    # The kernel min(s,t) - st has a ridge on s = t, so each triangle is
    # integrated separately: 2 * int_0^1 (1-t) ell(t) int_0^t s ell(s) ds dt.
    quad = quad or gauss_legendre()
    t = quad.nodes
    ell_t = checked(ell(t), "ell(node)")
    inner_nodes, inner_weights = quad.on_interval(0.0, t)
    inner_ell = checked(ell(inner_nodes), "ell(node)")
    inner = np.sum(inner_weights * inner_nodes * inner_ell, axis=-1)
    return 2.0 * quad.integrate((1.0 - t) * ell_t * inner)


def gamma3(h: InfluenceFunction, ell: ResidualWeight, model, quad: QuadratureRule | None = None) -> float:
    quad = quad or gauss_legendre()
    s = quad.nodes
    ell_s = checked(ell(s), "ell(node)")
    mean_h = expectation(h, model, quad)
    inner_nodes, inner_weights = quad.on_interval(0.0, s)
    partial = np.sum(inner_weights * checked(h(model.quantile(inner_nodes)), "h(Q(node))"), axis=-1)
    return quad.integrate((partial - s * mean_h) * ell_s)


def _stable(integral, quad: QuadratureRule) -> bool:
    """Heuristic finiteness test: the estimate must not move by more than 5% when nodes double."""
    with np.errstate(all="ignore"):
        try:
            a = integral(quad)
            b = integral(quad.doubled())
        except (ArithmeticError, ValueError):
            return False
    if not (math.isfinite(a) and math.isfinite(b)):
        return False
    if a == b:
        return True
    return abs(b - a) <= MOMENT_TOLERANCE * max(abs(a), abs(b))


def moment_conditions_check(rep: GarRep, model, quad: QuadratureRule | None = None) -> dict:
    """Flags for ``E h^2`` (Th11), ``E h^2 q^2`` (Th12) and ``E q^2`` (Th33) being finite.

    Heuristic: moments cannot be decided numerically; a moment is flagged
    infinite when its quadrature estimate is unstable under node doubling.
    """
    quad = quad or gauss_legendre()
    h = rep.fep_term
    if getattr(model, "bivariate", False):
        def second_moment(nodes):
            return model.expect(lambda xy: h(xy) ** 2, nodes=nodes)

        a, b = second_moment(40), second_moment(80)
        th11 = math.isfinite(a) and math.isfinite(b) and abs(b - a) <= MOMENT_TOLERANCE * max(abs(a), abs(b), 1e-300)
        return {"Th11": bool(th11), "Th12": True, "Th33": True, "heuristic": True}

    def h_sq(qr: QuadratureRule) -> np.ndarray:
        return h(model.quantile(qr.nodes)) ** 2

    th11 = _stable(lambda qr: qr.integrate(h_sq(qr)), quad)
    if rep.residual is None:
        return {"Th11": th11, "Th12": True, "Th33": True, "heuristic": True}
    ell = rep.residual
    # ell = q o Q, so E q(X)^2 = int ell^2
    th33 = _stable(lambda qr: qr.integrate(ell(qr.nodes) ** 2), quad)
    th12 = _stable(lambda qr: qr.integrate(h_sq(qr) * ell(qr.nodes) ** 2), quad)
    return {"Th11": th11, "Th12": th12, "Th33": th33, "heuristic": True}


def total_variance(rep: GarRep, model, quad: QuadratureRule | None = None) -> VarianceReport:
    quad = quad or gauss_legendre()
    g1 = gamma_cov(rep.fep_term, rep.fep_term, model, quad)
    g2 = g3 = 0.0
    if rep.residual is not None:
        g2 = gamma2(rep.residual, quad)
        g3 = gamma3(rep.fep_term, rep.residual, model, quad)
    return VarianceReport(g1, g2, g3, moment_conditions_check(rep, model, quad))
