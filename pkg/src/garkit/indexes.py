"""Concrete indexes: Gini, linear correlation, smooth functions of one sample mean."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional

import numpy as np

from .empirical import BivariateSample, Sample
from .errors import BadValue, DegenerateSample, EvalError, ModelError
from .functions import IDENTITY, InfluenceFunction, ResidualWeight, WeightFunction, checked
from .gar import GarRep, constant_rep, expectation, gar_add, gar_delta, gar_div, gar_mul, mean_rep
from .quadrature import QuadratureRule, gauss_legendre

# --------------------------------------------------------------------- Gini


def gini_estimate(s: Sample, allow_negative: bool = False) -> float:
    """Plug-in Gini index.

    ``J_n = [(1/n) sum_j ((2j-1)/n - 1) X_{j,n}] / mean(X)``.
    Negative values raise :class:`BadValue` unless ``allow_negative`` is set,
    in which case a warning is emitted instead.
    """
    x = s.sorted
    n = s.n
    if x[0] < 0:
        idx = int(np.flatnonzero(s.values < 0)[0])
        if not allow_negative:
            raise BadValue(idx, float(s.values[idx]), "negative value in income sample")
        warnings.warn("negative values in Gini sample", RuntimeWarning, stacklevel=2)
    mean = float(np.mean(s.values))
    if mean == 0.0:
        raise DegenerateSample("Gini index undefined for a sample with zero mean")
    j = np.arange(1, n + 1)
    weighted = float(np.sum(((2 * j - 1) / n - 1.0) * x)) / n
    return weighted / mean


@dataclass(frozen=True)
class GiniComponents:
    mu: float
    mean_H: float
    h1: InfluenceFunction
    H: InfluenceFunction
    h: InfluenceFunction
    ell: ResidualWeight


def gini_components(model, quad: QuadratureRule | None = None) -> GiniComponents:
    """Population quantities of the Gini representation, by quantile-domain quadrature."""
    quad = quad or gauss_legendre()
    s = quad.nodes
    qs = checked(np.asarray(model.quantile(s), dtype=float), "Q(node)")
    mu = quad.integrate(qs)
    # a mean that is zero up to quadrature roundoff counts as non-positive
    if not mu > 1e-12 * quad.integrate(np.abs(qs)):
        raise ModelError(f"Gini index needs a positive model mean, got {mu}")
    # E[(2F(X) - 1) X] = int (2s - 1) Q(s) ds for continuous F
    mean_H = quad.integrate((2.0 * s - 1.0) * qs)
    cdf = model.cdf
    H = InfluenceFunction(lambda x: (2.0 * cdf(x) - 1.0) * x, "(2F(x)-1)x")
    h = InfluenceFunction(lambda x: (mu * H(x) - mean_H * x) / mu**2, "gini h")
    q = WeightFunction(lambda x: 2.0 * np.asarray(x, dtype=float) / mu, "2x/mu")
    ell = ResidualWeight(lambda u: 2.0 * np.asarray(model.quantile(u), dtype=float) / mu, q, "2Q(s)/mu")
    return GiniComponents(mu, mean_H, IDENTITY, H, h, ell)


def gini_gar(model, quad: QuadratureRule | None = None) -> GarRep:
    """Representation of the plug-in Gini index, assembled with the algebra.

    ``1/mean`` comes from the delta method, the L-statistic numerator
    ``mean(H) + residual`` carries the weight ``q(x) = 2x``, and the two are
    multiplied.
    """
    comp = gini_components(model, quad)
    mu = comp.mu
    inverse_mean = gar_delta(mean_rep(comp.h1, mu), lambda m: 1.0 / m, lambda m: -1.0 / m**2)
    q = WeightFunction(lambda x: 2.0 * np.asarray(x, dtype=float), "2x")
    numerator = GarRep(
        comp.mean_H,
        comp.H,
        ResidualWeight(lambda u: 2.0 * np.asarray(model.quantile(u), dtype=float), q, "2Q(s)"),
        comp.mean_H,
    )
    return gar_mul(inverse_mean, numerator)


# -------------------------------------------------------------- correlation


def corr_estimate(b: BivariateSample) -> float:
    x = b.x - b.x.mean()
    y = b.y - b.y.mean()
    sxx = float(np.dot(x, x))
    syy = float(np.dot(y, y))
    if sxx == 0.0 or syy == 0.0:
        raise DegenerateSample("correlation undefined: a coordinate is constant")
    r = float(np.dot(x, y)) / math.sqrt(sxx * syy)
    return min(1.0, max(-1.0, r))


@dataclass(frozen=True)
class CorrelationMoments:
    """Moments entering the correlation limit variance.

    ``mu22``, ``mu31``, ``mu13`` are mixed central moments
    ``E[(X - mu_x)^p (Y - mu_y)^q]``; ``mu4_x``, ``mu4_y`` fourth central moments.
    """

    mu_x: float
    mu_y: float
    sigma_x: float
    sigma_y: float
    rho: float
    mu22: float
    mu31: float
    mu13: float
    mu4_x: float
    mu4_y: float

    def __post_init__(self):
        if not (self.sigma_x > 0 and self.sigma_y > 0):
            raise DegenerateSample("correlation needs non-degenerate coordinates")
        if not abs(self.rho) < 1:
            raise DegenerateSample("correlation variance excludes |rho| = 1")

    @classmethod
    def bivariate_normal(cls, rho: float, sigma_x: float = 1.0, sigma_y: float = 1.0,
                         mu_x: float = 0.0, mu_y: float = 0.0) -> "CorrelationMoments":
        sx2, sy2 = sigma_x**2, sigma_y**2
        return cls(
            mu_x, mu_y, sigma_x, sigma_y, rho,
            mu22=sx2 * sy2 * (1 + 2 * rho**2),
            mu31=3 * rho * sigma_x**3 * sigma_y,
            mu13=3 * rho * sigma_x * sigma_y**3,
            mu4_x=3 * sx2**2,
            mu4_y=3 * sy2**2,
        )

    @classmethod
    def from_model(cls, model) -> "CorrelationMoments":
        """Moments of a bivariate model with an ``expect`` method."""
        mx = model.expect(lambda p: p[..., 0])
        my = model.expect(lambda p: p[..., 1])

        def central(a: int, b: int) -> float:
            return model.expect(lambda p: (p[..., 0] - mx) ** a * (p[..., 1] - my) ** b)

        sx = math.sqrt(central(2, 0))
        sy = math.sqrt(central(0, 2))
        return cls(mx, my, sx, sy, central(1, 1) / (sx * sy),
                   central(2, 2), central(3, 1), central(1, 3), central(4, 0), central(0, 4))

    @classmethod
    def from_sample(cls, b: BivariateSample) -> "CorrelationMoments":
        x = b.x - b.x.mean()
        y = b.y - b.y.mean()
        sx = math.sqrt(np.mean(x * x))
        sy = math.sqrt(np.mean(y * y))
        if sx == 0 or sy == 0:
            raise DegenerateSample("correlation undefined: a coordinate is constant")
        return cls(float(b.x.mean()), float(b.y.mean()), sx, sy, float(np.mean(x * y)) / (sx * sy),
                   float(np.mean(x**2 * y**2)), float(np.mean(x**3 * y)), float(np.mean(x * y**3)),
                   float(np.mean(x**4)), float(np.mean(y**4)))


def corr_asymptotic_variance(mom: CorrelationMoments) -> float:
    """Limit variance of ``sqrt(n)(rho_n - rho)``."""
    sx, sy, rho = mom.sigma_x, mom.sigma_y, mom.rho
    return (
        sx**-2 * sy**-2 * (1 + rho**2 / 2) * mom.mu22
        + rho**2 * (sx**-4 * mom.mu4_x + sy**-4 * mom.mu4_y) / 4
        - rho * (sx**-3 * sy**-1 * mom.mu31 + sx**-1 * sy**-3 * mom.mu13)
    )


def corr_null_variance(mom: CorrelationMoments) -> float:
    """Limit variance of ``sqrt(n) rho_n`` when ``rho = 0``."""
    return mom.sigma_x**-2 * mom.sigma_y**-2 * mom.mu22


def correlation_gar(model) -> GarRep:
    """Representation of the plug-in correlation built from five sample means.

    ``rho_n = S_xy / sqrt(S_xx S_yy)`` with ``S_ab = mean(ab) - mean(a) mean(b)``.
    """
    def coord(f: Callable[[np.ndarray], np.ndarray], tag: str) -> GarRep:
        h = InfluenceFunction(f, tag, bivariate=True)
        return mean_rep(h, model.expect(h))

    mx = coord(lambda p: p[..., 0], "x")
    my = coord(lambda p: p[..., 1], "y")
    mxx = coord(lambda p: p[..., 0] ** 2, "x^2")
    myy = coord(lambda p: p[..., 1] ** 2, "y^2")
    mxy = coord(lambda p: p[..., 0] * p[..., 1], "xy")
    minus = constant_rep(-1.0)

    def centred(mab: GarRep, ma: GarRep, mb: GarRep) -> GarRep:
        return gar_add(mab, gar_mul(minus, gar_mul(ma, mb)))

    sxy = centred(mxy, mx, my)
    sxx = centred(mxx, mx, mx)
    syy = centred(myy, my, my)
    if not (sxx.constant > 0 and syy.constant > 0):
        raise ModelError("correlation needs non-degenerate coordinates")
    root = gar_delta(gar_mul(sxx, syy), math.sqrt, lambda v: 0.5 / math.sqrt(v))
    return gar_div(sxy, root)


# -------------------------------------------------------- smooth mean index

G_TRANSFORMS: dict[str, tuple[Callable[[float], float], Callable[[float], float]]] = {
    "identity": (lambda v: v, lambda v: 1.0),
    "sqrt": (math.sqrt, lambda v: 0.5 / math.sqrt(v)),
    "square": (lambda v: v * v, lambda v: 2.0 * v),
    "log": (math.log, lambda v: 1.0 / v),
}


class SmoothMomentIndex(NamedTuple):
    estimator: Callable[[Sample], float]
    representation: Callable[..., GarRep]


def smooth_moment_index(
    h: InfluenceFunction,
    g: Optional[Callable[[float], float]] = None,
    g_prime: Optional[Callable[[float], float]] = None,
) -> SmoothMomentIndex:
    """Index ``g((1/n) sum h(X_j))`` and its residual-free representation."""
    if (g is None) != (g_prime is None):
        raise ValueError("g and g_prime must be given together")

    def _apply_g(v: float) -> float:
        if g is None:
            return v
        try:
            out = float(g(v))
        except (ValueError, ZeroDivisionError, OverflowError) as exc:
            raise EvalError(f"g failed at {v!r}: {exc}") from exc
        if not math.isfinite(out):
            raise EvalError(f"g is not finite at {v!r}")
        return out

    def estimator(s: Sample) -> float:
        data = s.pairs if isinstance(s, BivariateSample) else s.values
        return _apply_g(float(np.mean(checked(h(data), "h(X_j)"))))

    def representation(model, quad: QuadratureRule | None = None) -> GarRep:
        base = mean_rep(h, expectation(h, model, quad))
        if g is None:
            return base
        return gar_delta(base, g, g_prime)

    return SmoothMomentIndex(estimator, representation)
