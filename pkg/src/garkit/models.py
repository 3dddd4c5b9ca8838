"""Parametric distribution models and the ``name:p1,p2`` model-spec grammar."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import special

from .errors import ModelError

_TWO53 = float(2**53)


def open_uniforms(rng: np.random.Generator, size) -> np.ndarray:
    """Uniforms strictly inside (0, 1): midpoints of a 2**-53 lattice."""
    k = rng.integers(0, 2**53, size=size, dtype=np.int64)
    return (k + 0.5) / _TWO53


@dataclass(frozen=True, eq=False)
class DistributionModel:
    """A continuous univariate law, given by CDF and quantile function.

    Sampling is by inversion: ``quantile(U)`` with ``U`` uniform on (0, 1).
    """

    name: str
    params: tuple
    cdf: Callable[[np.ndarray], np.ndarray]
    quantile: Callable[[np.ndarray], np.ndarray]
    support: tuple
    density: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, repr=False)

    bivariate = False

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return np.asarray(self.quantile(open_uniforms(rng, n)), dtype=float)

    @property
    def spec(self) -> str:
        return f"{self.name}:" + ",".join(f"{p:g}" for p in self.params)

    def __repr__(self) -> str:
        return f"DistributionModel({self.spec})"


def uniform(a: float = 0.0, b: float = 1.0) -> DistributionModel:
    a, b = float(a), float(b)
    if not b > a:
        raise ModelError(f"uniform needs a < b, got ({a}, {b})")
    w = b - a
    return DistributionModel(
        "uniform",
        (a, b),
        cdf=lambda x: np.clip((np.asarray(x, dtype=float) - a) / w, 0.0, 1.0),
        quantile=lambda s: a + w * np.asarray(s, dtype=float),
        support=(a, b),
        density=lambda x: np.where((np.asarray(x) >= a) & (np.asarray(x) <= b), 1.0 / w, 0.0),
    )


def exponential(rate: float = 1.0) -> DistributionModel:
    rate = float(rate)
    if not rate > 0:
        raise ModelError(f"exponential rate must be positive, got {rate}")
    return DistributionModel(
        "exp",
        (rate,),
        cdf=lambda x: -np.expm1(-rate * np.maximum(np.asarray(x, dtype=float), 0.0)),
        quantile=lambda s: -np.log1p(-np.asarray(s, dtype=float)) / rate,
        support=(0.0, math.inf),
        density=lambda x: np.where(np.asarray(x) >= 0, rate * np.exp(-rate * np.maximum(x, 0.0)), 0.0),
    )


def pareto(scale: float = 1.0, shape: float = 1.5) -> DistributionModel:
    xm, alpha = float(scale), float(shape)
    if not (xm > 0 and alpha > 0):
        raise ModelError(f"pareto needs positive scale and shape, got ({xm}, {alpha})")

    def cdf(x):
        x = np.maximum(np.asarray(x, dtype=float), xm)
        return -np.expm1(alpha * np.log(xm / x))

    return DistributionModel(
        "pareto",
        (xm, alpha),
        cdf=cdf,
        quantile=lambda s: xm * np.power(1.0 - np.asarray(s, dtype=float), -1.0 / alpha),
        support=(xm, math.inf),
        density=lambda x: np.where(np.asarray(x) >= xm, alpha * xm**alpha / np.maximum(x, xm) ** (alpha + 1), 0.0),
    )


def lognormal(mu: float = 0.0, sigma: float = 1.0) -> DistributionModel:
    mu, sigma = float(mu), float(sigma)
    if not sigma > 0:
        raise ModelError(f"lognormal sigma must be positive, got {sigma}")

    def cdf(x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            z = (np.log(np.maximum(x, 0.0)) - mu) / sigma
        return special.ndtr(z)

    def density(x):
        x = np.asarray(x, dtype=float)
        pos = np.maximum(x, 1e-300)
        d = np.exp(-0.5 * ((np.log(pos) - mu) / sigma) ** 2) / (pos * sigma * math.sqrt(2 * math.pi))
        return np.where(x > 0, d, 0.0)

    return DistributionModel(
        "lognormal",
        (mu, sigma),
        cdf=cdf,
        quantile=lambda s: np.exp(mu + sigma * special.ndtri(np.asarray(s, dtype=float))),
        support=(0.0, math.inf),
        density=density,
    )


@dataclass(frozen=True, eq=False)
class BivariateNormalModel:
    """Bivariate normal law; used by the correlation index only."""

    rho: float = 0.0
    mu_x: float = 0.0
    mu_y: float = 0.0
    sigma_x: float = 1.0
    sigma_y: float = 1.0

    bivariate = True
    name = "binorm"

    def __post_init__(self):
        if not (-1.0 < self.rho < 1.0):
            raise ModelError(f"binorm needs |rho| < 1, got {self.rho}")
        if not (self.sigma_x > 0 and self.sigma_y > 0):
            raise ModelError("binorm needs positive standard deviations")

    @property
    def params(self) -> tuple:
        return (self.rho, self.mu_x, self.mu_y, self.sigma_x, self.sigma_y)

    @property
    def spec(self) -> str:
        return "binorm:" + ",".join(f"{p:g}" for p in self.params)

    def _map(self, z1: np.ndarray, z2: np.ndarray) -> np.ndarray:
        x = self.mu_x + self.sigma_x * z1
        y = self.mu_y + self.sigma_y * (self.rho * z1 + math.sqrt(1.0 - self.rho**2) * z2)
        return np.stack([x, y], axis=-1)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        u = open_uniforms(rng, (n, 2))
        z = special.ndtri(u)
        return self._map(z[:, 0], z[:, 1])

    def expect(self, f: Callable[[np.ndarray], np.ndarray], nodes: int = 40) -> float:
        """``E f(X, Y)`` by a tensor Gauss-Hermite rule (exact for polynomials of degree < 2*nodes)."""
        t, w = np.polynomial.hermite_e.hermegauss(nodes)
        w = w / math.sqrt(2.0 * math.pi)
        z1, z2 = np.meshgrid(t, t, indexing="ij")
        ww = np.outer(w, w)
        pts = self._map(z1.ravel(), z2.ravel())
        vals = np.asarray(f(pts), dtype=float)
        return float(np.dot(ww.ravel(), vals))

    def __repr__(self) -> str:
        return f"BivariateNormalModel({self.spec})"


_BUILDERS = {
    "uniform": (uniform, 2),
    "exp": (exponential, 1),
    "exponential": (exponential, 1),
    "pareto": (pareto, 2),
    "lognormal": (lognormal, 2),
}


def parse_model_spec(spec: str):
    """Parse ``name:p1,p2,...``; e.g. ``uniform:0,1``, ``exp:1``, ``binorm:0.5``."""
    if not isinstance(spec, str) or not spec.strip():
        raise ModelError("empty model spec")
    name, _, rest = spec.strip().partition(":")
    name = name.strip().lower()
    try:
        params = [float(p) for p in rest.split(",")] if rest.strip() else []
    except ValueError as exc:
        raise ModelError(f"bad parameters in model spec {spec!r}") from exc
    if name == "binorm":
        if len(params) not in (1, 3, 5):
            raise ModelError("binorm takes rho[,mu_x,mu_y[,sigma_x,sigma_y]]")
        return BivariateNormalModel(*params)
    if name not in _BUILDERS:
        raise ModelError(f"unknown model {name!r}; known: {sorted(_BUILDERS) + ['binorm']}")
    builder, arity = _BUILDERS[name]
    if len(params) != arity:
        raise ModelError(f"model {name!r} takes {arity} parameter(s), got {len(params)}")
    return builder(*params)
