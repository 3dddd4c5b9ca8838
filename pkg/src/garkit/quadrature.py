"""Gauss-Legendre rules on the unit interval."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConfigError

DEFAULT_NODES = 256


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Nodes strictly inside (0, 1), increasing; positive weights summing to 1."""

    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if nodes.ndim != 1 or nodes.shape != weights.shape:
            raise ConfigError("nodes and weights must be 1-d arrays of equal length")
        if nodes.size < 2:
            raise ConfigError("a quadrature rule needs at least 2 nodes")
        if nodes[0] <= 0.0 or nodes[-1] >= 1.0 or np.any(np.diff(nodes) <= 0):
            raise ConfigError("nodes must be strictly increasing inside (0, 1)")
        if np.any(weights <= 0):
            raise ConfigError("weights must be positive")

    @property
    def size(self) -> int:
        return int(self.nodes.shape[0])

    def integrate(self, values: np.ndarray) -> float:
        """Integral over (0, 1) of a function sampled at the nodes."""
        return float(np.dot(self.weights, values))

    def on_interval(self, a, b):
        """Nodes and weights mapped onto ``(a, b)``; ``a``/``b`` may be arrays.

        Returns arrays of shape ``broadcast(a, b).shape + (size,)``.
        """
        a = np.asarray(a, dtype=float)[..., None]
        b = np.asarray(b, dtype=float)[..., None]
        width = b - a
        return a + width * self.nodes, width * self.weights

    def doubled(self) -> "QuadratureRule":
        return gauss_legendre(2 * self.size)


@lru_cache(maxsize=32)
def _leggauss_unit(n: int):
    t, w = np.polynomial.legendre.leggauss(n)
    nodes = 0.5 * (t + 1.0)
    weights = 0.5 * w
    nodes.flags.writeable = False
    weights.flags.writeable = False
    return nodes, weights


def gauss_legendre(n: int = DEFAULT_NODES) -> QuadratureRule:
    if int(n) < 2:
        raise ConfigError(f"quadrature node count must be >= 2, got {n}")
    nodes, weights = _leggauss_unit(int(n))
    return QuadratureRule(nodes, weights)
