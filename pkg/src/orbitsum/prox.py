"""Proximal operators with closed forms."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .convex import ConvexSet
from .errors import ConfigError
from .metric import Point, as_point


def soft_threshold(x, thresh):
    return np.sign(x) * np.maximum(np.abs(x) - thresh, 0.0)


class Prox:
    def prox(self, x: np.ndarray, lam: float) -> Point:
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class QuadraticProx(Prox):
    """g(u) = weight/2 * ||u - center||^2"""

    center: np.ndarray
    weight: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "center", as_point(self.center))
        if not self.weight > 0:
            raise ConfigError("quadratic weight must be positive", field="prox.weight")

    def prox(self, x, lam):
        t = lam * self.weight
        return (x + t * self.center) / (1.0 + t)


@dataclass(frozen=True, eq=False)
class L1Prox(Prox):
    """g(u) = weight * ||u||_1"""

    weight: float = 1.0

    def __post_init__(self):
        if not self.weight > 0:
            raise ConfigError("l1 weight must be positive", field="prox.weight")

    def prox(self, x, lam):
        return soft_threshold(x, lam * self.weight)


@dataclass(frozen=True, eq=False)
class IndicatorProx(Prox):
    set: ConvexSet

    def prox(self, x, lam):
        return self.set.project(x)


def prox_step(p: Prox, lam: float, x) -> Point:
    """Evaluate prox_{lam g}(x) = argmin_u g(u) + ||u - x||^2 / (2 lam)."""
    if not lam > 0:
        raise ConfigError(f"prox step lambda must be positive, got {lam}", field="lambda")
    return p.prox(np.asarray(x, dtype=np.float64).reshape(-1), float(lam))
