"""Closed convex sets with closed-form Euclidean projections."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigError, DimensionError
from .metric import Point, as_point


class ConvexSet:
    """Base class. Subclasses implement ``_project`` and ``membership_residual``."""

    dim: int

    def project(self, x) -> Point:
        x = np.asarray(x, dtype=np.float64).reshape(-1)
        if x.size != self.dim:
            raise DimensionError(self.dim, x.size, what=f"{type(self).__name__} projection")
        return self._project(x)

    def contains(self, x, tol: float = 1e-10) -> bool:
        return self.membership_residual(x) <= tol

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Draw ``n`` points of the set (not uniformly; used for optimality checks)."""
        raw = rng.normal(scale=3.0, size=(n, self.dim))
        return np.array([self._project(r) for r in raw])


@dataclass(frozen=True, eq=False)
class Box(ConvexSet):
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo, hi = as_point(self.lo), as_point(self.hi)
        if lo.size != hi.size:
            raise DimensionError(lo.size, hi.size, what="box bounds")
        if np.any(lo > hi):
            raise ConfigError("box requires lo <= hi componentwise", field="set.lo")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self):
        return self.lo.size

    def _project(self, x):
        return np.clip(x, self.lo, self.hi)

    def membership_residual(self, x):
        x = np.asarray(x, dtype=np.float64)
        return float(np.max(np.maximum(np.maximum(self.lo - x, x - self.hi), 0.0)))


@dataclass(frozen=True, eq=False)
class Ball(ConvexSet):
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", as_point(self.center))
        if not (np.isfinite(self.radius) and self.radius > 0):
            raise ConfigError("ball radius must be positive", field="set.radius")

    @property
    def dim(self):
        return self.center.size

    def _project(self, x):
        v = x - self.center
        r = float(np.linalg.norm(v))
        if r <= self.radius:
            return x.copy()
        return self.center + v * (self.radius / r)

    def membership_residual(self, x):
        return max(float(np.linalg.norm(np.asarray(x) - self.center)) - self.radius, 0.0)


@dataclass(frozen=True, eq=False)
class Halfspace(ConvexSet):
    """{x : a.x <= beta}"""

    normal: np.ndarray
    offset: float

    def __post_init__(self):
        a = as_point(self.normal)
        if not np.any(a != 0):
            raise ConfigError("halfspace normal must be nonzero", field="set.normal")
        object.__setattr__(self, "normal", a)
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def dim(self):
        return self.normal.size

    def _project(self, x):
        excess = float(self.normal @ x) - self.offset
        if excess <= 0:
            return x.copy()
        return x - (excess / float(self.normal @ self.normal)) * self.normal

    def membership_residual(self, x):
        excess = float(self.normal @ np.asarray(x)) - self.offset
        return max(excess, 0.0) / float(np.linalg.norm(self.normal))


@dataclass(frozen=True, eq=False)
class Hyperplane(ConvexSet):
    """{x : a.x = beta}"""

    normal: np.ndarray
    offset: float

    def __post_init__(self):
        a = as_point(self.normal)
        if not np.any(a != 0):
            raise ConfigError("hyperplane normal must be nonzero", field="set.normal")
        object.__setattr__(self, "normal", a)
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def dim(self):
        return self.normal.size

    def _project(self, x):
        excess = float(self.normal @ x) - self.offset
        return x - (excess / float(self.normal @ self.normal)) * self.normal

    def membership_residual(self, x):
        excess = float(self.normal @ np.asarray(x)) - self.offset
        return abs(excess) / float(np.linalg.norm(self.normal))


@dataclass(frozen=True, eq=False)
class AffineSubspace(ConvexSet):
    """anchor + span(basis); rows of ``basis`` must be orthonormal."""

    basis: np.ndarray
    anchor: Optional[np.ndarray] = None

    def __post_init__(self):
        U = np.array(self.basis, dtype=np.float64)
        if U.ndim == 1:
            U = U[None, :]
        if not np.all(np.isfinite(U)):
            raise ConfigError("basis has non-finite entries", field="set.basis")
        gram = U @ U.T
        if np.max(np.abs(gram - np.eye(U.shape[0]))) > 1e-12:
            raise ConfigError("basis vectors must be orthonormal to 1e-12", field="set.basis")
        U.setflags(write=False)
        anchor = np.zeros(U.shape[1]) if self.anchor is None else as_point(self.anchor, U.shape[1])
        object.__setattr__(self, "basis", U)
        object.__setattr__(self, "anchor", anchor)

    @property
    def dim(self):
        return self.basis.shape[1]

    def _project(self, x):
        v = x - self.anchor
        return self.anchor + self.basis.T @ (self.basis @ v)

    def membership_residual(self, x):
        x = np.asarray(x, dtype=np.float64)
        return float(np.linalg.norm(x - self._project(x)))

    @classmethod
    def line(cls, angle: float, anchor=None):
        """Line in R^2 through ``anchor`` (default origin) with direction angle ``angle``."""
        return cls(np.array([[np.cos(angle), np.sin(angle)]]), anchor)


def project(set_: ConvexSet, x) -> Point:
    return set_.project(x)
