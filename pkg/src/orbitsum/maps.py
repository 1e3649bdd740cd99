"""Deterministic self-maps f : R^d -> R^d.

Every map is an immutable object with a ``dim`` (``None`` for maps that act
coordinatewise in any dimension), a ``classification`` tag, and a ``__call__``
that takes and returns a float64 vector. ``eval_map`` wraps the call with
dimension and overflow checks; the orbit drivers go through it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .convex import ConvexSet
from .errors import ConfigError, DimensionError, NumericOverflowError
from .metric import Point, as_point
from .prox import Prox

CLASSIFICATIONS = ("strong-contraction", "weak-contraction", "nonexpansive", "general")


@dataclass(frozen=True)
class Classification:
    kind: str = "general"
    modulus: Optional[float] = None

    def __post_init__(self):
        if self.kind not in CLASSIFICATIONS:
            raise ConfigError(f"unknown classification {self.kind!r}", field="classification")
        if self.kind == "strong-contraction":
            c = self.modulus
            if c is None or not (0.0 <= c < 1.0):
                raise ConfigError(
                    f"strong-contraction modulus c must satisfy 0 <= c < 1 "
                    f"(c = 1 is a weak contraction), got c = {c}",
                    field="classification.c",
                )
        elif self.modulus is not None and self.kind != "weak-contraction":
            raise ConfigError(f"modulus given for classification {self.kind!r}",
                              field="classification.c")


GENERAL = Classification()


class Map:
    classification: Classification = GENERAL

    @property
    def dim(self) -> Optional[int]:
        return None

    def __call__(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class AffineMap(Map):
    """x -> A x + b"""

    matrix: np.ndarray
    offset: np.ndarray
    classification: Classification = GENERAL

    def __post_init__(self):
        A = np.array(self.matrix, dtype=np.float64)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ConfigError(f"affine matrix must be square, got shape {A.shape}", field="map.matrix")
        if not np.all(np.isfinite(A)):
            raise ConfigError("affine matrix has non-finite entries", field="map.matrix")
        A.setflags(write=False)
        object.__setattr__(self, "matrix", A)
        object.__setattr__(self, "offset", as_point(self.offset, A.shape[0]))

    @property
    def dim(self):
        return self.matrix.shape[0]

    def __call__(self, x):
        return self.matrix @ x + self.offset


def rotation(angle: float, classification: Classification = Classification("nonexpansive")) -> AffineMap:
    c, s = np.cos(angle), np.sin(angle)
    return AffineMap(np.array([[c, -s], [s, c]]), np.zeros(2), classification)


def linear(matrix, classification: Classification = GENERAL) -> AffineMap:
    matrix = np.asarray(matrix, dtype=np.float64)
    return AffineMap(matrix, np.zeros(matrix.shape[0]), classification)


def constant(value, classification: Classification = Classification("strong-contraction", 0.0)) -> AffineMap:
    value = as_point(value)
    return AffineMap(np.zeros((value.size, value.size)), value, classification)


def _half(x, p):
    return x / 2.0


def _double(x, p):
    return 2.0 * x


def _scale(x, p):
    return p * x


def _shift(x, p):
    return x + p


def _hypot(x, p):
    return np.sqrt(x * x + 1.0)


def _identity(x, p):
    return x.copy()


# name -> (formula, default parameter, default classification)
SCALAR_FAMILIES: dict[str, tuple[Callable, Optional[float], Classification]] = {
    "half": (_half, None, Classification("strong-contraction", 0.5)),
    "double": (_double, None, GENERAL),
    "scale": (_scale, 1.0, GENERAL),
    "shift": (_shift, 1.0, Classification("nonexpansive")),
    "hypot": (_hypot, None, Classification("nonexpansive")),
    "identity": (_identity, None, Classification("nonexpansive")),
}


@dataclass(frozen=True, eq=False)
class ScalarMap(Map):
    """Named closed-form family applied coordinatewise (half, double, scale, shift, hypot, identity)."""

    name: str
    param: Optional[float] = None
    classification: Optional[Classification] = None

    def __post_init__(self):
        if self.name not in SCALAR_FAMILIES:
            raise ConfigError(f"unknown scalar family {self.name!r}; known: {sorted(SCALAR_FAMILIES)}",
                              field="map.name")
        _, default, cls = SCALAR_FAMILIES[self.name]
        if self.param is None and default is not None:
            object.__setattr__(self, "param", default)
        if self.classification is None:
            object.__setattr__(self, "classification", cls)

    def __call__(self, x):
        return SCALAR_FAMILIES[self.name][0](x, self.param)


@dataclass(frozen=True, eq=False)
class Composition(Map):
    """Applies ``maps[0]`` first, then ``maps[1]``, ..."""

    maps: tuple
    classification: Classification = GENERAL

    def __post_init__(self):
        if not self.maps:
            raise ConfigError("composition needs at least one map", field="map.maps")
        object.__setattr__(self, "maps", tuple(self.maps))
        dims = {m.dim for m in self.maps if m.dim is not None}
        if len(dims) > 1:
            raise ConfigError(f"composition mixes dimensions {sorted(dims)}", field="map.maps")

    @property
    def dim(self):
        for m in self.maps:
            if m.dim is not None:
                return m.dim
        return None

    def __call__(self, x):
        for m in self.maps:
            x = m(x)
        return x


def _check_alpha(alpha):
    if not (0.0 < alpha < 1.0):
        raise ConfigError(f"relaxation alpha must lie strictly in (0, 1), got {alpha}", field="alpha")


@dataclass(frozen=True, eq=False)
class KMMap(Map):
    """x -> (1 - alpha) x + alpha T(x) for a fixed alpha."""

    inner: Map
    alpha: float
    classification: Classification = GENERAL

    def __post_init__(self):
        _check_alpha(self.alpha)

    @property
    def dim(self):
        return self.inner.dim

    def __call__(self, x):
        return (1.0 - self.alpha) * x + self.alpha * self.inner(x)


@dataclass(frozen=True, eq=False)
class ProjectionMap(Map):
    set: ConvexSet
    classification: Classification = Classification("nonexpansive")

    @property
    def dim(self):
        return self.set.dim

    def __call__(self, x):
        return self.set._project(x)


@dataclass(frozen=True, eq=False)
class ProxMap(Map):
    prox: Prox
    lam: float = 1.0
    dimension: Optional[int] = None
    classification: Classification = Classification("nonexpansive")

    def __post_init__(self):
        if not self.lam > 0:
            raise ConfigError(f"prox lambda must be positive, got {self.lam}", field="lambda")

    @property
    def dim(self):
        return self.dimension

    def __call__(self, x):
        return self.prox.prox(x, self.lam)


@dataclass(frozen=True, eq=False)
class ForwardBackwardMap(Map):
    """x -> prox_{step g}(x - step * w * (x - center)), smooth part w/2 ||x - center||^2."""

    center: np.ndarray
    weight: float
    prox: Prox
    step: float
    classification: Classification = Classification("nonexpansive")
    warnings: tuple = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "center", as_point(self.center))
        if not self.weight > 0:
            raise ConfigError("smooth weight must be positive", field="smooth.weight")
        if not self.step > 0:
            raise ConfigError("forward-backward step must be positive", field="step")
        if not self.step < 2.0 / self.weight:
            object.__setattr__(self, "warnings", (
                f"step {self.step} is outside (0, 2/w) = (0, {2.0 / self.weight}); "
                "the forward operator is not nonexpansive",))
            object.__setattr__(self, "classification", GENERAL)

    @property
    def dim(self):
        return self.center.size

    def __call__(self, x):
        forward = x - self.step * self.weight * (x - self.center)
        return self.prox.prox(forward, self.step)


@dataclass(frozen=True, eq=False)
class DouglasRachfordMap(Map):
    """x -> x/2 + R_B(R_A(x))/2 with R = 2 prox - id."""

    prox_a: Prox
    prox_b: Prox
    lam: float = 1.0
    dimension: Optional[int] = None
    classification: Classification = Classification("nonexpansive")

    def __post_init__(self):
        if not self.lam > 0:
            raise ConfigError(f"Douglas-Rachford lambda must be positive, got {self.lam}", field="lambda")

    @property
    def dim(self):
        return self.dimension

    def shadow(self, x):
        return self.prox_a.prox(x, self.lam)

    def __call__(self, x):
        ra = 2.0 * self.prox_a.prox(x, self.lam) - x
        rb = 2.0 * self.prox_b.prox(ra, self.lam) - ra
        return 0.5 * x + 0.5 * rb


def eval_map(f: Map, x) -> Point:
    """Evaluate ``f`` at ``x`` with dimension and overflow checks."""
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if f.dim is not None and x.size != f.dim:
        raise DimensionError(f.dim, x.size, what=f"input of {type(f).__name__}")
    with np.errstate(over="ignore", invalid="ignore"):
        y = np.asarray(f(x), dtype=np.float64).reshape(-1)
    if y.size != x.size:
        raise DimensionError(x.size, y.size, what=f"output of {type(f).__name__}")
    if not np.all(np.isfinite(y)):
        raise NumericOverflowError(f"{type(f).__name__} produced non-finite output from {x.tolist()}")
    return y
