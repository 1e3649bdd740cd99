"""Points in R^d and the four built-in metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigError, DimensionError

Point = np.ndarray

METRIC_KINDS = ("euclidean", "l1", "linf", "weighted-euclidean")


def as_point(x, dim: Optional[int] = None) -> Point:
    """Validate ``x`` and return it as a read-only 1-D float64 array.

    Scalars become dimension-1 points. NaN and infinite coordinates are
    rejected rather than propagated.
    """
    arr = np.array(x, dtype=np.float64).reshape(-1)
    if arr.size == 0:
        raise ConfigError("a point needs at least one coordinate")
    if not np.all(np.isfinite(arr)):
        raise ConfigError(f"point has non-finite coordinates: {arr.tolist()}")
    if dim is not None and arr.size != dim:
        raise DimensionError(dim, arr.size)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class MetricSpec:
    kind: str = "euclidean"
    weights: Optional[tuple] = None

    def __post_init__(self):
        if self.kind not in METRIC_KINDS:
            raise ConfigError(f"unknown metric kind {self.kind!r}", field="metric.kind")
        if self.kind == "weighted-euclidean":
            if self.weights is None:
                raise ConfigError("weighted-euclidean requires weights", field="metric.weights")
            w = tuple(float(v) for v in self.weights)
            if not all(np.isfinite(v) and v > 0 for v in w):
                raise ConfigError("weights must be finite and strictly positive", field="metric.weights")
            object.__setattr__(self, "weights", w)
        elif self.weights is not None:
            raise ConfigError(f"weights are only valid for weighted-euclidean, not {self.kind}",
                              field="metric.weights")

    def __call__(self, x, y) -> float:
        return distance(self, x, y)


EUCLIDEAN = MetricSpec("euclidean")


def _weighted_norm(diff, w):
    # unit weights multiply exactly, so this agrees bitwise with the unweighted path
    with np.errstate(over="ignore", under="ignore"):
        sq = diff * diff if w is None else w * (diff * diff)
        out = float(np.sqrt(np.sum(sq)))
    # squaring can overflow, or underflow to 0 for distinct points; rescale in both cases
    if (math.isinf(out) or out == 0.0) and np.all(np.isfinite(diff)) and np.any(diff != 0):
        s = float(np.max(np.abs(diff)))
        d = diff / s
        sq = d * d if w is None else w * (d * d)
        out = s * float(np.sqrt(np.sum(sq)))
    return out


def distance(metric: MetricSpec, x, y) -> float:
    """Return d(x, y) under ``metric``."""
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if x.size != y.size:
        raise DimensionError(x.size, y.size, what="distance operands")
    with np.errstate(over="ignore"):
        diff = x - y
    if metric.kind == "euclidean":
        return _weighted_norm(diff, None)
    if metric.kind == "weighted-euclidean":
        w = np.asarray(metric.weights, dtype=np.float64)
        if w.size != diff.size:
            raise ConfigError(f"{w.size} weights for a dimension-{diff.size} point",
                              field="metric.weights")
        return _weighted_norm(diff, w)
    if metric.kind == "l1":
        return float(np.sum(np.abs(diff)))
    return float(np.max(np.abs(diff)))


@dataclass
class AxiomViolation:
    axiom: str
    index: int
    amount: float


@dataclass
class AxiomReport:
    checked: int
    violations: list = field(default_factory=list)
    triangle_slacks: list = field(default_factory=list)
    max_symmetry_error: float = 0.0

    @property
    def ok(self) -> bool:
        return not self.violations


def check_metric_axioms(metric: MetricSpec, samples: Sequence, tol: float) -> AxiomReport:
    """Check nonnegativity, identity, symmetry and the triangle inequality on sampled triples.

    Triangle slack is ``d(x,y) + d(y,z) - d(x,z)``; a slack of exactly zero is the
    equality case and is not a violation.
    """
    if tol <= 0:
        raise ConfigError("tol must be positive", field="tol")
    report = AxiomReport(checked=0)
    dim = None
    for i, (x, y, z) in enumerate(samples):
        x, y, z = (as_point(p) for p in (x, y, z))
        for p in (x, y, z):
            if dim is None:
                dim = p.size
            elif p.size != dim:
                raise DimensionError(dim, p.size, what=f"sample {i}")
        dxy, dyx = distance(metric, x, y), distance(metric, y, x)
        dyz, dxz = distance(metric, y, z), distance(metric, x, z)
        sym = abs(dxy - dyx)
        report.max_symmetry_error = max(report.max_symmetry_error, sym)
        if sym > tol:
            report.violations.append(AxiomViolation("symmetry", i, sym))
        for d in (dxy, dyz, dxz):
            if d < 0:
                report.violations.append(AxiomViolation("nonnegativity", i, -d))
        for p in (x, y, z):
            if distance(metric, p, p) != 0.0:
                report.violations.append(AxiomViolation("identity", i, distance(metric, p, p)))
        slack = dxy + dyz - dxz
        report.triangle_slacks.append(slack)
        if slack < -tol:
            report.violations.append(AxiomViolation("triangle", i, -slack))
        report.checked += 1
    return report
