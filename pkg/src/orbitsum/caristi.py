"""Caristi potentials: orbit-local verification of d(x, f(x)) <= phi(x) - phi(f(x)).

Summing the inequality along an orbit telescopes, so a verified potential bounds
the total displacement by ``phi(x0) - inf phi``. The orbit potential
``phi_f(x) = sum_n d(f^n x, f^(n+1) x)`` satisfies the inequality with equality.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigError, NotCheckableError, NotConvergedError, PotentialInconsistencyError
from .maps import Map, eval_map
from .metric import EUCLIDEAN, MetricSpec, as_point, distance


@dataclass(frozen=True, eq=False)
class Potential:
    """Base: ``lower_bound`` is the declared inf phi, ``witness`` a point where phi is finite."""

    lower_bound: float
    witness: Optional[np.ndarray]

    def _check_declared(self):
        if not math.isfinite(self.lower_bound):
            raise ConfigError("declared lower bound must be finite", field="potential.lower_bound")
        if self.witness is not None:
            object.__setattr__(self, "witness", as_point(self.witness))
            if not math.isfinite(self.value(self.witness)):
                raise ConfigError("potential is +inf at its proper witness", field="potential.witness")

    def value(self, x) -> float:
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class LinearScalar(Potential):
    """phi(x) = slope * x on R."""

    slope: float = 1.0

    def __post_init__(self):
        self._check_declared()

    def value(self, x):
        x = np.asarray(x, dtype=np.float64).reshape(-1)
        if x.size != 1:
            raise ConfigError("linear-scalar potential is defined on R only", field="potential")
        return self.slope * float(x[0])


@dataclass(frozen=True, eq=False)
class ScaledDistance(Potential):
    """phi(x) = scale * d(x, target)."""

    target: np.ndarray = None
    scale: float = 1.0
    metric: MetricSpec = EUCLIDEAN

    def __post_init__(self):
        object.__setattr__(self, "target", as_point(self.target))
        if not self.scale >= 0:
            raise ConfigError("scale must be nonnegative", field="potential.scale")
        self._check_declared()

    def value(self, x):
        return self.scale * distance(self.metric, x, self.target)


@dataclass(frozen=True, eq=False)
class Table(Potential):
    """Explicit finite support; +inf everywhere else."""

    entries: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "entries", {tuple(map(float, k)): float(v) for k, v in self.entries.items()})
        self._check_declared()

    def value(self, x):
        key = tuple(float(v) for v in np.asarray(x, dtype=np.float64).reshape(-1))
        return self.entries.get(key, math.inf)


@dataclass(frozen=True)
class Truncation:
    max_terms: int = 100_000
    term_tol: float = 1e-15
    ratio_window: int = 8

    def __post_init__(self):
        if self.max_terms < 1:
            raise ConfigError("max_terms must be >= 1", field="trunc.max_terms")


@dataclass
class OrbitPotentialValue:
    value: float
    terms: int
    converged: bool
    truncation_error_bound: Optional[float] = None


def orbit_potential(f: Map, metric: MetricSpec, x, trunc: Truncation = Truncation()) -> OrbitPotentialValue:
    """Truncated sum of d(f^n x, f^(n+1) x), stopping once a term is <= term_tol."""
    x = as_point(x)
    terms = []
    for _ in range(trunc.max_terms):
        y = eval_map(f, x)
        terms.append(distance(metric, x, y))
        x = y
        if terms[-1] <= trunc.term_tol:
            break
    value = math.fsum(terms)
    last = terms[-1]
    if last == 0.0:
        return OrbitPotentialValue(value, len(terms), True, 0.0)
    ratios = [b / a for a, b in list(zip(terms, terms[1:]))[-trunc.ratio_window:] if a > 0]
    if not ratios:
        ratios = [distance(metric, x, eval_map(f, x)) / last]
    r = max(ratios)
    if r < 1.0:
        return OrbitPotentialValue(value, len(terms), True, last * r / (1.0 - r))
    return OrbitPotentialValue(value, len(terms), False, None)


@dataclass(frozen=True, eq=False)
class OrbitPotential(Potential):
    """The canonical potential phi_f of a map, evaluated by truncation."""

    map: Map = None
    metric: MetricSpec = EUCLIDEAN
    trunc: Truncation = Truncation()

    def __post_init__(self):
        self._check_declared()

    def value(self, x):
        res = orbit_potential(self.map, self.metric, x, self.trunc)
        return res.value if res.converged else math.inf


def eval_potential(phi: Potential, x, tol: float = 1e-12) -> float:
    """phi(x) in (-inf, +inf]; raises if it undercuts the declared lower bound."""
    v = float(phi.value(as_point(x)))
    if math.isnan(v) or v == -math.inf:
        raise PotentialInconsistencyError(f"potential returned {v} at {np.asarray(x).tolist()}")
    if v < phi.lower_bound - tol:
        raise PotentialInconsistencyError(
            f"phi({np.asarray(x).tolist()}) = {v} is below the declared lower bound {phi.lower_bound}")
    return v


def check_caristi_step(phi: Potential, f: Map, metric: MetricSpec, x, tol: float = 1e-12) -> float:
    """Slack phi(x) - phi(f(x)) - d(x, f(x)); the inequality holds at x iff slack >= -tol."""
    x = as_point(x)
    px = eval_potential(phi, x, tol)
    if px == math.inf:
        raise NotCheckableError(f"phi is +inf at {x.tolist()}; refusing to treat the inequality as vacuous")
    fx = eval_map(f, x)
    return px - eval_potential(phi, fx, tol) - distance(metric, x, fx)


@dataclass
class CaristiReport:
    steps_checked: int
    slacks: list
    min_slack: float
    telescoped_bound: float
    holds: bool
    tol: float
    potentials: list
    gaps: list
    first_violation: Optional[int] = None
    truncated: bool = False
    displacement_bound_ok: Optional[bool] = None

    @property
    def displacement(self) -> float:
        return math.fsum(self.gaps)

    def to_text(self) -> str:
        lines = [
            f"steps_checked: {self.steps_checked}",
            f"holds: {self.holds}",
            f"min_slack: {self.min_slack!r}",
            f"telescoped_bound: {self.telescoped_bound!r}",
            f"displacement: {self.displacement!r}",
            f"displacement_bound_ok: {self.displacement_bound_ok}",
            f"first_violation: {self.first_violation}",
            f"truncated: {self.truncated}",
            "slacks: " + " ".join(repr(s) for s in self.slacks),
        ]
        return "\n".join(lines) + "\n"


def verify_along_orbit(phi: Potential, f: Map, metric: MetricSpec, x0, N: int,
                       tol: float = 1e-12) -> CaristiReport:
    """Check the Caristi inequality at x_0, ..., x_{N-1} of the orbit of x0."""
    if N < 1:
        raise ValueError("N must be >= 1")
    x = as_point(x0)
    p0 = eval_potential(phi, x, tol)
    if p0 == math.inf:
        raise NotCheckableError(f"phi(x0) = +inf at {x.tolist()}; pick a start point where phi is finite")
    potentials, slacks, gaps = [p0], [], []
    truncated = False
    for _ in range(N):
        y = eval_map(f, x)
        py = eval_potential(phi, y, tol)
        gap = distance(metric, x, y)
        if py == math.inf:
            truncated = True
            break
        slacks.append(potentials[-1] - py - gap)
        gaps.append(gap)
        potentials.append(py)
        x = y
    min_slack = min(slacks) if slacks else math.inf
    holds = bool(slacks) and min_slack >= -tol
    first = next((j for j, s in enumerate(slacks) if s < -tol), None)
    report = CaristiReport(len(slacks), slacks, min_slack, p0 - phi.lower_bound, holds, tol,
                           potentials, gaps, first, truncated)
    if holds:
        n = len(gaps)
        report.displacement_bound_ok = report.displacement <= report.telescoped_bound + n * tol
    return report


@dataclass
class IdentityCheck:
    residual: float
    bound: float
    phi_x: float
    phi_fx: float
    gap: float

    @property
    def ok(self) -> bool:
        return self.residual <= self.bound


def canonical_caristi_identity_check(f: Map, metric: MetricSpec, x,
                                     trunc: Truncation = Truncation()) -> IdentityCheck:
    """|phi_f(x) - phi_f(f(x)) - d(x, f(x))| with phi_f(f(x)) truncated one term shorter."""
    x = as_point(x)
    at_x = orbit_potential(f, metric, x, trunc)
    if not at_x.converged:
        raise NotConvergedError("orbit potential did not converge at x; identity check refused")
    fx = eval_map(f, x)
    gap = distance(metric, x, fx)
    if at_x.terms > 1:
        aligned = Truncation(at_x.terms - 1, -math.inf, trunc.ratio_window)
        phi_fx = orbit_potential(f, metric, fx, aligned).value
    else:
        phi_fx = 0.0
    residual = abs(at_x.value - phi_fx - gap)
    rounding = 4 * np.finfo(float).eps * (abs(at_x.value) + abs(phi_fx) + gap) * max(at_x.terms, 1)
    return IdentityCheck(residual, at_x.truncation_error_bound + rounding, at_x.value, phi_fx, gap)
