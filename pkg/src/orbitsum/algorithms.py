"""Fixed-point algorithms certified through the orbit engine.

Contraction iteration, Krasnosel'skii-Mann (KM) relaxation, the proximal point
method, forward-backward and Douglas-Rachford splitting, and alternating
projections. Each run returns the orbit trace plus a summability certificate.
"""

from __future__ import annotations

import math
import warnings as _warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .convex import ConvexSet
from .errors import ConfigError, DimensionError, MisdeclaredContractionError, ScheduleExhaustedError
from .maps import DouglasRachfordMap, ForwardBackwardMap, Map, ProjectionMap, ProxMap, eval_map
from .metric import EUCLIDEAN, MetricSpec, Point, as_point, distance
from .orbit import (CertifyPolicy, OrbitTrace, RunOptions, SummabilityCertificate, certify, drive,
                    run_orbit)
from .prox import Prox


def _policy(opts: RunOptions, policy: Optional[CertifyPolicy]) -> CertifyPolicy:
    return policy if policy is not None else CertifyPolicy(residual_tol=opts.residual_tol)


# -- contraction -------------------------------------------------------------

@dataclass
class ContractionResult:
    fixed_point: Point
    trace: OrbitTrace
    certificate: SummabilityCertificate
    modulus: float
    first_gap: float

    def apriori_bound(self, n: int) -> float:
        """c^n / (1 - c) * d(x0, f(x0)) >= d(x_n, p)."""
        c = self.modulus
        return c ** n / (1.0 - c) * self.first_gap


def contraction_solve(f: Map, metric: MetricSpec, x0, opts: RunOptions = RunOptions(),
                      policy: Optional[CertifyPolicy] = None) -> ContractionResult:
    """Iterate a declared strong contraction and check the declared modulus along the way.

    A step with gaps[n+1] > (c + 1e-9) gaps[n] + 1e-12 (1 + |x_n|) raises
    ``MisdeclaredContractionError``; the absolute term absorbs rounding once
    gaps approach machine precision relative to the iterates.
    """
    cls = f.classification
    if cls is None or cls.kind != "strong-contraction":
        raise ConfigError("contraction_solve needs a map classified strong-contraction(c)",
                          field="classification")
    c = cls.modulus
    trace = run_orbit(f, metric, x0, opts)
    g = trace.gaps
    scale = 1.0 + max(float(np.max(np.abs(x))) for x in trace.iterates)
    for n in range(len(g) - 1):
        if g[n + 1] > (c + 1e-9) * g[n] + 1e-12 * scale:
            raise MisdeclaredContractionError(
                f"gap ratio {g[n + 1] / g[n]:.12g} at step {n} exceeds declared modulus c = {c}")
    cert = certify(trace, f, metric, _policy(opts, policy))
    return ContractionResult(trace.final, trace, cert, c, g[0])


# -- Krasnosel'skii-Mann -----------------------------------------------------

@dataclass(frozen=True)
class RelaxationSchedule:
    kind: str = "constant"
    alpha: float = 0.5
    values: tuple = ()

    def __post_init__(self):
        if self.kind not in ("constant", "harmonic", "explicit"):
            raise ConfigError(f"unknown schedule kind {self.kind!r}", field="schedule.kind")
        if self.kind == "explicit":
            object.__setattr__(self, "values", tuple(float(v) for v in self.values))
            if not self.values:
                raise ConfigError("explicit schedule needs values", field="schedule.values")
            bad = [v for v in self.values if not 0.0 < v < 1.0]
        else:
            bad = [] if 0.0 < self.alpha < 1.0 else [self.alpha]
        if bad:
            raise ConfigError(f"relaxation parameters must lie strictly in (0, 1); got {bad[0]}",
                              field="schedule")

    def __call__(self, n: int) -> float:
        if self.kind == "constant":
            return self.alpha
        if self.kind == "harmonic":
            return self.alpha / (n + 1)
        if n >= len(self.values):
            raise ScheduleExhaustedError(f"explicit schedule has {len(self.values)} entries; step {n} needs more")
        return self.values[n]


def km_step(T: Map, x, alpha: float) -> Point:
    """(1 - alpha) x + alpha T(x)."""
    if not 0.0 < alpha < 1.0:
        raise ConfigError(f"alpha must lie strictly in (0, 1), got {alpha}", field="alpha")
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    return (1.0 - alpha) * x + alpha * eval_map(T, x)


@dataclass
class KMResult:
    trace: OrbitTrace
    certificate: SummabilityCertificate
    km_functional: float
    # per-step |gap_n - alpha_n ||T x_n - x_n|| / (1 + ||x_n||)
    identity_errors: list
    alphas: list


def km_run(T: Map, x0, schedule: RelaxationSchedule = RelaxationSchedule(), metric: MetricSpec = EUCLIDEAN,
           opts: RunOptions = RunOptions(), policy: Optional[CertifyPolicy] = None) -> KMResult:
    """Run x_{n+1} = (1 - a_n) x_n + a_n T(x_n) and certify against T.

    The tolerance test is on the residual ||T(x_n) - x_n||, not on the KM gap,
    so a CONVERGED limit satisfies d(p, T(p)) <= residual_tol. The KM gap
    equals a_n ||T(x_n) - x_n||; that identity is checked at every step and
    the summed right-hand sides are returned as ``km_functional``.
    """
    if metric.kind != "euclidean":
        raise ConfigError("KM runs are defined in the Euclidean (Hilbert) norm", field="metric")
    x0 = as_point(x0)
    if T.dim is not None and x0.size != T.dim:
        raise DimensionError(T.dim, x0.size, what="x0")
    alphas, weighted, errors = [], [], []

    def step(n, x):
        a = schedule(n)
        tx = eval_map(T, x)
        alphas.append(a)
        weighted.append(a * distance(metric, tx, x))
        return (1.0 - a) * x + a * tx

    def residual(n, x, x_next):
        gap = distance(metric, x, x_next)
        err = abs(gap - weighted[n])
        errors.append(err / (1.0 + float(np.linalg.norm(x))))
        if err > 1e-12 * (1.0 + float(np.linalg.norm(x))):
            raise AssertionError(f"KM gap identity broken at step {n}: |{gap} - {weighted[n]}| = {err}")
        return weighted[n] / alphas[n]

    trace = drive(step, metric, x0, opts, residual=residual, stop_on_residual=True)
    cert = certify(trace, T, metric, _policy(opts, policy))
    return KMResult(trace, cert, math.fsum(weighted), errors, alphas)


# -- nonexpansiveness --------------------------------------------------------

@dataclass
class NonexpansiveViolation:
    index: int
    ratio: float
    excess: float


@dataclass
class NonexpansivenessReport:
    checked: int
    violations: list = field(default_factory=list)
    max_ratio: float = 0.0

    @property
    def ok(self) -> bool:
        return not self.violations


def nonexpansiveness_check(T: Map, samples: Sequence, tol: float = 1e-10) -> NonexpansivenessReport:
    """Flag sampled pairs with ||T x - T y|| > ||x - y|| + tol."""
    report = NonexpansivenessReport(0)
    dim = None
    for i, (x, y) in enumerate(samples):
        x, y = as_point(x), as_point(y)
        if dim is None:
            dim = x.size
        if x.size != dim or y.size != dim:
            raise DimensionError(dim, x.size if x.size != dim else y.size, what=f"sample pair {i}")
        before = float(np.linalg.norm(x - y))
        after = float(np.linalg.norm(eval_map(T, x) - eval_map(T, y)))
        ratio = after / before if before > 0 else (0.0 if after == 0 else math.inf)
        report.max_ratio = max(report.max_ratio, ratio)
        if after > before + tol:
            report.violations.append(NonexpansiveViolation(i, ratio, after - before))
        report.checked += 1
    return report


# -- projections and splitting -----------------------------------------------

@dataclass
class AlternatingProjectionsResult:
    trace: OrbitTrace
    certificate: SummabilityCertificate
    # gaps[n+2] / gaps[n] over the last window: one full A -> B cycle
    cycle_ratio: Optional[float]
    membership: tuple


def alternating_projections_run(A: ConvexSet, B: ConvexSet, x0, opts: RunOptions = RunOptions(),
                                policy: Optional[CertifyPolicy] = None,
                                metric: MetricSpec = EUCLIDEAN) -> AlternatingProjectionsResult:
    """Project alternately onto A and B, recording every half-step as one orbit step.

    The orbit is the non-autonomous sequence P_A, P_B, P_A, ...; its gaps are
    the individual projection distances, so disjoint sets give gaps that stay
    at the set separation. The certificate residual is max(d(p, P_A p), d(p, P_B p)).
    """
    if A.dim != B.dim:
        raise DimensionError(A.dim, B.dim, what="alternating projection sets")
    x0 = as_point(x0, A.dim)
    pa, pb = ProjectionMap(A), ProjectionMap(B)
    steps = (pa, pb)
    trace = drive(lambda n, x: eval_map(steps[n % 2], x), metric, x0, opts, period=2)
    cert = certify(trace, steps, metric, _policy(opts, policy))
    w = _policy(opts, policy).ratio_window
    g = trace.gaps
    # g[0] moves the arbitrary start onto A and is not part of a cycle
    pairs = [(g[n + 2], g[n]) for n in range(max(len(g) - 2 - w, 1), len(g) - 2) if g[n] > 0]
    cycle = math.exp(sum(math.log(a / b) for a, b in pairs) / len(pairs)) if pairs and all(a > 0 for a, _ in pairs) else None
    p = trace.final
    return AlternatingProjectionsResult(trace, cert, cycle,
                                        (A.membership_residual(p), B.membership_residual(p)))


def forward_backward_step(grad_center, grad_weight: float, g: Prox, step: float, x) -> Point:
    """prox_{step g}(x - step * w * (x - center)) for the smooth part w/2 ||x - center||^2."""
    return eval_map(ForwardBackwardMap(grad_center, grad_weight, g, step), x)


def douglas_rachford_step(pA: Prox, pB: Prox, lam: float, x) -> Point:
    return eval_map(DouglasRachfordMap(pA, pB, lam), x)


@dataclass
class SplittingResult:
    trace: OrbitTrace
    certificate: SummabilityCertificate
    shadow: Optional[Point] = None
    warnings: list = field(default_factory=list)


def fixed_point_run(f: Map, x0, opts: RunOptions = RunOptions(), policy: Optional[CertifyPolicy] = None,
                    metric: MetricSpec = EUCLIDEAN) -> SplittingResult:
    """Run and certify an autonomous step map (prox point, forward-backward, DR, ...)."""
    trace = run_orbit(f, metric, x0, opts)
    cert = certify(trace, f, metric, _policy(opts, policy))
    shadow = f.shadow(trace.final) if isinstance(f, DouglasRachfordMap) else None
    warnings = list(getattr(f, "warnings", ()))
    for msg in warnings:
        _warnings.warn(msg, RuntimeWarning, stacklevel=2)
    trace.warnings.extend(warnings)
    return SplittingResult(trace, cert, shadow, warnings)


def proximal_point_run(p: Prox, lam: float, x0, opts: RunOptions = RunOptions(),
                       policy: Optional[CertifyPolicy] = None) -> SplittingResult:
    return fixed_point_run(ProxMap(p, lam), x0, opts, policy)


def douglas_rachford_run(pA: Prox, pB: Prox, lam: float, x0, opts: RunOptions = RunOptions(),
                         policy: Optional[CertifyPolicy] = None) -> SplittingResult:
    return fixed_point_run(DouglasRachfordMap(pA, pB, lam), x0, opts, policy)


def forward_backward_run(center, weight: float, g: Prox, step: float, x0, opts: RunOptions = RunOptions(),
                         policy: Optional[CertifyPolicy] = None) -> SplittingResult:
    return fixed_point_run(ForwardBackwardMap(center, weight, g, step), x0, opts, policy)
