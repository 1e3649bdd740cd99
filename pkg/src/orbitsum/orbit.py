"""Orbit runs, gap series, and the three-valued summability certificate.

An orbit ``x_{n+1} = f(x_n)`` is summable when the total displacement
``sum_n d(x_n, x_{n+1})`` is finite; a summable orbit is Cauchy and its limit is
a fixed point (given lower semicontinuous gap functions, which holds for the
continuous built-in maps). Numerically we can only observe a finite prefix of
the series, so ``certify`` returns CONVERGED / DIVERGENT / INCONCLUSIVE and the
one thing that is checkable exactly: the residual ``d(p, f(p))`` at the final
iterate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .errors import ConfigError, DimensionError, NumericOverflowError, OrbitOverflowError
from .maps import Map, eval_map
from .metric import MetricSpec, Point, as_point, distance

RESIDUAL_BELOW_TOL = "residual-below-tol"
MAX_ITERATIONS = "max-iterations"
BUDGET_EXCEEDED = "displacement-budget-exceeded"
GAP_EXACTLY_ZERO = "gap-exactly-zero"

CONVERGED = "CONVERGED"
DIVERGENT = "DIVERGENT"
INCONCLUSIVE = "INCONCLUSIVE"

LSC_ASSUMPTION = ("gap functions d(f^n x, f^(n+1) x) are assumed lower semicontinuous "
                  "(true for continuous maps); not verified numerically")


@dataclass(frozen=True)
class RunOptions:
    max_iters: int = 100_000
    residual_tol: float = 1e-10
    displacement_budget: float = 1e6
    # iterates 0..keep_first-1 are all stored, then every stride-th one
    keep_first: int = 10_000
    stride: int = 1

    def __post_init__(self):
        if int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise ConfigError(f"max_iters must be an integer >= 1, got {self.max_iters}", field="options.max_iters")
        if not self.residual_tol > 0:
            raise ConfigError(f"residual_tol must be > 0, got {self.residual_tol}", field="options.residual_tol")
        if not self.displacement_budget > 0:
            raise ConfigError(f"displacement_budget must be > 0, got {self.displacement_budget}",
                              field="options.displacement_budget")
        if self.stride < 1 or self.keep_first < 1:
            raise ConfigError("stride and keep_first must be >= 1", field="options.stride")


@dataclass
class OrbitTrace:
    iterates: list
    iterate_indices: list
    gaps: list
    partial_sums: list
    residuals: list
    terminated_reason: str
    # number of steps in one cycle of a periodic non-autonomous orbit (alternating projections: 2)
    period: int = 1
    warnings: list = field(default_factory=list)

    @property
    def ratios(self) -> list:
        """ratios[n] = gaps[n+1] / gaps[n], ``None`` where gaps[n] == 0."""
        g = self.gaps
        return [g[n + 1] / g[n] if g[n] > 0 else None for n in range(len(g) - 1)]

    @property
    def n_steps(self) -> int:
        return len(self.gaps)

    @property
    def final(self) -> Point:
        return self.iterates[-1]

    @property
    def total_displacement(self) -> float:
        return self.partial_sums[-1] if self.partial_sums else 0.0

    def iterate(self, n: int) -> Point:
        """Return x_n if it was retained by thinning."""
        lookup = dict(zip(self.iterate_indices, self.iterates))
        if n not in lookup:
            raise KeyError(f"iterate {n} was not retained (thinned)")
        return lookup[n]


def drive(step: Callable[[int, np.ndarray], np.ndarray], metric: MetricSpec, x0, opts: RunOptions,
          residual: Optional[Callable[[int, np.ndarray, np.ndarray], float]] = None,
          stop_on_residual: bool = False, period: int = 1) -> OrbitTrace:
    """Iterate ``x_{n+1} = step(n, x_n)`` and record the gap series at full resolution.

    ``residual(n, x_n, x_{n+1})`` gives the per-step fixed-point residual written
    to the trace; without it the residual is the gap itself (autonomous case).
    With ``stop_on_residual`` the tolerance test uses that residual instead of
    the gap. Termination on a small or zero gap requires ``period`` consecutive
    qualifying gaps.
    """
    x = as_point(x0).copy()
    iterates, indices = [x.copy()], [0]
    gaps, sums, residuals = [], [], []
    total = 0.0
    reason = MAX_ITERATIONS

    def trace(reason_):
        if indices[-1] != len(gaps):
            iterates.append(x.copy())
            indices.append(len(gaps))
        return OrbitTrace(iterates, indices, gaps, sums, residuals, reason_, period)

    for n in range(int(opts.max_iters)):
        try:
            x_next = step(n, x)
        except NumericOverflowError as exc:
            raise OrbitOverflowError(f"overflow at step {n}: {exc}", trace("overflow")) from exc
        gap = distance(metric, x, x_next)
        if not math.isfinite(gap):
            raise OrbitOverflowError(f"gap overflow at step {n}", trace("overflow"))
        total = total + gap
        gaps.append(gap)
        sums.append(total)
        res = gap if residual is None else residual(n, x, x_next)
        residuals.append(res)
        x = x_next
        k = n + 1
        if k < opts.keep_first or (k - opts.keep_first) % opts.stride == 0:
            iterates.append(x.copy())
            indices.append(k)

        recent = gaps[-period:]
        if len(recent) == period and all(g == 0.0 for g in recent):
            reason = GAP_EXACTLY_ZERO
            break
        if stop_on_residual:
            small = res <= opts.residual_tol
        else:
            small = len(recent) == period and max(recent) <= opts.residual_tol
        if small:
            reason = RESIDUAL_BELOW_TOL
            break
        if total > opts.displacement_budget:
            reason = BUDGET_EXCEEDED
            break
    return trace(reason)


def run_orbit(f: Map, metric: MetricSpec, x0, opts: RunOptions = RunOptions()) -> OrbitTrace:
    """Run the forward orbit x_n = f^n(x0)."""
    x0 = as_point(x0)
    if f.dim is not None and x0.size != f.dim:
        raise DimensionError(f.dim, x0.size, what="x0")
    return drive(lambda n, x: eval_map(f, x), metric, x0, opts)


def orbit_gap(f: Map, metric: MetricSpec, x, n: int) -> float:
    """d(f^n(x), f^(n+1)(x))."""
    if n < 0:
        raise ValueError("n must be >= 0")
    x = as_point(x)
    for _ in range(n):
        x = eval_map(f, x)
    return distance(metric, x, eval_map(f, x))


def fixed_point_residual(f: Map, metric: MetricSpec, p) -> float:
    p = as_point(p)
    return distance(metric, p, eval_map(f, p))


def cauchy_bound(trace: OrbitTrace, n: int, m: int) -> float:
    """Upper bound sum_{j=n}^{m-1} gaps[j] on d(x_n, x_m)."""
    if not (0 <= n < m <= len(trace.gaps)):
        raise IndexError(f"need 0 <= n < m <= {len(trace.gaps)}, got n={n}, m={m}")
    return math.fsum(trace.gaps[n:m])


@dataclass(frozen=True)
class CertifyPolicy:
    ratio_window: int = 8
    ratio_ceiling: float = 0.999
    residual_tol: float = 1e-10

    def __post_init__(self):
        if self.ratio_window < 2:
            raise ConfigError("ratio_window must be >= 2", field="options.ratio_window")
        if not (0.0 < self.ratio_ceiling < 1.0):
            raise ConfigError("ratio_ceiling must lie in (0, 1)", field="options.ratio_ceiling")
        if not self.residual_tol > 0:
            raise ConfigError("residual_tol must be > 0", field="options.residual_tol")


@dataclass
class SummabilityCertificate:
    verdict: str
    total_displacement: float
    tail_bound: Optional[float] = None
    ratio_estimate: Optional[float] = None
    ratio_max: Optional[float] = None
    limit_estimate: Optional[Point] = None
    residual: Optional[float] = None
    evidence: str = ""

    def as_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "total_displacement": self.total_displacement,
            "tail_bound": self.tail_bound,
            "ratio_estimate": self.ratio_estimate,
            "ratio_max": self.ratio_max,
            "limit_estimate": None if self.limit_estimate is None else self.limit_estimate.tolist(),
            "residual": self.residual,
            "evidence": self.evidence,
        }


def residual_against(maps: Union[Map, Sequence[Map]], metric: MetricSpec, p) -> float:
    """max over ``maps`` of d(p, T(p))."""
    if isinstance(maps, Map):
        maps = [maps]
    return max(fixed_point_residual(m, metric, p) for m in maps)


def polish_fixed_point(step: Callable[[int, np.ndarray], np.ndarray], maps: Union[Map, Sequence[Map]],
                       metric: MetricSpec, p, tol: float, start: int = 0,
                       max_steps: int = 4096) -> Optional[Point]:
    """Look for a float64 point within ``tol`` of ``p`` that every map in ``maps`` fixes exactly.

    A certified limit is only a fixed point to within the residual tolerance.
    First keep iterating ``step`` from ``p``; orbits that shrink toward 0 can
    end in a subnormal cycle instead, so then snap ``p`` onto dyadic grids
    (rounding and truncating toward 0), keeping candidates that move at most
    ``tol``. Returns ``None`` when neither search finds one.
    """
    p = as_point(p)
    x = p
    for n in range(start, start + max_steps):
        if residual_against(maps, metric, x) == 0.0:
            if float(np.max(np.abs(x - p))) <= tol:
                return x
            break
        x = as_point(step(n, x))
    e = math.ceil(math.log2(tol)) + 1
    for k in range(e, e - 60, -1):
        h = math.ldexp(1.0, k)
        for snap in (np.round, np.trunc):
            cand = as_point(snap(p / h) * h)
            if float(np.max(np.abs(cand - p))) <= tol and residual_against(maps, metric, cand) == 0.0:
                return cand
    return None


def certify(trace: OrbitTrace, f: Union[Map, Sequence[Map]], metric: MetricSpec,
            policy: CertifyPolicy = CertifyPolicy()) -> SummabilityCertificate:
    """Decide CONVERGED / DIVERGENT / INCONCLUSIVE for a finished orbit.

    ``f`` is the map (or maps, for a non-autonomous orbit) whose common fixed
    point the limit should be; the residual is recomputed from scratch at the
    final iterate rather than read off the trace.
    """
    if not trace.gaps:
        raise ValueError("cannot certify an empty trace")
    gaps = trace.gaps
    w = policy.ratio_window
    tol = policy.residual_tol
    total = trace.total_displacement
    p = trace.final
    residual = residual_against(f, metric, p)

    # ratios at lag = period: one full cycle of a non-autonomous orbit
    lag = trace.period
    lagged = [gaps[n + lag] / gaps[n] if gaps[n] > 0 else None for n in range(len(gaps) - lag)]
    window = [r for r in lagged[-w:] if r is not None]
    last = gaps[-1]
    if not window and last > 0:
        # one extra step: the recomputed residual is the next gap
        window = [residual / last]
    ratio_est = math.exp(sum(math.log(r) for r in window) / len(window)) if window and min(window) > 0 else (
        0.0 if window else None)
    r_max = max(window) if window else None

    cert = SummabilityCertificate(INCONCLUSIVE, total, ratio_estimate=ratio_est, ratio_max=r_max,
                                  residual=residual)
    notes = [f"terminated: {trace.terminated_reason} after {len(gaps)} steps",
             f"total displacement {total:.17g}"]

    if trace.terminated_reason in (RESIDUAL_BELOW_TOL, GAP_EXACTLY_ZERO) and residual <= tol:
        floor = 8 * np.finfo(float).eps * (1.0 + float(np.max(np.abs(p))))
        if all(g == 0.0 for g in gaps[-trace.period:]):
            cert.verdict, cert.tail_bound = CONVERGED, 0.0
            notes.append("orbit landed exactly on a fixed point (zero gap); tail is 0")
        elif max(max(gaps[-trace.period:]), residual) <= floor:
            # ratios of rounding noise carry no information
            cert.verdict, cert.tail_bound = CONVERGED, floor
            notes.append(f"gaps at the rounding floor {floor:.3g}; tail bounded by that floor")
        elif r_max is not None and r_max < policy.ratio_ceiling:
            cert.verdict, cert.tail_bound = CONVERGED, math.fsum(gaps[-lag:]) * r_max / (1.0 - r_max)
            notes.append(f"geometric tail bound with worst windowed ratio {r_max:.6g}")
        else:
            notes.append(f"residual {residual:.3g} <= tol but windowed ratio {r_max} is not below "
                         f"ceiling {policy.ratio_ceiling}; no finite tail bound")
        if cert.verdict == CONVERGED:
            cert.limit_estimate = p
            notes.append(f"residual d(p, f(p)) = {residual:.3g} <= {tol:g}")
    elif trace.terminated_reason in (RESIDUAL_BELOW_TOL, GAP_EXACTLY_ZERO):
        notes.append(f"gap small but recomputed residual {residual:.3g} exceeds {tol:g}")
    elif trace.terminated_reason == BUDGET_EXCEEDED and len(gaps) > w:
        tail = gaps[-(w + 1):]
        floor = min(tail)
        trend = (tail[-1] / tail[0]) ** (1.0 / w) if tail[0] > 0 else math.inf
        if floor >= tol and trend >= 1.0 - 1e-9:
            cert.verdict = DIVERGENT
            notes.append(f"gaps bounded below by {floor:.6g} over the last {w} steps "
                         f"(windowed ratio {trend:.12g}); displacement budget exceeded")
        else:
            notes.append(f"budget exceeded but gaps still shrinking (min {floor:.3g}, "
                         f"windowed ratio {trend:.12g}); summability undecided")
    else:
        notes.append("no rule fired")
    notes.append(LSC_ASSUMPTION)
    cert.evidence = "; ".join(notes)
    return cert
