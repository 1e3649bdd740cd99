"""Parse JSON problem configs into maps, sets, prox operators and potentials."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import caristi, convex, maps, prox
from .algorithms import RelaxationSchedule
from .errors import ConfigError, DimensionError
from .metric import MetricSpec, as_point
from .orbit import CertifyPolicy, RunOptions

SCHEMES = ("contraction", "km", "alternating-projections", "proximal-point", "forward-backward",
           "douglas-rachford")
VERDICTS = ("CONVERGED", "DIVERGENT", "INCONCLUSIVE")


def _get(d: dict, key: str, path: str, default=...):
    if not isinstance(d, dict):
        raise ConfigError(f"expected an object, got {type(d).__name__}", field=path)
    if key not in d:
        if default is ...:
            raise ConfigError("missing required field", field=f"{path}.{key}" if path else key)
        return default
    return d[key]


def _point(value, path, dim=None):
    try:
        return as_point(value, dim)
    except DimensionError as exc:
        raise DimensionError(exc.expected, exc.got, what=path, field=path) from None
    except (ConfigError, TypeError, ValueError) as exc:
        raise ConfigError(str(exc), field=path) from None


def _float(value, path):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"expected a number, got {value!r}", field=path)
    return float(value)


def parse_metric(d, dim: Optional[int] = None) -> MetricSpec:
    if d is None:
        return MetricSpec()
    kind = _get(d, "kind", "metric", "euclidean")
    weights = _get(d, "weights", "metric", None)
    try:
        m = MetricSpec(kind, tuple(weights) if weights is not None else None)
    except ConfigError:
        raise
    if m.weights is not None and dim is not None and len(m.weights) != dim:
        raise ConfigError(f"{len(m.weights)} weights for dimension {dim}", field="metric.weights")
    return m


def parse_classification(d, path) -> Optional[maps.Classification]:
    if d is None:
        return None
    if isinstance(d, str):
        return maps.Classification(d)
    return maps.Classification(_get(d, "kind", path), _get(d, "c", path, None))


def parse_set(d, path="set") -> convex.ConvexSet:
    kind = _get(d, "kind", path)
    try:
        if kind == "box":
            return convex.Box(_point(_get(d, "lo", path), f"{path}.lo"), _point(_get(d, "hi", path), f"{path}.hi"))
        if kind == "ball":
            return convex.Ball(_point(_get(d, "center", path), f"{path}.center"),
                               _float(_get(d, "radius", path), f"{path}.radius"))
        if kind == "halfspace":
            return convex.Halfspace(_point(_get(d, "normal", path), f"{path}.normal"),
                                    _float(_get(d, "offset", path), f"{path}.offset"))
        if kind == "hyperplane":
            return convex.Hyperplane(_point(_get(d, "normal", path), f"{path}.normal"),
                                     _float(_get(d, "offset", path), f"{path}.offset"))
        if kind == "affine-subspace":
            anchor = _get(d, "anchor", path, None)
            return convex.AffineSubspace(np.array(_get(d, "basis", path), dtype=float), anchor)
        if kind == "line":
            return convex.AffineSubspace.line(_float(_get(d, "angle", path), f"{path}.angle"),
                                              _get(d, "anchor", path, None))
    except ConfigError as exc:
        if exc.field is None:
            raise ConfigError(str(exc), field=path) from None
        raise
    raise ConfigError(f"unknown set kind {kind!r}", field=f"{path}.kind")


def parse_prox(d, path="prox") -> prox.Prox:
    kind = _get(d, "kind", path)
    if kind == "quadratic":
        return prox.QuadraticProx(_point(_get(d, "center", path), f"{path}.center"),
                                  _float(_get(d, "weight", path, 1.0), f"{path}.weight"))
    if kind == "l1":
        return prox.L1Prox(_float(_get(d, "weight", path, 1.0), f"{path}.weight"))
    if kind == "indicator":
        return prox.IndicatorProx(parse_set(_get(d, "set", path), f"{path}.set"))
    raise ConfigError(f"unknown prox kind {kind!r}", field=f"{path}.kind")


def parse_schedule(d, path="schedule") -> RelaxationSchedule:
    kind = _get(d, "kind", path, "constant")
    if kind == "explicit":
        return RelaxationSchedule("explicit", values=tuple(_get(d, "values", path)))
    return RelaxationSchedule(kind, _float(_get(d, "alpha", path), f"{path}.alpha"))


def parse_map(d, path="map", dim: Optional[int] = None) -> maps.Map:
    kind = _get(d, "kind", path)
    cls = parse_classification(_get(d, "classification", path, None), f"{path}.classification")
    kw = {} if cls is None else {"classification": cls}
    if kind == "affine":
        m = maps.AffineMap(np.array(_get(d, "matrix", path), dtype=float),
                           _get(d, "offset", path), **kw)
    elif kind == "linear":
        m = maps.linear(np.array(_get(d, "matrix", path), dtype=float), **kw)
    elif kind == "rotation":
        m = maps.rotation(_float(_get(d, "angle", path), f"{path}.angle"), **kw)
    elif kind == "constant":
        m = maps.constant(_point(_get(d, "value", path), f"{path}.value"), **kw)
    elif kind == "scalar":
        param = _get(d, "param", path, None)
        m = maps.ScalarMap(_get(d, "name", path), param, cls)
    elif kind == "composition":
        inner = [parse_map(sub, f"{path}.maps[{i}]", dim) for i, sub in enumerate(_get(d, "maps", path))]
        m = maps.Composition(tuple(inner), **kw)
    elif kind == "km":
        m = maps.KMMap(parse_map(_get(d, "operator", path), f"{path}.operator", dim),
                       _float(_get(d, "alpha", path), f"{path}.alpha"), **kw)
    elif kind == "projection":
        m = maps.ProjectionMap(parse_set(_get(d, "set", path), f"{path}.set"), **kw)
    elif kind == "prox":
        m = maps.ProxMap(parse_prox(_get(d, "prox", path), f"{path}.prox"),
                         _float(_get(d, "lambda", path, 1.0), f"{path}.lambda"), dim, **kw)
    elif kind == "forward-backward":
        smooth = _get(d, "smooth", path)
        m = maps.ForwardBackwardMap(_point(_get(smooth, "center", f"{path}.smooth"), f"{path}.smooth.center"),
                                    _float(_get(smooth, "weight", f"{path}.smooth", 1.0), f"{path}.smooth.weight"),
                                    parse_prox(_get(d, "prox", path), f"{path}.prox"),
                                    _float(_get(d, "step", path), f"{path}.step"), **kw)
    elif kind == "douglas-rachford":
        m = maps.DouglasRachfordMap(parse_prox(_get(d, "prox_a", path), f"{path}.prox_a"),
                                    parse_prox(_get(d, "prox_b", path), f"{path}.prox_b"),
                                    _float(_get(d, "lambda", path, 1.0), f"{path}.lambda"), dim, **kw)
    else:
        raise ConfigError(f"unknown map kind {kind!r}", field=f"{path}.kind")
    if dim is not None and m.dim is not None and m.dim != dim:
        raise ConfigError(f"map acts on dimension {m.dim}, problem dimension is {dim}", field=path)
    return m


def parse_potential(d, f: Optional[maps.Map], metric: MetricSpec, dim: int, path="potential") -> caristi.Potential:
    kind = _get(d, "kind", path)
    m = _float(_get(d, "lower_bound", path, 0.0), f"{path}.lower_bound")
    witness = _get(d, "witness", path, None)
    if witness is not None:
        witness = _point(witness, f"{path}.witness", dim)
    if kind == "linear-scalar":
        if dim != 1:
            raise ConfigError("linear-scalar potential needs dimension 1", field=path)
        return caristi.LinearScalar(m, witness, _float(_get(d, "slope", path), f"{path}.slope"))
    if kind == "scaled-distance":
        return caristi.ScaledDistance(m, witness, _point(_get(d, "target", path), f"{path}.target", dim),
                                      _float(_get(d, "scale", path, 1.0), f"{path}.scale"), metric)
    if kind == "orbit-potential":
        if f is None:
            raise ConfigError("orbit-potential needs the problem to declare a map", field=path)
        trunc = caristi.Truncation(int(_get(d, "max_terms", path, 100_000)),
                                   _float(_get(d, "term_tol", path, 1e-15), f"{path}.term_tol"))
        return caristi.OrbitPotential(m, witness, f, metric, trunc)
    if kind == "table":
        entries = {tuple(_point(p, f"{path}.entries", dim).tolist()): v for p, v in _get(d, "entries", path)}
        return caristi.Table(m, witness, entries)
    raise ConfigError(f"unknown potential kind {kind!r}", field=f"{path}.kind")


@dataclass(frozen=True)
class ProblemOptions:
    max_iters: int = 100_000
    residual_tol: float = 1e-10
    displacement_budget: float = 1e6
    ratio_window: int = 8
    ratio_ceiling: float = 0.999
    keep_first: int = 10_000
    stride: int = 1
    caristi_tol: float = 1e-12

    def run_options(self) -> RunOptions:
        return RunOptions(self.max_iters, self.residual_tol, self.displacement_budget, self.keep_first, self.stride)

    def policy(self) -> CertifyPolicy:
        return CertifyPolicy(self.ratio_window, self.ratio_ceiling, self.residual_tol)


def parse_options(d) -> ProblemOptions:
    d = d or {}
    known = set(ProblemOptions.__dataclass_fields__)
    extra = set(d) - known
    if extra:
        raise ConfigError(f"unknown option(s) {sorted(extra)}", field="options")
    kw = {}
    for k, v in d.items():
        kw[k] = int(v) if k in ("max_iters", "ratio_window", "keep_first", "stride") else _float(v, f"options.{k}")
    opts = ProblemOptions(**kw)
    opts.run_options()
    opts.policy()
    if not opts.caristi_tol > 0:
        raise ConfigError("caristi_tol must be > 0", field="options.caristi_tol")
    return opts


@dataclass(frozen=True)
class Expected:
    fixed_point: Optional[np.ndarray] = None
    fixed_point_tol: float = 1e-10
    verdict: Optional[str] = None
    total_displacement: Optional[float] = None
    total_displacement_tol: float = 1e-10
    ratio: Optional[float] = None
    ratio_tol: float = 1e-6
    shadow: Optional[np.ndarray] = None
    shadow_tol: float = 1e-8
    caristi_holds: Optional[bool] = None


def parse_expected(d, dim) -> Optional[Expected]:
    if d is None:
        return None
    known = set(Expected.__dataclass_fields__)
    extra = set(d) - known
    if extra:
        raise ConfigError(f"unknown expectation(s) {sorted(extra)}", field="expected")
    kw = dict(d)
    for k in ("fixed_point", "shadow"):
        if kw.get(k) is not None:
            kw[k] = _point(kw[k], f"expected.{k}", dim)
    if kw.get("verdict") is not None and kw["verdict"] not in VERDICTS:
        raise ConfigError(f"verdict must be one of {VERDICTS}", field="expected.verdict")
    for k in ("fixed_point_tol", "total_displacement_tol", "ratio_tol", "shadow_tol", "total_displacement", "ratio"):
        if kw.get(k) is not None:
            kw[k] = _float(kw[k], f"expected.{k}")
    for k in ("fixed_point_tol", "total_displacement_tol", "ratio_tol", "shadow_tol"):
        if k in kw and not kw[k] >= 0:
            raise ConfigError("tolerances must be nonnegative", field=f"expected.{k}")
    return Expected(**kw)


@dataclass
class Algorithm:
    scheme: str
    params: dict


def parse_algorithm(d, dim) -> Algorithm:
    scheme = _get(d, "scheme", "algorithm")
    p = "algorithm"
    if scheme == "contraction":
        f = parse_map(_get(d, "map", p), f"{p}.map", dim)
        if f.classification is None or f.classification.kind != "strong-contraction":
            raise ConfigError("contraction scheme needs a strong-contraction classification",
                              field=f"{p}.map.classification")
        return Algorithm(scheme, {"map": f})
    if scheme == "km":
        return Algorithm(scheme, {"operator": parse_map(_get(d, "operator", p), f"{p}.operator", dim),
                                  "schedule": parse_schedule(_get(d, "schedule", p), f"{p}.schedule")})
    if scheme == "alternating-projections":
        sets = _get(d, "sets", p)
        if not isinstance(sets, list) or len(sets) != 2:
            raise ConfigError("need exactly two sets", field=f"{p}.sets")
        A, B = (parse_set(s, f"{p}.sets[{i}]") for i, s in enumerate(sets))
        for i, s in enumerate((A, B)):
            if s.dim != dim:
                raise ConfigError(f"set has dimension {s.dim}, problem dimension is {dim}", field=f"{p}.sets[{i}]")
        return Algorithm(scheme, {"A": A, "B": B})
    if scheme == "proximal-point":
        return Algorithm(scheme, {"map": maps.ProxMap(parse_prox(_get(d, "prox", p), f"{p}.prox"),
                                                      _float(_get(d, "lambda", p, 1.0), f"{p}.lambda"), dim)})
    if scheme == "forward-backward":
        return Algorithm(scheme, {"map": parse_map(dict(d, kind="forward-backward"), p, dim)})
    if scheme == "douglas-rachford":
        return Algorithm(scheme, {"map": parse_map(dict(d, kind="douglas-rachford"), p, dim)})
    raise ConfigError(f"unknown scheme {scheme!r}; known: {SCHEMES}", field=f"{p}.scheme")


@dataclass
class ProblemConfig:
    name: str
    dimension: int
    metric: MetricSpec
    x0: np.ndarray
    map: Optional[maps.Map] = None
    algorithm: Optional[Algorithm] = None
    potential: Optional[caristi.Potential] = None
    options: ProblemOptions = field(default_factory=ProblemOptions)
    expected: Optional[Expected] = None
    raw: dict = field(default_factory=dict)

    @property
    def target_map(self) -> Optional[maps.Map]:
        """The single map whose orbit is run, when there is one."""
        if self.map is not None:
            return self.map
        if self.algorithm is not None:
            return self.algorithm.params.get("map")
        return None

    @property
    def fixed_point_maps(self) -> list:
        """Maps that must all fix a certified limit: T for KM, both projections for alternating runs."""
        if self.target_map is not None:
            return [self.target_map]
        params = self.algorithm.params
        if self.algorithm.scheme == "km":
            return [params["operator"]]
        return [maps.ProjectionMap(params["A"]), maps.ProjectionMap(params["B"])]


TOP_LEVEL = {"name", "dimension", "metric", "map", "algorithm", "x0", "potential", "options", "expected",
             "description"}


def problem_from_dict(d: dict) -> ProblemConfig:
    if not isinstance(d, dict):
        raise ConfigError("a problem config must be a JSON object")
    extra = set(d) - TOP_LEVEL
    if extra:
        raise ConfigError(f"unknown top-level field(s) {sorted(extra)}")
    name = _get(d, "name", "")
    if not isinstance(name, str) or not name:
        raise ConfigError("name must be a non-empty string", field="name")
    dim = _get(d, "dimension", "")
    if isinstance(dim, bool) or not isinstance(dim, int) or dim < 1:
        raise ConfigError(f"dimension must be a positive integer, got {dim!r}", field="dimension")
    metric = parse_metric(d.get("metric"), dim)
    x0 = _point(_get(d, "x0", ""), "x0", dim)
    has_map, has_alg = "map" in d, "algorithm" in d
    if has_map == has_alg:
        raise ConfigError("exactly one of 'map' or 'algorithm' is required", field="map")
    f = parse_map(d["map"], "map", dim) if has_map else None
    alg = parse_algorithm(d["algorithm"], dim) if has_alg else None
    if alg is not None and alg.scheme == "km" and metric.kind != "euclidean":
        raise ConfigError("KM runs require the euclidean metric", field="metric.kind")
    cfg = ProblemConfig(name, dim, metric, x0, f, alg, options=parse_options(d.get("options")),
                        expected=parse_expected(d.get("expected"), dim), raw=d)
    if d.get("potential") is not None:
        if cfg.target_map is None:
            raise ConfigError("a potential needs a problem with a single map", field="potential")
        cfg.potential = parse_potential(d["potential"], cfg.target_map, metric, dim)
    return cfg


def loads_problem(text: str) -> ProblemConfig:
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"parse error: {exc.msg} (column {exc.colno})", line=exc.lineno) from None
    return problem_from_dict(d)
