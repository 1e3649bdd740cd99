"""Problem loading, orchestration, trace persistence and the built-in registry."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional, Union

import numpy as np

from . import algorithms
from .caristi import CaristiReport, verify_along_orbit
from .config import ProblemConfig, loads_problem
from .errors import ConfigError, OrbitsumError
from .maps import ProjectionMap, eval_map
from .orbit import CONVERGED, OrbitTrace, SummabilityCertificate, certify, polish_fixed_point, run_orbit

CSV_HEADER = ["n", "gap", "partial_sum", "ratio", "residual"]


def load_problem(source: Union[str, os.PathLike]) -> ProblemConfig:
    """Load a config from a path, or parse ``source`` directly when it is inline JSON text."""
    if isinstance(source, str) and source.lstrip().startswith("{"):
        return loads_problem(source)
    path = Path(source)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        return loads_problem(text)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def _registry_files():
    root = resources.files("orbitsum") / "problems"
    return sorted((p for p in root.iterdir() if p.name.endswith(".json")), key=lambda p: p.name)


def registry() -> list:
    """All built-in problems, in file-name order."""
    return [loads_problem(p.read_text()) for p in _registry_files()]


def registry_names() -> list:
    return [cfg.name for cfg in registry()]


def resolve(source: str) -> ProblemConfig:
    """Path, inline JSON, or a registry name."""
    if isinstance(source, str) and not source.lstrip().startswith("{") and not Path(source).exists():
        for cfg in registry():
            if cfg.name == source:
                return cfg
        raise ConfigError(f"{source!r} is neither a readable file nor a registry problem")
    return load_problem(source)


@dataclass
class Check:
    name: str
    passed: bool
    detail: str


@dataclass
class RunReport:
    config: ProblemConfig
    trace: OrbitTrace
    certificate: SummabilityCertificate
    caristi: Optional[CaristiReport] = None
    wall_time: float = 0.0
    ratio: Optional[float] = None
    extras: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)
    # a float64 point every target map fixes exactly, found by continuing a CONVERGED orbit
    exact_fixed_point: Optional[np.ndarray] = None

    @property
    def passed(self) -> Optional[bool]:
        """``None`` when the config carries no expectations."""
        if self.config.expected is None:
            return None
        return all(c.passed for c in self.checks)

    def summary(self) -> dict:
        t = self.trace
        return {"length": t.n_steps, "final_gap": t.gaps[-1], "total_displacement": t.total_displacement,
                "terminated_reason": t.terminated_reason}

    def as_dict(self) -> dict:
        extras = {k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in self.extras.items()}
        return {
            "config": self.config.raw,
            "trace": self.summary(),
            "certificate": self.certificate.as_dict(),
            "ratio": self.ratio,
            "caristi": None if self.caristi is None else {
                "holds": self.caristi.holds, "steps_checked": self.caristi.steps_checked,
                "min_slack": self.caristi.min_slack, "telescoped_bound": self.caristi.telescoped_bound,
                "displacement": self.caristi.displacement, "first_violation": self.caristi.first_violation,
                "displacement_bound_ok": self.caristi.displacement_bound_ok, "slacks": self.caristi.slacks},
            "extras": extras,
            "exact_fixed_point": None if self.exact_fixed_point is None else self.exact_fixed_point.tolist(),
            "wall_time": self.wall_time,
            "checks": [c.__dict__ for c in self.checks],
            "passed": self.passed,
        }


def orbit_step(cfg: ProblemConfig):
    """The step function ``(n, x) -> x_{n+1}`` that generates the problem's orbit."""
    alg = cfg.algorithm
    if alg is not None and alg.scheme == "km":
        T, schedule = alg.params["operator"], alg.params["schedule"]
        return lambda n, x: algorithms.km_step(T, x, schedule(n))
    if alg is not None and alg.scheme == "alternating-projections":
        pair = (ProjectionMap(alg.params["A"]), ProjectionMap(alg.params["B"]))
        return lambda n, x: eval_map(pair[n % 2], x)
    f = cfg.target_map
    return lambda n, x: eval_map(f, x)


def _execute(cfg: ProblemConfig):
    """Run the orbit; returns (trace, certificate, per-cycle ratio, extras)."""
    opts, policy = cfg.options.run_options(), cfg.options.policy()
    extras = {}
    if cfg.map is not None:
        trace = run_orbit(cfg.map, cfg.metric, cfg.x0, opts)
        cert = certify(trace, cfg.map, cfg.metric, policy)
        return trace, cert, cert.ratio_estimate, extras
    alg = cfg.algorithm
    if alg.scheme == "contraction":
        res = algorithms.contraction_solve(alg.params["map"], cfg.metric, cfg.x0, opts, policy)
        extras["modulus"] = res.modulus
        extras["apriori_bound_0"] = res.apriori_bound(0)
        return res.trace, res.certificate, res.certificate.ratio_estimate, extras
    if alg.scheme == "km":
        res = algorithms.km_run(alg.params["operator"], cfg.x0, alg.params["schedule"], cfg.metric, opts, policy)
        extras["km_functional"] = res.km_functional
        extras["max_identity_error"] = max(res.identity_errors)
        return res.trace, res.certificate, res.certificate.ratio_estimate, extras
    if alg.scheme == "alternating-projections":
        res = algorithms.alternating_projections_run(alg.params["A"], alg.params["B"], cfg.x0, opts, policy,
                                                     cfg.metric)
        extras["membership"] = list(res.membership)
        return res.trace, res.certificate, res.cycle_ratio, extras
    res = algorithms.fixed_point_run(alg.params["map"], cfg.x0, opts, policy, cfg.metric)
    if res.shadow is not None:
        extras["shadow"] = res.shadow
    if res.warnings:
        extras["warnings"] = res.warnings
    return res.trace, res.certificate, res.certificate.ratio_estimate, extras


def _polish(cfg: ProblemConfig, trace: OrbitTrace, cert: SummabilityCertificate):
    if cert.verdict != CONVERGED or cert.limit_estimate is None:
        return None
    try:
        return polish_fixed_point(orbit_step(cfg), cfg.fixed_point_maps, cfg.metric, cert.limit_estimate,
                                  cfg.options.residual_tol, start=trace.n_steps)
    except OrbitsumError:
        # e.g. an explicit relaxation schedule that has run out
        return None


def _compare(report: RunReport) -> list:
    exp = report.config.expected
    cert = report.certificate
    checks = []
    if exp.verdict is not None:
        checks.append(Check("verdict", cert.verdict == exp.verdict, f"{cert.verdict} vs expected {exp.verdict}"))
    if exp.fixed_point is not None:
        p = cert.limit_estimate
        if p is None:
            checks.append(Check("fixed_point", False, "no limit estimate"))
        else:
            err = float(np.max(np.abs(p - exp.fixed_point)))
            checks.append(Check("fixed_point", err <= exp.fixed_point_tol,
                                f"max error {err:.3g} (tol {exp.fixed_point_tol:g})"))
    if exp.total_displacement is not None:
        err = abs(cert.total_displacement - exp.total_displacement)
        checks.append(Check("total_displacement", err <= exp.total_displacement_tol,
                            f"{cert.total_displacement!r} vs {exp.total_displacement!r} "
                            f"(tol {exp.total_displacement_tol:g})"))
    if exp.ratio is not None:
        r = report.ratio
        ok = r is not None and abs(r - exp.ratio) <= exp.ratio_tol
        checks.append(Check("ratio", ok, f"{r!r} vs {exp.ratio!r} (tol {exp.ratio_tol:g})"))
    if exp.shadow is not None:
        s = report.extras.get("shadow")
        err = math.inf if s is None else float(np.max(np.abs(s - exp.shadow)))
        checks.append(Check("shadow", err <= exp.shadow_tol, f"max error {err:.3g} (tol {exp.shadow_tol:g})"))
    if exp.caristi_holds is not None:
        got = None if report.caristi is None else report.caristi.holds
        checks.append(Check("caristi_holds", got == exp.caristi_holds, f"{got} vs expected {exp.caristi_holds}"))
    return checks


def run_problem(cfg: ProblemConfig) -> RunReport:
    """Run, certify, optionally verify a Caristi potential, and compare against ``expected``."""
    start = time.perf_counter()
    try:
        trace, cert, ratio, extras = _execute(cfg)
        caristi = None
        if cfg.potential is not None:
            caristi = verify_along_orbit(cfg.potential, cfg.target_map, cfg.metric, cfg.x0,
                                         max(trace.n_steps, 1), cfg.options.caristi_tol)
    except OrbitsumError as exc:
        exc.problem = cfg.name
        exc.args = (f"problem {cfg.name!r}: {exc}",)
        raise
    report = RunReport(cfg, trace, cert, caristi, time.perf_counter() - start, ratio, extras)
    report.exact_fixed_point = _polish(cfg, trace, cert)
    if cfg.expected is not None:
        report.checks = _compare(report)
    return report


def _fmt(v) -> str:
    return "" if v is None else format(v, ".17g")


def trace_columns(trace: OrbitTrace) -> dict:
    ratios = trace.ratios + [None]
    return {"n": list(range(trace.n_steps)), "gap": list(trace.gaps), "partial_sum": list(trace.partial_sums),
            "ratio": ratios, "residual": list(trace.residuals)}


def atomic_write(path: Union[str, os.PathLike], text: str) -> None:
    """Write via a temp file in the destination directory, then rename over ``path``."""
    path = Path(path)
    try:
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write {path}: {exc.strerror}") from exc


def emit_trace(trace: OrbitTrace, path, fmt: str = "csv") -> None:
    cols = trace_columns(trace)
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for row in zip(*(cols[k] for k in CSV_HEADER)):
            w.writerow([row[0]] + [_fmt(v) for v in row[1:]])
        atomic_write(path, buf.getvalue())
    elif fmt == "json":
        doc = dict(cols, terminated_reason=trace.terminated_reason, period=trace.period)
        atomic_write(path, json.dumps(doc, indent=1) + "\n")
    else:
        raise ConfigError(f"unknown trace format {fmt!r}; use csv or json", field="format")


def read_trace(path) -> dict:
    """Read a CSV or JSON trace back into columns (``None`` for undefined ratios)."""
    path = Path(path)
    text = path.read_text()
    if path.suffix == ".json":
        doc = json.loads(text)
        return {k: doc[k] for k in CSV_HEADER}
    rows = list(csv.reader(io.StringIO(text)))
    if rows[0] != CSV_HEADER:
        raise ConfigError(f"unexpected trace header {rows[0]}")
    cols = {k: [] for k in CSV_HEADER}
    for row in rows[1:]:
        cols["n"].append(int(row[0]))
        for k, v in zip(CSV_HEADER[1:], row[1:]):
            cols[k].append(None if v == "" else float(v))
    return cols
