"""Orbit-summability certificates for fixed-point iterations."""

from .algorithms import (RelaxationSchedule, alternating_projections_run, contraction_solve,
                         douglas_rachford_step, forward_backward_step, km_run, km_step,
                         nonexpansiveness_check)
from .caristi import (canonical_caristi_identity_check, check_caristi_step, eval_potential, orbit_potential,
                      verify_along_orbit)
from .convex import project
from .harness import emit_trace, load_problem, registry, run_problem
from .maps import eval_map
from .metric import MetricSpec, as_point, check_metric_axioms, distance
from .orbit import (CertifyPolicy, RunOptions, cauchy_bound, certify, fixed_point_residual, orbit_gap,
                    run_orbit)
from .prox import prox_step

__all__ = [
    "CertifyPolicy", "MetricSpec", "RelaxationSchedule", "RunOptions", "alternating_projections_run",
    "as_point", "canonical_caristi_identity_check", "cauchy_bound", "certify", "check_caristi_step",
    "check_metric_axioms", "contraction_solve", "distance", "douglas_rachford_step", "emit_trace",
    "eval_map", "eval_potential", "fixed_point_residual", "forward_backward_step", "km_run", "km_step",
    "load_problem", "nonexpansiveness_check", "orbit_gap", "orbit_potential", "project", "prox_step",
    "registry", "run_orbit", "run_problem", "verify_along_orbit",
]
