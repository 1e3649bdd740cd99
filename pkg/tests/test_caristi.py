import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

import oracles
from orbitsum.caristi import (LinearScalar, OrbitPotential, ScaledDistance, Table, Truncation,
                              canonical_caristi_identity_check, check_caristi_step, eval_potential,
                              orbit_potential, verify_along_orbit)
from orbitsum.errors import (ConfigError, NotCheckableError, NotConvergedError, PotentialInconsistencyError)
from orbitsum.maps import AffineMap, ScalarMap, rotation
from orbitsum.metric import EUCLIDEAN
from orbitsum.orbit import DIVERGENT, RunOptions, certify, run_orbit

HALF = ScalarMap("half")
SHIFT = ScalarMap("shift")
TWO_X = LinearScalar(lower_bound=0.0, witness=[1.0], slope=2.0)


def test_eval_linear():
    assert eval_potential(TWO_X, [3.0]) == 6.0


def test_eval_table_outside_support():
    phi = Table(0.0, [1.0], {(1.0,): 2.0, (0.5,): 1.0})
    assert eval_potential(phi, [1.0]) == 2.0
    assert eval_potential(phi, [7.0]) == math.inf


def test_eval_scaled_distance_at_target():
    phi = ScaledDistance(0.0, None, np.array([1.0, -2.0]), 1.0)
    assert eval_potential(phi, [1.0, -2.0]) == 0.0
    assert eval_potential(phi, [4.0, 2.0]) == 5.0


def test_eval_below_declared_bound():
    with pytest.raises(PotentialInconsistencyError):
        eval_potential(TWO_X, [-1.0])


def test_declared_bound_must_be_finite():
    with pytest.raises(ConfigError):
        LinearScalar(lower_bound=-math.inf, witness=None, slope=1.0)


def test_witness_must_be_finite_point():
    with pytest.raises(ConfigError):
        Table(0.0, [3.0], {(1.0,): 1.0})


def test_caristi_step_half():
    # phi(4) - phi(2) - d(4, 2) = 8 - 4 - 2
    assert check_caristi_step(TWO_X, HALF, EUCLIDEAN, [4.0]) == 2.0


def test_caristi_step_at_fixed_point():
    phi = ScaledDistance(0.0, None, np.array([0.0]), 3.0)
    assert check_caristi_step(phi, HALF, EUCLIDEAN, [0.0]) == 0.0


def test_caristi_step_shift_fails():
    assert check_caristi_step(TWO_X, SHIFT, EUCLIDEAN, [0.0]) == -3.0
    assert check_caristi_step(TWO_X, SHIFT, EUCLIDEAN, [5.0]) == -3.0


def test_caristi_step_refuses_infinite_start():
    phi = Table(0.0, [1.0], {(1.0,): 2.0})
    with pytest.raises(NotCheckableError):
        check_caristi_step(phi, HALF, EUCLIDEAN, [3.0])


def test_verify_half_linear():
    rep = verify_along_orbit(TWO_X, HALF, EUCLIDEAN, [1.0], 50)
    assert rep.holds and rep.steps_checked == 50
    assert rep.min_slack >= 0
    # slack_j = x_j / 2 exactly
    assert rep.slacks == [float(oracles.half_orbit(j)) / 2 for j in range(50)]
    assert rep.telescoped_bound == 2.0
    assert rep.displacement == float(oracles.geometric_partial_sum(0.5, 0.5, 50))
    assert rep.displacement <= rep.telescoped_bound
    assert rep.displacement_bound_ok


def test_verify_shift_fails_at_step_zero():
    rep = verify_along_orbit(TWO_X, SHIFT, EUCLIDEAN, [0.0], 10)
    assert not rep.holds and rep.first_violation == 0
    assert rep.slacks[0] == -3.0
    assert rep.displacement_bound_ok is None


def test_verify_from_fixed_point():
    phi = ScaledDistance(0.0, None, np.array([0.0, 0.0]), 1.0)
    f = AffineMap(0.5 * rotation(1.0).matrix, [0.0, 0.0])
    rep = verify_along_orbit(phi, f, EUCLIDEAN, [0.0, 0.0], 5)
    assert rep.holds and rep.slacks == [0.0] * 5


def test_verify_truncates_on_infinite_potential():
    phi = Table(0.0, [1.0], {(1.0,): 2.0, (0.5,): 1.0})
    rep = verify_along_orbit(phi, HALF, EUCLIDEAN, [1.0], 10)
    assert rep.truncated and rep.steps_checked == 1 and rep.holds


def test_verify_refuses_infinite_start():
    phi = Table(0.0, [1.0], {(1.0,): 2.0})
    with pytest.raises(NotCheckableError):
        verify_along_orbit(phi, HALF, EUCLIDEAN, [2.0], 3)


def test_text_report_has_slacks():
    text = verify_along_orbit(TWO_X, HALF, EUCLIDEAN, [1.0], 3).to_text()
    assert "holds: True" in text
    assert "slacks: 0.5 0.25 0.125" in text


def test_orbit_potential_half():
    res = orbit_potential(HALF, EUCLIDEAN, [1.0])
    assert res.converged
    assert abs(res.value - 1.0) <= 1e-14
    assert res.truncation_error_bound <= 1e-14


def test_orbit_potential_fixed_point():
    res = orbit_potential(HALF, EUCLIDEAN, [0.0])
    assert res.value == 0.0 and res.converged and res.terms == 1


def test_orbit_potential_shift():
    res = orbit_potential(SHIFT, EUCLIDEAN, [0.0], Truncation(max_terms=100))
    assert res.value == 100.0 and not res.converged and res.truncation_error_bound is None


def test_orbit_potential_matches_brute_force_series():
    f = AffineMap(0.3 * np.eye(2), [1.0, 1.0])
    res = orbit_potential(f, EUCLIDEAN, [0.0, 0.0], Truncation(term_tol=1e-14))
    brute = oracles.series_brute(lambda x: 0.3 * x + 1.0, np.zeros(2), 200,
                                 lambda a, b: math.sqrt(float(np.sum((a - b) ** 2))))
    # closed form: |b| / (1 - 0.3)
    assert res.value == pytest.approx(math.sqrt(2) / 0.7, abs=1e-12)
    assert res.value == pytest.approx(brute, abs=1e-12)


def test_identity_check_half():
    chk = canonical_caristi_identity_check(HALF, EUCLIDEAN, [1.0])
    assert chk.residual <= 1e-10 and chk.ok


def test_identity_check_fixed_point():
    chk = canonical_caristi_identity_check(HALF, EUCLIDEAN, [0.0])
    assert chk.residual == 0.0


def test_identity_check_affine():
    chk = canonical_caristi_identity_check(AffineMap(0.3 * np.eye(2), [1.0, 1.0]), EUCLIDEAN, [0.0, 0.0])
    assert chk.residual <= 1e-8 and chk.ok


def test_identity_check_refuses_divergent():
    with pytest.raises(NotConvergedError):
        canonical_caristi_identity_check(SHIFT, EUCLIDEAN, [0.0], Truncation(max_terms=50))


def test_orbit_potential_as_caristi_witness():
    f = AffineMap(0.6 * rotation(0.4).matrix, [1.0, -1.0])
    phi = OrbitPotential(0.0, None, f, EUCLIDEAN, Truncation(term_tol=1e-16))
    rep = verify_along_orbit(phi, f, EUCLIDEAN, [3.0, 3.0], 20, tol=1e-9)
    assert rep.holds
    assert max(abs(s) for s in rep.slacks) <= 1e-9


c_params = st.tuples(st.floats(0.0, 0.9), st.floats(-3.0, 3.0),
                     st.lists(st.floats(-5, 5), min_size=2, max_size=2),
                     st.lists(st.floats(-20, 20), min_size=2, max_size=2))


@given(c_params, st.floats(1.0, 4.0))
def test_scaled_distance_witness_for_contractions(params, extra):
    """phi(x) = (1 + c) d(x, p) / (1 - c) is a Caristi potential for a c-contraction with fixed point p.

    d(x, fx) <= d(x, p) + d(fx, p) <= (1 + c) d(x, p) and phi(x) - phi(fx) >= (1 + c) d(x, p).
    """
    c, angle, b, x0 = params
    f = AffineMap(c * rotation(angle).matrix, b)
    p = np.linalg.solve(np.eye(2) - f.matrix, f.offset)
    phi = ScaledDistance(0.0, None, p, extra * (1.0 + c) / (1.0 - c))
    tol = 1e-9
    rep = verify_along_orbit(phi, f, EUCLIDEAN, x0, 30, tol)
    assert rep.holds
    n = rep.steps_checked
    # telescoping: sum of gaps <= phi(x0) - phi(x_N) + N tol <= phi(x0) - m + N tol
    assert math.fsum(rep.gaps) <= rep.potentials[0] - rep.potentials[-1] + n * tol
    assert rep.displacement_bound_ok
    # potentials decrease along the orbit, up to tol per step
    for a, b_ in zip(rep.potentials, rep.potentials[1:]):
        assert b_ <= a + tol
    # a verified witness never coexists with a DIVERGENT certificate
    trace = run_orbit(f, EUCLIDEAN, x0, RunOptions(max_iters=5000))
    assert certify(trace, f, EUCLIDEAN).verdict != DIVERGENT


@given(c_params, st.lists(st.floats(-10, 10), min_size=2, max_size=2))
def test_identity_residual_within_bound(params, x):
    c, angle, b, _ = params
    f = AffineMap(c * rotation(angle).matrix, b)
    chk = canonical_caristi_identity_check(f, EUCLIDEAN, x, Truncation(term_tol=1e-13))
    assert chk.ok
