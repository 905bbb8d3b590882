import math

import numpy as np
import pytest

from stable_op_lab import InvalidOrder, QuadratureBudget, apply_pointwise, canonical, fields
from stable_op_lab.verification import (
    BARRIERS,
    BarrierSpec,
    CounterexampleConfig,
    Experiment,
    barrier_check,
    convolution_fixed_point_check,
    counterexample_boundary,
    counterexample_interior,
    fit_power_expansion,
    halfspace_operators,
    halfspace_profile_residual,
    interior_gap,
    interior_operator_gap,
    rotated_atoms,
    run_suite,
    suite_tasks,
)

AXIS = canonical("axis_sum", 2, 0.75)


def test_fit_power_expansion_recovers_parameters():
    rho = np.geomspace(1e-3, 1e-1, 8)
    values = 0.7 * rho**-0.35 - 1.2 + 0.4 * rho**0.35
    p, a, b, c = fit_power_expansion(rho, values)
    assert p == pytest.approx(0.35, abs=1e-5)
    assert (a, b, c) == pytest.approx((0.7, -1.2, 0.4), abs=1e-4)


def test_barrier_spec_validation():
    with pytest.raises(ValueError, match="unknown barrier"):
        BarrierSpec("phi9", AXIS)
    with pytest.raises(ValueError):
        BarrierSpec("phi2_dist_in_s", AXIS, rhos=(0.6,))
    with pytest.raises(ValueError):
        BarrierSpec("phi1_dist_out_s", AXIS, rhos=(1.0,))
    with pytest.raises(ValueError):
        BarrierSpec("phi1_dist_out_s", AXIS, rhos=())


@pytest.mark.parametrize("which", BARRIERS)
def test_barriers_axis_sum(which):
    exp = barrier_check(BarrierSpec(which, AXIS))
    assert exp.passed, exp.summary
    assert exp.name == f"barrier_{which}_axis_sum_s0.75"
    assert len(exp.rows) == 4


def test_dist_in_exponent_close_to_target():
    exp = barrier_check(BarrierSpec("phi4_dist_in_3s2", AXIS))
    assert exp.summary["fitted_exponent"] == pytest.approx(-0.375, abs=0.1)


def test_barrier_reports_uncertified_probes():
    tight = BarrierSpec("phi1_dist_out_s", AXIS, budget=QuadratureBudget(tol=1e-14, n_directions=64))
    exp = barrier_check(tight)
    assert not exp.passed
    assert exp.summary["checks"]["all_certified"] is False


def test_rotated_atoms():
    op = rotated_atoms(45.0, 0.5)
    assert op.measure.kind == "atomic"
    # the symbol is smallest along an atom and largest between them
    atom = np.array([math.sqrt(0.5), math.sqrt(0.5)])
    assert op.lam == pytest.approx(op.symbol(atom), abs=1e-9)
    assert op.symbol(np.array([1.0, 0.0])) == pytest.approx(math.sqrt(2) * op.lam)


def test_halfspace_residuals_vanish():
    for op in halfspace_operators()[:3]:
        exp = halfspace_profile_residual(op, [[0.0, 0.5], [0.3, 1.0]])
        assert exp.passed, exp.summary
        assert exp.summary["reduction_gap"] <= 1e-3


def test_halfspace_rejects_points_outside():
    with pytest.raises(ValueError):
        halfspace_profile_residual(AXIS, [[0.0, -0.5]])


@pytest.mark.parametrize("beta", [0.3, 1.2])
def test_halfspace_power_homogeneity(beta):
    # L[(x_n)_+^beta] is homogeneous of degree beta - 2s
    u = fields.halfspace_power(beta, [0.0, 1.0])
    budget = QuadratureBudget(tol=1e-5)
    x = np.array([0.2, 0.4])
    base = apply_pointwise(AXIS, u, x, budget).value
    for lam in (0.5, 3.0):
        scaled = apply_pointwise(AXIS, u, lam * x, budget).value
        assert scaled == pytest.approx(lam ** (beta - 1.5) * base, rel=1e-4)


def test_fixed_point_constant():
    exp = convolution_fixed_point_check(canonical("axis_sum", 1, 0.75), "constant")
    assert exp.passed and exp.summary["max_deviation"] <= 1e-4


def test_fixed_point_linear_gate():
    with pytest.raises(InvalidOrder):
        convolution_fixed_point_check(canonical("axis_sum", 2, 0.5), "linear")
    with pytest.raises(ValueError):
        convolution_fixed_point_check(AXIS, "quadratic")


def test_counterexample_config_validation():
    with pytest.raises(ValueError):
        CounterexampleConfig(alpha=0.7, s=0.5)
    with pytest.raises(ValueError):
        CounterexampleConfig(eps=0.5, alpha=0.5)
    with pytest.raises(ValueError):
        CounterexampleConfig(deltas=(1e-3, 1e-2))
    with pytest.raises(ValueError):
        counterexample_interior(CounterexampleConfig(n=3))
    with pytest.raises(ValueError):
        counterexample_boundary(CounterexampleConfig(n=1))


def test_counterexample_interior():
    exp = counterexample_interior()
    assert exp.passed, exp.summary
    D = [row[1] for row in exp.rows]
    assert exp.summary["fitted_exponent"] == pytest.approx(0.45, abs=0.03)
    assert all(row[1] > row[2] for row in exp.rows)
    assert D[0] == pytest.approx(0.0779, rel=1e-2)


def test_interior_gap_two_ways():
    cfg = CounterexampleConfig()
    d = 0.05
    assert interior_operator_gap(cfg, d) == pytest.approx(interior_gap(cfg, d), rel=1e-3)


def test_counterexample_degenerate():
    exp = counterexample_interior(CounterexampleConfig(degenerate=True))
    assert exp.passed and exp.summary["degenerate"]
    assert all(row[1] == 0 for row in exp.rows)


@pytest.mark.parametrize("n", [2, 3])
def test_counterexample_boundary(n):
    exp = counterexample_boundary(CounterexampleConfig(n=n))
    assert exp.passed, exp.summary
    scaled = [row[1] for row in exp.rows]
    # growth against log(1/r) at a roughly constant rate
    assert all(v > 0 for v in exp.summary["log_slopes"])
    assert scaled[-1] - scaled[0] > 5 * abs(exp.rows[-1][2] - exp.rows[0][2])


def test_suite_tasks():
    assert len(suite_tasks("barriers")) == 24
    assert len(suite_tasks("all")) >= 5
    with pytest.raises(ValueError):
        suite_tasks("nonsense")


def test_run_suite_threads_keep_order():
    serial = run_suite("halfspace")
    threaded = run_suite("halfspace", workers=2)
    assert [e.name for e in serial] == [e.name for e in threaded]
    assert [e.summary["max_residual"] for e in serial] == [e.summary["max_residual"] for e in threaded]
    assert all(isinstance(e, Experiment) and e.passed for e in serial)


def test_linear_rejection_is_a_passing_experiment():
    exps = [t() for t in suite_tasks("liouville") if getattr(t, "__name__", "") == "_linear_rejected"]
    assert len(exps) == 1 and exps[0].passed
    assert "1/2" in exps[0].summary["error"] or "0.5" in exps[0].summary["error"]


def test_experiment_json():
    exp = Experiment("x", True, {"a": math.pi})
    assert exp.to_json() == {"name": "x", "passed": True, "summary": {"a": math.pi}}
