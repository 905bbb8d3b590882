import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stable_op_lab import (
    EvaluableField,
    GridSpec,
    QuadratureBudget,
    QuadratureBudgetExceeded,
    SpectralMeasure,
    StableOperator,
    apply_grid,
    apply_pointwise,
    canonical,
    fields,
)
from stable_op_lab.grid import sample
from stable_op_lab.nonlocal_apply import radial_sd_integral
from stable_op_lab.symbol_heat import fft_apply

FL1 = canonical("fractional_laplacian", 1, 0.5)
AXIS2 = canonical("axis_sum", 2, 0.75)


def cosine():
    return EvaluableField(lambda p: np.cos(p[:, 0]), 1, sup_norm=1.0)


def test_affine_gives_zero():
    u = fields.affine([2.0, -1.0], 3.0)
    for theta in ([1.0, 0.0], [0.6, 0.8]):
        r = radial_sd_integral(u, [0.4, -0.2], theta, 0.6, QuadratureBudget(tol=None))
        assert abs(r.value) <= 1e-12


def test_cosine_one_sided_integral():
    # int_0^inf (2 cos r - 2) r^-2 dr = -pi; panels capped so GL resolves the oscillation
    budget = QuadratureBudget(tol=None, R_far=3000.0, max_panel=1.0, shells=8000)
    r = radial_sd_integral(cosine(), [0.0], [1.0], 0.5, budget)
    assert r.value == pytest.approx(-math.pi, abs=1e-6)
    assert abs(r.value + math.pi) <= r.error_bound


def test_cosine_matches_multiplier():
    # multiplier -|xi| at xi = 1
    r = apply_pointwise(FL1, cosine(), [0.0], QuadratureBudget(tol=None, R_far=3000.0, max_panel=1.0, shells=8000))
    assert r.value == pytest.approx(-1.0, abs=1e-6)


def test_cosine_budget_exceeded_without_panel_cap():
    with pytest.raises(QuadratureBudgetExceeded) as info:
        apply_pointwise(FL1, cosine(), [0.0])
    assert info.value.args[0].startswith("certified error bound")


def test_halfline_power_is_harmonic():
    r = apply_pointwise(FL1, fields.halfspace_power(0.5, [1.0]), [1.0], QuadratureBudget(tol=1e-4))
    assert abs(r.value) <= 1e-4


def test_axis_sum_halfplane_power():
    r = apply_pointwise(AXIS2, fields.halfspace_power(0.75, [0.0, 1.0]), [0.3, 0.7], QuadratureBudget(tol=1e-3))
    assert abs(r.value) <= 1e-3


@pytest.mark.parametrize("s", [0.25, 0.4, 0.7])
def test_getoor_profile(s):
    # gamma (1 - |x|^2)_+^s solves L u = -1 in the unit disc for the fractional Laplacian
    op = canonical("fractional_laplacian", 2, s)
    u = fields.ball_power(s, scale=fields.getoor_constant(2, s), ndim=2)
    r = apply_pointwise(op, u, [0.3, 0.2], QuadratureBudget(tol=1e-4, n_directions=64))
    assert r.value == pytest.approx(-1.0, abs=1e-4)


@pytest.mark.parametrize("name, dim", [("fractional_laplacian", 1), ("fractional_laplacian", 2), ("axis_sum", 2)])
def test_gaussian_matches_fft(name, dim):
    op = canonical(name, dim, 0.6)
    g = fields.gaussian(np.zeros(dim), 1.0)
    pts = np.array([[0.0] * dim, [0.5] + [-0.3] * (dim - 1)])
    quad = [apply_pointwise(op, g, p).value for p in pts]
    assert np.max(np.abs(np.array(quad) - fft_apply(op, g, pts))) <= 1e-5


def test_constant_gives_zero():
    rng = np.random.default_rng(2)
    ops = [
        AXIS2,
        canonical("fractional_laplacian", 2, 0.3),
        StableOperator(0.55, SpectralMeasure.atomic(rng.standard_normal((5, 2)), rng.uniform(0.1, 1, 5))),
    ]
    for op in ops:
        # the far tail of u(x +- r theta) is bounded, not integrated, so zero holds to the bound
        r = apply_pointwise(op, fields.constant(2.5, 2), [0.1, 0.2])
        assert abs(r.value) <= r.error_bound + 1e-15 <= 1e-6


def test_apply_grid_constant():
    grid = GridSpec.covering([-1.0, -1.0], [1.0, 1.0], 0.1)
    one = sample(lambda p: np.ones(p.shape[0]), grid, extension=lambda p: np.ones(p.shape[0]))
    out = apply_grid(AXIS2, one)
    assert np.max(np.abs(out.values)) <= np.max(out.meta["error_bound"]) + 1e-12 <= 1e-6
    zero = sample(lambda p: np.zeros(p.shape[0]), grid)
    assert np.all(apply_grid(AXIS2, zero).values == 0.0)


def test_apply_grid_matches_pointwise():
    op = canonical("axis_sum", 2, 0.5)
    u = fields.bump([0.0, 0.0], 0.8)
    grid = GridSpec.covering([-1.0, -1.0], [1.0, 1.0], 1 / 64)
    out = apply_grid(op, sample(u, grid))
    for x in ([0.0, 0.0], [0.25, -0.125], [0.5, 0.5]):
        i = grid.nearest_index(x)
        exact = apply_pointwise(op, u, grid.points()[i]).value
        assert out.values[i] == pytest.approx(exact, abs=5e-3 * abs(exact) + 1e-3)


def test_apply_grid_off_axis_reports_interpolation_bound():
    op = StableOperator(0.5, SpectralMeasure.atomic([[1.0, 1.0], [1.0, -1.0]], [1.0, 1.0]))
    grid = GridSpec.covering([-1.0, -1.0], [1.0, 1.0], 1 / 32)
    out = apply_grid(op, sample(fields.bump([0.0, 0.0], 0.8), grid))
    assert out.meta["interpolation_bound"] > 0


def test_apply_grid_rejects_plain_field():
    with pytest.raises(TypeError):
        apply_grid(AXIS2, fields.bump([0.0, 0.0]))


center = st.tuples(st.floats(-0.5, 0.5), st.floats(-0.5, 0.5))
point = st.tuples(st.floats(-0.6, 0.6), st.floats(-0.6, 0.6))
BUDGET = QuadratureBudget(tol=1e-5)


@settings(max_examples=15, deadline=None)
@given(center, center, st.floats(-2, 2), st.floats(-2, 2), point)
def test_linearity(c1, c2, a, b, x):
    u = fields.bump(c1, 0.9)
    v = fields.bump(c2, 0.7)
    w = fields.bump_mixture([c1, c2], [0.9, 0.7], [a, b])
    lhs = apply_pointwise(AXIS2, w, x, BUDGET).value
    rhs = a * apply_pointwise(AXIS2, u, x, BUDGET).value + b * apply_pointwise(AXIS2, v, x, BUDGET).value
    assert lhs == pytest.approx(rhs, abs=1e-5 * (1 + abs(a) + abs(b)))


@settings(max_examples=15, deadline=None)
@given(center, point, point)
def test_translation(c, x, shift):
    u = fields.bump(c, 0.9)
    moved = fields.bump(np.add(c, shift), 0.9)
    a = apply_pointwise(AXIS2, u, x, BUDGET).value
    b = apply_pointwise(AXIS2, moved, np.add(x, shift), BUDGET).value
    assert a == pytest.approx(b, abs=1e-5)


@settings(max_examples=15, deadline=None)
@given(center, point, st.floats(0.5, 2.0))
def test_scaling(c, x, lam):
    # u_lam(y) = u(lam y) gives L u_lam(x) = lam^(2s) Lu(lam x)
    u = fields.bump(c, 0.9)
    scaled = fields.bump(np.divide(c, lam), 0.9 / lam)
    a = apply_pointwise(AXIS2, scaled, x, BUDGET).value
    b = lam**1.5 * apply_pointwise(AXIS2, u, np.multiply(x, lam), BUDGET).value
    assert a == pytest.approx(b, abs=3e-5 * (1 + lam**1.5))
