import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special

from stable_op_lab import ConfigError, DegenerateMeasure, InvalidOrder, SpectralMeasure, StableOperator, canonical
from stable_op_lab.measure import (
    ellipticity_lambda,
    measure_from_json,
    normalization_constant,
    operator_from_json,
    sphere_moment_constant,
)

AXIS_ATOMS = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])


def closed_form_c(s):
    # 2 int_0^inf (1 - cos t) t^(-1-2s) dt = pi / (Gamma(1 + 2s) sin(pi s))
    return math.pi / (special.gamma(1 + 2 * s) * math.sin(math.pi * s))


def test_c_half_is_pi():
    assert normalization_constant(0.5) == pytest.approx(math.pi, rel=1e-10)


@pytest.mark.parametrize("s", [0.1, 0.25, 0.6, 0.9])
def test_c_matches_closed_form(s):
    assert normalization_constant(s) == pytest.approx(closed_form_c(s), rel=1e-10)


def test_c_quarter_against_dyadic_shells():
    # independent quadrature: dyadic shells in t, plus the analytic tail bound is below 1e-9 after 2^40
    s = 0.25
    edges = np.concatenate([[0.0], 2.0 ** np.arange(-30, 41)])
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        if b <= 1:
            val, _ = integrate.quad(lambda t: 2 * math.sin(t / 2) ** 2 * t ** (-1 - 2 * s), a, b, epsabs=1e-14, epsrel=1e-12)
        else:
            val, _ = integrate.quad(lambda t: t ** (-1 - 2 * s), a, b, weight="cos", wvar=1.0, epsabs=1e-14)
            val = (b ** (-2 * s) - a ** (-2 * s)) / (-2 * s) - val
        total += val
    total += 2.0 ** (-40 * 2 * s) / (2 * s)
    assert 2 * total == pytest.approx(normalization_constant(s), abs=1e-8)


@pytest.mark.parametrize("s", [0.99, 0.999])
def test_c_blows_up_like_inverse_one_minus_s(s):
    assert 0.5 < normalization_constant(s) * (1 - s) < 1.0


@pytest.mark.parametrize("s", [0.0, 1.0, -0.2, 1.5, float("nan")])
def test_invalid_order(s):
    with pytest.raises(InvalidOrder):
        normalization_constant(s)


def test_axis_atoms_lambda_is_two():
    m = SpectralMeasure.atomic(AXIS_ATOMS, [1.0] * 4)
    assert ellipticity_lambda(m, 0.5) == pytest.approx(2.0, abs=1e-9)


def test_uniform_level_one_lambda_is_four():
    m = SpectralMeasure.uniform(2, 1.0)
    assert ellipticity_lambda(m, 0.5) == pytest.approx(4.0, abs=1e-3)
    # direct quadrature of int_0^{2pi} |cos phi| dphi
    val, _ = integrate.quad(lambda p: abs(math.cos(p)), 0, 2 * math.pi, points=[math.pi / 2, 3 * math.pi / 2])
    assert val == pytest.approx(4.0, abs=1e-10)


def test_single_pair_is_degenerate():
    m = SpectralMeasure.atomic([[1.0, 0.0], [-1.0, 0.0]], [1.0, 1.0])
    with pytest.raises(DegenerateMeasure):
        ellipticity_lambda(m, 0.3)
    assert ellipticity_lambda(m, 0.3, check=False) < 1e-10


def test_lambda_monotone_in_resolution():
    rng = np.random.default_rng(3)
    m = SpectralMeasure.atomic(rng.standard_normal((5, 2)), rng.uniform(0.1, 1.0, 5))
    vals = [ellipticity_lambda(m, 0.6, r) for r in (16, 64, 256, 1024)]
    assert all(b <= a + 1e-12 for a, b in zip(vals, vals[1:]))


def test_canonical_multipliers():
    assert canonical("axis_sum", 2, 0.5).multiplier(np.array([1.0, 1.0])) == pytest.approx(2.0, rel=1e-12)
    assert canonical("fractional_laplacian", 1, 0.5).multiplier(np.array([3.0])) == pytest.approx(3.0, rel=1e-12)
    xi = np.array([0.3, -1.7])
    assert canonical("fractional_laplacian", 2, 0.7).multiplier(xi) == pytest.approx(np.linalg.norm(xi) ** 1.4, rel=1e-12)
    assert canonical("axis_sum", 2, 0.7).multiplier(xi) == pytest.approx(0.3**1.4 + 1.7**1.4, rel=1e-12)


def test_canonical_unknown():
    with pytest.raises(ValueError):
        canonical("laplacian", 2, 0.5)


def test_sphere_moment_constant_circle():
    # int_{S^1} |cos phi|^{2s} dphi
    for s in (0.3, 0.5, 0.8):
        val, _ = integrate.quad(lambda p: abs(math.cos(p)) ** (2 * s), 0, 2 * math.pi, points=[math.pi / 2, 3 * math.pi / 2])
        assert sphere_moment_constant(2, s) == pytest.approx(val, rel=1e-8)


def test_density_measure_matches_uniform():
    m = SpectralMeasure.density(2, lambda t: np.ones(t.shape[0]), 512)
    u = SpectralMeasure.uniform(2, 1.0)
    xi = np.array([[0.4, 0.9], [1.0, 0.0]])
    # trapezoid on the |cos|^(2s) cusp converges like N^-(1+2s)
    assert np.allclose(m.moment(xi, 0.6), u.moment(xi, 0.6), rtol=1e-5)
    assert m.total_mass() == pytest.approx(2 * math.pi, rel=1e-12)


def test_atom_validation():
    with pytest.raises(ValueError):
        SpectralMeasure.atomic([[0.0, 0.0]], [1.0])
    with pytest.raises(ValueError):
        SpectralMeasure.atomic([[1.0, 0.0]], [-1.0])
    with pytest.raises(ValueError):
        SpectralMeasure.atomic([[1.0, 0.0]], [1.0, 2.0])


def test_directions_normalized_but_kept():
    m = SpectralMeasure.atomic([[3.0, 4.0]], [2.0])
    assert np.allclose(m.directions, [[0.6, 0.8]])
    assert m.total_mass() == 2.0


def test_json_round_trip():
    op = StableOperator(0.4, SpectralMeasure.atomic([[1, 1], [0, 2]], [0.5, 1.5]), "demo")
    back = operator_from_json(op.to_json())
    xi = np.array([[0.2, 0.7], [-1.0, 0.3]])
    assert np.allclose(back.symbol(xi), op.symbol(xi))
    assert back.name == "demo"
    u = measure_from_json({"kind": "uniform", "level": 0.5, "n": 2})
    assert u.level == 0.5


@pytest.mark.parametrize(
    "obj, field",
    [
        ({"s": 0.5}, "measure"),
        ({"measure": {"kind": "uniform", "level": 1}}, "s"),
        ({"s": 0.5, "measure": {"kind": "atomic", "atoms": [{"w": 1}]}}, "theta"),
        ({"s": 0.5, "measure": {"kind": "weird"}}, "kind"),
    ],
)
def test_json_errors_name_the_field(obj, field):
    with pytest.raises(ConfigError, match=field):
        operator_from_json(obj)


unit2 = st.tuples(st.floats(-1, 1), st.floats(-1, 1)).filter(lambda v: 0.1 < math.hypot(*v))
atoms = st.lists(st.tuples(unit2, st.floats(0.05, 2.0)), min_size=1, max_size=5)


@settings(max_examples=40, deadline=None)
@given(atoms, atoms)
def test_total_mass_additive(a, b):
    ma = SpectralMeasure.atomic([d for d, _ in a], [w for _, w in a])
    mb = SpectralMeasure.atomic([d for d, _ in b], [w for _, w in b])
    both = SpectralMeasure.atomic([d for d, _ in a + b], [w for _, w in a + b])
    assert both.total_mass() == pytest.approx(ma.total_mass() + mb.total_mass(), rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(atoms)
def test_symmetrize_idempotent(a):
    m = SpectralMeasure.atomic([d for d, _ in a], [w for _, w in a])
    once = m.symmetrized()
    twice = once.symmetrized()
    assert np.allclose(once.directions, twice.directions)
    assert np.allclose(once.weights, twice.weights)
    assert once.total_mass() == pytest.approx(m.total_mass())


@settings(max_examples=25, deadline=None)
@given(atoms, st.floats(0.15, 0.95), st.floats(0, 2 * math.pi))
def test_lambda_bounds_and_rotation(a, s, angle):
    dirs = np.array([d for d, _ in a])
    w = np.array([x for _, x in a])
    m = SpectralMeasure.atomic(dirs, w)
    lam = ellipticity_lambda(m, s, check=False)
    # below the average over unit nu, which is below the mass
    phis = np.linspace(0, 2 * math.pi, 721)[:-1]
    nus = np.stack([np.cos(phis), np.sin(phis)], axis=1)
    mean = float(np.mean(m.moment(nus, s)))
    assert lam <= mean + 1e-12
    assert mean <= m.total_mass() + 1e-12
    R = np.array([[math.cos(angle), -math.sin(angle)], [math.sin(angle), math.cos(angle)]])
    rot = SpectralMeasure.atomic(dirs @ R.T, w)
    assert ellipticity_lambda(rot, s, check=False) == pytest.approx(lam, abs=1e-8 * m.total_mass())
