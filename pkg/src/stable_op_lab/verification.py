"""Scripted checks of barrier inequalities, Liouville identities, the
half-space profile, and the two sharpness counterexamples.

Every check returns an :class:`Experiment`: a verdict, a summary dict and a
table of rows that the CLI writes as CSV.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import partial

import numpy as np
from scipy import optimize

from . import fields
from .errors import InvalidOrder, QuadratureBudgetExceeded
from .grid import GridFunction, GridSpec
from .measure import SpectralMeasure, StableOperator, canonical
from .nonlocal_apply import EvaluableField, QuadratureBudget, apply_pointwise, radial_sd_integral
from .quadrature import panel_rule
from .symbol_heat import check_linear_order, heat_convolve, heat_kernel

BARRIERS = ("phi1_dist_out_s", "phi2_dist_in_s", "phi3_dist_out_3s2", "phi4_dist_in_3s2", "supersol", "subsol")
DEFAULT_RHOS = (1e-1, 3e-2, 1e-2, 3e-3)


@dataclass
class Experiment:
    name: str
    passed: bool
    summary: dict
    columns: tuple = ()
    rows: list = field(default_factory=list)

    def to_json(self):
        return {"name": self.name, "passed": bool(self.passed), "summary": self.summary}


def fit_power_expansion(rho, values):
    """Least-squares fit values ~ a rho^(-p) + b + c rho^p; returns (p, a, b, c).

    The bounded term and the rho^p correction are what the transverse
    directions contribute near a curved boundary; a plain log-log slope
    absorbs them into the exponent at these offsets.
    """
    rho = np.asarray(rho, dtype=float)
    v = np.asarray(values, dtype=float)

    def solve(p):
        X = np.stack([rho ** (-p), np.ones_like(rho), rho**p], axis=1)
        coef, *_ = np.linalg.lstsq(X, v, rcond=None)
        return coef, float(np.sum((X @ coef - v) ** 2))

    best = optimize.minimize_scalar(lambda p: solve(p)[1], bounds=(1e-3, 1.0), method="bounded", options={"xatol": 1e-10})
    (a, b, c), _ = solve(best.x)
    return float(best.x), float(a), float(b), float(c)


# ---------------------------------------------------------------------------
# barriers


@dataclass(frozen=True)
class BarrierSpec:
    """One barrier lemma checked on the axis points (0, ..., 0, 1 +- rho).

    ``eps`` is the annulus width of the supersolution; ``inner_weight`` is the
    d^s coefficient of the subsolution.
    """

    which: str
    op: StableOperator
    rhos: tuple = DEFAULT_RHOS
    budget: QuadratureBudget = QuadratureBudget(tol=1e-2, n_directions=256)
    eps: float = 0.2
    inner_weight: float = 0.25

    def __post_init__(self):
        if self.which not in BARRIERS:
            raise ValueError(f"unknown barrier {self.which!r}; expected one of {BARRIERS}")
        inside = self.which in ("phi2_dist_in_s", "phi4_dist_in_3s2", "subsol")
        top = 0.5 if inside else 1.0
        if not self.rhos or any(not 0 < r <= top for r in self.rhos) or (not inside and max(self.rhos) >= 1):
            raise ValueError(f"probe offsets for {self.which} must lie in (0, {top:g})")


def _axis_point(n, height):
    x = np.zeros(n)
    x[-1] = height
    return x


def _evaluate(op, fld, points, budget):
    vals, errs = [], []
    for x in points:
        try:
            r = apply_pointwise(op, fld, x, budget)
            vals.append(r.value)
            errs.append(r.error_bound)
        except QuadratureBudgetExceeded as exc:
            vals.append(float("nan"))
            errs.append(float(exc.bound))
    return np.asarray(vals), np.asarray(errs)


def supersolution(op, eps=0.2, calibration=(0.95, 0.75, 0.5, 0.25, 0.05), budget=None):
    """Radial supersolution M min(1, g(d)/g(eps)), d = dist(x, B_1).

    g(d) = d^s - d^(3s/2) / (2 eps^(s/2)) increases on [0, eps]; M >= 1 is
    fixed so that L phi <= -2 at the calibration points 1 + t eps of the axis.
    Returns ``(field, M, calibration values of L for M = 1)``.
    """
    s, n = op.s, op.dim
    kappa = 0.5 * eps ** (-s / 2)

    def g(d):
        return d**s - kappa * d ** (1.5 * s)

    ge = g(eps)

    def base(r):
        return np.minimum(1.0, g(np.maximum(r - 1.0, 0.0)) / ge)

    budget = budget or QuadratureBudget(tol=None, n_directions=256)
    unit = fields.radial(base, n, (1.0, 1.0 + eps), sup_norm=1.0)
    cal, _ = _evaluate(op, unit, [_axis_point(n, 1 + t * eps) for t in calibration], budget)
    worst = float(np.max(cal))
    M = max(1.0, 2.0 / -worst) if worst < 0 else float("nan")
    if not np.isfinite(M):
        return None, M, cal
    fld = fields.radial(lambda r: M * base(r), n, (1.0, 1.0 + eps), sup_norm=M)
    return fld, M, cal


def subsolution(op, inner_weight=0.25, calibration=(0.5, 0.4, 0.3, 0.2, 0.1, 0.05, 0.02, 0.005), budget=None):
    """Radial subsolution (b d^s + d^(3s/2) + K bump) / (1 + b + K), d = dist(x, R^n \\ B_1).

    bump = (1 - 4|x|^2)_+^3 lives in B_(1/2); K is fixed so that the bump
    outweighs the negative part twice over at the calibration points 1 - t
    of the axis. Returns ``(field, K, c_bound)``.
    """
    s, n = op.s, op.dim
    b = inner_weight
    budget = budget or QuadratureBudget(tol=None, n_directions=256)

    def edge(r):
        d = np.maximum(1.0 - r, 0.0)
        return b * d**s + d ** (1.5 * s)

    def bump(r):
        return np.maximum(1.0 - 4.0 * r**2, 0.0) ** 3

    pts = [_axis_point(n, 1 - t) for t in calibration]
    e_vals, _ = _evaluate(op, fields.radial(edge, n, (1.0,), sup_norm=1 + b, support=1.0), pts, budget)
    b_vals, _ = _evaluate(op, fields.radial(bump, n, (0.5,), sup_norm=1.0, support=0.5), pts, budget)
    if np.any(b_vals <= 1e-12):
        return None, float("nan"), float("nan")
    K = max(0.0, 2.0 * float(np.max(-e_vals / b_vals)))
    norm = 1.0 + b + K
    fld = fields.radial(lambda r: (edge(r) + K * bump(r)) / norm, n, (0.5, 1.0), sup_norm=1.0, support=1.0)
    return fld, K, float(np.min((e_vals + K * b_vals) / norm))


def barrier_check(spec: BarrierSpec) -> Experiment:
    """Evaluate L phi at the probes and test the lemma's inequality."""
    op, s, n = spec.op, spec.op.s, spec.op.dim
    rho = np.asarray(spec.rhos, dtype=float)
    outside = spec.which in ("phi1_dist_out_s", "phi3_dist_out_3s2", "supersol")
    pts = [_axis_point(n, 1 + r if outside else 1 - r) for r in rho]
    if spec.which == "supersol":
        pts = [_axis_point(n, 1 + r) for r in rho if r < spec.eps]
        rho = rho[rho < spec.eps]
    summary = {"which": spec.which, "s": s, "operator": op.name or op.measure.kind}
    name = f"barrier_{spec.which}_{summary['operator']}_s{s:g}"
    if spec.which.startswith("phi"):
        expo = s if spec.which in ("phi1_dist_out_s", "phi2_dist_in_s") else 1.5 * s
        fld = fields.outside_ball_power(expo, n) if outside else fields.inside_ball_power(expo, n)
    elif spec.which == "supersol":
        fld, M, cal = supersolution(op, spec.eps)
        summary.update(eps=spec.eps, scale=M, calibration=[float(v) for v in cal])
    else:
        fld, K, cbound = subsolution(op, spec.inner_weight)
        summary.update(inner_weight=spec.inner_weight, bump_weight=K, calibration_min=cbound)
    if fld is None:
        summary["reason"] = "construction failed: calibration values have the wrong sign"
        return Experiment(name, False, summary)
    vals, errs = _evaluate(op, fld, pts, spec.budget)
    ok = np.isfinite(vals)
    summary["smallest_certified_rho"] = float(rho[ok].min()) if ok.any() else None
    rows = [(float(a), float(b), float(c)) for a, b, c in zip(rho, vals, errs)]
    cols = ("rho", "L_phi", "error_bound")
    if not ok.any():
        summary["reason"] = "no probe met the quadrature tolerance"
        summary["checks"] = {"all_certified": False}
        return Experiment(name, False, summary, cols, rows)
    v, e, r = vals[ok], errs[ok], rho[ok]
    checks = {}
    if spec.which in ("phi1_dist_out_s", "phi2_dist_in_s"):
        sign = 1.0 if spec.which == "phi1_dist_out_s" else -1.0
        checks["sign"] = bool(np.all(sign * v >= -e))
        ratio = np.abs(v) / (1.0 + np.abs(np.log(r)))
        summary["log_constant"] = float(ratio.max())
        # C (1 + |log rho|) growth: the normalized value must not keep rising
        checks["log_growth"] = bool(ratio[np.argmin(r)] <= 1.1 * ratio.max())
    elif spec.which in ("phi3_dist_out_3s2", "phi4_dist_in_3s2"):
        if spec.which == "phi3_dist_out_3s2":
            checks["sign"] = bool(np.all(v > e))
        if r.size < 4:
            summary["reason"] = "the exponent fit needs four certified probes"
            checks["exponent"] = False
        else:
            p, a, b, c = fit_power_expansion(r, v)
            summary.update(fitted_exponent=-p, amplitude=a, offset=b, correction=c, target_exponent=-s / 2)
            checks["amplitude_positive"] = a > 0
            checks["exponent"] = abs(-p + s / 2) <= 0.1
    elif spec.which == "supersol":
        checks["below_minus_one"] = bool(np.all(v + e <= -1.0 + 1e-9))
    else:
        summary["c"] = float(v.min()) if v.size else None
        checks["positive"] = bool(np.all(v - e > 0))
    if not ok.all():
        checks["all_certified"] = False
    summary["checks"] = checks
    return Experiment(name, all(checks.values()), summary, cols, rows)


# ---------------------------------------------------------------------------
# half-space profile and Liouville consequences


def rotated_atoms(angle_deg=45.0, s=0.5):
    """Atoms at +-angle and +-(angle + 90 degrees), unit weights."""
    a = math.radians(angle_deg)
    dirs = [[math.cos(a), math.sin(a)], [-math.sin(a), math.cos(a)]]
    return StableOperator(s, SpectralMeasure.atomic(dirs, [1.0, 1.0]), "rotated_atoms")


def halfspace_profile_residual(op, points, budget=None, tol=1e-3):
    """|L[(x_n)_+^s]| at points with x_n > 0, plus the dimension-reduction check.

    The reduced value is A(e_n) times the one-sided 1-D integral of the profile
    t_+^s at t = x_n, which should agree with the n-dimensional evaluation.
    """
    s, n = op.s, op.dim
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if np.any(points[:, -1] <= 0):
        raise ValueError("half-space probes need x_n > 0")
    budget = budget or QuadratureBudget(tol=None, n_directions=256, shells=8000)
    en = np.zeros(n)
    en[-1] = 1.0
    fld = fields.halfspace_power(s, en)
    line = fields.halfspace_power(s, [1.0])
    a_en = float(op.symbol(en))
    rows = []
    for x in points:
        res = apply_pointwise(op, fld, x, budget)
        reduced = a_en * radial_sd_integral(line, np.array([x[-1]]), np.array([1.0]), s, budget).value
        rows.append((*map(float, x), res.value, res.error_bound, reduced))
    worst = max(abs(r[n]) for r in rows)
    gap = max(abs(r[n] - r[n + 2]) for r in rows)
    summary = {"s": s, "operator": op.name or op.measure.kind, "max_residual": worst, "reduction_gap": gap, "tol": tol}
    cols = tuple(f"x{i + 1}" for i in range(n)) + ("L_profile", "error_bound", "reduced")
    return Experiment("halfspace_" + (op.name or op.measure.kind), worst <= tol, summary, cols, rows)


def convolution_fixed_point_check(op, kind="constant", extent=50.0, points=None, nyquist_tol=1e-12, tol=1e-4):
    """max |p(1, .) * v - v| on the inner half of a field grid for v = 1 or v = x_1."""
    if kind not in ("constant", "linear"):
        raise ValueError("kind must be 'constant' or 'linear'")
    if kind == "linear":
        check_linear_order(op.s)
    n = op.dim
    points = points or (1 << 16 if n == 1 else 1 << 10)
    kgrid = GridSpec.centered(extent, points, n)
    p = heat_kernel(op, 1.0, kgrid, nyquist_tol=nyquist_tol)
    h = kgrid.h
    m = points // 4
    fgrid = GridSpec(tuple(-(m // 2) * h for _ in range(n)), h, (m + 1,) * n)
    ext = (lambda q: np.ones(q.shape[0])) if kind == "constant" else (lambda q: q[:, 0])
    f = GridFunction(fgrid, ext(fgrid.flat_points()).reshape(fgrid.shape), ext)
    out = heat_convolve(p, f)
    pts = fgrid.points()
    inner = np.all(np.abs(pts) <= 0.5 * (m // 2) * h + 1e-12, axis=-1)
    dev = float(np.max(np.abs(out.values - f.values)[inner]))
    summary = {"kind": kind, "s": op.s, "operator": op.name or op.measure.kind, "max_deviation": dev, "tol": tol}
    summary["tail_bound"] = out.meta.get("tail_bound")
    return Experiment(f"fixed_point_{kind}_{op.name or op.measure.kind}_s{op.s:g}", dev <= tol, summary)


# ---------------------------------------------------------------------------
# counterexamples


@dataclass(frozen=True)
class CounterexampleConfig:
    """Parameters of both sharpness examples.

    Interior: u0 = (x_1)_+^(alpha - eps) eta with eta = 1 on B_1(p), 0 off
    B_2(p). Boundary: cutoff of radius ``cutoff`` around z0 = (1, 0, ...).
    """

    s: float = 0.5
    alpha: float = 0.5
    eps: float = 0.05
    p: tuple = (0.0, 4.0)
    radii: tuple = (1.0, 2.0)
    deltas: tuple = (1e-1, 1e-2, 1e-3)
    rs: tuple = (1e-1, 1e-2, 1e-3)
    cutoff: float = 0.25
    n: int = 2
    degenerate: bool = False

    def __post_init__(self):
        if not 0 < self.alpha <= self.s:
            raise ValueError("alpha must lie in (0, s]")
        if not 0 < self.eps < self.alpha:
            raise ValueError("eps must lie in (0, alpha)")
        for seq in (self.deltas, self.rs):
            if any(a <= b for a, b in zip(seq, seq[1:])) or min(seq) <= 0:
                raise ValueError("delta and r lists must be decreasing and positive")


def _eta(cfg, x1, t):
    r = np.hypot(x1 - cfg.p[0], t - cfg.p[1])
    return np.zeros_like(r) if cfg.degenerate else fields.smooth_step(r, *cfg.radii)


def interior_gap(cfg, delta, order=16):
    """D(delta) = int u0(delta, t) |t|^(-1-2s) dt by Gauss-Legendre between the cutoff's kinks."""
    r1, r2 = cfg.radii
    if delta >= r2:
        return 0.0
    half_in = math.sqrt(max(r1 * r1 - delta * delta, 0.0))
    half_out = math.sqrt(r2 * r2 - delta * delta)
    c = cfg.p[1]
    edges = np.unique([c - half_out, c - half_in, c + half_in, c + half_out])
    fine = np.concatenate([np.linspace(a, b, 9) for a, b in zip(edges[:-1], edges[1:])])
    t, w, _ = panel_rule(np.unique(fine), order)
    vals = delta ** (cfg.alpha - cfg.eps) * _eta(cfg, delta, t) * np.abs(t) ** (-1 - 2 * cfg.s)
    return float(vals @ w)


def interior_lower_bound(cfg, delta):
    s = cfg.s
    return delta ** (cfg.alpha - cfg.eps) * (3.2 ** (-2 * s) - 4.8 ** (-2 * s)) / (2 * s)


def interior_field(cfg):
    """u0 = (x_1)_+^(alpha - eps) eta as an evaluable field."""
    a = cfg.alpha - cfg.eps
    c = np.asarray(cfg.p, dtype=float)

    def f(q):
        return np.maximum(q[:, 0], 0.0) ** a * _eta(cfg, q[:, 0], q[:, 1])

    def bps(x, t):
        parts = [fields.plane_crossings(x, t, [1.0, 0.0])] + [fields.sphere_crossings(x, t, r, c) for r in cfg.radii]
        return np.concatenate(parts)

    return EvaluableField(f, 2, sup_norm=cfg.radii[1] ** a, support=(c, cfg.radii[1]), breakpoints=bps)


def interior_operator_gap(cfg, delta, budget=None):
    """L u0(delta, 0) - L u0(0, 0) for the axis operator with weight 1/2 per atom.

    With that weighting the difference is exactly the line integral D(delta),
    so this cross-checks the 1-D quadrature through the general evaluator.
    """
    op = StableOperator(cfg.s, SpectralMeasure.atomic([[1, 0], [0, 1], [-1, 0], [0, -1]], [0.5] * 4), "axis_atoms")
    budget = budget or QuadratureBudget(tol=None)
    u = interior_field(cfg)
    return apply_pointwise(op, u, np.array([delta, 0.0]), budget).value - apply_pointwise(op, u, np.zeros(2), budget).value


def counterexample_interior(cfg=CounterexampleConfig(), cross_check=True) -> Experiment:
    """Table of D(delta) against the analytic lower bound and the fitted delta exponent."""
    if cfg.n != 2:
        raise ValueError("the interior example is posed in the plane")
    d = np.asarray(cfg.deltas, dtype=float)
    D = np.array([interior_gap(cfg, x) for x in d])
    low = np.array([interior_lower_bound(cfg, x) for x in d])
    target = cfg.alpha - cfg.eps
    if cfg.degenerate:
        ok = bool(np.all(D == 0))
        summary = {"degenerate": True, "max_abs": float(np.abs(D).max())}
        return Experiment("counterexample_interior", ok, summary, ("delta", "D"), [(float(a), float(b)) for a, b in zip(d, D)])
    slope = float(np.polyfit(np.log(d), np.log(D), 1)[0])
    checks = {
        "positive": bool(np.all(D > 0)),
        "above_lower_bound": bool(np.all(D > low)),
        "exponent": abs(slope - target) <= 0.03,
    }
    cols = ("delta", "D", "lower_bound")
    rows = [(float(a), float(b), float(c)) for a, b, c in zip(d, D, low)]
    summary = {"s": cfg.s, "alpha": cfg.alpha, "eps": cfg.eps, "fitted_exponent": slope, "target": target}
    if cross_check:
        via_op = np.array([interior_operator_gap(cfg, x) for x in d])
        rel = float(np.max(np.abs(via_op - D) / D))
        summary["operator_cross_check_rel"] = rel
        checks["operator_cross_check"] = rel <= 1e-3
        cols += ("D_operator",)
        rows = [r + (float(v),) for r, v in zip(rows, via_op)]
    summary["checks"] = checks
    return Experiment("counterexample_interior", all(checks.values()), summary, cols, rows)


def _boundary_profile(cfg, r, scaled):
    """v(y) = (2 + r + |y|^2)^s times the cutoff, as a field on R^(n-1)."""
    s, m = cfg.s, cfg.n - 1
    if scaled:
        # eta(1 + r, r y) with eta the radial cutoff of radii (cutoff, 2 cutoff) around z0
        def cut(rad):
            return fields.smooth_step(r * np.sqrt(1.0 + rad**2), cfg.cutoff, 2 * cfg.cutoff)

        edges = [math.sqrt(max((k * cfg.cutoff / r) ** 2 - 1.0, 0.0)) for k in (1, 2)]
    else:

        def cut(rad):
            return fields.smooth_step(rad, 1.0, 2.0)

        edges = [1.0, 2.0]
    edges = [e for e in edges if e > 0]
    reach = max(edges)
    sup = (2 + r + reach**2) ** s
    return fields.radial(lambda rad: (2 + r + rad**2) ** s * cut(rad), m, edges, sup_norm=sup, support=reach)


def counterexample_boundary(cfg=CounterexampleConfig(), budget=None) -> Experiment:
    """L_1 v^(r)(0) for the scaled cutoff and for the fixed-cutoff control.

    L_1 is the (n-1)-dimensional fractional Laplacian. Divergence is certified
    as a strictly increasing sequence with a positive, stable slope against
    log(1/r); the control must converge.
    """
    if cfg.n < 2:
        raise ValueError("the boundary example needs n >= 2")
    op = canonical("fractional_laplacian", cfg.n - 1, cfg.s)
    budget = budget or QuadratureBudget(tol=None, n_directions=128, shells=20000)
    rs = np.asarray(cfg.rs, dtype=float)
    origin = np.zeros(cfg.n - 1)
    scaled = np.array([apply_pointwise(op, _boundary_profile(cfg, r, True), origin, budget).value for r in rs])
    control = np.array([apply_pointwise(op, _boundary_profile(cfg, r, False), origin, budget).value for r in rs])
    logs = np.log(1.0 / rs)
    slopes = np.diff(scaled) / np.diff(logs)
    ctrl_steps = np.abs(np.diff(control))
    checks = {
        "strictly_increasing": bool(np.all(np.diff(scaled) > 0)),
        "positive_slope": bool(np.all(slopes > 0)),
        "stable_slope": bool(np.all(np.abs(slopes[1:] / slopes[:-1] - 1.0) <= 0.2)) if slopes.size > 1 else True,
        # the control settles: each step shrinks by at least half and stays far below the divergent growth
        "control_converges": bool(np.all(ctrl_steps[1:] <= 0.5 * ctrl_steps[:-1] + 1e-12))
        and bool(ctrl_steps.max() < 0.1 * np.abs(np.diff(scaled)).min()),
    }
    summary = {
        "s": cfg.s,
        "n": cfg.n,
        "cutoff": cfg.cutoff,
        "log_slopes": [float(v) for v in slopes],
        "control_limit_estimate": float(control[-1]),
        "rate_oracle": "log(1/r)",
        "checks": checks,
    }
    rows = [(float(a), float(b), float(c)) for a, b, c in zip(rs, scaled, control)]
    return Experiment("counterexample_boundary", all(checks.values()), summary, ("r", "scaled_cutoff", "fixed_cutoff"), rows)


# ---------------------------------------------------------------------------
# suites


def _barrier_suite():
    return [
        partial(barrier_check, BarrierSpec(which, canonical(name, 2, s)))
        for s in (0.5, 0.75)
        for name in ("fractional_laplacian", "axis_sum")
        for which in BARRIERS
    ]


def _linear_rejected():
    try:
        convolution_fixed_point_check(canonical("axis_sum", 2, 0.5), "linear")
    except InvalidOrder as exc:
        return Experiment("fixed_point_linear_rejects_s_half", True, {"error": str(exc)})
    return Experiment("fixed_point_linear_rejects_s_half", False, {"reason": "s = 1/2 was accepted"})


def _liouville_suite():
    out = [
        partial(convolution_fixed_point_check, canonical(name, 2, s), "constant", nyquist_tol=1e-4)
        for s in (0.3, 0.5, 0.75)
        for name in ("fractional_laplacian", "axis_sum")
    ]
    out.append(partial(convolution_fixed_point_check, canonical("axis_sum", 2, 0.75), "linear"))
    out.append(_linear_rejected)
    return out


def halfspace_operators():
    return [
        canonical("axis_sum", 2, 0.75),
        canonical("fractional_laplacian", 2, 0.75),
        rotated_atoms(45.0, 0.5),
        StableOperator(0.5, SpectralMeasure.density(2, lambda th: 1.0 + 0.5 * th[:, 0] ** 2, 256), "density"),
    ]


def _halfspace_suite():
    pts = [[0.0, 0.25], [0.0, 0.5], [0.3, 1.0]]
    return [partial(halfspace_profile_residual, op, pts) for op in halfspace_operators()]


SUITES = {
    "barriers": _barrier_suite,
    "liouville": _liouville_suite,
    "halfspace": _halfspace_suite,
    "counterexample-interior": lambda: [counterexample_interior],
    "counterexample-boundary": lambda: [counterexample_boundary],
}


def suite_tasks(name):
    """Zero-argument callables, one per experiment of the suite (``all`` chains every suite)."""
    if name == "all":
        return [task for key in SUITES for task in SUITES[key]()]
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}; expected one of {sorted(SUITES) + ['all']}")
    return SUITES[name]()


def run_suite(name, workers=1):
    """Run a suite; experiments are independent, so ``workers > 1`` runs them in threads.

    Results keep the suite's order regardless of completion order.
    """
    tasks = suite_tasks(name)
    if workers <= 1 or len(tasks) == 1:
        return [task() for task in tasks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda task: task(), tasks))
