"""Dense collocation for L u = f in a domain, u = 0 outside.

Two discretizations are provided.

*Lines*, for operators whose directions are all grid axes (every 1-D
operator, ``axis_sum``, axis-aligned atoms). Along each grid line the field
is the piecewise-linear interpolant of the nodes, except in a cell cut by the
boundary, where it follows ``u_m (|y - c| / |x_m - c|)^s`` from the interior
node ``x_m`` down to the crossing ``c``. Products of these shape functions
with the kernel are integrated exactly up to quadrature error: a Toeplitz
table for whole cells, closed forms next to the collocation point, and
graded Gauss-Legendre for cut cells. The inner cutoff is
``r0 = min(h, l / 2)`` where ``l`` is the distance along the line to the
nearest boundary crossing.

*Rays*, for every other operator in 2-D. Each direction is sampled at
Gauss-Legendre radii on dyadic shells and the samples are spread to the
bilinear stencil; ``r0 = h``.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from . import kernels
from .errors import ConfigError, ResolutionError, SingularSystem
from .grid import GridFunction, GridSpec
from .measure import StableOperator
from .nonlocal_apply import EvaluableField, QuadratureBudget, apply_pointwise
from .quadrature import dyadic_edges, gauss_legendre, panel_rule

DOMAIN_KINDS = ("interval", "ball", "box", "complement_ball")


@dataclass(frozen=True)
class DomainSpec:
    """Test domains with exact signed distance (positive inside).

    ``complement_ball`` is {|x - center| > radius} intersected with the box
    [lo, hi]; its distance is exact inside the domain.
    """

    kind: str
    dim: int
    center: tuple = ()
    radius: float = 1.0
    lo: tuple = ()
    hi: tuple = ()

    @classmethod
    def interval(cls, a, b):
        if not b > a:
            raise ValueError("interval needs a < b")
        return cls("interval", 1, ((a + b) / 2,), (b - a) / 2, (float(a),), (float(b),))

    @classmethod
    def ball(cls, center=(0.0,), radius=1.0):
        c = tuple(float(v) for v in np.atleast_1d(center))
        if not radius > 0:
            raise ValueError("ball radius must be positive")
        return cls("ball", len(c), c, float(radius), tuple(v - radius for v in c), tuple(v + radius for v in c))

    @classmethod
    def box(cls, lo, hi):
        lo = tuple(float(v) for v in np.atleast_1d(lo))
        hi = tuple(float(v) for v in np.atleast_1d(hi))
        if len(lo) != len(hi) or any(b <= a for a, b in zip(lo, hi)):
            raise ValueError("box needs lo < hi componentwise")
        return cls("box", len(lo), tuple((a + b) / 2 for a, b in zip(lo, hi)), 0.0, lo, hi)

    @classmethod
    def complement_ball(cls, radius, lo, hi, center=None):
        lo = tuple(float(v) for v in np.atleast_1d(lo))
        hi = tuple(float(v) for v in np.atleast_1d(hi))
        c = tuple(0.0 for _ in lo) if center is None else tuple(float(v) for v in center)
        return cls("complement_ball", len(lo), c, float(radius), lo, hi)

    def signed_distance(self, points):
        p = np.asarray(points, dtype=float).reshape(-1, self.dim)
        if self.kind == "ball":
            return self.radius - np.linalg.norm(p - np.asarray(self.center), axis=1)
        box = self._box_distance(p)
        if self.kind in ("interval", "box"):
            return box
        ring = np.linalg.norm(p - np.asarray(self.center), axis=1) - self.radius
        return np.minimum(box, ring)

    def _box_distance(self, p):
        lo = np.asarray(self.lo)
        hi = np.asarray(self.hi)
        inside = np.minimum(p - lo, hi - p)
        d_in = inside.min(axis=1)
        outside = np.maximum(np.maximum(lo - p, p - hi), 0.0)
        d_out = np.linalg.norm(outside, axis=1)
        return np.where(d_in > 0, d_in, -d_out)

    def nearest_boundary(self, points):
        """Closest boundary point to each input point."""
        p = np.asarray(points, dtype=float).reshape(-1, self.dim)
        c = np.asarray(self.center)

        def radial(q):
            v = q - c
            norm = np.linalg.norm(v, axis=1, keepdims=True)
            v = np.where(norm > 0, v / np.where(norm > 0, norm, 1.0), np.eye(self.dim)[0])
            return c + self.radius * v

        if self.kind == "ball":
            return radial(p)
        lo, hi = self.bounding_box()
        face = np.clip(p, lo, hi)
        inside = np.all((p > lo) & (p < hi), axis=1)
        gaps = np.concatenate([p - lo, hi - p], axis=1)
        k = np.argmin(gaps, axis=1)
        axis = k % self.dim
        rows = np.flatnonzero(inside)
        face[rows, axis[rows]] = np.where(k[rows] < self.dim, lo[axis[rows]], hi[axis[rows]])
        if self.kind in ("interval", "box"):
            return face
        sphere = radial(p)
        pick = np.linalg.norm(sphere - p, axis=1) < np.linalg.norm(face - p, axis=1)
        return np.where(pick[:, None], sphere, face)

    def bounding_box(self):
        return np.asarray(self.lo, dtype=float), np.asarray(self.hi, dtype=float)

    def diameter(self):
        lo, hi = self.bounding_box()
        return float(np.linalg.norm(hi - lo))

    def inward_normal(self, z):
        """Inward unit normal at a boundary point (nearest face for boxes)."""
        z = np.asarray(z, dtype=float)
        if self.kind == "ball" and self.dim > 1:
            v = np.asarray(self.center) - z
            return v / np.linalg.norm(v)
        if self.kind == "complement_ball":
            v = z - np.asarray(self.center)
            if abs(np.linalg.norm(v) - self.radius) < 1e-9 * max(1.0, self.radius):
                return v / np.linalg.norm(v)
        lo, hi = self.bounding_box()
        gaps = np.concatenate([np.abs(z - lo), np.abs(hi - z)])
        k = int(np.argmin(gaps))
        nu = np.zeros(self.dim)
        nu[k % self.dim] = 1.0 if k < self.dim else -1.0
        return nu

    def to_json(self):
        out = {"kind": self.kind, "dim": self.dim}
        if self.kind == "ball":
            out.update(center=list(self.center), radius=self.radius)
        elif self.kind == "complement_ball":
            out.update(center=list(self.center), radius=self.radius, lo=list(self.lo), hi=list(self.hi))
        elif self.kind == "interval":
            out.update(a=self.lo[0], b=self.hi[0])
        else:
            out.update(lo=list(self.lo), hi=list(self.hi))
        return out


def domain_from_json(obj, where="domain"):
    if not isinstance(obj, dict) or "kind" not in obj:
        raise ConfigError(f"{where}: missing field 'kind'")
    kind = obj["kind"]
    try:
        if kind == "interval":
            return DomainSpec.interval(float(obj["a"]), float(obj["b"]))
        if kind == "ball":
            return DomainSpec.ball(obj.get("center", [0.0] * int(obj.get("dim", 1))), float(obj.get("radius", 1.0)))
        if kind == "box":
            return DomainSpec.box(obj["lo"], obj["hi"])
        if kind == "complement_ball":
            return DomainSpec.complement_ball(float(obj["radius"]), obj["lo"], obj["hi"], obj.get("center"))
    except KeyError as exc:
        raise ConfigError(f"{where}: missing field {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc
    raise ConfigError(f"{where}.kind: expected one of {DOMAIN_KINDS}, got {kind!r}")


def named_rhs(spec):
    """Right-hand sides by name: constant, sign_x1, custom_table."""
    if isinstance(spec, (int, float)):
        return _constant(float(spec))
    if callable(spec):
        return spec
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError("f: expected a number, a callable, or an object with 'kind'")
    kind = spec["kind"]
    if kind == "constant":
        return _constant(float(spec.get("value", 1.0)))
    if kind == "sign_x1":
        scale = float(spec.get("value", 1.0))
        return lambda p: scale * np.sign(np.asarray(p)[:, 0])
    if kind == "custom_table":
        if "path" in spec:
            gf = GridFunction.from_csv(spec["path"])
            return lambda p: gf(p)
        if "values" in spec and "grid" in spec:
            g = spec["grid"]
            gf = GridFunction(GridSpec(tuple(g["lower"]), float(g["h"]), tuple(g["shape"])), np.asarray(spec["values"], dtype=float))
            return lambda p: gf(p)
        raise ConfigError("f.custom_table: needs 'path' or 'grid' and 'values'")
    raise ConfigError(f"f.kind: unknown right-hand side {kind!r}")


def _constant(c):
    return lambda p: np.full(np.asarray(p).shape[0], c)


@dataclass(frozen=True)
class DirichletProblem:
    """L u = f in ``domain``, u = 0 outside, on a grid of spacing ``h``.

    The grid covers the domain's bounding box enlarged by ``margin`` (one
    node by default; outside the grid u is zero, which the exterior condition
    makes exact). Nodes with d(x) > h/10 are unknowns.
    """

    op: StableOperator
    domain: DomainSpec
    f: object
    h: float
    margin: float | None = None
    n_directions: int = 32
    method: str = "auto"

    def __post_init__(self):
        if self.op.dim != self.domain.dim:
            raise ValueError("operator and domain dimensions differ")
        if self.op.dim > 2:
            raise ValueError("the solver handles n in {1, 2}")
        object.__setattr__(self, "f", named_rhs(self.f))

    @property
    def grid(self):
        lo, hi = self.domain.bounding_box()
        m = self.h if self.margin is None else self.margin
        return GridSpec.covering(lo - m, hi + m + 1e-9 * self.h, self.h)

    def interior_mask(self, grid=None):
        grid = grid or self.grid
        d = self.domain.signed_distance(grid.flat_points()).reshape(grid.shape)
        return d > self.h / 10

    def resolved_method(self):
        if self.method != "auto":
            return self.method
        return "lines" if self.op.is_axis_aligned() else "rays"


@dataclass
class LinearSystem:
    matrix: np.ndarray
    rhs: np.ndarray
    grid: GridSpec
    interior: np.ndarray
    index: np.ndarray
    method: str
    info: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# line scheme


def _toeplitz_tables(n, s):
    """alpha_j, beta_j = int_j^{j+1} (j+1-r, r-j) r^(-1-2s) dr for j = 0..n (unit spacing)."""
    x, w = gauss_legendre(16)
    j = np.arange(n + 1, dtype=float)[:, None]
    r = j + x[None, :]
    ker = np.where(r > 0, r, 1.0) ** (-1 - 2 * s)
    alpha = np.sum(w * (1.0 - x) * ker, axis=1)
    beta = np.sum(w * x * ker, axis=1)
    alpha[0] = beta[0] = np.nan
    return alpha, beta


def _adjacent_closed_form(r0, h, s):
    """Near and far node weights of a whole cell next to x, over distances [r0, h]."""
    if r0 >= h:
        return 0.0, 0.0
    i1 = (r0 ** (-2 * s) - h ** (-2 * s)) / (2 * s)
    if abs(s - 0.5) < 1e-12:
        i2 = math.log(h / r0)
    else:
        i2 = (h ** (1 - 2 * s) - r0 ** (1 - 2 * s)) / (1 - 2 * s)
    return i1 - i2 / h, i2 / h


def _graded_rule(a, b, toward, levels=30, order=8):
    """Gauss-Legendre on [a, b] with panels shrinking geometrically toward ``toward`` endpoints."""
    edges = [a, b]
    length = b - a
    for side in toward:
        g = 0.5 ** np.arange(1, levels + 1)
        if side == "a":
            edges.extend(a + length * g * (0.5 if "b" in toward else 1.0))
        else:
            edges.extend(b - length * g * (0.5 if "a" in toward else 1.0))
    if len(toward) == 2:
        edges.append(0.5 * (a + b))
    edges = np.unique(np.asarray(edges))
    nodes, weights, _ = panel_rule(edges, order)
    return nodes, weights


def _crossings(domain, starts, ends, iters=60):
    """Boundary crossing between each inside point in ``starts`` and outside point in ``ends``."""
    lo = np.zeros(starts.shape[0])
    hi = np.ones(starts.shape[0])
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        inside = domain.signed_distance(starts + mid[:, None] * (ends - starts)) > 0
        lo = np.where(inside, mid, lo)
        hi = np.where(inside, hi, mid)
    return 0.5 * (lo + hi)


def _line_rows(t, inside, cross, h, s, alpha, beta):
    """Rows of the one-sided line operator for every interior node of one grid line.

    ``t`` are node coordinates along the line, ``inside`` the interior flags and
    ``cross[k]`` the crossing coordinate inside cell k (NaN when cell k is not
    cut). Returns ``{i: weights}`` with weights over all nodes of the line in
    units where the direction weight is 1.
    """
    n = t.size
    reg = inside[:-1] & inside[1:]
    cut = np.flatnonzero(inside[:-1] ^ inside[1:])
    hs = h ** (-2 * s)
    # cut cells: interior node m, crossing c, quadrature on the interior part
    cells = []
    for k in cut:
        m = k if inside[k] else k + 1
        c = cross[k]
        a, b = (t[m], c) if m == k else (c, t[m])
        y, wq = _graded_rule(a, b, ("b",) if m == k else ("a",))
        shape = (np.abs(y - c) / abs(t[m] - c)) ** s
        cells.append((k, m, c, y, wq * shape))
    cut_pos = {k: idx for idx, (k, *_rest) in enumerate(cells)}
    rows = {}
    for i in np.flatnonzero(inside):
        x = t[i]
        w = np.zeros(n)
        # distance along the line to the nearest crossing
        ell = min([abs(c - x) for (_, _, c, _, _) in cells] or [math.inf])
        r0 = min(h, 0.5 * ell)
        ci = r0 ** (-2 * s) / (2 - 2 * s)
        # inner quadratic model at x +- r0
        for side in (1, -1):
            k = i if side > 0 else i - 1
            y = x + side * r0
            if k < 0 or k >= n - 1:
                continue
            if r0 >= h:
                j = i + side
                if inside[j]:
                    w[j] += ci
            elif reg[k]:
                frac = r0 / h
                w[i] += ci * (1 - frac)
                w[i + side] += ci * frac
            elif k in cut_pos:
                c = cells[cut_pos[k]][2]
                if (c - y) * side > 0:
                    w[i] += ci * (abs(c - y) / abs(c - x)) ** s
        w[i] -= 2 * ci + r0 ** (-2 * s) / s
        # cells adjacent to x, distances [r0, h]
        near, far = _adjacent_closed_form(r0, h, s)
        for side in (1, -1):
            k = i if side > 0 else i - 1
            if k < 0 or k >= n - 1:
                continue
            if reg[k]:
                w[i] += near
                w[i + side] += far
            elif k in cut_pos and r0 < abs(cells[cut_pos[k]][2] - x):
                c = cells[cut_pos[k]][2]
                a, b = (x + r0, c) if side > 0 else (c, x - r0)
                y, wq = _graded_rule(a, b, ("a", "b"))
                shape = (np.abs(y - c) / abs(c - x)) ** s
                w[i] += float(np.sum(wq * shape * np.abs(y - x) ** (-1 - 2 * s)))
        # whole regular cells away from x: Toeplitz table
        right = np.arange(i + 1, n - 1)
        right = right[reg[right]]
        jr = right - i
        w[right] += hs * alpha[jr]
        w[right + 1] += hs * beta[jr]
        left = np.arange(0, i - 1)
        left = left[reg[left]]
        jl = i - 1 - left
        w[left + 1] += hs * alpha[jl]
        w[left] += hs * beta[jl]
        # cut cells away from x
        for k, m, c, y, wq in cells:
            if k == i or k == i - 1:
                continue
            w[m] += float(np.sum(wq * np.abs(y - x) ** (-1 - 2 * s)))
        rows[i] = w
    return rows


def _assemble_lines(p, grid, interior, index):
    op, s, h = p.op, p.op.s, p.h
    dirs, wts = op.rays()
    n_unknown = int(interior.sum())
    A = np.zeros((n_unknown, n_unknown))
    nmax = max(grid.shape)
    alpha, beta = _toeplitz_tables(nmax + 1, s)
    check = float(np.nansum(alpha[1:] + beta[1:]))
    exact = (1.0 - (nmax + 2.0) ** (-2 * s)) / (2 * s)
    if abs(check / exact - 1) > 0.01:
        raise ResolutionError("line quadrature table disagrees with the analytic kernel integral")
    pts = grid.points()
    for theta, wt in zip(dirs, wts):
        ax = int(np.argmax(np.abs(theta)))
        moved = np.moveaxis(interior, ax, -1)
        idx_lines = np.moveaxis(index, ax, -1)
        coords = np.moveaxis(pts, ax, -2)
        for pos in np.ndindex(moved.shape[:-1]):
            flags = moved[pos]
            if not flags.any():
                continue
            line_pts = coords[pos]
            t = line_pts[:, ax]
            cut = np.flatnonzero(flags[:-1] ^ flags[1:])
            cross = np.full(t.size - 1, np.nan)
            if cut.size:
                a_in = np.where(flags[cut][:, None], line_pts[cut], line_pts[cut + 1])
                b_out = np.where(flags[cut][:, None], line_pts[cut + 1], line_pts[cut])
                lam = _crossings(p.domain, a_in, b_out)
                cross[cut] = (a_in + lam[:, None] * (b_out - a_in))[:, ax]
            if flags[0] or flags[-1]:
                raise ResolutionError("interior node on the grid edge; enlarge the margin")
            rows = _line_rows(t, flags, cross, h, s, alpha, beta)
            cols = idx_lines[pos]
            live = cols >= 0
            for i, w in rows.items():
                A[cols[i], cols[live]] += wt * w[live]
    return A


# ---------------------------------------------------------------------------
# ray scheme


def _assemble_rays(p, grid, interior, index):
    op, s, h = p.op, p.op.s, p.h
    dirs, wts = op.rays(p.n_directions)
    n_unknown = int(interior.sum())
    A = np.zeros((n_unknown, n_unknown))
    rows = np.argwhere(interior)
    R = float(np.linalg.norm(np.asarray(grid.upper) - np.asarray(grid.lower))) + 2 * h
    edges = dyadic_edges(h, R)
    rn, rw, _ = panel_rule(edges, 16)
    rk = rw * rn ** (-1 - 2 * s)
    ci = h ** (-2 * s) / (2 - 2 * s)
    radii = np.concatenate([[h], rn])
    rad_w = np.concatenate([[ci], rk])
    kernels.ray_assemble(index.astype(np.int64), np.asarray(grid.lower), h, rows.astype(np.int64), dirs, wts, radii, rad_w, A)
    diag = -(2 * ci + h ** (-2 * s) / s) * float(wts.sum())
    A[np.arange(n_unknown), np.arange(n_unknown)] += diag
    return A


def assemble(p: DirichletProblem) -> LinearSystem:
    """Collocation matrix and right-hand side of ``p``.

    Row i approximates (L u)(x_i) as a linear functional of the interior node
    values; exterior nodes carry u = 0.
    """
    grid = p.grid
    interior = p.interior_mask(grid)
    if not interior.any():
        raise ResolutionError("no grid node lies inside the domain; refine h")
    index = np.full(grid.shape, -1, dtype=np.int64)
    index[interior] = np.arange(int(interior.sum()))
    method = p.resolved_method()
    t0 = time.perf_counter()
    if method == "lines":
        if not p.op.is_axis_aligned():
            raise ValueError("the line scheme needs every direction along a grid axis")
        A = _assemble_lines(p, grid, interior, index)
    elif method == "rays":
        A = _assemble_rays(p, grid, interior, index)
    else:
        raise ValueError(f"unknown method {method!r}")
    rhs = np.asarray(p.f(grid.points()[interior]), dtype=float).reshape(-1)
    return LinearSystem(A, rhs, grid, interior, index, method, {"assembly_seconds": time.perf_counter() - t0})


def solve(p: DirichletProblem, system: LinearSystem | None = None) -> GridFunction:
    """Solve the collocation system; u = 0 on exterior nodes.

    ``meta`` of the result records the discrete residual, unknown count,
    scheme, and timings.
    """
    sys_ = system or assemble(p)
    t0 = time.perf_counter()
    A = sys_.matrix
    try:
        with warnings.catch_warnings():
            # singularity is reported below as SingularSystem
            warnings.simplefilter("ignore", linalg.LinAlgWarning)
            lu, piv = linalg.lu_factor(A, check_finite=True)
    except (linalg.LinAlgError, ValueError) as exc:
        raise SingularSystem(str(exc)) from exc
    pivots = np.abs(np.diag(lu))
    if pivots.min() <= 1e-13 * pivots.max():
        raise SingularSystem(f"collocation matrix is numerically singular (pivot ratio {pivots.min() / pivots.max():.1e})")
    x = linalg.lu_solve((lu, piv), sys_.rhs)
    vals = np.zeros(sys_.grid.shape)
    vals[sys_.interior] = x
    resid = float(np.abs(A @ x - sys_.rhs).max())
    meta = {
        "method": sys_.method,
        "unknowns": int(x.size),
        "h": p.h,
        "discrete_residual": resid,
        "solve_seconds": time.perf_counter() - t0,
        **sys_.info,
    }
    return GridFunction(sys_.grid, vals, "zero", meta)


def residual_check(p: DirichletProblem, u, probes, budget=None):
    """max |L u(x) - f(x)| over probe points, by pointwise quadrature.

    ``u`` may be the solved GridFunction (interpolated, zero outside) or a
    closed-form EvaluableField.
    """
    field_ = EvaluableField.from_grid(u) if isinstance(u, GridFunction) else u
    budget = budget or QuadratureBudget(tol=None, n_directions=p.n_directions * 4)
    probes = np.atleast_2d(np.asarray(probes, dtype=float))
    worst = 0.0
    for x in probes:
        val = apply_pointwise(p.op, field_, x, budget).value
        worst = max(worst, abs(val - float(p.f(x[None, :])[0])))
    return worst
