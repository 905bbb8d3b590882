"""Spectral measures on the unit sphere and the stable operators they define.

An operator of order ``s`` with spectral measure ``mu`` acts as

    L u(x) = int_S int_0^inf (u(x + r t) + u(x - r t) - 2 u(x)) r^(-1-2s) dr dmu(t)

(one-sided radial integral). Its Fourier multiplier is ``-c_s A(xi)`` with
``A(xi) = int |xi . t|^(2s) dmu(t)`` and ``c_s = 2 int_0^inf (1 - cos t) t^(-1-2s) dt``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate, optimize

from .errors import ConfigError, DegenerateMeasure, InvalidOrder

KINDS = ("atomic", "density", "uniform")
_UNIT_TOL = 1e-12
_DEGENERATE_RATIO = 1e-10


def _readonly(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def check_order(s):
    s = float(s)
    if not (0.0 < s < 1.0) or not math.isfinite(s):
        raise InvalidOrder(f"order s must lie in (0, 1), got {s!r}")
    return s


def sphere_moment_constant(n, s):
    """Return int over S^{n-1} of |e . t|^(2s) dt for any unit vector e."""
    return 2.0 * math.pi ** ((n - 1) / 2) * math.gamma(s + 0.5) / math.gamma(s + n / 2)


def sphere_area(n):
    return 2.0 * math.pi ** (n / 2) / math.gamma(n / 2)


def sphere_nodes(n, n_nodes):
    """Quadrature nodes on S^{n-1} for n in {1, 2, 3}.

    n=1 uses the two points +-1. n=2 uses the uniform trapezoid rule with
    ``n_nodes`` angles. n=3 uses Gauss-Legendre in the polar cosine times a
    trapezoid in azimuth with ``p`` polar and ``2p`` azimuthal nodes, where
    ``n_nodes = 2 p^2``.
    """
    if n == 1:
        return np.array([[1.0], [-1.0]]), np.array([1.0, 1.0])
    if n == 2:
        phi = 2.0 * math.pi * np.arange(n_nodes) / n_nodes
        dirs = np.column_stack([np.cos(phi), np.sin(phi)])
        return dirs, np.full(n_nodes, 2.0 * math.pi / n_nodes)
    if n == 3:
        p = int(round(math.sqrt(n_nodes / 2)))
        if 2 * p * p != n_nodes or p < 1:
            raise ValueError(f"a density on S^2 needs n_nodes = 2 p^2, got {n_nodes}")
        z, wz = np.polynomial.legendre.leggauss(p)
        az = math.pi * np.arange(2 * p) / p
        zz, aa = np.meshgrid(z, az, indexing="ij")
        rho = np.sqrt(1.0 - zz**2)
        dirs = np.column_stack([(rho * np.cos(aa)).ravel(), (rho * np.sin(aa)).ravel(), zz.ravel()])
        weights = np.outer(wz, np.full(2 * p, math.pi / p)).ravel()
        return dirs, weights
    raise ValueError(f"sphere quadrature is provided for n <= 3, got n={n}")


def fold_directions(dirs, weights):
    """Merge antipodal and repeated directions.

    Returns directions with a canonical sign (first significant coordinate
    positive) and weights ``w(t) + w(-t)``. Rays are evaluated with the even
    second difference, so this loses nothing and halves the work.
    """
    dirs = np.asarray(dirs, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if dirs.shape[0] == 0:
        return dirs.copy(), weights.copy()
    canon = dirs.copy()
    for i in range(canon.shape[0]):
        nz = np.flatnonzero(np.abs(canon[i]) > 1e-12)
        if nz.size and canon[i, nz[0]] < 0:
            canon[i] = -canon[i]
    keys = np.round(canon * 1e9).astype(np.int64)
    _, first, inverse = np.unique(keys, axis=0, return_index=True, return_inverse=True)
    inverse = inverse.ravel()
    merged = np.zeros(first.size)
    np.add.at(merged, inverse, weights)
    order = np.sort(first)
    remap = {old: new for new, old in enumerate(first)}
    out_dirs = canon[order]
    out_w = np.array([merged[remap[i]] for i in order])
    keep = out_w > 0
    return out_dirs[keep], out_w[keep]


@dataclass(frozen=True)
class SpectralMeasure:
    """Finite nonnegative measure on S^{n-1}.

    Use the classmethod constructors rather than the raw initializer. Atomic
    directions are kept as given (after normalization); symmetrization happens
    when the measure is evaluated.
    """

    kind: str
    dim: int
    directions: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    values: np.ndarray | None = field(default=None, repr=False)
    level: float = 0.0

    @classmethod
    def atomic(cls, directions, weights):
        dirs = np.atleast_2d(np.asarray(directions, dtype=float))
        w = np.atleast_1d(np.asarray(weights, dtype=float))
        if dirs.shape[0] != w.shape[0]:
            raise ValueError("atoms: need one weight per direction")
        if dirs.shape[0] == 0:
            raise ValueError("atoms: at least one atom is required")
        if np.any(~np.isfinite(w)) or np.any(w < 0):
            raise ValueError("atoms: weights must be finite and nonnegative")
        norms = np.linalg.norm(dirs, axis=1)
        if np.any(norms == 0) or np.any(~np.isfinite(norms)):
            raise ValueError("atoms: directions must be finite nonzero vectors")
        dirs = dirs / norms[:, None]
        return cls("atomic", dirs.shape[1], _readonly(dirs), _readonly(w))

    @classmethod
    def uniform(cls, dim, level):
        level = float(level)
        if dim < 1:
            raise ValueError("uniform: dimension must be >= 1")
        if not math.isfinite(level) or level < 0:
            raise ValueError("uniform: level must be finite and nonnegative")
        return cls("uniform", int(dim), _readonly(np.zeros((0, dim))), _readonly([]), None, level)

    @classmethod
    def density(cls, dim, values, n_nodes=None):
        """Density measure ``a(t) dt`` sampled at the standard sphere nodes.

        ``values`` is either an array of samples (one per node) or a callable
        taking an ``(m, dim)`` array of directions.
        """
        if dim not in (1, 2, 3):
            raise ValueError("density measures are supported for n in {1, 2, 3}")
        if callable(values):
            if n_nodes is None:
                n_nodes = {1: 2, 2: 512, 3: 2 * 24**2}[dim]
            dirs, qw = sphere_nodes(dim, n_nodes)
            vals = np.asarray(values(dirs), dtype=float).reshape(-1)
        else:
            vals = np.asarray(values, dtype=float).reshape(-1)
            if n_nodes is not None and n_nodes != vals.size:
                raise ValueError("density: n_nodes does not match the number of values")
            dirs, qw = sphere_nodes(dim, vals.size)
        if vals.size != dirs.shape[0]:
            raise ValueError("density: one value per quadrature node is required")
        if np.any(~np.isfinite(vals)) or np.any(vals < 0):
            raise ValueError("density: values must be finite and nonnegative")
        return cls("density", dim, _readonly(dirs), _readonly(qw), _readonly(vals))

    def total_mass(self):
        if self.kind == "atomic":
            return float(np.sum(self.weights))
        if self.kind == "density":
            return float(np.dot(self.values, self.weights))
        return self.level * sphere_area(self.dim)

    def symmetrized(self):
        """Return the measure (mu(t) + mu(-t)) / 2 with repeated atoms merged."""
        if self.kind == "uniform":
            return self
        if self.kind == "density":
            # The node sets are closed under t -> -t.
            keys = np.round(self.directions * 1e9).astype(np.int64)
            index = {tuple(k): i for i, k in enumerate(keys)}
            try:
                partner = np.array([index[tuple(-k)] for k in keys])
            except KeyError:
                raise ValueError("density nodes are not closed under t -> -t (odd node count)") from None
            vals = 0.5 * (self.values + self.values[partner])
            return SpectralMeasure("density", self.dim, self.directions, self.weights, _readonly(vals))
        dirs = np.vstack([self.directions, -self.directions])
        w = np.concatenate([self.weights, self.weights]) * 0.5
        keys = np.round(dirs * 1e9).astype(np.int64)
        _, first, inverse = np.unique(keys, axis=0, return_index=True, return_inverse=True)
        merged = np.zeros(first.size)
        np.add.at(merged, inverse.ravel(), w)
        order = np.argsort(first)
        return SpectralMeasure("atomic", self.dim, _readonly(dirs[first[order]]), _readonly(merged[order]))

    def discrete(self, n_directions=256):
        """Direction nodes and weights representing the measure.

        Exact for atomic and density measures; uniform measures are
        discretized with the trapezoid rule (n=2) or the product rule (n=3)
        at roughly ``n_directions`` nodes.
        """
        if self.kind == "atomic":
            return np.array(self.directions), np.array(self.weights)
        if self.kind == "density":
            return np.array(self.directions), self.values * self.weights
        if self.dim == 1:
            dirs, qw = sphere_nodes(1, 2)
        elif self.dim == 2:
            m = max(4, 2 * int(n_directions))
            dirs, qw = sphere_nodes(2, m)
        else:
            p = max(2, int(round(math.sqrt(n_directions / 2))))
            dirs, qw = sphere_nodes(self.dim, 2 * p * p)
        return dirs, self.level * qw

    def folded(self, n_directions=256):
        """Half-sphere directions with weights ``mu(t) + mu(-t)``."""
        return fold_directions(*self.discrete(n_directions))

    def moment(self, xi, s):
        """Return ``int |xi . t|^(2s) dmu(t)`` for xi of shape (..., n)."""
        xi = np.asarray(xi, dtype=float)
        if xi.shape[-1] != self.dim:
            raise ValueError(f"frequency has dimension {xi.shape[-1]}, measure has {self.dim}")
        if self.kind == "uniform":
            return self.level * sphere_moment_constant(self.dim, s) * np.linalg.norm(xi, axis=-1) ** (2 * s)
        dirs, w = self.discrete()
        proj = np.abs(xi @ dirs.T)
        # rounding leaves ~1e-17 where xi is orthogonal to an atom; small s would magnify it
        proj[proj < 1e-14 * np.linalg.norm(xi, axis=-1)[..., None]] = 0.0
        return np.power(proj, 2 * s) @ w

    def to_json(self):
        if self.kind == "atomic":
            atoms = [{"theta": [float(c) for c in d], "w": float(w)} for d, w in zip(self.directions, self.weights)]
            return {"kind": "atomic", "atoms": atoms}
        if self.kind == "uniform":
            return {"kind": "uniform", "level": self.level, "n": self.dim}
        return {"kind": "density", "n": self.dim, "n_nodes": int(self.values.size), "values": [float(v) for v in self.values]}


@lru_cache(maxsize=256)
def normalization_constant(s):
    """Return c_s = 2 int_0^inf (1 - cos t) t^(-1-2s) dt.

    The integral over [0, 1] uses an algebraic weight for the t^(1-2s)
    behaviour at the origin; the oscillatory tail over [1, inf) uses QUADPACK's
    Fourier-integral routine.
    """
    s = check_order(s)

    def smooth(t):
        # (1 - cos t) / t^2 without cancellation
        return 2.0 * (math.sin(0.5 * t) / t) ** 2 if t > 0 else 0.5

    head, _ = integrate.quad(smooth, 0.0, 1.0, weight="alg", wvar=(1.0 - 2.0 * s, 0.0), epsabs=0, epsrel=1e-13)
    osc, _ = integrate.quad(lambda t: t ** (-1.0 - 2.0 * s), 1.0, np.inf, weight="cos", wvar=1.0, epsabs=1e-12)
    return 2.0 * (head + 1.0 / (2.0 * s) - osc)


def _lambda_1d(m, s):
    return float(m.moment(np.array([1.0]), s))


def _lambda_2d(m, s, resolution):
    phi = math.pi * np.arange(resolution) / resolution
    if m.kind == "atomic":
        ang = np.arctan2(m.directions[:, 1], m.directions[:, 0])
        phi = np.concatenate([phi, np.mod(ang + 0.5 * math.pi, math.pi)])

    def f(a):
        a = np.atleast_1d(a)
        return m.moment(np.column_stack([np.cos(a), np.sin(a)]), s)

    vals = f(phi)
    best = float(vals.min())
    if m.kind == "atomic":
        # exact normals to the atoms, free of the rounding in cos(pi/2)
        normals = np.column_stack([-m.directions[:, 1], m.directions[:, 0]])
        best = min(best, float(m.moment(normals, s).min()))
    step = math.pi / resolution
    for a0 in phi[np.argsort(vals)[:5]]:
        res = optimize.minimize_scalar(
            lambda a: float(f(a)[0]), bounds=(a0 - step, a0 + step), method="bounded", options={"xatol": 1e-12}
        )
        best = min(best, float(res.fun))
    return best


def _fibonacci_hemisphere(count):
    i = np.arange(count) + 0.5
    z = i / count
    golden = math.pi * (3.0 - math.sqrt(5.0))
    rho = np.sqrt(1.0 - z**2)
    return np.column_stack([rho * np.cos(golden * i), rho * np.sin(golden * i), z])


def _lambda_3d(m, s, resolution):
    pts = _fibonacci_hemisphere(resolution)
    if m.kind == "atomic":
        d = m.directions
        extra = [np.cross(d[i], d[j]) for i in range(len(d)) for j in range(i + 1, len(d))]
        extra = [e / np.linalg.norm(e) for e in extra if np.linalg.norm(e) > 1e-12]
        if extra:
            pts = np.vstack([pts, np.array(extra)])

    def f(v):
        v = np.asarray(v, dtype=float)
        nv = np.linalg.norm(v)
        return float(m.moment(v / nv, s)) if nv > 0 else np.inf

    vals = m.moment(pts, s)
    best = float(vals.min())
    for p0 in pts[np.argsort(vals)[:5]]:
        res = optimize.minimize(f, p0, method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 4000})
        best = min(best, float(res.fun))
    return best


def ellipticity_lambda(m, s, search_resolution=None, check=True):
    """Return inf over unit nu of ``int |nu . t|^(2s) dmu(t)``.

    The minimum is taken over a direction grid (``search_resolution`` angles
    on the half circle, or points on the half sphere) refined by local search.
    Directions orthogonal to atoms, where the cusps of |nu . t|^(2s) sit, are
    always included. Raises DegenerateMeasure when the value falls below
    1e-10 times the total mass, unless ``check`` is false.
    """
    s = check_order(s)
    mass = m.total_mass()
    if m.kind == "uniform":
        value = m.level * sphere_moment_constant(m.dim, s)
    elif m.dim == 1:
        value = _lambda_1d(m, s)
    elif m.dim == 2:
        value = _lambda_2d(m, s, int(search_resolution or 720))
    elif m.dim == 3:
        value = _lambda_3d(m, s, int(search_resolution or 5000))
    else:
        raise ValueError("ellipticity search is implemented for n <= 3")
    value = max(value, 0.0)
    if check and (mass <= 0 or value < _DEGENERATE_RATIO * mass):
        raise DegenerateMeasure(f"measure is degenerate: lambda={value:.3e}, total mass={mass:.3e}")
    return value


@dataclass(frozen=True)
class StableOperator:
    """Symmetric stable operator of order ``s`` with spectral measure ``measure``."""

    s: float
    measure: SpectralMeasure
    c_s: float = field(init=False)
    lam: float = field(init=False)
    Lam: float = field(init=False)
    name: str = "custom"

    def __post_init__(self):
        s = check_order(self.s)
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "c_s", normalization_constant(s))
        object.__setattr__(self, "Lam", self.measure.total_mass())
        object.__setattr__(self, "lam", ellipticity_lambda(self.measure, s))

    @property
    def dim(self):
        return self.measure.dim

    def symbol(self, xi):
        """A(xi); the multiplier of L is ``-c_s * A(xi)``."""
        return self.measure.moment(xi, self.s)

    def multiplier(self, xi):
        """Fourier symbol of -L, i.e. ``c_s * A(xi)``."""
        return self.c_s * self.symbol(xi)

    def rays(self, n_directions=256):
        return self.measure.folded(n_directions)

    def is_axis_aligned(self):
        if self.measure.kind == "uniform":
            return self.dim == 1
        dirs, _ = self.rays()
        return bool(np.all(np.sum(np.abs(dirs) > 1e-12, axis=1) == 1))

    def to_json(self):
        return {"s": self.s, "name": self.name, "measure": self.measure.to_json()}


def canonical(name, n, s):
    """Canonical operators normalized so that ``c_s * A`` is a clean multiplier.

    ``fractional_laplacian`` has multiplier |xi|^(2s); ``axis_sum`` has
    multiplier sum_i |xi_i|^(2s) built from the 2n atoms +-e_i.
    """
    s = check_order(s)
    c = normalization_constant(s)
    if name == "fractional_laplacian":
        m = SpectralMeasure.uniform(n, 1.0 / (c * sphere_moment_constant(n, s)))
    elif name == "axis_sum":
        eye = np.eye(n)
        m = SpectralMeasure.atomic(np.vstack([eye, -eye]), np.full(2 * n, 0.5 / c))
    else:
        raise ValueError(f"unknown canonical operator {name!r}")
    return StableOperator(s, m, name=name)


def _require(obj, key, where):
    if not isinstance(obj, dict) or key not in obj:
        raise ConfigError(f"{where}: missing field '{key}'")
    return obj[key]


def measure_from_json(obj, where="measure"):
    kind = _require(obj, "kind", where)
    try:
        if kind == "atomic":
            atoms = _require(obj, "atoms", where)
            if not isinstance(atoms, list) or not atoms:
                raise ConfigError(f"{where}.atoms: expected a nonempty list")
            thetas = [_require(a, "theta", f"{where}.atoms[{i}]") for i, a in enumerate(atoms)]
            ws = [_require(a, "w", f"{where}.atoms[{i}]") for i, a in enumerate(atoms)]
            if len({len(t) for t in thetas}) != 1:
                raise ConfigError(f"{where}.atoms: directions have inconsistent dimensions")
            return SpectralMeasure.atomic(thetas, ws)
        if kind == "uniform":
            return SpectralMeasure.uniform(int(obj.get("n", 2)), _require(obj, "level", where))
        if kind == "density":
            vals = _require(obj, "values", where)
            return SpectralMeasure.density(int(obj.get("n", 2)), vals, obj.get("n_nodes"))
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc
    raise ConfigError(f"{where}.kind: expected one of {KINDS}, got {kind!r}")


def operator_from_json(obj, where="operator"):
    """Build a StableOperator from ``{"s":..,"measure":{..}}`` or ``{"canonical":..,"n":..,"s":..}``."""
    s = _require(obj, "s", where)
    if not isinstance(s, (int, float)):
        raise ConfigError(f"{where}.s: expected a number")
    if "canonical" in obj:
        n = obj.get("n", 2)
        try:
            return canonical(obj["canonical"], int(n), s)
        except ValueError as exc:
            if isinstance(exc, InvalidOrder):
                raise
            raise ConfigError(f"{where}.canonical: {exc}") from exc
    m = measure_from_json(_require(obj, "measure", where), f"{where}.measure")
    return StableOperator(s, m, name=str(obj.get("name", "custom")))
