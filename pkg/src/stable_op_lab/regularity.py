"""Hölder profiles, exponent fits and boundary expansions measured on grid data.

Increments are taken along grid axes and, in 2-D, the two diagonals, at
dyadic multiples of the spacing.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dirichlet import DomainSpec
from .errors import DomainError, ResolutionError
from .grid import GridFunction

FLAG_RESIDUAL = 0.15


@dataclass
class HolderReport:
    scales: np.ndarray
    profile: np.ndarray
    fitted_exponent: float
    residual: float
    seminorm_estimate: float
    beta: float | None = None
    mode: str = "pair"
    window: dict = field(default_factory=dict)

    @property
    def flagged(self):
        return not np.isfinite(self.residual) or self.residual > FLAG_RESIDUAL

    def to_json(self):
        return {
            "scales": [float(v) for v in self.scales],
            "profile": [float(v) for v in self.profile],
            "exponent": _num(self.fitted_exponent),
            "residual": _num(self.residual),
            "seminorm": _num(self.seminorm_estimate),
            "beta": self.beta,
            "mode": self.mode,
            "flagged": bool(self.flagged),
            "window": self.window,
        }


@dataclass
class BoundaryExpansion:
    z: np.ndarray
    nu: np.ndarray
    radii: np.ndarray
    q_star: np.ndarray
    q_limit: float
    q_error: float
    remainder: np.ndarray
    remainder_exponent: float
    residual: float

    def to_json(self):
        return {
            "z": [float(v) for v in self.z],
            "nu": [float(v) for v in self.nu],
            "scales": [float(v) for v in self.radii],
            "q_star": [float(v) for v in self.q_star],
            "q_limit": _num(self.q_limit),
            "q_error": _num(self.q_error),
            "remainder": [float(v) for v in self.remainder],
            "exponent": _num(self.remainder_exponent),
            "residual": _num(self.residual),
        }


@dataclass
class GapReport:
    radii: np.ndarray
    gap: np.ndarray
    gap_exponent: float
    lipschitz: np.ndarray
    lipschitz_exponent: float
    holder: np.ndarray
    holder_exponent: float

    def __iter__(self):
        yield self.gap
        yield self.gap_exponent

    def to_json(self):
        return {
            "scales": [float(v) for v in self.radii],
            "gap": [float(v) for v in self.gap],
            "gap_exponent": _num(self.gap_exponent),
            "lipschitz": [float(v) for v in self.lipschitz],
            "lipschitz_exponent": _num(self.lipschitz_exponent),
            "holder": [float(v) for v in self.holder],
            "holder_exponent": _num(self.holder_exponent),
        }


def _num(v):
    v = float(v)
    return v if np.isfinite(v) else None


def log_fit(x, y):
    """Slope of log y against log x and the max abs residual of the fit in log space."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ok = (x > 0) & (y > 0) & np.isfinite(y)
    if ok.sum() < 2:
        return float("nan"), float("nan")
    lx, ly = np.log(x[ok]), np.log(y[ok])
    slope, icpt = np.polyfit(lx, ly, 1)
    return float(slope), float(np.max(np.abs(ly - (slope * lx + icpt))))


def _directions(ndim):
    dirs = [np.eye(ndim, dtype=int)[i] for i in range(ndim)]
    if ndim == 2:
        dirs += [np.array([1, 1]), np.array([1, -1])]
    return dirs


def _region_mask(u: GridFunction, region):
    pts = u.grid.points()
    if region is None:
        return np.isfinite(u.values)
    if callable(region):
        return np.asarray(region(pts.reshape(-1, u.ndim)), bool).reshape(u.grid.shape)
    if isinstance(region, np.ndarray) and region.dtype == bool:
        return region
    lo, hi = (np.atleast_1d(np.asarray(v, dtype=float)) for v in region)
    return np.all((pts >= lo - 1e-12) & (pts <= hi + 1e-12), axis=-1)


def _padded(u: GridFunction, pad, fill=None):
    """Node values padded by ``pad`` layers, filled with the extension (or ``fill``)."""
    shape = tuple(n + 2 * pad for n in u.grid.shape)
    out = np.empty(shape)
    if fill is not None:
        out.fill(fill)
    elif callable(u.extension):
        axes = [lo - pad * u.h + u.h * np.arange(n) for lo, n in zip(u.grid.lower, shape)]
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, u.ndim)
        out[...] = np.asarray(u.extension(mesh), dtype=float).reshape(shape)
    else:
        out.fill(0.0)
    inner = tuple(slice(pad, pad + n) for n in u.grid.shape)
    out[inner] = u.values
    return out, inner


def _shifted(P, inner, off):
    return P[tuple(slice(sl.start + o, sl.stop + o) for sl, o in zip(inner, off))]


def _default_multipliers(shape, limit=None):
    top = max(1, min(shape) // 2 if limit is None else limit)
    return [2**j for j in range(int(np.log2(top)) + 1)]


def holder_seminorm(u: GridFunction, region=None, beta=0.5, scales=None):
    """Dyadic increment profile of ``u`` over ``region`` and its C^beta seminorm.

    ``region`` is a node mask, a box ``(lo, hi)``, a predicate on points, or
    None for all finite nodes. Both ends of every increment must lie in the
    region. beta < 1 uses |u(x+y) - u(x)|, beta >= 1 uses |u(x+y) + u(x-y) - 2u(x)|.
    ``scales`` are integer multiples of the spacing (dyadic by default). The
    profile is the running max over increment length, so it is nondecreasing.
    """
    if not 0 < beta < 2:
        raise ValueError("beta must lie in (0, 2)")
    mask = _region_mask(u, region) & np.isfinite(u.values)
    mode = "pair" if beta < 1 else "second"
    ks = list(scales) if scales is not None else _default_multipliers(u.grid.shape)
    pad = max(ks)
    V = u.with_values(np.where(mask, u.values, np.nan))
    P, inner = _padded(V, pad, fill=np.nan)
    base = P[inner]
    rows = []
    for k in ks:
        for v in _directions(u.ndim):
            off = k * v
            fwd = _shifted(P, inner, off)
            if mode == "pair":
                d = np.abs(fwd - base)
            else:
                d = np.abs(fwd + _shifted(P, inner, -off) - 2 * base)
            if np.isfinite(d).any():
                rows.append((k, k * u.h * float(np.linalg.norm(v)), float(np.nanmax(d))))
    used = sorted({r[0] for r in rows})
    if len(used) < 4:
        raise ResolutionError(f"only {len(used)} usable dyadic scales in the region (need 4)")
    rows.sort(key=lambda r: r[1])
    rho = np.array([r[1] for r in rows])
    raw = np.array([r[2] for r in rows])
    profile = np.maximum.accumulate(raw)
    semi = float(np.max(raw / rho**beta))
    expo, resid = log_fit(rho, profile)
    lo, hi = u.grid.points()[mask].min(axis=0), u.grid.points()[mask].max(axis=0)
    return HolderReport(
        rho, profile, expo, resid, semi, beta, mode, {"lower": lo.tolist(), "upper": hi.tolist(), "nodes": int(mask.sum())}
    )


def exponent_fit(u: GridFunction, center, scales=None, window=1.0, order=2):
    """Fitted exponent of sup |d^2 u(x; y)| against |y| near ``center``.

    At scale rho = k h the sup runs over axis and diagonal increments of that
    length and over nodes x with |x - center|_inf <= window * rho (the node
    nearest to ``center`` when ``window`` is 0). Samples outside the grid use
    the field's extension. ``order=1`` measures |u(x + y) - u(x)| instead,
    the right probe for exponents below 1.
    """
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    center = np.atleast_1d(np.asarray(center, dtype=float))
    ks = list(scales) if scales is not None else [1, 2, 4, 8]
    if len(ks) < 4:
        raise ResolutionError("exponent fits need at least 4 scales")
    kmax = max(ks)
    pad = 2 * kmax + 1
    P, inner = _padded(u, pad)
    c = np.round((center - np.asarray(u.grid.lower)) / u.h).astype(int)
    if np.any(c < 0) or np.any(c >= np.asarray(u.grid.shape)):
        raise ResolutionError("center lies outside the grid")
    rho_all, prof = [], []
    for k in ks:
        reach = int(np.floor(window * k))
        rng = [np.arange(ci - reach, ci + reach + 1) + pad for ci in c]
        best = 0.0
        for v in _directions(u.ndim):
            off = k * v
            idx = np.meshgrid(*rng, indexing="ij")
            x0 = P[tuple(idx)]
            xp = P[tuple(i + o for i, o in zip(idx, off))]
            xm = P[tuple(i - o for i, o in zip(idx, off))]
            d = np.abs(xp + xm - 2 * x0) if order == 2 else np.maximum(np.abs(xp - x0), np.abs(xm - x0))
            if np.isfinite(d).any():
                best = max(best, float(np.nanmax(d)))
        rho_all.append(k * u.h)
        prof.append(best)
    rho = np.asarray(rho_all)
    profile = np.asarray(prof)
    expo, resid = log_fit(rho, profile)
    mode = "second" if order == 2 else "pair"
    return HolderReport(rho, profile, expo, resid, float("nan"), None, mode, {"center": center.tolist(), "window": window})


def boundary_ratio(u: GridFunction, domain: DomainSpec, s, band):
    """u / d^s on nodes with d in [d_min, d_max]; NaN elsewhere."""
    d_min, d_max = (float(b) for b in band)
    if not 0 <= d_min < d_max:
        raise DomainError("band must satisfy 0 <= d_min < d_max")
    if d_min <= u.h / 10:
        raise DomainError(f"band reaches nodes with d <= h/10 = {u.h / 10:.3g}")
    d = domain.signed_distance(u.grid.flat_points()).reshape(u.grid.shape)
    inside = (d >= d_min - 1e-12) & (d <= d_max + 1e-12)
    if not inside.any():
        raise DomainError("no grid node lies in the band")
    ratio = np.full(u.grid.shape, np.nan)
    ratio[inside] = u.values[inside] / d[inside] ** s
    return GridFunction(u.grid, ratio, "zero", {"band": [d_min, d_max], "s": s})


def _ball_inside_grid(u, z, nu, r):
    """The inward half of B_r(z) lies in the grid box."""
    lo = np.asarray(u.grid.lower) - 1e-9
    hi = np.asarray(u.grid.upper) + 1e-9
    if u.ndim == 1:
        probes = [z + r * nu]
    else:
        ang = np.linspace(-np.pi / 2, np.pi / 2, 33)
        tau = np.array([-nu[1], nu[0]])
        probes = [z + r * (np.cos(a) * nu + np.sin(a) * tau) for a in ang]
    return all(np.all((p >= lo) & (p <= hi)) for p in probes)


def boundary_coefficient(u: GridFunction, z, nu, s, radii=None, beta=None):
    """Least-squares coefficients Q_*(r) of ((x - z) . nu)_+^s in B_r(z).

    The limit is Q_*(r_min) with error bar
    |Q_*(2 r_min) - Q_*(r_min)| / (1 - 2^-(beta - s)); ``beta`` defaults to 1.5 s.
    The remainder profile is sup over B_r(z) of |u - Q ((x - z) . nu)_+^s|.
    """
    z = np.atleast_1d(np.asarray(z, dtype=float))
    nu = np.atleast_1d(np.asarray(nu, dtype=float))
    nu = nu / np.linalg.norm(nu)
    beta = 1.5 * s if beta is None else beta
    radii = np.asarray(radii if radii is not None else 4 * u.h * 2.0 ** np.arange(4), dtype=float)
    if radii.size < 4:
        raise ResolutionError("boundary expansion needs at least 4 radii")
    radii = np.sort(radii)
    for r in radii:
        if not _ball_inside_grid(u, z, nu, r):
            raise ResolutionError(f"B_{r:g}(z) leaves the grid")
    pts = u.grid.flat_points()
    vals = u.values.reshape(-1)
    dist = np.linalg.norm(pts - z, axis=1)
    w = np.maximum((pts - z) @ nu, 0.0) ** s
    q = []
    balls = []
    for r in radii:
        sel = dist <= r + 1e-12
        den = float(np.sum(w[sel] ** 2))
        if den == 0:
            raise ResolutionError(f"no interior node in B_{r:g}(z)")
        q.append(float(np.sum(vals[sel] * w[sel]) / den))
        balls.append(sel)
    q = np.asarray(q)
    q_lim = q[0]
    q_err = abs(q[1] - q[0]) / (1 - 2.0 ** (-(beta - s)))
    rem = np.array([float(np.max(np.abs(vals[sel] - q_lim * w[sel]))) for sel in balls])
    expo, resid = log_fit(radii, rem)
    return BoundaryExpansion(z, nu, radii, q, float(q_lim), float(q_err), rem, expo, resid)


def _ball_samples(center, r, ndim, n=41):
    g = np.linspace(-1, 1, n)
    if ndim == 1:
        pts = g[:, None]
    else:
        a, b = np.meshgrid(g, g, indexing="ij")
        pts = np.stack([a.ravel(), b.ravel()], axis=1)
        pts = pts[np.sum(pts**2, axis=1) <= 1 + 1e-12]
    return center + r * pts


def distance_linearization_gap(domain: DomainSpec, z, radii=(0.2, 0.1, 0.05, 0.025), s=0.5, eps=0.1, offset=0.0, samples=41):
    """Compare d^s with its linearization ((x - z) . nu)_+^s near a boundary point.

    ``gap[r]`` is the sup of the difference over B_r(x0) with
    x0 = z + offset * r * nu (offset 0 puts the ball on the boundary, offset 2
    is the interior ball at distance 2r). On the interior ball B_r(z + 2 r nu)
    the Lipschitz and C^(s - eps) seminorms of the difference are also
    measured, on a sample lattice of ``samples`` points per axis.
    """
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if abs(float(domain.signed_distance(z[None, :])[0])) > 1e-9:
        raise DomainError("z must lie on the boundary")
    nu = domain.inward_normal(z)
    n = domain.dim

    def gapf(p):
        d = np.maximum(domain.signed_distance(p), 0.0)
        return np.maximum((p - z) @ nu, 0.0) ** s - d**s

    radii = np.asarray(radii, dtype=float)
    gap, lip, hol = [], [], []
    for r in radii:
        x0 = z + offset * r * nu
        pts = _ball_samples(x0, r, n, samples)
        # the sup sits on the boundary layer, which the lattice alone misses
        proj = domain.nearest_boundary(pts)
        pts = np.concatenate([pts, proj[np.linalg.norm(proj - x0, axis=1) <= r]])
        gap.append(float(np.max(np.abs(gapf(pts)))))
        inner = _ball_samples(z + 2 * r * nu, r, n, samples)
        g = gapf(inner)
        diff = np.abs(g[:, None] - g[None, :])
        dist = np.linalg.norm(inner[:, None, :] - inner[None, :, :], axis=-1)
        off = dist > 0
        lip.append(float(np.max(diff[off] / dist[off])))
        hol.append(float(np.max(diff[off] / dist[off] ** (s - eps))))
    gap, lip, hol = np.asarray(gap), np.asarray(lip), np.asarray(hol)
    return GapReport(radii, gap, log_fit(radii, gap)[0], lip, log_fit(radii, lip)[0], hol, log_fit(radii, hol)[0])
