"""Closed-form test fields with the metadata quadrature needs."""

from __future__ import annotations

import math

import numpy as np

from .nonlocal_apply import EvaluableField


def sphere_crossings(x, theta, radius, center=None):
    """Radii r > 0 where x + r theta or x - r theta lies on the sphere |y - c| = radius."""
    x = np.asarray(x, dtype=float)
    c = np.zeros_like(x) if center is None else np.asarray(center, dtype=float)
    d = x - c
    b = float(d @ theta)
    disc = b * b - (float(d @ d) - radius * radius)
    if disc < 0:
        return np.zeros(0)
    root = math.sqrt(disc)
    r = np.array([-b - root, -b + root])
    r = np.abs(r)
    return np.unique(r[r > 0])


def plane_crossings(x, theta, normal, offset=0.0):
    t = float(np.dot(theta, normal))
    if abs(t) < 1e-14:
        return np.zeros(0)
    r = abs((offset - float(np.dot(x, normal))) / t)
    return np.array([r]) if r > 0 else np.zeros(0)


def constant(value, ndim):
    return EvaluableField(lambda p: np.full(p.shape[0], float(value)), ndim, sup_norm=abs(float(value)))


def affine(slope, intercept=0.0):
    slope = np.asarray(slope, dtype=float)
    K = float(np.abs(slope).sum() + abs(intercept))
    return EvaluableField(lambda p: p @ slope + intercept, slope.size, growth=(K, 1.0))


def gaussian(center, sigma=1.0, amplitude=1.0):
    c = np.asarray(center, dtype=float)

    def f(p):
        return amplitude * np.exp(-0.5 * np.sum((p - c) ** 2, axis=1) / sigma**2)

    # exp(-800) underflows to zero, so the field is numerically compact
    return EvaluableField(f, c.size, sup_norm=abs(amplitude), support=(c, 40.0 * sigma))


def bump(center, radius=1.0, power=6, amplitude=1.0):
    """amplitude * (1 - |x - c|^2 / radius^2)_+^power, a C^(power-1) compact bump."""
    c = np.asarray(center, dtype=float)

    def f(p):
        q = 1.0 - np.sum((p - c) ** 2, axis=1) / radius**2
        return amplitude * np.maximum(q, 0.0) ** power

    return EvaluableField(
        f, c.size, sup_norm=abs(amplitude), support=(c, radius), breakpoints=lambda x, t: sphere_crossings(x, t, radius, c)
    )


def bump_mixture(centers, radii, amplitudes, power=6):
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    radii = np.asarray(radii, dtype=float)
    amps = np.asarray(amplitudes, dtype=float)

    def f(p):
        out = np.zeros(p.shape[0])
        for c, r, a in zip(centers, radii, amps):
            q = 1.0 - np.sum((p - c) ** 2, axis=1) / r**2
            out += a * np.maximum(q, 0.0) ** power
        return out

    def bps(x, t):
        return np.concatenate([sphere_crossings(x, t, r, c) for c, r in zip(centers, radii)])

    reach = max(float(np.linalg.norm(c)) + r for c, r in zip(centers, radii))
    return EvaluableField(
        f, centers.shape[1], sup_norm=float(np.abs(amps).sum()), support=(np.zeros(centers.shape[1]), reach), breakpoints=bps
    )


def halfspace_power(exponent, normal, offset=0.0, scale=1.0):
    """scale * ((x . normal) - offset)_+^exponent."""
    nu = np.asarray(normal, dtype=float)
    nu = nu / np.linalg.norm(nu)

    def f(p):
        return scale * np.maximum(p @ nu - offset, 0.0) ** exponent

    K = abs(scale) * (1.0 + abs(offset)) ** exponent
    return EvaluableField(f, nu.size, growth=(K, exponent), breakpoints=lambda x, t: plane_crossings(x, t, nu, offset))


def ball_power(exponent, radius=1.0, scale=1.0, ndim=1, center=None):
    """scale * (radius^2 - |x - c|^2)_+^exponent, the Getoor profile for exponent s."""
    c = np.zeros(ndim) if center is None else np.asarray(center, dtype=float)

    def f(p):
        return scale * np.maximum(radius**2 - np.sum((p - c) ** 2, axis=1), 0.0) ** exponent

    return EvaluableField(
        f,
        c.size,
        sup_norm=abs(scale) * radius ** (2 * exponent),
        support=(c, radius),
        breakpoints=lambda x, t: sphere_crossings(x, t, radius, c),
    )


def outside_ball_power(exponent, ndim, radius=1.0):
    """dist(x, B_radius)^exponent = (|x| - radius)_+^exponent."""

    def f(p):
        return np.maximum(np.linalg.norm(p, axis=1) - radius, 0.0) ** exponent

    return EvaluableField(f, ndim, growth=(1.0, exponent), breakpoints=lambda x, t: sphere_crossings(x, t, radius))


def inside_ball_power(exponent, ndim, radius=1.0):
    """dist(x, complement of B_radius)^exponent = (radius - |x|)_+^exponent."""

    def f(p):
        return np.maximum(radius - np.linalg.norm(p, axis=1), 0.0) ** exponent

    def bps(x, t):
        cross = sphere_crossings(x, t, radius)
        # the cone point at the origin is a kink along rays through it
        along = -float(np.dot(x, t))
        perp = np.linalg.norm(np.asarray(x) + along * np.asarray(t))
        extra = [abs(along)] if perp < 1e-12 and abs(along) > 0 else []
        return np.concatenate([cross, extra])

    return EvaluableField(f, ndim, sup_norm=radius**exponent, support=(np.zeros(ndim), radius), breakpoints=bps)


def getoor_constant(n, s):
    """gamma with L[gamma (1 - |x|^2)_+^s] = -1 in B_1 for the fractional Laplacian."""
    return math.gamma(n / 2) / (2 ** (2 * s) * math.gamma(1 + s) * math.gamma(n / 2 + s))


def radial(profile, ndim, radii=(), sup_norm=None, support=None, growth=None, center=None):
    """Field ``profile(|x - c|)`` with kinks on the spheres of the given radii."""
    c = np.zeros(ndim) if center is None else np.asarray(center, dtype=float)

    def f(p):
        return profile(np.linalg.norm(p - c, axis=1))

    def bps(x, t):
        parts = [sphere_crossings(x, t, r, c) for r in radii]
        return np.concatenate(parts) if parts else np.zeros(0)

    supp = None if support is None else (c, float(support))
    return EvaluableField(f, ndim, sup_norm=sup_norm, support=supp, growth=growth, breakpoints=bps)


def smooth_step(r, inner, outer):
    """1 for r <= inner, 0 for r >= outer, quintic C^2 transition in between."""
    t = np.clip((np.asarray(r, dtype=float) - inner) / (outer - inner), 0.0, 1.0)
    return 1.0 - t**3 * (10.0 - 15.0 * t + 6.0 * t**2)
