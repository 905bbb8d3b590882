"""Uniform tensor grids and sampled fields with an extension rule."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class GridSpec:
    """Uniform tensor grid with nodes ``lower + k * h`` for ``0 <= k < shape``."""

    lower: tuple
    h: float
    shape: tuple

    def __post_init__(self):
        lower = tuple(float(v) for v in np.atleast_1d(self.lower))
        shape = tuple(int(v) for v in np.atleast_1d(self.shape))
        if len(lower) != len(shape):
            raise ValueError("grid: lower corner and shape have different dimensions")
        if not (self.h > 0 and math.isfinite(self.h)):
            raise ValueError("grid: spacing must be positive")
        if any(n < 1 for n in shape):
            raise ValueError("grid: every axis needs at least one node")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "h", float(self.h))

    @classmethod
    def centered(cls, extent, points, ndim=1):
        """Periodic FFT grid on [-extent/2, extent/2)^ndim with ``points`` nodes per axis."""
        h = float(extent) / int(points)
        return cls((-0.5 * extent,) * ndim, h, (int(points),) * ndim)

    @classmethod
    def covering(cls, lo, hi, h):
        """Grid with spacing ``h`` starting at ``lo`` and reaching at least ``hi``."""
        lo = np.atleast_1d(np.asarray(lo, dtype=float))
        hi = np.atleast_1d(np.asarray(hi, dtype=float))
        shape = tuple(int(math.floor((b - a) / h + 1e-9)) + 1 for a, b in zip(lo, hi))
        return cls(tuple(lo), h, shape)

    @property
    def ndim(self):
        return len(self.shape)

    @property
    def size(self):
        return int(np.prod(self.shape))

    @property
    def upper(self):
        return tuple(a + (n - 1) * self.h for a, n in zip(self.lower, self.shape))

    def axes(self):
        return [a + self.h * np.arange(n) for a, n in zip(self.lower, self.shape)]

    def points(self):
        """Node coordinates as an array of shape ``shape + (ndim,)``."""
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack(mesh, axis=-1)

    def flat_points(self):
        return self.points().reshape(-1, self.ndim)

    def scaled(self, factor):
        return GridSpec(tuple(factor * a for a in self.lower), factor * self.h, self.shape)

    def nearest_index(self, x):
        x = np.asarray(x, dtype=float)
        idx = np.rint((x - np.asarray(self.lower)) / self.h).astype(int)
        return tuple(int(i) for i in idx)

    def to_json(self):
        return {"lower": list(self.lower), "h": self.h, "shape": list(self.shape)}


def multilinear(values, lower, h, points):
    """Multilinear interpolation of gridded ``values`` at ``points`` (m, n).

    Points outside the grid box give 0; the boolean ``inside`` mask is also
    returned so callers can apply their own extension.
    """
    values = np.asarray(values)
    n = values.ndim
    pts = np.asarray(points, dtype=float).reshape(-1, n)
    shape = np.array(values.shape)
    t = (pts - np.asarray(lower)) / h
    eps = 1e-9
    inside = np.all((t >= -eps) & (t <= shape - 1 + eps), axis=1)
    t = np.clip(t, 0.0, shape - 1)
    base = np.minimum(np.floor(t).astype(np.int64), np.maximum(shape - 2, 0))
    frac = t - base
    out = np.zeros(pts.shape[0], dtype=values.dtype if np.iscomplexobj(values) else float)
    for corner in range(1 << n):
        w = np.ones(pts.shape[0])
        idx = []
        for ax in range(n):
            bit = (corner >> ax) & 1
            if shape[ax] == 1:
                if bit:
                    w = w * 0.0
                idx.append(np.zeros_like(base[:, ax]))
                continue
            w = w * (frac[:, ax] if bit else 1.0 - frac[:, ax])
            idx.append(base[:, ax] + bit)
        nz = w != 0
        if np.any(nz):
            out[nz] += w[nz] * values[tuple(i[nz] for i in idx)]
    out[~inside] = 0.0
    return out, inside


@dataclass(frozen=True)
class GridFunction:
    """Samples of a scalar field on a GridSpec.

    ``extension`` says how the field continues outside the grid box: the
    string ``"zero"`` or a callable mapping an (m, n) array to values. ``meta``
    carries free-form reports (solve residuals, provenance of the data).
    """

    grid: GridSpec
    values: np.ndarray = field(repr=False)
    extension: object = "zero"
    meta: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        vals = np.array(self.values, dtype=float).reshape(self.grid.shape)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        if not (self.extension == "zero" or callable(self.extension)):
            raise ValueError("extension must be 'zero' or a callable")

    @property
    def ndim(self):
        return self.grid.ndim

    @property
    def h(self):
        return self.grid.h

    def __call__(self, points):
        pts = np.asarray(points, dtype=float).reshape(-1, self.ndim)
        out, inside = multilinear(self.values, self.grid.lower, self.grid.h, pts)
        if callable(self.extension) and not np.all(inside):
            out[~inside] = np.asarray(self.extension(pts[~inside]), dtype=float).reshape(-1)
        return out

    def with_values(self, values, **meta):
        return GridFunction(self.grid, values, self.extension, dict(meta))

    def sup_norm(self):
        return float(np.nanmax(np.abs(self.values))) if self.values.size else 0.0

    def to_csv(self, path_or_buffer=None):
        """Write ``x,value`` (1-D) or ``x1,...,xn,value`` rows in C order.

        Returns the text if no path is given.
        """
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        coords = ["x"] if self.ndim == 1 else [f"x{i + 1}" for i in range(self.ndim)]
        writer.writerow(coords + ["value"])
        pts = self.grid.flat_points()
        for p, v in zip(pts, self.values.ravel()):
            writer.writerow([_fmt(c) for c in p] + [_fmt(v)])
        text = buf.getvalue()
        if path_or_buffer is None:
            return text
        with open(path_or_buffer, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        return text

    @classmethod
    def from_csv(cls, path):
        """Read a grid dump written by :meth:`to_csv`; the extension is zero."""
        with open(path, encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
        header, body = rows[0], rows[1:]
        if not header or header[-1] != "value":
            raise ValueError(f"{path}: expected a header ending in value")
        data = np.array([[float(c) for c in r] for r in body if r])
        n = len(header) - 1
        axes = [np.unique(data[:, i]) for i in range(n)]
        steps = [np.diff(a) for a in axes if a.size > 1]
        h = float(np.median(np.concatenate(steps))) if steps else 1.0
        grid = GridSpec(tuple(a[0] for a in axes), h, tuple(a.size for a in axes))
        if grid.size != data.shape[0]:
            raise ValueError(f"{path}: rows do not form a full tensor grid")
        idx = tuple(np.rint((data[:, i] - axes[i][0]) / h).astype(int) for i in range(n))
        vals = np.full(grid.shape, np.nan)
        vals[idx] = data[:, -1]
        return cls(grid, vals)


def _fmt(v):
    v = float(v)
    if math.isnan(v):
        return "nan"
    return repr(v)


def sample(func, grid, extension="zero"):
    """GridFunction of ``func`` evaluated at every node of ``grid``."""
    pts = grid.flat_points()
    return GridFunction(grid, np.asarray(func(pts), dtype=float).reshape(grid.shape), extension)
