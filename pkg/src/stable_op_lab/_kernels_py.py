"""NumPy reference implementations of the compiled kernels."""

import numpy as np

from .grid import multilinear

_CHUNK = 1 << 21


def ray_sum(values, lower, h, points, theta, radii, weights):
    values = np.asarray(values, dtype=float)
    pts = np.asarray(points, dtype=float).reshape(-1, values.ndim)
    theta = np.asarray(theta, dtype=float).reshape(1, 1, -1)
    radii = np.asarray(radii, dtype=float)
    weights = np.asarray(weights, dtype=float)
    out = np.zeros(pts.shape[0])
    step = max(1, _CHUNK // max(1, pts.shape[0]))
    for k0 in range(0, radii.size, step):
        r = radii[k0 : k0 + step].reshape(1, -1, 1)
        wk = weights[k0 : k0 + step]
        for sign in (1.0, -1.0):
            q = (pts[:, None, :] + sign * r * theta).reshape(-1, values.ndim)
            v, _ = multilinear(values, lower, h, q)
            out += v.reshape(pts.shape[0], -1) @ wk
    return out


def ray_assemble(index, lower, h, rows, dirs, dir_weights, radii, rad_weights, matrix):
    index = np.asarray(index)
    nd = index.ndim
    shape = np.array(index.shape)
    lower = np.asarray(lower, dtype=float)
    rows = np.asarray(rows, dtype=np.int64).reshape(-1, nd)
    x = lower + h * rows
    n_rows, n_cols = matrix.shape
    flat = matrix.reshape(-1)
    row_ids = np.arange(n_rows)
    for theta, wd in zip(np.atleast_2d(dirs), dir_weights):
        for r, wr in zip(radii, rad_weights):
            coef = wd * wr
            for sign in (1.0, -1.0):
                t = (x + sign * r * theta - lower) / h
                base = np.floor(t + 1e-12).astype(np.int64)
                frac = np.clip(t - base, 0.0, 1.0)
                for corner in range(1 << nd):
                    w = np.full(n_rows, coef)
                    ok = np.ones(n_rows, bool)
                    idx = []
                    for ax in range(nd):
                        bit = (corner >> ax) & 1
                        w = w * (frac[:, ax] if bit else 1.0 - frac[:, ax])
                        j = base[:, ax] + bit
                        ok &= (j >= 0) & (j < shape[ax])
                        idx.append(np.clip(j, 0, shape[ax] - 1))
                    col = index[tuple(idx)]
                    ok &= (col >= 0) & (w != 0)
                    np.add.at(flat, row_ids[ok] * n_cols + col[ok], w[ok])
    return matrix
