"""Fourier symbols, heat kernels on periodic grids and spectral application of L.

Fourier convention: u^(xi) = int u(x) exp(-i x.xi) dx, inverse with (2 pi)^-n.
The heat kernel of this package is p(t) = F^-1 exp(-c_s A(xi) t), so that
d/dt p = L p with the normalization of :mod:`stable_op_lab.measure`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .errors import InvalidOrder, ResolutionError
from .grid import GridFunction, GridSpec
from .measure import sphere_moment_constant


def symbol_eval(op, xi):
    """A(xi) = int |xi . t|^(2s) dmu(t); the multiplier of L is -c_s A(xi)."""
    return op.symbol(np.asarray(xi, dtype=float))


@dataclass(frozen=True)
class HeatKernelGrid:
    """Heat kernel p(t, .) sampled on a periodic centred grid."""

    t: float
    grid: GridSpec
    values: np.ndarray = field(repr=False)
    s: float = 0.5
    nyquist_damping: float = 0.0
    imag_max: float = 0.0

    def mass(self):
        return float(self.values.sum() * self.grid.h**self.grid.ndim)

    def as_grid_function(self):
        return GridFunction(self.grid, self.values)


def frequency_mesh(grid):
    """Angular frequencies of a periodic grid, shape ``grid.shape + (ndim,)``, FFT order."""
    freqs = [2.0 * math.pi * np.fft.fftfreq(n, grid.h) for n in grid.shape]
    return np.stack(np.meshgrid(*freqs, indexing="ij"), axis=-1)


def _check_periodic(grid):
    for a, n in zip(grid.lower, grid.shape):
        if n % 2 or abs(a + 0.5 * n * grid.h) > 1e-9 * max(1.0, abs(a)):
            raise ResolutionError("heat kernels need a centred periodic grid with an even node count per axis")


def _nyquist_damping(op, t, grid):
    """Largest value of exp(-c_s A t) over frequencies on the Nyquist faces."""
    xi_n = math.pi / grid.h
    n = grid.ndim
    # A is homogeneous, so its minimum over a Nyquist face is attained on a
    # coarse sample of that face scaled to the face.
    m = 65 if n > 1 else 1
    best = 0.0
    lin = np.linspace(-xi_n, xi_n, m)
    for ax in range(n):
        others = [lin] * (n - 1)
        mesh = np.meshgrid(*others, indexing="ij") if others else []
        cols = [g.ravel() for g in mesh]
        count = cols[0].size if cols else 1
        cols.insert(ax, np.full(count, xi_n))
        face = np.column_stack(cols)
        best = max(best, float(np.exp(-op.multiplier(face) * t).max()))
    return best


def heat_kernel(op, t, grid, nyquist_tol=1e-12):
    """p(t, .) on a centred periodic grid via the inverse FFT of exp(-c_s A t).

    Raises ResolutionError when exp(-c_s A t) on the Nyquist faces exceeds
    ``nyquist_tol``, i.e. when the grid does not resolve the kernel.
    """
    if not t > 0:
        raise ValueError("time must be positive")
    if grid.ndim != op.dim:
        raise ResolutionError(f"grid dimension {grid.ndim} does not match operator dimension {op.dim}")
    _check_periodic(grid)
    damping = _nyquist_damping(op, t, grid)
    if damping > nyquist_tol:
        raise ResolutionError(
            f"Nyquist damping {damping:.2e} exceeds {nyquist_tol:.0e}; refine the grid (h={grid.h:.3g}) or raise t"
        )
    mult = np.exp(-op.multiplier(frequency_mesh(grid)) * t)
    raw = np.fft.ifftn(mult) / grid.h**grid.ndim
    values = np.fft.fftshift(raw.real)
    return HeatKernelGrid(float(t), grid, values, op.s, damping, float(np.abs(raw.imag).max()))


def heat_selfsimilarity_check(op, t1, t2, grid, nyquist_tol=1e-12):
    """max |p(t2, x) - (t2/t1)^(-n/2s) p(t1, x (t1/t2)^(1/2s))| / max p(t2).

    p(t2) lives on ``grid``; p(t1) is computed on the grid scaled by
    (t1/t2)^(1/2s) so the two sides are compared node by node.
    """
    s, n = op.s, op.dim
    lam = (t1 / t2) ** (1.0 / (2 * s))
    p2 = heat_kernel(op, t2, grid, nyquist_tol)
    p1 = heat_kernel(op, t1, grid.scaled(lam), nyquist_tol)
    rhs = (t2 / t1) ** (-n / (2 * s)) * p1.values
    return float(np.abs(p2.values - rhs).max() / np.abs(p2.values).max())


def moment_integral(p, delta):
    """Trapezoid value of int (1 + |x|^(2s - delta)) p(t, x) dx over the grid.

    ``delta`` may be negative to probe divergent weights. Returns
    ``(value, tail_bound)`` where the second entry is the contribution of the
    outer shell |x|_inf > extent/4, a proxy for what truncation leaves out.
    """
    x = p.grid.points()
    r = np.linalg.norm(x, axis=-1)
    weight = 1.0 + r ** (2 * p.s - delta)
    cell = p.grid.h**p.grid.ndim
    dens = weight * p.values * cell
    value = float(dens.sum())
    half = 0.25 * p.grid.h * p.grid.shape[0]
    outer = np.max(np.abs(x), axis=-1) > half
    return value, float(np.abs(dens[outer]).sum())


def lipschitz_seminorm(p):
    """max over adjacent node pairs of |p(x) - p(y)| / h."""
    vals = np.asarray(p.values)
    best = 0.0
    for ax in range(vals.ndim):
        best = max(best, float(np.abs(np.diff(vals, axis=ax)).max()) / p.grid.h)
    return best


def _symmetric_stencil(values):
    """Extend a centred periodic array to odd length with halved edge layers."""
    out = values
    for ax in range(values.ndim):
        first = np.take(out, [0], axis=ax)
        out = np.concatenate([out, first], axis=ax)
        sl_lo = [slice(None)] * out.ndim
        sl_hi = [slice(None)] * out.ndim
        sl_lo[ax] = 0
        sl_hi[ax] = -1
        out[tuple(sl_lo)] *= 0.5
        out[tuple(sl_hi)] *= 0.5
    return out


def heat_convolve(p, f):
    """(p * f)(x) at the nodes of f's grid, by zero-padded FFT convolution.

    f is evaluated through its extension rule on the nodes reached by the
    kernel, so linear fields with a callable extension convolve correctly. The
    kernel's edge layers are split evenly between +-extent/2 to keep it
    symmetric. ``meta["tail_bound"]`` reports the kernel mass in the outer
    shell |x|_inf > extent/4 times sup |f| on the padded grid.
    """
    kg, fg = p.grid, f.grid
    if kg.ndim != fg.ndim or abs(kg.h - fg.h) > 1e-12 * kg.h:
        raise ResolutionError("kernel and field grids must share dimension and spacing")
    h = fg.h
    ker = _symmetric_stencil(np.array(p.values))
    half = [(n // 2) for n in kg.shape]
    # padded field grid: f's box enlarged by the kernel half-width on each side
    lower = tuple(a - k * h for a, k in zip(fg.lower, half))
    shape = tuple(n + 2 * k for n, k in zip(fg.shape, half))
    pad_grid = GridSpec(lower, h, shape)
    fpad = f(pad_grid.flat_points()).reshape(shape)
    full = [a + b - 1 for a, b in zip(fpad.shape, ker.shape)]
    size = [int(2 ** math.ceil(math.log2(m))) for m in full]
    axes = list(range(fg.ndim))
    conv = np.fft.irfftn(np.fft.rfftn(fpad, size, axes) * np.fft.rfftn(ker, size, axes), size, axes)
    # output node j of f corresponds to padded index j + half, and the
    # kernel's centre sits at index half, so the full-convolution index is j + 2 half
    sl = tuple(slice(2 * k, 2 * k + n) for k, n in zip(half, fg.shape))
    out = conv[sl] * h**fg.ndim
    x = kg.points()
    outer = np.max(np.abs(x), axis=-1) > 0.25 * kg.h * kg.shape[0]
    tail = float(np.abs(p.values[outer]).sum() * h**fg.ndim * np.nanmax(np.abs(fpad)))
    return GridFunction(fg, out, f.extension, {"tail_bound": tail})


# ---------------------------------------------------------------------------
# spectral application of L to closed-form fields


def _line_apply(field, points, theta, s, c_s, n_line=1 << 17, step=0.005):
    """-c_s (F^-1 |xi|^(2s) F g)(0) for g(t) = u(x + t theta), at each point x.

    The periodic 1-D FFT sees copies of g every T = n_line * step; their
    leading contribution 2 zeta(1+2s) T^(-1-2s) int g is removed.
    """
    T = n_line * step
    t = step * (np.arange(n_line) - n_line // 2)
    t = np.fft.ifftshift(t)
    xi = 2.0 * math.pi * np.fft.rfftfreq(n_line, step)
    mult = xi ** (2 * s)
    wts = np.full(xi.size, 2.0)
    wts[0] = 1.0
    if n_line % 2 == 0:
        wts[-1] = 1.0
    out = np.empty(points.shape[0])
    for i, x in enumerate(points):
        g = field(x[None, :] + t[:, None] * theta[None, :])
        gh = np.fft.rfft(g)
        # value at t = 0 of the inverse transform of |xi|^(2s) g^
        lap = float(np.sum(wts * mult * gh.real)) / n_line
        image = 2.0 * special.zeta(1 + 2 * s) * T ** (-1 - 2 * s) * float(g.sum() * step)
        # the periodic operator adds the images' contribution to Lg(0)
        out[i] = -c_s * lap - image
    return out


def _epstein_sum(n, a, cutoff=60):
    """sum over nonzero integer vectors m of |m|^-a (direct sum plus integral tail)."""
    rng = np.arange(-cutoff, cutoff + 1)
    mesh = np.stack(np.meshgrid(*([rng] * n), indexing="ij"), axis=-1).reshape(-1, n)
    r = np.linalg.norm(mesh, axis=1)
    r = r[r > 0]
    area = 2.0 * math.pi ** (n / 2) / math.gamma(n / 2)
    return float(np.sum(r ** (-a))) + area * (cutoff + 0.5) ** (n - a) / (a - n)


def fft_apply(op, field, points, extent=32.0, step=0.025):
    """Apply L to a compactly supported closed-form field through its Fourier multiplier.

    Atomic and density measures are treated ray by ray with long 1-D FFTs;
    the uniform measure uses an n-D FFT on [-extent/2, extent/2)^n with a
    direct inverse sum at the requested points. Leading periodization terms
    are subtracted analytically. This is the spectral oracle the quadrature of
    :func:`stable_op_lab.nonlocal_apply.apply_pointwise` is checked against.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    s, n = op.s, op.dim
    if op.measure.kind != "uniform":
        dirs, w = op.rays()
        total = np.zeros(pts.shape[0])
        for theta, wt in zip(dirs, w):
            total += wt * _line_apply(field, pts, theta, s, op.c_s)
        return total
    if n == 1:
        dirs, w = op.rays()
        return w[0] * _line_apply(field, pts, dirs[0], s, op.c_s)
    N = int(round(extent / step))
    N += N % 2
    grid = GridSpec.centered(N * step, N, n)
    vals = field(grid.flat_points()).reshape(grid.shape)
    uh = np.fft.fftn(np.fft.ifftshift(vals))
    xi = frequency_mesh(grid)
    level = op.measure.level
    mult = -op.c_s * level * sphere_moment_constant(n, s) * np.linalg.norm(xi, axis=-1) ** (2 * s)
    coef = (mult * uh).reshape(-1)
    xif = xi.reshape(-1, n)
    out = np.empty(pts.shape[0])
    for i, x in enumerate(pts):
        out[i] = float(np.real(np.sum(coef * np.exp(1j * (xif @ x))))) / grid.size
    # images: L u at distance |m| extent is c_{n,s} int u |y|^(-n-2s) to leading order
    strength = op.c_s * level * sphere_moment_constant(n, s)
    c_ns = 4**s * math.gamma(n / 2 + s) / (math.pi ** (n / 2) * abs(math.gamma(-s))) * strength
    mass = float(vals.sum() * step**n)
    L = N * step
    out -= c_ns * mass * _epstein_sum(n, n + 2 * s) * L ** (-n - 2 * s)
    return out


def check_linear_order(s):
    if s <= 0.5:
        raise InvalidOrder("a linear field needs s > 1/2 so that p(1, .) has a finite first moment")
