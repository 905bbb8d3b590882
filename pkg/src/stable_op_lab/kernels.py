"""Backend selection for the hot loops.

The compiled extension ``_kernels`` is used when it imports; otherwise the
NumPy implementations in ``_kernels_py`` take over. Set
``STABLE_OP_LAB_BACKEND=python`` to force the fallback.
"""

import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py
if os.environ.get("STABLE_OP_LAB_BACKEND", "").lower() != "python":
    try:
        from . import _kernels as _compiled

        _impl = _compiled
        BACKEND = "compiled"
    except ImportError:
        pass


def ray_sum(values, lower, h, points, theta, radii, weights):
    """sum_k w_k (u(x + r_k theta) + u(x - r_k theta)) for every point x.

    ``u`` is the multilinear interpolant of ``values`` (1-D or 2-D), zero
    outside the grid box.
    """
    return _impl.ray_sum(values, lower, h, points, theta, radii, weights)


def ray_assemble(index, lower, h, rows, dirs, dir_weights, radii, rad_weights, matrix):
    """Add the ray-quadrature couplings of every row to ``matrix`` in place.

    ``index`` maps grid nodes to unknown numbers (-1 for exterior nodes);
    ``rows`` holds the integer grid coordinates of each row's node. For each
    direction and radius the bilinear stencil of x +- r theta is scattered
    with weight ``dir_weight * rad_weight``.
    """
    return _impl.ray_assemble(index, lower, h, rows, dirs, dir_weights, radii, rad_weights, matrix)


def use_backend(name):
    """Switch between "compiled" and "python" at runtime (benchmarks, tests)."""
    global _impl, BACKEND
    if name == "python":
        _impl, BACKEND = _kernels_py, "python"
    elif name == "compiled":
        from . import _kernels as compiled

        _impl, BACKEND = compiled, "compiled"
    else:
        raise ValueError(f"unknown backend {name!r}")
    return BACKEND
