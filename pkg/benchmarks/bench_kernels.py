"""Time the compiled and pure-Python ray kernels on identical inputs.

    python benchmarks/bench_kernels.py [--repeat 3]

Prints one line per kernel and backend with the best wall time, the speedup
and the max abs difference between the two results.
"""

import argparse
import time

import numpy as np

from stable_op_lab import _kernels_py

try:
    from stable_op_lab import _kernels as _compiled
except ImportError:
    _compiled = None


def _best(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def ray_sum_case(rng):
    n = 129
    h = 2.0 / (n - 1)
    values = rng.standard_normal((n, n))
    lower = np.array([-1.0, -1.0])
    pts = rng.uniform(-0.8, 0.8, size=(4000, 2))
    theta = np.array([np.cos(0.3), np.sin(0.3)])
    radii = np.geomspace(h, 2.0, 64)
    weights = rng.uniform(size=64)
    return lambda m: m.ray_sum(values, lower, h, pts, theta, radii, weights)


def ray_assemble_case(rng):
    n = 41
    h = 2.0 / (n - 1)
    g = np.arange(n)
    I, J = np.meshgrid(g, g, indexing="ij")
    inside = (I - n // 2) ** 2 + (J - n // 2) ** 2 < (n // 2 - 1) ** 2
    index = np.full((n, n), -1, dtype=np.int64)
    index[inside] = np.arange(inside.sum())
    rows = np.argwhere(inside).astype(np.int64)
    ang = np.linspace(0, np.pi, 16, endpoint=False)
    dirs = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    dir_w = np.full(16, 1.0 / 16)
    radii = np.geomspace(h, 2.0, 48)
    rad_w = rng.uniform(size=48)
    size = int(inside.sum())
    lower = np.array([-1.0, -1.0])

    def run(m):
        A = np.zeros((size, size))
        return m.ray_assemble(index, lower, h, rows, dirs, dir_w, radii, rad_w, A)

    return run


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    cases = {"ray_sum": ray_sum_case(rng), "ray_assemble": ray_assemble_case(rng)}
    if _compiled is None:
        print("compiled extension not built; timing the python backend only")
    for name, case in cases.items():
        t_py, r_py = _best(lambda: case(_kernels_py), args.repeat)
        line = f"{name:13s} python {t_py * 1e3:9.2f} ms"
        if _compiled is not None:
            t_c, r_c = _best(lambda: case(_compiled), args.repeat)
            diff = float(np.max(np.abs(np.asarray(r_py) - np.asarray(r_c))))
            line += f"   compiled {t_c * 1e3:9.2f} ms   speedup {t_py / t_c:6.1f}x   max|diff| {diff:.1e}"
        print(line)


if __name__ == "__main__":
    main()
