"""Composite Gauss-Legendre rules on dyadic and geometrically graded panels."""

from __future__ import annotations

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=32)
def gauss_legendre(n):
    """Nodes and weights of the n-point rule on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    x = 0.5 * (x + 1.0)
    w = 0.5 * w
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def dyadic_edges(r0, R):
    """Edges r0, 2 r0, 4 r0, ... closed by R (the last panel may be short)."""
    if R <= r0:
        return np.array([r0, r0])
    k = int(np.floor(np.log2(R / r0)))
    edges = r0 * 2.0 ** np.arange(k + 1)
    if R - edges[-1] > 1e-12 * R:
        edges = np.append(edges, R)
    return edges


def graded_toward(a, b, point, levels=24, ratio=0.25):
    """Edges on [a, b] refined geometrically toward ``point`` (an endpoint or interior)."""
    edges = [a, b]
    if a < point < b or point in (a, b):
        for side in (-1, 1):
            gap = (point - a) if side < 0 else (b - point)
            if gap <= 0:
                continue
            edges.extend(point + side * gap * ratio ** np.arange(1, levels + 1))
        edges.append(point)
    return np.unique(np.clip(np.asarray(edges, dtype=float), a, b))


def refine_edges(edges, breakpoints, levels=24, ratio=0.25):
    """Insert breakpoints into ``edges`` with geometric grading on both sides."""
    edges = np.asarray(edges, dtype=float)
    bps = np.asarray([b for b in np.atleast_1d(breakpoints) if edges[0] < b < edges[-1]], dtype=float)
    if bps.size == 0:
        return edges
    merged = np.unique(np.concatenate([edges, bps]))
    extra = []
    for b in bps:
        i = np.searchsorted(merged, b)
        left = b - merged[i - 1]
        right = merged[i + 1] - b if i + 1 < merged.size else 0.0
        g = ratio ** np.arange(1, levels + 1)
        extra.append(b - left * g)
        if right > 0:
            extra.append(b + right * g)
    return np.unique(np.concatenate([merged] + extra))


def panel_rule(edges, n):
    """Composite n-point rule over consecutive edges.

    Returns ``(nodes, weights, panel)`` where ``panel[k]`` is the panel index
    of node k.
    """
    edges = np.asarray(edges, dtype=float)
    x, w = gauss_legendre(n)
    a = edges[:-1, None]
    width = np.diff(edges)[:, None]
    nodes = (a + width * x[None, :]).ravel()
    weights = (width * w[None, :]).ravel()
    panel = np.repeat(np.arange(edges.size - 1), n)
    return nodes, weights, panel
