"""Globally adaptive Gauss-Legendre quadrature."""
from __future__ import annotations

import heapq
from functools import lru_cache

import numpy as np

NODES = 64


@lru_cache(maxsize=8)
def _rule(k: int):
    return np.polynomial.legendre.leggauss(k)


def _panel(fn, lo: float, hi: float, k: int):
    x, w = _rule(k)
    half, mid = 0.5 * (hi - lo), 0.5 * (hi + lo)
    vals = np.array([fn(mid + half * xi) for xi in x], dtype=float)
    return half * np.tensordot(w, vals, axes=(0, 0))


def _split(fn, lo: float, hi: float, k: int):
    """Value on [lo, hi] from its two halves, with the mismatch against the one-panel rule as error."""
    mid = 0.5 * (lo + hi)
    left, right = _panel(fn, lo, mid, k), _panel(fn, mid, hi, k)
    whole = _panel(fn, lo, hi, k)
    val = left + right
    return val, float(np.max(np.abs(val - whole)))


def integrate(fn, a: float, b: float, rtol: float = 1e-8, k: int = NODES, max_panels: int = 4096):
    """Integral of a scalar- or array-valued ``fn`` over [a, b].

    The panel with the largest error estimate is bisected until the summed
    estimate is below ``rtol`` times the size of the integral.  A
    RuntimeError is raised when ``max_panels`` is exceeded.
    """
    if b < a:
        raise ValueError("need a <= b")
    if b == a:
        return 0.0 * np.asarray(fn(a), dtype=float)
    val, err = _split(fn, a, b, k)
    heap = [(-err, a, b, val)]
    total, total_err = val, err
    count = 0
    while total_err > rtol * max(float(np.max(np.abs(total))), 1e-300):
        if len(heap) >= max_panels:
            raise RuntimeError(f"quadrature did not stabilize on [{a}, {b}] with {len(heap)} panels")
        neg, lo, hi, v = heapq.heappop(heap)
        total = total - v
        total_err += neg
        mid = 0.5 * (lo + hi)
        for l2, h2 in ((lo, mid), (mid, hi)):
            v2, e2 = _split(fn, l2, h2, k)
            heapq.heappush(heap, (-e2, l2, h2, v2))
            total = total + v2
            total_err += e2
        count += 1
        if count % 64 == 0:
            # rebuild sums to keep roundoff from accumulating
            total = sum(h[3] for h in heap)
            total_err = sum(-h[0] for h in heap)
    return total
