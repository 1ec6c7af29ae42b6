"""Scalar optimisation helpers: grid scan, golden-section search, bisection.

The analytic curves only need one-dimensional searches over a bounded
interval. Nothing here assumes unimodality beyond what a coarse scan reveals:
the scan picks the best grid point and golden-section refines inside the two
neighbouring cells.
"""
from __future__ import annotations

import math

import numpy as np

from .errors import DomainError

__all__ = ["golden_section_minimize", "scan_minimize", "bisect"]

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
SCAN_POINTS = 512
X_TOL = 1e-10


def golden_section_minimize(f, a, b, tol=X_TOL, max_iter=500):
    """Minimise ``f`` on ``[a, b]`` by golden-section search.

    Returns
    -------
    (x, fx) : tuple of float
        Best abscissa seen and its value. The bracket width on exit is below
        ``tol`` unless ``max_iter`` was hit.
    """
    if not a <= b:
        raise DomainError(f"invalid bracket [{a}, {b}]")
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    # the end points may beat the interior probes when the optimum sits on them
    cand = [(fc, c), (fd, d), (f(a), a), (f(b), b)]
    fx, x = min(cand)
    return x, fx


def scan_minimize(f, lo, hi, n=SCAN_POINTS, tol=X_TOL, vector_f=None):
    """Coarse scan on ``n`` equispaced points, then golden-section refinement.

    ``vector_f`` optionally evaluates the objective on the whole grid at once.
    """
    grid = np.linspace(lo, hi, n)
    vals = np.asarray(vector_f(grid) if vector_f is not None else [f(x) for x in grid], dtype=float)
    vals = np.where(np.isnan(vals), np.inf, vals)
    i = int(np.argmin(vals))
    a = grid[max(i - 1, 0)]
    b = grid[min(i + 1, n - 1)]
    x, fx = golden_section_minimize(f, a, b, tol=tol)
    if vals[i] < fx:
        return float(grid[i]), float(vals[i])
    return float(x), float(fx)


def bisect(g, lo, hi, xtol=1e-13, max_iter=200):
    """Root of ``g`` on ``[lo, hi]`` by bisection; ``g(lo)`` and ``g(hi)`` must differ in sign."""
    glo, ghi = g(lo), g(hi)
    if glo == 0.0:
        return lo
    if ghi == 0.0:
        return hi
    if (glo > 0) == (ghi > 0):
        raise DomainError(f"no sign change on [{lo}, {hi}]: g = {glo}, {ghi}")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        gm = g(mid)
        if gm == 0.0:
            return mid
        if (gm > 0) == (glo > 0):
            lo, glo = mid, gm
        else:
            hi = mid
        if hi - lo <= xtol * max(1.0, abs(mid)):
            break
    return 0.5 * (lo + hi)
