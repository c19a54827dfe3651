"""One-dimensional minimisation: log-spaced grid scan followed by golden-section refinement."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

INV_PHI = (math.sqrt(5) - 1) / 2
INV_PHI2 = (3 - math.sqrt(5)) / 2


def golden_section(f: Callable[[float], float], a: float, b: float, tol: float = 1e-10, max_iter: int = 500):
    """Shrink ``[a, b]`` around a minimum of a unimodal ``f`` until ``b - a <= tol``.

    Returns ``(a, b, iterations)``.
    """
    a, b = min(a, b), max(a, b)
    h = b - a
    c, d = a + INV_PHI2 * h, a + INV_PHI * h
    fc, fd = f(c), f(d)
    it = 0
    while h > tol and it < max_iter:
        it += 1
        if fc < fd:
            b, d, fd = d, c, fc
            h = b - a
            c = a + INV_PHI2 * h
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            h = b - a
            d = a + INV_PHI * h
            fd = f(d)
    return a, b, it


def bisect_slope(slope: Callable[[float], float], a: float, b: float, iters: int = 200) -> float:
    """Locate the sign change of a nondecreasing slope selection on ``[a, b]``."""
    if slope(a) >= 0:
        return a
    if slope(b) <= 0:
        return b
    for _ in range(iters):
        m = 0.5 * (a + b)
        if m in (a, b):
            break
        if slope(m) > 0:
            b = m
        else:
            a = m
    return 0.5 * (a + b)


@dataclass
class GridMinimum:
    x: float
    fx: float
    grid: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    grid_index: int = 0
    golden_bracket: tuple = ()
    golden_iterations: int = 0
    at_edge: bool = False

    @property
    def certificate(self) -> bool:
        """``f(x)`` is no larger than ``f`` at every grid point."""
        return bool(np.all(self.fx <= self.values * (1 + 1e-12)))


def grid_then_golden(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    points: int = 400,
    tol: float = 1e-10,
    slope: Callable[[float], float] | None = None,
) -> GridMinimum:
    """Minimise ``f`` on ``[lo, hi]``.

    A log-spaced grid picks the best cell and golden-section search refines
    inside the two neighbouring cells.  If a nondecreasing ``slope`` selection
    is given (any subgradient of a convex ``f``), the reported minimiser comes
    from bisection on its sign over the same cells instead; function-value
    comparisons lose about half the digits near a flat bottom.
    """
    grid = np.geomspace(lo, hi, points)
    values = np.array([f(x) for x in grid])
    i = int(np.argmin(values))
    a = grid[max(i - 1, 0)]
    b = grid[min(i + 1, points - 1)]
    ga, gb, it = golden_section(f, a, b, tol=tol)
    x = 0.5 * (ga + gb)
    if slope is not None:
        x = bisect_slope(slope, a, b)
    fx = f(x)
    if values[i] < fx * (1 - 1e-12):
        x, fx = float(grid[i]), float(values[i])
    return GridMinimum(
        x=float(x),
        fx=float(fx),
        grid=grid,
        values=values,
        grid_index=i,
        golden_bracket=(float(ga), float(gb)),
        golden_iterations=it,
        at_edge=i in (0, points - 1),
    )
