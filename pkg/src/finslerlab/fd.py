"""Finite-difference derivative oracle.

Deliberately independent of the jet engine: plain central differences on a
scalar evaluator, composed once per requested derivative slot, with a single
Richardson extrapolation to cancel the leading h^2 truncation term.  Used as
the cross-check for jet-computed partials, never as a primary method.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .jets import ChartPoint

# Step sizes balance truncation against round-off at each derivative depth.
_STEP_LOW = 1e-4  # total order 1..2
_STEP_HIGH = 1e-2  # total order 3..4


def _central(f: Callable[[np.ndarray], float], coords: np.ndarray, alpha: Sequence[int], h: float) -> float:
    for var, m in enumerate(alpha):
        if m > 0:
            reduced = list(alpha)
            reduced[var] -= 1
            up = coords.copy()
            up[var] += h
            dn = coords.copy()
            dn[var] -= h
            return (_central(f, up, reduced, h) - _central(f, dn, reduced, h)) / (2.0 * h)
    return f(coords)


def fd_partial(
    f: Callable[[ChartPoint], float],
    p: ChartPoint,
    alpha: Sequence[int],
    h: float | None = None,
) -> float:
    """Central finite-difference estimate of the partial derivative d^alpha f(p).

    alpha indexes the 2n chart coordinates (x^1..x^n, y^1..y^n).  Richardson
    extrapolation with h and h/2 is applied once; callers compare against an
    exact route with their own tolerance.
    """
    alpha = [int(a) for a in alpha]
    n = p.dim
    if len(alpha) != 2 * n:
        raise ValueError("alpha must index all 2n chart coordinates")
    total = sum(alpha)
    if total > 4:
        raise ValueError("fd_partial supports total order <= 4")
    coords = np.array(p.coords, dtype=float)

    def g(c: np.ndarray) -> float:
        return float(f(ChartPoint(tuple(c[:n]), tuple(c[n:]))))

    if total == 0:
        return g(coords)
    if h is None:
        h = _STEP_HIGH if total >= 3 else _STEP_LOW
    coarse = _central(g, coords, alpha, h)
    fine = _central(g, coords, alpha, h / 2.0)
    return (4.0 * fine - coarse) / 3.0
